"""SolverConfig: defaults, dotted paths, JSON merging, strict validation."""
import json

import pytest

from deflamg import ConfigError
from deflamg.config import SolverConfig

# the block-solver configuration shape the CLI and docs advertise
SCHUR_JSON = """
{
    "solver": {
        "type": "fgmres",
        "M": 50,
        "tol": 1e-4
    },
    "precond": {
        "usolver": {
            "solver": {
                "type": "gmres",
                "tol": 1e-3,
                "maxiter": 5
            }
        },
        "psolver": {
            "isolver": {
                "type": "fgmres",
                "tol": 1e-2,
                "maxiter": 20
            },
            "local": {
                "coarse_enough": 500
            }
        }
    }
}
"""


def test_documented_defaults():
    cfg = SolverConfig()
    assert cfg.get("solver.type") == "bicgstab2"
    assert cfg.get("solver.tol") == 1e-6
    assert cfg.get("solver.M") == 50
    assert cfg.get("precond.relax.type") == "damped_jacobi"
    assert cfg.get("precond.relax.damping") == 0.8
    assert cfg.get("precond.coarsening.type") == "smoothed_aggregation"
    assert cfg.get("precond.coarsening.eps_strong") == 0.08
    assert cfg.get("precond.coarse_enough") == 500
    assert cfg.get("deflation.kind") == "constant"
    assert cfg.get("deflation.inexact") is False


def test_empty_json_keeps_defaults():
    cfg = SolverConfig.from_json("{}")
    assert cfg.to_dict() == SolverConfig().to_dict()


def test_block_solver_json_parses_and_overrides():
    cfg = SolverConfig.from_json(SCHUR_JSON)
    assert cfg.get("solver.type") == "fgmres"
    assert cfg.get("solver.M") == 50
    assert cfg.get("solver.tol") == 1e-4
    assert cfg.get("precond.usolver.solver.type") == "gmres"
    assert cfg.get("precond.usolver.solver.tol") == 1e-3
    assert cfg.get("precond.usolver.solver.maxiter") == 5
    assert cfg.get("precond.psolver.isolver.type") == "fgmres"
    assert cfg.get("precond.psolver.isolver.tol") == 1e-2
    assert cfg.get("precond.psolver.isolver.maxiter") == 20
    assert cfg.get("precond.psolver.local.coarse_enough") == 500
    # untouched paths keep their defaults
    assert cfg.get("solver.maxiter") == 1000
    assert cfg.get("precond.relax.damping") == 0.8


def test_unknown_key_rejected_with_full_path():
    with pytest.raises(ConfigError) as err:
        SolverConfig({"precond": {"relax": {"dampin": 0.5}}})
    assert "precond.relax.dampin" in str(err.value)


def test_unknown_top_level_key():
    with pytest.raises(ConfigError) as err:
        SolverConfig({"solvr": {}})
    assert "solvr" in str(err.value)


def test_type_errors_name_the_path():
    with pytest.raises(ConfigError) as err:
        SolverConfig({"solver": {"tol": "abc"}})
    assert "solver.tol" in str(err.value)
    with pytest.raises(ConfigError) as err:
        SolverConfig({"solver": {"maxiter": 2.5}})
    assert "solver.maxiter" in str(err.value)
    with pytest.raises(ConfigError) as err:
        SolverConfig({"deflation": {"inexact": "yes"}})
    assert "deflation.inexact" in str(err.value)
    with pytest.raises(ConfigError) as err:
        SolverConfig({"solver": "fast"})
    assert "solver" in str(err.value)


def test_bool_is_not_a_number():
    with pytest.raises(ConfigError):
        SolverConfig({"solver": {"tol": True}})
    with pytest.raises(ConfigError):
        SolverConfig({"solver": {"maxiter": True}})


def test_integral_float_coerced_to_int():
    cfg = SolverConfig({"solver": {"maxiter": 20.0}})
    assert cfg.get("solver.maxiter") == 20
    assert isinstance(cfg.get("solver.maxiter"), int)


def test_int_accepted_where_float_expected():
    cfg = SolverConfig({"solver": {"tol": 1}})
    assert cfg.get("solver.tol") == 1.0
    assert isinstance(cfg.get("solver.tol"), float)


def test_set_get_roundtrip_and_validation():
    cfg = SolverConfig()
    cfg.set("solver.tol", 1e-8)
    assert cfg.get("solver.tol") == 1e-8
    with pytest.raises(ConfigError):
        cfg.set("solver.nope", 1)
    with pytest.raises(ConfigError):
        cfg.set("precond", 5)
    with pytest.raises(ConfigError):
        cfg.get("precond.relax.nothing")


def test_json_roundtrip_canonical():
    cfg = SolverConfig.from_json(SCHUR_JSON)
    again = SolverConfig.from_json(cfg.to_json())
    assert cfg == again
    # canonical form is valid JSON with sorted keys
    tree = json.loads(cfg.to_json())
    assert list(tree) == sorted(tree)


def test_update_precedence_last_wins():
    cfg = SolverConfig.from_json(SCHUR_JSON)
    cfg.set("solver.tol", 3e-5)  # e.g. a CLI --tol override
    assert cfg.get("solver.tol") == 3e-5
    assert cfg.get("solver.type") == "fgmres"
