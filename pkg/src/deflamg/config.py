"""Hierarchical solver configuration.

A SolverConfig is a tree of typed leaves addressed by dotted paths
(``solver.tol``, ``precond.relax.damping``, ...). Every key has a documented
default; merging a JSON document or setting a path validates both the key
(unknown keys rejected with their full path) and the value type against the
default. Stopping is relative to ||b|| in the 2-norm and the initial guess is
always zero; neither is configurable.
"""
from __future__ import annotations

import copy
import json

from .errors import ConfigError

__all__ = ["SolverConfig", "DEFAULTS"]

DEFAULTS = {
    "solver": {
        "type": "bicgstab2",  # cg | bicgstab2 | gmres | fgmres
        "tol": 1e-6,
        "maxiter": 1000,
        "M": 50,  # restart length for gmres/fgmres
    },
    "precond": {
        "coarsening": {
            "type": "smoothed_aggregation",
            "eps_strong": 0.08,  # halved on each coarser level
            "omega": 2.0 / 3.0,  # prolongation smoothing weight
        },
        "relax": {
            "type": "damped_jacobi",  # damped_jacobi | spai0 | gauss_seidel
            "damping": 0.8,
        },
        "coarse_enough": 500,  # stop coarsening at this size, then dense LU
        # velocity solver of the pressure-Schur preconditioner
        "usolver": {
            "solver": {"type": "gmres", "tol": 1e-3, "maxiter": 5},
        },
        # pressure solver of the pressure-Schur preconditioner
        "psolver": {
            "isolver": {"type": "fgmres", "tol": 1e-2, "maxiter": 20},
            "local": {"coarse_enough": 500},
            "deflation": {"kind": "constant"},
        },
    },
    "deflation": {
        "kind": "constant",  # constant | linear
        "inexact": False,  # solve the coarse system iteratively inside the projector
        "coarse_tol": 1e-2,  # tolerance of that inner coarse solve
    },
}


def _check_leaf(path: str, default, value):
    """Return the validated/coerced replacement for a leaf, or raise ConfigError."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{path}: expected an integer, got {value!r}")
            value = int(value)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported default type {type(default).__name__}")


def _merge(tree: dict, defaults: dict, incoming: dict, prefix: str):
    for key, value in incoming.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown configuration key '{path}'")
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a table, got {value!r}")
            _merge(tree[key], default, value, path + ".")
        else:
            tree[key] = _check_leaf(path, default, value)


class SolverConfig:
    """Typed configuration tree with documented defaults."""

    def __init__(self, overrides: dict | None = None):
        self._tree = copy.deepcopy(DEFAULTS)
        if overrides:
            self.update(overrides)

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_json(cls, text: str) -> "SolverConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("top-level JSON value must be an object")
        return cls(data)

    @classmethod
    def from_file(cls, path) -> "SolverConfig":
        try:
            with open(str(path), "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        return cls.from_json(text)

    # -- access ---------------------------------------------------------------

    def update(self, tree: dict) -> "SolverConfig":
        _merge(self._tree, DEFAULTS, tree, "")
        return self

    def get(self, path: str):
        node = self._tree
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown configuration key '{path}'")
            node = node[part]
        return copy.deepcopy(node) if isinstance(node, dict) else node

    def set(self, path: str, value) -> "SolverConfig":
        parts = path.split(".")
        node, default = self._tree, DEFAULTS
        for part in parts[:-1]:
            if part not in default or not isinstance(default[part], dict):
                raise ConfigError(f"unknown configuration key '{path}'")
            node, default = node[part], default[part]
        leaf = parts[-1]
        if leaf not in default:
            raise ConfigError(f"unknown configuration key '{path}'")
        if isinstance(default[leaf], dict):
            raise ConfigError(f"{path}: refers to a table, not a value")
        node[leaf] = _check_leaf(path, default[leaf], value)
        return self

    def to_dict(self) -> dict:
        return copy.deepcopy(self._tree)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self._tree, indent=indent, sort_keys=True)

    def copy(self) -> "SolverConfig":
        out = SolverConfig()
        out._tree = copy.deepcopy(self._tree)
        return out

    def __eq__(self, other):
        return isinstance(other, SolverConfig) and self._tree == other._tree

    def __repr__(self):
        return f"SolverConfig({self._tree!r})"
