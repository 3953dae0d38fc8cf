"""Krylov solvers: CG, BiCGStab(2), GMRES, and flexible GMRES.

Conventions shared by every solver here:

- ``A`` and ``M`` may be a SparseMatrix or any callable vector->vector map;
  ``M`` applies an approximate inverse. GMRES, FGMRES and BiCGStab(2) use
  right preconditioning (they iterate on ``A o M`` and map back at the end),
  so the monitored residual is the true residual of the returned iterate.
  CG uses the classic symmetric formulation.
- Convergence target is ``max(tol * ||b||, atol)`` on the 2-norm of the
  (recurrence) residual; the recurrence is refreshed against the true
  residual every ``refresh_every`` iterations to stop drift.
- ``dot`` replaces the inner product everywhere, which lets callers supply
  a fixed-reduction-order implementation for run-to-run determinism.
- ``b = 0`` returns the zero solution immediately as converged.
- Breakdowns are reported, not raised: the returned report carries a short
  description and the best iterate so far comes back to the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sparse import SparseMatrix, matvec

__all__ = [
    "SolveReport",
    "LinearOperator",
    "as_operator",
    "cg",
    "bicgstab2",
    "gmres",
    "fgmres",
    "get_solver",
    "SOLVERS",
]

DEFAULT_REFRESH = 50


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    breakdown: str | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "relative_residual": self.relative_residual,
            "converged": self.converged,
            "breakdown": self.breakdown,
        }


class LinearOperator:
    """A square operator given by a callable."""

    def __init__(self, n: int, apply):
        self.n = n
        self._apply = apply

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x)

    @classmethod
    def from_matrix(cls, A: SparseMatrix) -> "LinearOperator":
        return cls(A.nrows, lambda x: matvec(A, x))


def as_operator(A):
    if isinstance(A, SparseMatrix):
        return LinearOperator.from_matrix(A)
    return A


def _norm(v, dot) -> float:
    return math.sqrt(max(dot(v, v), 0.0))


def _prepare(A, b, x0, M, dot):
    op = as_operator(A)
    dot = dot if dot is not None else lambda u, v: float(np.dot(u, v))
    apply_M = None
    if M is not None:
        apply_M = M if callable(M) else as_operator(M)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    return op, dot, apply_M, x


def cg(A, b, *, M=None, x0=None, tol=1e-6, maxiter=1000, atol=0.0, dot=None,
       callback=None, refresh_every=DEFAULT_REFRESH):
    """Preconditioned conjugate gradients for symmetric positive definite A.

    M must be symmetric positive definite as well (it is applied in the
    classic z = M r form). A non-positive p'Ap stops the iteration with a
    breakdown note unless the residual already meets the target.
    """
    op, dot, apply_M, x = _prepare(A, b, x0, M, dot)
    bnorm = _norm(b, dot)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    target = max(tol * bnorm, atol)
    r = b - op(x) if x0 is not None else b.astype(np.float64, copy=True)
    resnorm = _norm(r, dot)
    if callback is not None:
        callback(0, resnorm)
    if resnorm <= target:
        return x, SolveReport(0, resnorm / bnorm, True)
    z = apply_M(r) if apply_M is not None else r
    p = z.copy()
    rz = dot(r, z)
    breakdown = None
    iters = 0
    while iters < maxiter:
        iters += 1
        Ap = op(p)
        pAp = dot(p, Ap)
        if pAp <= 0.0 or not math.isfinite(pAp):
            breakdown = f"non-positive curvature p'Ap = {pAp:g}"
            break
        alpha = rz / pAp
        x = x + alpha * p
        if iters % refresh_every == 0:
            r = b - op(x)
        else:
            r = r - alpha * Ap
        resnorm = _norm(r, dot)
        if callback is not None:
            callback(iters, resnorm)
        if resnorm <= target:
            return x, SolveReport(iters, resnorm / bnorm, True)
        z = apply_M(r) if apply_M is not None else r
        rz_new = dot(r, z)
        if rz_new == 0.0 or not math.isfinite(rz_new):
            breakdown = f"preconditioned residual product degenerated to {rz_new:g}"
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    converged = resnorm <= target
    return x, SolveReport(iters, resnorm / bnorm, converged, None if converged else breakdown)


def _bicgstab_ell(op_hat, r0, target, maxiter, dot, ell, refresh, bnorm, callback):
    """BiCGStab(L) recurrence in the (right-preconditioned) iteration space.

    Returns the accumulated correction u with r0 - op_hat(u) as residual.
    One iteration is a full L-group costing 2L operator applications.
    """
    n = r0.shape[0]
    u = np.zeros(n)
    r = [r0.copy()]
    d = [np.zeros(n)]
    r_shadow = r0.copy()
    rho0, alpha, omega = 1.0, 0.0, 1.0
    restarted = False
    breakdown = None
    iters = 0
    resnorm = _norm(r[0], dot)

    def fail(msg):
        nonlocal rho0, alpha, omega, restarted, r, d, r_shadow
        if restarted:
            return msg
        # one fresh start with a new shadow vector before giving up
        restarted = True
        r_shadow = r[0].copy()
        r[:] = [r[0]]
        d[:] = [np.zeros(n)]
        rho0, alpha, omega = 1.0, 0.0, 1.0
        return None

    while iters < maxiter and resnorm > target:
        iters += 1
        rho0 = -omega * rho0
        aborted = False
        converged_mid_group = False
        for j in range(ell):
            rho1 = dot(r[j], r_shadow)
            if rho0 == 0.0 or not math.isfinite(rho1):
                breakdown = fail("rho degenerated in the BiCG stage")
                aborted = True
                break
            beta = alpha * rho1 / rho0
            rho0 = rho1
            for i in range(j + 1):
                d[i] = r[i] - beta * d[i]
            d.append(op_hat(d[j]))
            gamma_div = dot(d[j + 1], r_shadow)
            if gamma_div == 0.0 or not math.isfinite(gamma_div):
                breakdown = fail("shadow product degenerated in the BiCG stage")
                aborted = True
                break
            alpha = rho0 / gamma_div
            for i in range(j + 1):
                r[i] = r[i] - alpha * d[i + 1]
            r.append(op_hat(r[j]))
            u = u + alpha * d[0]
            resnorm = _norm(r[0], dot)
            if resnorm <= target:
                converged_mid_group = True
                break
        if aborted:
            resnorm = _norm(r[0], dot)
            if breakdown is not None or resnorm <= target:
                break
            continue  # fail() reset the recurrence; retry from the current residual
        if converged_mid_group:
            if callback is not None:
                callback(iters, resnorm)
            break
        # minimal-residual polynomial step on r[1..L] (modified Gram-Schmidt)
        tau = np.zeros((ell + 1, ell + 1))
        sigma = np.zeros(ell + 1)
        gamma_p = np.zeros(ell + 1)
        degenerate = False
        for j in range(1, ell + 1):
            for i in range(1, j):
                tau[i, j] = dot(r[j], r[i]) / sigma[i]
                r[j] = r[j] - tau[i, j] * r[i]
            sigma[j] = dot(r[j], r[j])
            if sigma[j] == 0.0 or not math.isfinite(sigma[j]):
                degenerate = True
                break
            gamma_p[j] = dot(r[0], r[j]) / sigma[j]
        if degenerate:
            breakdown = fail("minimal-residual basis degenerated")
            if breakdown is not None:
                break
            continue
        gamma = np.zeros(ell + 1)
        gamma[ell] = gamma_p[ell]
        omega = gamma[ell]
        if omega == 0.0 or not math.isfinite(omega):
            breakdown = fail("stabilization weight vanished")
            if breakdown is not None:
                break
            continue
        for j in range(ell - 1, 0, -1):
            gamma[j] = gamma_p[j] - np.dot(tau[j, j + 1 : ell + 1], gamma[j + 1 : ell + 1])
        gamma_pp = np.zeros(ell)
        for j in range(1, ell):
            gamma_pp[j] = gamma[j + 1] + np.dot(tau[j, j + 1 : ell], gamma[j + 2 : ell + 1])
        u = u + gamma[1] * r[0]
        r[0] = r[0] - gamma_p[ell] * r[ell]
        d[0] = d[0] - gamma[ell] * d[ell]
        for j in range(1, ell):
            d[0] = d[0] - gamma[j] * d[j]
            u = u + gamma_pp[j] * r[j]
            r[0] = r[0] - gamma_p[j] * r[j]
        del r[1:], d[1:]
        if iters % refresh == 0:
            r[0] = r0 - op_hat(u)
        resnorm = _norm(r[0], dot)
        if callback is not None:
            callback(iters, resnorm)
    converged = resnorm <= target
    return u, SolveReport(iters, resnorm / bnorm, converged, None if converged else breakdown)


def bicgstab2(A, b, *, M=None, x0=None, tol=1e-6, maxiter=1000, atol=0.0, dot=None,
              callback=None, refresh_every=DEFAULT_REFRESH):
    """BiCGStab(2): alternating BiCG steps with a degree-2 minimal-residual
    polynomial, which keeps the smooth convergence of BiCGStab on problems
    where single-step stabilization stalls."""
    op, dot, apply_M, x = _prepare(A, b, x0, M, dot)
    bnorm = _norm(b, dot)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    target = max(tol * bnorm, atol)
    r0 = b - op(x) if x0 is not None else b.astype(np.float64, copy=True)
    if apply_M is None:
        op_hat = op
    else:
        def op_hat(v):
            return op(apply_M(v))
    u, report = _bicgstab_ell(
        op_hat, r0, target, maxiter, dot, 2, refresh_every, bnorm, callback
    )
    correction = apply_M(u) if apply_M is not None else u
    return x + correction, report


def _givens(a, b):
    rad = math.hypot(a, b)
    if rad == 0.0:
        return 1.0, 0.0
    return a / rad, b / rad


def _arnoldi_cycle(op_hat, r0, r0_norm, target, steps, dot, store_z, apply_M,
                   callback, iter_offset, basis_sink):
    """One restart cycle of (F)GMRES via modified Gram-Schmidt Arnoldi.

    Each column gets a second orthogonalization pass, which in practice keeps
    ||V'V - I|| at working precision. Returns the correction in solution
    space, the final residual estimate, and the number of steps taken.
    """
    n = r0.shape[0]
    V = [r0 / r0_norm]
    Z = [] if store_z else None
    H = np.zeros((steps + 1, steps))
    g = np.zeros(steps + 1)
    g[0] = r0_norm
    rotations = []
    res = r0_norm
    j = 0
    while j < steps:
        if store_z:
            z = apply_M(V[j]) if apply_M is not None else V[j].copy()
            Z.append(z)
            w = op_hat(z)
        else:
            w = op_hat(V[j])
        for i in range(j + 1):
            hij = dot(w, V[i])
            H[i, j] = hij
            w = w - hij * V[i]
        for i in range(j + 1):
            extra = dot(w, V[i])
            H[i, j] += extra
            w = w - extra * V[i]
        hj1 = _norm(w, dot)
        H[j + 1, j] = hj1
        exact = hj1 == 0.0
        if not exact:
            V.append(w / hj1)
        for i, (cs, sn) in enumerate(rotations):
            t = cs * H[i, j] + sn * H[i + 1, j]
            H[i + 1, j] = -sn * H[i, j] + cs * H[i + 1, j]
            H[i, j] = t
        cs, sn = _givens(H[j, j], H[j + 1, j])
        rotations.append((cs, sn))
        H[j, j] = cs * H[j, j] + sn * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -sn * g[j]
        g[j] = cs * g[j]
        res = abs(g[j + 1])
        j += 1
        if callback is not None:
            callback(iter_offset + j, res)
        if exact or res <= target:
            break
    y = np.zeros(j)
    for i in range(j - 1, -1, -1):
        y[i] = (g[i] - np.dot(H[i, i + 1 : j], y[i + 1 : j])) / H[i, i]
    if basis_sink is not None:
        basis_sink.append(np.column_stack(V))
    if store_z:
        update = Z[0] * y[0]
        for i in range(1, j):
            update = update + y[i] * Z[i]
    else:
        update = V[0] * y[0]
        for i in range(1, j):
            update = update + y[i] * V[i]
        if apply_M is not None:
            update = apply_M(update)
    return update, res, j


def _gmres_driver(A, b, M, x0, tol, maxiter, atol, dot, restart, flexible,
                  callback, basis_sink):
    op, dot, apply_M, x = _prepare(A, b, x0, M, dot)
    bnorm = _norm(b, dot)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    target = max(tol * bnorm, atol)
    if restart is None or restart < 1:
        raise ConfigError(f"restart length must be positive, got {restart}")
    if flexible:
        op_hat = op
    elif apply_M is None:
        op_hat = op
    else:
        def op_hat(v):
            return op(apply_M(v))
    total = 0
    r = b - op(x) if x0 is not None else b.astype(np.float64, copy=True)
    resnorm = _norm(r, dot)
    if callback is not None:
        callback(0, resnorm)
    while total < maxiter and resnorm > target:
        steps = min(restart, maxiter - total)
        update, res, done = _arnoldi_cycle(
            op_hat, r, resnorm, target, steps, dot, flexible, apply_M,
            callback, total, basis_sink,
        )
        x = x + update
        total += done
        r = b - op(x)
        resnorm = _norm(r, dot)
    converged = resnorm <= target
    return x, SolveReport(total, resnorm / bnorm, converged)


def gmres(A, b, *, M=None, x0=None, tol=1e-6, maxiter=1000, atol=0.0, dot=None,
          restart=50, callback=None, basis_sink=None):
    """Restarted GMRES, right-preconditioned. ``maxiter`` counts the total
    number of inner steps across all restart cycles."""
    return _gmres_driver(A, b, M, x0, tol, maxiter, atol, dot, restart, False,
                         callback, basis_sink)


def fgmres(A, b, *, M=None, x0=None, tol=1e-6, maxiter=1000, atol=0.0, dot=None,
           restart=50, callback=None, basis_sink=None):
    """Flexible GMRES: the preconditioner may change between steps, so the
    preconditioned directions are stored and combined directly."""
    return _gmres_driver(A, b, M, x0, tol, maxiter, atol, dot, restart, True,
                         callback, basis_sink)


SOLVERS = {
    "cg": cg,
    "bicgstab2": bicgstab2,
    "gmres": gmres,
    "fgmres": fgmres,
}


def get_solver(name: str):
    try:
        return SOLVERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown solver type '{name}', expected one of {sorted(SOLVERS)}"
        ) from None
