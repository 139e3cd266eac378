"""
Dense convex quadratic programming.

    minimize  0.5 x'Hx + c'x   subject to  Ex = e,  Gx <= g

with H symmetric positive semidefinite, possibly singular. The solver is a
primal active-set method working in the null space of the active constraints;
phase 1 and infeasibility certificates come from ``scipy.optimize.linprog``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from phmin.errors import DimensionMismatch
from shared.config import Config
from shared.utils import get_logger

logger = get_logger(__name__)

REGULARIZATION = 1e-12
FEAS_TOL = 1e-9
_EPS = float(np.finfo(float).eps)
_NULL_EIG_TOL = 1e-13
_INDEPENDENCE_TOL = 1e-8


class QpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITER_LIMIT = "IterLimit"
    UNBOUNDED = "Unbounded"


def _as_matrix(value, cols: int, name: str) -> np.ndarray:
    if value is None:
        return np.zeros((0, cols))
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.size == 0:
        return np.zeros((0, cols))
    if arr.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {arr.shape[1]} columns, expected {cols}")
    return arr


def _as_vector(value, rows: int, name: str) -> np.ndarray:
    arr = np.zeros(0) if value is None else np.asarray(value, dtype=float).ravel()
    if arr.shape[0] != rows:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {rows}")
    return arr


@dataclass(frozen=True, eq=False)
class QpSpec:
    H: np.ndarray
    c: np.ndarray
    E: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    tol_kkt: float = Config.QP_TOL
    max_iter: int = Config.QP_MAX_ITER

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.shape[0]
        if H.shape != (n, n):
            raise DimensionMismatch(f"H has shape {H.shape}, expected {(n, n)}")
        E = _as_matrix(self.E, n, "E")
        G = _as_matrix(self.G, n, "G")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "e", _as_vector(self.e, E.shape[0], "e"))
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", _as_vector(self.g, G.shape[0], "g"))

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.H @ x + self.c @ x)


@dataclass(frozen=True)
class KktResiduals:
    primal_eq: float
    primal_ineq: float
    dual: float
    complementarity: float

    def worst(self) -> float:
        return max(self.primal_eq, self.primal_ineq, self.dual, self.complementarity)


@dataclass(frozen=True, eq=False)
class QpSolution:
    x: np.ndarray
    objective: float
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    status: QpStatus
    kkt: KktResiduals
    active_set: Tuple[int, ...] = ()
    iterations: int = 0
    regularization: float = 0.0
    certificate: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == QpStatus.OPTIMAL


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """A feasible point, or a Farkas pair (y, z) with E'y + G'z = 0, z >= 0, e'y + g'z < 0."""

    x: Optional[np.ndarray]
    certificate: Optional[np.ndarray] = None

    @property
    def feasible(self) -> bool:
        return self.x is not None


def _violation(x: np.ndarray, E, e, G, g) -> float:
    eq = float(np.max(np.abs(E @ x - e) / (1.0 + np.abs(e)))) if E.shape[0] else 0.0
    ineq = float(np.max((G @ x - g) / (1.0 + np.abs(g)))) if G.shape[0] else 0.0
    return max(eq, ineq, 0.0)


def _farkas_certificate(E, e, G, g) -> Optional[np.ndarray]:
    me, mi = E.shape[0], G.shape[0]
    A_eq = np.hstack([E.T, G.T])
    objective = np.concatenate([e, g])
    bounds = [(-1.0, 1.0)] * me + [(0.0, 1.0)] * mi
    res = linprog(
        objective,
        A_eq=A_eq,
        b_eq=np.zeros(A_eq.shape[0]),
        bounds=bounds,
        method="highs",
    )
    if res.status == 0 and res.fun < -1e-9:
        return res.x
    return None


def feasible_point(E, e, G, g, n_vars: Optional[int] = None) -> FeasibilityResult:
    """
    Find x with Ex = e and Gx <= g, or certify that none exists.

    Args:
        E, e: Equality constraints (may be empty)
        G, g: Inequality constraints (may be empty)
        n_vars: Number of variables when it cannot be read off E or G

    Returns:
        FeasibilityResult holding either the point or the certificate
    """
    E_arr = np.atleast_2d(np.asarray(E, dtype=float)) if E is not None else None
    G_arr = np.atleast_2d(np.asarray(G, dtype=float)) if G is not None else None
    widths = [a.shape[1] for a in (E_arr, G_arr) if a is not None and a.shape[1] > 0]
    n = n_vars if n_vars is not None else (widths[0] if widths else 0)
    E_arr = _as_matrix(E_arr, n, "E")
    G_arr = _as_matrix(G_arr, n, "G")
    e_arr = _as_vector(e, E_arr.shape[0], "e")
    g_arr = _as_vector(g, G_arr.shape[0], "g")

    if n == 0:
        return FeasibilityResult(np.zeros(0))

    res = linprog(
        np.zeros(n),
        A_ub=G_arr if G_arr.shape[0] else None,
        b_ub=g_arr if G_arr.shape[0] else None,
        A_eq=E_arr if E_arr.shape[0] else None,
        b_eq=e_arr if E_arr.shape[0] else None,
        bounds=[(None, None)] * n,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10},
    )
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        if E_arr.shape[0]:
            # pull equalities back onto the affine set
            x = x - np.linalg.lstsq(E_arr, E_arr @ x - e_arr, rcond=None)[0]
        return FeasibilityResult(x)
    if res.status == 2:
        return FeasibilityResult(None, _farkas_certificate(E_arr, e_arr, G_arr, g_arr))
    logger.warning("phase-1 LP ended with status %d: %s", res.status, res.message)
    return FeasibilityResult(None, _farkas_certificate(E_arr, e_arr, G_arr, g_arr))


def _row_space(Aw: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (range, null) of the row space of Aw, rank read off a pivoted QR."""
    if Aw.shape[0] == 0:
        return np.zeros((n, 0)), np.eye(n)
    Q, R, _ = scipy.linalg.qr(Aw.T, pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > _INDEPENDENCE_TOL * d[0])) if d.size and d[0] > 0.0 else 0
    return Q[:, :rank], Q[:, rank:]


def _initial_working_set(x: np.ndarray, spec: QpSpec, hint: Sequence[int]) -> List[int]:
    G, g = spec.G, spec.g
    slack = g - G @ x
    active = set(np.flatnonzero(slack <= FEAS_TOL * (1.0 + np.abs(g))).tolist())
    hinted = [i for i in hint if i in active]
    order = hinted + sorted(active.difference(hinted))

    working: List[int] = []
    basis, _ = _row_space(spec.E, spec.n_vars)
    for i in order:
        if basis.shape[1] >= spec.n_vars:
            break
        row = G[i]
        resid = row - basis @ (basis.T @ row)
        resid = resid - basis @ (basis.T @ resid)
        norm = float(np.linalg.norm(resid))
        if norm > _INDEPENDENCE_TOL * np.linalg.norm(row):
            working.append(i)
            basis = np.column_stack([basis, resid / norm])
    return working


def _gradient_noise(spec: QpSpec, x: np.ndarray) -> np.ndarray:
    """Entrywise bound on the rounding error of Hx + c."""
    return (spec.n_vars + 1) * _EPS * (np.abs(spec.H) @ np.abs(x) + np.abs(spec.c))


def _subspace_step(
    H: np.ndarray, Z: np.ndarray, grad: np.ndarray, noise: np.ndarray, reg: float
) -> Tuple[Optional[np.ndarray], bool]:
    """
    Step minimizing the model on the working face.

    Eigen-directions of the reduced Hessian whose gradient component is within
    rounding noise are left alone. Returns (None, False) when nothing is left,
    (p, False) for a Newton step, and (d, True) for a descent ray along a
    zero-curvature direction.
    """
    if Z.shape[1] == 0:
        return None, False
    w, V = np.linalg.eigh(Z.T @ H @ Z)
    W = Z @ V
    coef = W.T @ grad
    live = np.abs(coef) > np.abs(W).T @ noise
    if not np.any(live):
        return None, False
    tau = _NULL_EIG_TOL * max(1.0, float(w.max(initial=0.0)))
    null = live & (w < tau)
    if np.any(null):
        return -W[:, null] @ coef[null], True
    return -W[:, live] @ (coef[live] / (w[live] + reg)), False


def _residuals(spec: QpSpec, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> KktResiduals:
    E, e, G, g = spec.E, spec.e, spec.G, spec.g
    primal_eq = float(np.max(np.abs(E @ x - e))) if E.shape[0] else 0.0
    primal_ineq = float(max(0.0, np.max(G @ x - g))) if G.shape[0] else 0.0
    stationarity = spec.H @ x + spec.c + E.T @ y + G.T @ z
    dual = float(np.max(np.abs(stationarity))) if stationarity.size else 0.0
    comp = float(np.max(np.abs(z * (g - G @ x)))) if G.shape[0] else 0.0
    return KktResiduals(primal_eq, primal_ineq, dual, comp)


def _result(
    spec: QpSpec,
    status: QpStatus,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    working: Sequence[int],
    iterations: int,
    reg: float,
) -> QpSolution:
    return QpSolution(
        x=x,
        objective=spec.objective(x),
        eq_multipliers=y,
        ineq_multipliers=z,
        status=status,
        kkt=_residuals(spec, x, y, z),
        active_set=tuple(sorted(working)),
        iterations=iterations,
        regularization=reg,
    )


def solve_qp(
    spec: QpSpec, x0: Optional[np.ndarray] = None, active_hint: Sequence[int] = ()
) -> QpSolution:
    """
    Solve a convex QP by the primal active-set method.

    Ties are broken towards the smallest constraint index, so identical inputs
    give identical outputs.

    Args:
        spec: Problem data
        x0: Optional feasible starting point; ignored if infeasible
        active_hint: Constraint indices to try first in the initial working set

    Returns:
        QpSolution
    """
    H, c, E, G, g = spec.H, spec.c, spec.E, spec.G, spec.g
    n, me, mi = spec.n_vars, E.shape[0], G.shape[0]
    max_iter = spec.max_iter if spec.max_iter > 0 else 20 * (n + me + mi) + 100

    min_eig = float(np.linalg.eigvalsh(H)[0]) if n else 0.0
    reg = REGULARIZATION if min_eig < REGULARIZATION else 0.0

    x = None
    if x0 is not None:
        candidate = np.asarray(x0, dtype=float).ravel()
        if candidate.shape[0] != n:
            raise DimensionMismatch(f"x0 has length {candidate.shape[0]}, expected {n}")
        if _violation(candidate, E, spec.e, G, g) <= FEAS_TOL:
            x = candidate.copy()
    if x is None:
        phase1 = feasible_point(E, spec.e, G, g, n_vars=n)
        if not phase1.feasible:
            nan = np.full(n, np.nan)
            return QpSolution(
                x=nan,
                objective=float("nan"),
                eq_multipliers=np.zeros(me),
                ineq_multipliers=np.zeros(mi),
                status=QpStatus.INFEASIBLE,
                kkt=KktResiduals(np.inf, np.inf, np.inf, np.inf),
                regularization=reg,
                certificate=phase1.certificate,
            )
        x = phase1.x

    working = _initial_working_set(x, spec, active_hint)
    y, z = np.zeros(me), np.zeros(mi)
    row_norms = np.linalg.norm(G, axis=1)

    for it in range(1, max_iter + 1):
        grad = H @ x + c
        noise = _gradient_noise(spec, x)
        Aw = np.vstack([E, G[working]]) if working else E
        _, Z = _row_space(Aw, n)
        step, ray = _subspace_step(H, Z, grad, noise, reg)

        if step is None:
            lam = np.linalg.lstsq(Aw.T, -grad, rcond=None)[0] if Aw.shape[0] else np.zeros(0)
            y = lam[:me]
            zw = lam[me:]
            dual_tol = 10.0 * float(np.max(noise, initial=0.0))
            if len(working) and float(zw.min()) < -dual_tol:
                worst = float(zw.min())
                drop = min(
                    (working[k] for k in range(len(working)) if zw[k] == worst), default=working[0]
                )
                working.remove(drop)
                continue
            z = np.zeros(mi)
            z[working] = np.maximum(zw, 0.0)
            return _result(spec, QpStatus.OPTIMAL, x, y, z, working, it, reg)

        alpha = np.inf if ray else 1.0
        if ray:
            curvature = float(step @ H @ step)
            if curvature > 0.0:
                alpha = -float(grad @ step) / curvature
        blocking = None
        Gp = G @ step
        candidates = Gp > 1e-14 * row_norms * float(np.linalg.norm(step))
        candidates[working] = False
        if np.any(candidates):
            ratios = np.full(mi, np.inf)
            ratios[candidates] = np.maximum(g - G @ x, 0.0)[candidates] / Gp[candidates]
            first = int(np.argmin(ratios))
            if ratios[first] < alpha:
                alpha, blocking = float(ratios[first]), first
        if not np.isfinite(alpha):
            logger.debug("QP unbounded along a zero-curvature direction")
            return _result(spec, QpStatus.UNBOUNDED, x, y, z, working, it, reg)

        x = x + alpha * step
        if blocking is not None:
            working.append(blocking)

    logger.warning("QP hit the iteration limit (%d)", max_iter)
    return _result(spec, QpStatus.ITER_LIMIT, x, y, z, working, max_iter, reg)
