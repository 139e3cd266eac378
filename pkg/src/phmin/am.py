"""
Alternating minimization of F(A, P) = ||PA - JP||_F^2.

Each outer iteration solves the QP in P for fixed A (P1 = 1, beta P >= 0) and
then the QP in A for fixed P (A1 <= 0, -xi <= a_ii <= 0, 0 <= a_ij <= xi).
Both subproblems are warm-started from the previous iterate, so F does not
increase after the first A-step. Between iterations the pair may be pushed
further along its last change; the push is kept only if it stays feasible and
lowers F, which leaves the trace monotone.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from phmin.errors import DimensionMismatch, InfeasibleBeta
from phmin.jordan import ProblemData, RealJordanForm
from phmin.phgen import sample_ph
from phmin.qp import QpSolution, QpSpec, QpStatus, solve_qp
from phmin.verify import ValidityReport, validity
from shared.models import AmConfig, GenSpec, InitKind
from shared.utils import get_logger

logger = get_logger(__name__)

ALPHA_CLAMP = 1e-8
LOG_EVERY = 100
BOX_TOL = 1e-9
EXTRAPOLATION_MAX = 16.0


class AmOutcome(str, Enum):
    FOUND = "RepresentationFound"
    NOT_FOUND = "NotFound"
    INFEASIBLE_BETA = "InfeasibleBeta"


@dataclass(frozen=True, eq=False)
class IterateState:
    A: np.ndarray
    P: np.ndarray
    F: float
    iter: int


@dataclass(frozen=True, eq=False)
class StepResult:
    """Solution matrix of one subproblem together with the QP that produced it."""

    matrix: np.ndarray
    qp: QpSolution


@dataclass(frozen=True, eq=False)
class AmReport:
    """
    Result of one run.

    ``f_trace[k]`` is F(A_{k+1}, P_k), the value after the A-step of outer
    iteration k; ``f_initial`` is F(A_0, P_0).
    """

    outcome: AmOutcome
    final: IterateState
    config: AmConfig
    f_trace: List[float] = field(default_factory=list, repr=False)
    alpha: Optional[np.ndarray] = None
    f_initial: float = float("nan")
    wallclock: float = 0.0
    op_a_kkt: float = 0.0
    op_p_kkt: float = 0.0
    extrapolations: int = 0

    @property
    def found(self) -> bool:
        return self.outcome == AmOutcome.FOUND

    @property
    def iterations(self) -> int:
        return len(self.f_trace)

    def summary(self) -> Dict[str, Any]:
        return {
            "init": self.config.init.value,
            "seed": self.config.seed,
            "outcome": self.outcome.value,
            "f_final": self.final.F,
            "iterations": self.iterations,
            "wallclock": self.wallclock,
        }


@dataclass(frozen=True, eq=False)
class PhRepresentation:
    alpha: np.ndarray
    A: np.ndarray
    diagnostics: ValidityReport
    clamped: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class MultistartResult:
    best: AmReport
    best_index: int
    runs: List[Dict[str, Any]]


def objective(P: np.ndarray, A: np.ndarray, jordan: RealJordanForm) -> float:
    """||PA - JP||_F^2 from the dense matrices."""
    R = P @ A - jordan.dense @ P
    return float(np.sum(R * R))


def objective_blocks(A: np.ndarray, jordan: RealJordanForm) -> List[np.ndarray]:
    """
    One matrix B per Jordan block with F = sum_k p_k B_k B_k' p_k'.

    ``p_k`` is the row-major vectorization of the rows of P belonging to block
    k. For a real block B is block-bidiagonal with A - lam I on the diagonal and
    -I above it; for a complex block the diagonal cells are
    [[A - mu I, -omega I], [omega I, A - mu I]].
    """
    n = jordan.n
    blocks = []
    for a, b in jordan.offsets():
        J_k = jordan.dense[a:b, a:b]
        blocks.append(np.kron(np.eye(b - a), A) - np.kron(J_k.T, np.eye(n)))
    return blocks


def hessian_in_P(A: np.ndarray, jordan: RealJordanForm) -> np.ndarray:
    """
    Hessian of F in the row-major vectorization of P.

    This is 2 blockdiag(B_k B_k'), so F(A, P) = 0.5 p' H p. For n = 1 with
    J = [lam] and A = [a] it is [[2 (a - lam)^2]].
    """
    blocks = [2.0 * B @ B.T for B in objective_blocks(A, jordan)]
    return scipy.linalg.block_diag(*blocks)


def op_a_spec(A: np.ndarray, beta: np.ndarray, jordan: RealJordanForm, qp_tol: float) -> QpSpec:
    n = jordan.n
    return QpSpec(
        H=hessian_in_P(A, jordan),
        c=np.zeros(n * n),
        E=np.kron(np.eye(n), np.ones((1, n))),
        e=np.ones(n),
        G=-np.kron(np.asarray(beta, dtype=float)[None, :], np.eye(n)),
        g=np.zeros(n),
        tol_kkt=qp_tol,
    )


@lru_cache(maxsize=32)
def _box_constraints(n: int, xi: float) -> Tuple[np.ndarray, np.ndarray]:
    # A is vectorized column-major: entry (i, j) sits at i + j n
    diagonal = np.eye(n, dtype=bool).ravel(order="F")
    upper = np.where(diagonal, 0.0, xi)
    lower = np.where(diagonal, xi, 0.0)
    G = np.vstack([np.kron(np.ones((1, n)), np.eye(n)), np.eye(n * n), -np.eye(n * n)])
    return G, np.concatenate([np.zeros(n), upper, lower])


def op_p_spec(P: np.ndarray, xi: float, jordan: RealJordanForm, qp_tol: float) -> QpSpec:
    G, g = _box_constraints(jordan.n, float(xi))
    return QpSpec(
        H=2.0 * np.kron(np.eye(jordan.n), P.T @ P),
        c=-2.0 * (P.T @ jordan.dense @ P).ravel(order="F"),
        G=G,
        g=g,
        tol_kkt=qp_tol,
    )


def _check_status(solution: QpSolution, spec: QpSpec, name: str) -> None:
    if solution.status != QpStatus.OPTIMAL:
        logger.warning("%s subproblem ended with status %s", name, solution.status.value)
    elif solution.kkt.worst() > spec.tol_kkt * max(1.0, float(np.max(np.abs(spec.H)))):
        logger.debug("%s KKT residuals above tolerance: %s", name, solution.kkt)


def solve_op_a(
    A: np.ndarray,
    beta: np.ndarray,
    jordan: RealJordanForm,
    qp_tol: float,
    P0: Optional[np.ndarray] = None,
    active_hint: Sequence[int] = (),
) -> StepResult:
    """
    Minimize F(A, .) over {P1 = 1, beta P >= 0}.

    Raises:
        InfeasibleBeta: the constraint set is empty
    """
    n = jordan.n
    spec = op_a_spec(A, beta, jordan, qp_tol)
    x0 = None if P0 is None else np.asarray(P0, dtype=float).ravel()
    solution = solve_qp(spec, x0=x0, active_hint=active_hint)
    if solution.status == QpStatus.INFEASIBLE:
        raise InfeasibleBeta(
            "no P with P1 = 1 and beta P >= 0 exists; "
            f"no representation of order {n} for beta = {np.asarray(beta).tolist()}"
        )
    _check_status(solution, spec, "P-step")
    return StepResult(solution.x.reshape(n, n), solution)


def solve_op_p(
    P: np.ndarray,
    xi: float,
    jordan: RealJordanForm,
    qp_tol: float,
    A0: Optional[np.ndarray] = None,
    active_hint: Sequence[int] = (),
) -> StepResult:
    """Minimize F(., P) over the sub-generator box; A = 0 is always feasible."""
    n = jordan.n
    spec = op_p_spec(P, xi, jordan, qp_tol)
    start = np.zeros((n, n)) if A0 is None or not in_box(A0, xi) else A0
    solution = solve_qp(spec, x0=start.ravel(order="F"), active_hint=active_hint)
    _check_status(solution, spec, "A-step")
    return StepResult(solution.x.reshape((n, n), order="F"), solution)


def in_box(A: np.ndarray, xi: float, tol: float = BOX_TOL) -> bool:
    """Whether A satisfies the A-step constraints."""
    A = np.asarray(A, dtype=float)
    diag = np.diag(A)
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return bool(
        np.all(A.sum(axis=1) <= tol)
        and np.all(diag <= tol)
        and np.all(diag >= -xi - tol)
        and np.all(off >= -tol)
        and np.all(off <= xi + tol)
    )


def _step_limit(
    value: np.ndarray, direction: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> float:
    """Largest t >= 0 with lower <= value + t direction <= upper."""
    limit = np.inf
    up = direction > 0.0
    if np.any(up):
        room = np.maximum(upper[up] - value[up], 0.0)
        limit = min(limit, float(np.min(room / direction[up])))
    down = direction < 0.0
    if np.any(down):
        room = np.maximum(value[down] - lower[down], 0.0)
        limit = min(limit, float(np.min(room / -direction[down])))
    return limit


def extrapolate(
    P: np.ndarray,
    A: np.ndarray,
    P_prev: np.ndarray,
    A_prev: np.ndarray,
    beta: np.ndarray,
    xi: float,
    jordan: RealJordanForm,
    step: float,
) -> Optional[Tuple[np.ndarray, np.ndarray, float]]:
    """
    Push (P, A) by ``step`` times its last change, cut back to the feasible sets.

    P1 = 1 is kept because both iterates satisfy it; beta P >= 0 and the A-step
    box limit how far the push may go.

    Returns:
        (P, A, F) at the pushed point, or None when no positive step is feasible
    """
    n = jordan.n
    dP, dA = P - P_prev, A - A_prev
    off = ~np.eye(n, dtype=bool)
    limit = min(
        step,
        _step_limit(beta @ P, beta @ dP, np.zeros(n), np.full(n, np.inf)),
        _step_limit(A.sum(axis=1), dA.sum(axis=1), np.full(n, -np.inf), np.zeros(n)),
        _step_limit(
            A.ravel(), dA.ravel(), np.where(off, 0.0, -xi).ravel(), np.where(off, xi, 0.0).ravel()
        ),
    )
    if not limit > 0.0:
        return None
    P_new, A_new = P + limit * dP, A + limit * dA
    return P_new, A_new, objective(P_new, A_new, jordan)


def default_init(
    jordan: RealJordanForm,
    kind: InitKind,
    xi: Optional[float] = None,
    init_matrix: Optional[Sequence[Sequence[float]]] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    Starting matrix A0. It need not satisfy the A-step constraints.

    Random starts are sub-generators from the instance sampler rescaled so
    that the largest |a_ii| is xi / 2.
    """
    n = jordan.n
    if kind == InitKind.JORDAN_PLUS_ONES:
        return jordan.dense + np.ones((n, n)) - np.eye(n)
    if kind == InitKind.JORDAN:
        return jordan.dense.copy()
    if kind == InitKind.MINUS_XI_I:
        if xi is None:
            raise ValueError("init minus-xi-i needs xi")
        return -xi * np.eye(n)
    if kind == InitKind.CUSTOM:
        A0 = np.atleast_2d(np.asarray(init_matrix, dtype=float))
        if A0.shape != (n, n):
            raise DimensionMismatch(f"initial matrix has shape {A0.shape}, expected {(n, n)}")
        return A0
    if kind == InitKind.RANDOM:
        if xi is None:
            raise ValueError("init random needs xi")
        _, A0 = sample_ph(GenSpec(n=n, seed=seed))
        return A0 * (0.5 * xi / np.max(np.abs(np.diag(A0))))
    raise ValueError(f"unknown init kind {kind}")


def run_am(problem: ProblemData, config: Optional[AmConfig] = None) -> AmReport:
    """
    Alternate P-steps and A-steps until F stalls.

    Args:
        problem: Jordan form, beta and xi
        config: Run settings

    Returns:
        AmReport

    Raises:
        InfeasibleBeta: the first P-step has no feasible point
    """
    config = config or AmConfig()
    started = time.perf_counter()
    jordan, beta, xi, n = problem.jordan, problem.beta, problem.xi, problem.n
    threshold = n * n * config.success_threshold_factor

    A = default_init(jordan, config.init, xi, config.init_matrix, config.seed)
    logger.info("AM start n=%d xi=%.6g init=%s", n, xi, config.init.value)

    P: Optional[np.ndarray] = None
    hint_a: Tuple[int, ...] = ()
    hint_p: Tuple[int, ...] = ()
    f_trace: List[float] = []
    f_initial = float("nan")
    kkt_a = kkt_p = 0.0
    growth = 1.0
    extrapolations = 0

    for k in range(config.max_outer_iter):
        P_prev, A_prev = P, A
        step_a = solve_op_a(A, beta, jordan, config.qp_tol, P0=P, active_hint=hint_a)
        P, hint_a, kkt_a = step_a.matrix, step_a.qp.active_set, step_a.qp.kkt.worst()
        f_before = objective(P, A, jordan)
        if k == 0:
            f_initial = f_before

        step_p = solve_op_p(P, xi, jordan, config.qp_tol, A0=A, active_hint=hint_p)
        A, hint_p, kkt_p = step_p.matrix, step_p.qp.active_set, step_p.qp.kkt.worst()
        f_after = objective(P, A, jordan)
        stalled = abs(f_after - f_before) <= config.tol_term

        if config.extrapolate and P_prev is not None and not stalled:
            moved = extrapolate(P, A, P_prev, A_prev, beta, xi, jordan, growth)
            if moved is not None and moved[2] < f_after:
                P, A, f_after = moved
                extrapolations += 1
                growth = min(2.0 * growth, EXTRAPOLATION_MAX)
            else:
                growth = 1.0
        f_trace.append(f_after)

        if (k + 1) % LOG_EVERY == 0:
            logger.debug("iteration %d F=%.6e", k + 1, f_after)
        if stalled:
            break

    final = IterateState(A=A, P=P, F=f_trace[-1], iter=len(f_trace))
    found = final.F < threshold
    outcome = AmOutcome.FOUND if found else AmOutcome.NOT_FOUND
    elapsed = time.perf_counter() - started
    logger.info(
        "AM %s after %d iterations (%d extrapolated), F=%.6e (threshold %.1e, %.3fs)",
        outcome.value,
        final.iter,
        extrapolations,
        final.F,
        threshold,
        elapsed,
    )
    return AmReport(
        outcome=outcome,
        final=final,
        config=config,
        f_trace=f_trace,
        alpha=beta @ P if found else None,
        f_initial=f_initial,
        wallclock=elapsed,
        op_a_kkt=kkt_a,
        op_p_kkt=kkt_p,
        extrapolations=extrapolations,
    )


def _run_indexed(args: Tuple[ProblemData, AmConfig]) -> AmReport:
    problem, config = args
    return run_am(problem, config)


def run_am_multistart(
    problem: ProblemData, configs: Sequence[AmConfig], workers: int = 1
) -> MultistartResult:
    """
    Run several starts and keep the one with the smallest final F.

    Ties go to the earliest config. With ``workers`` > 1 the runs execute in a
    process pool; results are merged by config index.
    """
    if not configs:
        raise ValueError("multistart needs at least one config")
    jobs = [(problem, config) for config in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_indexed, jobs))
    else:
        reports = [_run_indexed(job) for job in jobs]

    best_index = min(range(len(reports)), key=lambda i: (reports[i].final.F, i))
    logger.info(
        "multistart: %d runs, best #%d F=%.6e",
        len(reports),
        best_index,
        reports[best_index].final.F,
    )
    return MultistartResult(
        best=reports[best_index],
        best_index=best_index,
        runs=[report.summary() for report in reports],
    )


def extract_representation(report: AmReport, problem: ProblemData) -> PhRepresentation:
    """
    alpha = beta P with tiny negative entries clamped to zero and renormalized.

    Entries below -ALPHA_CLAMP are kept and show up as validity failures.
    """
    alpha = problem.beta @ report.final.P
    clamp = (alpha < 0.0) & (alpha > -ALPHA_CLAMP)
    alpha = np.where(clamp, 0.0, alpha)
    total = alpha.sum()
    if total > 0:
        alpha = alpha / total
    A = report.final.A
    diagnostics = validity(alpha, A)
    if diagnostics.weak_diagonal:
        logger.warning(
            "diagonal entries %s of A are within 1e-8 of zero", list(diagnostics.weak_diagonal)
        )
    return PhRepresentation(
        alpha=alpha,
        A=A,
        diagnostics=diagnostics,
        clamped=tuple(int(i) for i in np.flatnonzero(clamp)),
    )
