"""
Independent checks of a claimed PH representation.

Nothing here trusts the solver: the LST is re-evaluated from (alpha, A) by a
resolvent solve, the spectrum is compared with the input poles, and the
distribution-level quantities come from ``scipy.linalg.expm`` and repeated
linear solves.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from phmin.errors import DimensionMismatch, SingularA
from phmin.poly import Polynomial, RationalLst
from shared.config import Config
from shared.utils import get_logger, verify_points

logger = get_logger(__name__)

VALIDITY_TOL = 1e-8
DISK_POINTS = tuple(
    r * complex(math.cos(2 * math.pi * k / 8), math.sin(2 * math.pi * k / 8))
    for r in (0.5, 1.0)
    for k in range(8)
)


@dataclass(frozen=True)
class ValidityReport:
    """Structural PH conditions on (alpha, A)."""

    alpha_nonnegative: bool
    alpha_sums_to_one: bool
    diagonal_nonpositive: bool
    offdiagonal_nonnegative: bool
    row_sums_nonpositive: bool
    nonsingular: bool
    weak_diagonal: Tuple[int, ...] = ()
    messages: Tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return all(
            (
                self.alpha_nonnegative,
                self.alpha_sums_to_one,
                self.diagonal_nonpositive,
                self.offdiagonal_nonnegative,
                self.row_sums_nonpositive,
                self.nonsingular,
            )
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "alpha_nonnegative": self.alpha_nonnegative,
            "alpha_sums_to_one": self.alpha_sums_to_one,
            "diagonal_nonpositive": self.diagonal_nonpositive,
            "offdiagonal_nonnegative": self.offdiagonal_nonnegative,
            "row_sums_nonpositive": self.row_sums_nonpositive,
            "nonsingular": self.nonsingular,
            "weak_diagonal": list(self.weak_diagonal),
            "messages": list(self.messages),
        }


@dataclass(frozen=True)
class VerifyReport:
    validity: ValidityReport
    lst_max_rel_err: float
    spectrum_max_err: float
    charpoly_max_err: float
    tol: float
    spectrum_tol: float

    @property
    def lst_ok(self) -> bool:
        return self.lst_max_rel_err <= self.tol

    @property
    def spectrum_ok(self) -> bool:
        return self.charpoly_max_err <= self.spectrum_tol

    @property
    def passed(self) -> bool:
        return self.validity.valid and self.lst_ok and self.spectrum_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pass": self.passed,
            "validity": self.validity.to_dict(),
            "lst_max_rel_err": self.lst_max_rel_err,
            "spectrum_max_err": self.spectrum_max_err,
            "charpoly_max_err": self.charpoly_max_err,
            "tol": self.tol,
            "spectrum_tol": self.spectrum_tol,
        }


def _as_pair(alpha, A) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(alpha, dtype=float).ravel()
    M = np.atleast_2d(np.asarray(A, dtype=float))
    if M.shape != (a.shape[0], a.shape[0]):
        raise DimensionMismatch(f"alpha has length {a.shape[0]} but A has shape {M.shape}")
    return a, M


def _is_singular(A: np.ndarray) -> bool:
    return A.shape[0] == 0 or np.linalg.cond(A) * np.finfo(float).eps >= 1.0


def validity(alpha, A, tol: float = VALIDITY_TOL) -> ValidityReport:
    """
    Check the PH conditions on (alpha, A) with slack ``tol``.

    Diagonal entries above -tol are reported in ``weak_diagonal`` without
    failing the check.
    """
    a, M = _as_pair(alpha, A)
    n = a.shape[0]
    messages: List[str] = []
    off = M[~np.eye(n, dtype=bool)]
    diag = np.diag(M)

    alpha_nonnegative = bool(np.all(a >= -tol))
    if not alpha_nonnegative:
        messages.append(f"alpha has entry {a.min():.3g} below zero")
    alpha_sums_to_one = abs(math.fsum(a) - 1.0) <= tol
    if not alpha_sums_to_one:
        messages.append(f"alpha sums to {math.fsum(a)!r}")
    diagonal_nonpositive = bool(np.all(diag <= tol))
    if not diagonal_nonpositive:
        messages.append("A has a positive diagonal entry")
    offdiagonal_nonnegative = bool(np.all(off >= -tol)) if off.size else True
    if not offdiagonal_nonnegative:
        messages.append(f"A has off-diagonal entry {off.min():.3g}")
    row_sums_nonpositive = bool(np.all(M.sum(axis=1) <= tol))
    if not row_sums_nonpositive:
        messages.append(f"A has row sum {M.sum(axis=1).max():.3g}")
    nonsingular = not _is_singular(M)
    if not nonsingular:
        messages.append("A is singular")
    weak = tuple(int(i) for i in np.flatnonzero(diag > -tol))

    return ValidityReport(
        alpha_nonnegative=alpha_nonnegative,
        alpha_sums_to_one=alpha_sums_to_one,
        diagonal_nonpositive=diagonal_nonpositive,
        offdiagonal_nonnegative=offdiagonal_nonnegative,
        row_sums_nonpositive=row_sums_nonpositive,
        nonsingular=nonsingular,
        weak_diagonal=weak,
        messages=tuple(messages),
    )


def lst_value(alpha, A, s: complex) -> complex:
    """-alpha A (sI - A)^{-1} 1 by one linear solve."""
    a, M = _as_pair(alpha, A)
    n = a.shape[0]
    x = np.linalg.solve(s * np.eye(n) - M, -M @ np.ones(n))
    return complex(a @ x)


def lst_max_rel_err(
    alpha, A, lst: RationalLst, points: Optional[Sequence[float]] = None
) -> float:
    """Largest |L_ph(s) - L(s)| / (1 + |L(s)|) over the comparison grid."""
    pts = verify_points(lst.poles.roots_list()) if points is None else list(points)
    worst = 0.0
    for s in pts:
        target = lst.evaluate(s)
        worst = max(worst, abs(lst_value(alpha, A, s) - target) / (1.0 + abs(target)))
    return worst


def spectrum_max_err(A, poles: Sequence[complex]) -> float:
    """
    Largest relative distance between eigenvalues of A and the poles under the
    best one-to-one matching.
    """
    eig = np.linalg.eigvals(np.atleast_2d(np.asarray(A, dtype=float)))
    target = np.asarray(list(poles), dtype=complex)
    if eig.shape[0] != target.shape[0]:
        return float("inf")
    cost = np.abs(eig[:, None] - target[None, :]) / (1.0 + np.abs(target[None, :]))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max(initial=0.0))


def charpoly_max_err(A, q: Polynomial) -> float:
    """
    Largest relative coefficient error between det(sI - A) and monic q.

    Unlike eigenvalue matching this does not degrade at multiple poles.
    """
    M = np.atleast_2d(np.asarray(A, dtype=float))
    if M.shape[0] != q.degree:
        return float("inf")
    mine = np.real(np.poly(M))[::-1]
    theirs = q.as_array() / q.leading
    return float(np.max(np.abs(mine - theirs) / (1.0 + np.abs(theirs))))


def check_representation(
    alpha,
    A,
    lst: RationalLst,
    tol: Optional[float] = None,
    spectrum_tol: Optional[float] = None,
) -> VerifyReport:
    """
    Verify that (alpha, A) is a PH representation of ``lst``.

    Args:
        alpha: Initial distribution
        A: Sub-generator
        lst: Target LST
        tol: LST sampling tolerance
        spectrum_tol: Tolerance on the characteristic polynomial comparison

    Returns:
        VerifyReport; never raises for a bad representation
    """
    tol = Config.VERIFY_TOL if tol is None else tol
    spectrum_tol = max(tol, Config.SPECTRUM_TOL) if spectrum_tol is None else spectrum_tol
    a, M = _as_pair(alpha, A)
    report = validity(a, M)
    if a.shape[0] != lst.order:
        logger.info("order mismatch: representation %d vs LST %d", a.shape[0], lst.order)
        return VerifyReport(report, float("inf"), float("inf"), float("inf"), tol, spectrum_tol)
    try:
        lst_err = lst_max_rel_err(a, M, lst)
    except np.linalg.LinAlgError:
        lst_err = float("inf")
    return VerifyReport(
        validity=report,
        lst_max_rel_err=lst_err,
        spectrum_max_err=spectrum_max_err(M, lst.poles.roots_list()),
        charpoly_max_err=charpoly_max_err(M, lst.q),
        tol=tol,
        spectrum_tol=spectrum_tol,
    )


def cdf(alpha, A, t: float) -> float:
    """F(t) = 1 - alpha exp(At) 1."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    a, M = _as_pair(alpha, A)
    return float(1.0 - a @ scipy.linalg.expm(M * t) @ np.ones(a.shape[0]))


def moments(alpha, A, k: int) -> float:
    """
    k-th moment k! alpha (-A)^{-k} 1.

    Raises:
        SingularA: A is numerically singular
    """
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    a, M = _as_pair(alpha, A)
    if k == 0:
        return float(a.sum())
    if _is_singular(M):
        raise SingularA("A is singular; moments are undefined")
    lu = scipy.linalg.lu_factor(-M)
    x = np.ones(a.shape[0])
    for _ in range(k):
        x = scipy.linalg.lu_solve(lu, x)
    return float(math.factorial(k) * (a @ x))


@dataclass(frozen=True)
class DiscreteVerifyReport:
    alpha_nonnegative: bool
    alpha_sums_to_one: bool
    entries_nonnegative: bool
    substochastic: bool
    nonsingular: bool
    gf_max_rel_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return all(
            (
                self.alpha_nonnegative,
                self.alpha_sums_to_one,
                self.entries_nonnegative,
                self.substochastic,
                self.nonsingular,
                self.gf_max_rel_err <= self.tol,
            )
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pass": self.passed,
            "alpha_nonnegative": self.alpha_nonnegative,
            "alpha_sums_to_one": self.alpha_sums_to_one,
            "entries_nonnegative": self.entries_nonnegative,
            "substochastic": self.substochastic,
            "nonsingular": self.nonsingular,
            "gf_max_rel_err": self.gf_max_rel_err,
            "tol": self.tol,
        }


def gf_value(alpha_tilde, A_tilde, z: complex) -> complex:
    """alpha z (I - zA)^{-1} (I - A) 1 by one linear solve."""
    a, M = _as_pair(alpha_tilde, A_tilde)
    n = a.shape[0]
    exit_vector = (np.eye(n) - M) @ np.ones(n)
    return complex(z * (a @ np.linalg.solve(np.eye(n) - z * M, exit_vector)))


def check_discrete_representation(
    alpha_tilde, A_tilde, gf, tol: Optional[float] = None
) -> DiscreteVerifyReport:
    """
    Verify a discrete PH representation against a generating function.

    The generating functions are compared at 16 points of the closed unit disk.
    """
    tol = Config.VERIFY_TOL if tol is None else tol
    a, M = _as_pair(alpha_tilde, A_tilde)
    n = a.shape[0]
    I_minus = np.eye(n) - M
    nonsingular = not _is_singular(I_minus)
    worst = float("inf")
    if nonsingular:
        worst = 0.0
        for z in DISK_POINTS:
            target = gf.evaluate(z)
            worst = max(worst, abs(gf_value(a, M, z) - target) / (1.0 + abs(target)))
    return DiscreteVerifyReport(
        alpha_nonnegative=bool(np.all(a >= -VALIDITY_TOL)),
        alpha_sums_to_one=abs(math.fsum(a) - 1.0) <= VALIDITY_TOL,
        entries_nonnegative=bool(np.all(M >= -VALIDITY_TOL)),
        substochastic=bool(np.all(M.sum(axis=1) <= 1.0 + VALIDITY_TOL)),
        nonsingular=nonsingular,
        gf_max_rel_err=worst,
        tol=tol,
    )
