"""
Random PH instances and the exact LST of a given (alpha, A).

Every instance draws from its own PCG64 stream seeded by (seed, index), so
instances can be generated in any order or in parallel with identical results.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from phmin.errors import DimensionMismatch, PhminError, SamplingExhausted, SingularA
from phmin.poly import RationalLst, build_lst_from_coeffs, closest_cancellation_gap, validate_lst
from shared.models import GenSpec, Variant
from shared.utils import get_logger

logger = get_logger(__name__)

STIFF_SCALE = 1000.0
DISCRETE_ROW_CAP = 0.95
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class Instance:
    """An accepted sample together with how it was obtained."""

    alpha: np.ndarray
    A: np.ndarray
    lst: RationalLst
    index: int
    attempts: int
    cancellation_gap: float


def instance_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, index])


def generator(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(instance_seed(seed, index)))


def _stick_breaking(rng: np.random.Generator, n: int) -> np.ndarray:
    alpha = np.zeros(n)
    remaining = 1.0
    for i in range(n - 1):
        alpha[i] = rng.uniform(0.0, remaining)
        remaining -= alpha[i]
    alpha[n - 1] = 1.0 - alpha[: n - 1].sum()
    return alpha


def _offdiagonal(rng: np.random.Generator, spec: GenSpec) -> np.ndarray:
    n, c = spec.n, spec.c
    values = rng.uniform(0.0, c, size=(n, n))
    if spec.variant == Variant.SPARSE:
        values[rng.random((n, n)) < spec.p] = 0.0
    elif spec.variant == Variant.STIFF:
        stiff = rng.random((n, n)) < spec.p
        values[stiff] = rng.uniform(0.0, STIFF_SCALE * c, size=int(stiff.sum()))
    np.fill_diagonal(values, 0.0)
    return values


def _draw_ph(rng: np.random.Generator, spec: GenSpec) -> Tuple[np.ndarray, np.ndarray]:
    alpha = _stick_breaking(rng, spec.n)
    A = _offdiagonal(rng, spec)
    theta = rng.uniform(0.0, spec.c, size=spec.n)
    np.fill_diagonal(A, -A.sum(axis=1) - theta)
    return alpha, A


def sample_ph(spec: GenSpec, index: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw (alpha, A) for one instance.

    alpha comes from stick-breaking; off-diagonal rates follow the variant and
    each row loses an extra exit rate theta_i ~ U(0, c) on the diagonal.

    Args:
        spec: Order, scale, variant and seed
        index: Instance number within the seeded family

    Returns:
        (alpha, A)
    """
    return _draw_ph(generator(spec.seed, index), spec)


def sample_discrete_ph(spec: GenSpec, index: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw a discrete (alpha, A) with nonnegative A and row sums at most 0.95.

    Rows are Dirichlet-distributed and scaled by U(0.05, 0.95); the Sparse
    variant zeroes entries with probability p before scaling.
    """
    rng = generator(spec.seed, index)
    n = spec.n
    alpha = _stick_breaking(rng, n)
    rows = rng.dirichlet(np.ones(n), size=n)
    if spec.variant == Variant.SPARSE:
        rows[rng.random((n, n)) < spec.p] = 0.0
        sums = rows.sum(axis=1, keepdims=True)
        rows = np.divide(rows, sums, out=np.zeros_like(rows), where=sums > 0)
    A = rows * rng.uniform(0.05, DISCRETE_ROW_CAP, size=(n, 1))
    return alpha, A


def _reverse_charpoly_difference(
    M: np.ndarray, update: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Descending coefficients of det(sI - M) and det(sI - M) - det(sI - M - update).

    Entries of the difference below the cancellation noise of the subtraction
    are set to zero.
    """
    base = np.real(np.poly(M))
    shifted = np.real(np.poly(M + update))
    diff = base - shifted
    noise = 100.0 * _EPS * np.maximum(np.abs(base), np.abs(shifted))
    diff[np.abs(diff) <= noise] = 0.0
    return base, diff


def lst_of(alpha, A, renormalize: bool = False) -> RationalLst:
    """
    LST -alpha A (sI - A)^{-1} 1 of (alpha, A) as a reduced rational function.

    q is det(sI - A) and p = det(sI - A) - det(sI - A - t alpha) with exit
    vector t = -A1, which is exact by the matrix determinant lemma. Common
    roots are then cancelled.

    Raises:
        SingularA: A is numerically singular
    """
    a = np.asarray(alpha, dtype=float).ravel()
    M = np.atleast_2d(np.asarray(A, dtype=float))
    n = a.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatch(f"alpha has length {n} but A has shape {M.shape}")
    if np.linalg.cond(M) * _EPS >= 1.0:
        raise SingularA("A is singular; the LST has a pole at the origin")
    t = -M @ np.ones(n)
    q_desc, p_desc = _reverse_charpoly_difference(M, np.outer(t, a))
    return build_lst_from_coeffs(p_desc[::-1], q_desc[::-1], renormalize=renormalize)


def algebraic_degree(alpha, A) -> int:
    """Order of the reduced LST of (alpha, A)."""
    return lst_of(alpha, A).order


def sample_admissible(spec: GenSpec, index: int = 0, max_attempts: int = 1000) -> Instance:
    """
    Draw instances until one has algebraic degree n and an admissible LST.

    Args:
        spec: Instance specification
        index: Instance number; each index owns one random stream
        max_attempts: Draws before giving up

    Returns:
        Instance with the attempt count and the smallest relative distance
        between a root of p and a root of q

    Raises:
        SamplingExhausted: no draw passed within ``max_attempts``
    """
    rng = generator(spec.seed, index)
    for attempt in range(1, max_attempts + 1):
        alpha, A = _draw_ph(rng, spec)
        try:
            lst = lst_of(alpha, A)
        except PhminError as exc:
            logger.debug("instance %d attempt %d rejected: %s", index, attempt, exc)
            continue
        if lst.order != spec.n or not validate_lst(lst).admissible:
            continue
        gap = closest_cancellation_gap(lst.p, lst.q)
        return Instance(alpha, A, lst, index, attempt, gap)
    raise SamplingExhausted(
        f"no instance of algebraic degree {spec.n} in {max_attempts} attempts (index {index})"
    )


def discrete_exit_vector(A_tilde: np.ndarray) -> np.ndarray:
    return (np.eye(A_tilde.shape[0]) - A_tilde) @ np.ones(A_tilde.shape[0])


def reverse_charpolys(alpha_tilde, A_tilde) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ascending coefficients of (p~, q~) for a discrete (alpha, A).

    q~(z) = det(I - zA) and p~(z) = q~(z) - det(I - z(A + t alpha)), the
    reversed characteristic polynomials of A and of its rank-one update.
    """
    a = np.asarray(alpha_tilde, dtype=float).ravel()
    M = np.atleast_2d(np.asarray(A_tilde, dtype=float))
    if M.shape != (a.shape[0], a.shape[0]):
        raise DimensionMismatch(f"alpha has length {a.shape[0]} but A has shape {M.shape}")
    q_tilde, p_tilde = _reverse_charpoly_difference(M, np.outer(discrete_exit_vector(M), a))
    return p_tilde, q_tilde

