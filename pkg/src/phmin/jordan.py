"""
Real Jordan form, the beta vector and the trace budget xi.

Real blocks carry lambda on the diagonal and ones on the subdiagonal; complex
blocks carry Theta(mu, omega) = [[mu, -omega], [omega, mu]] cells on the
diagonal and 2x2 identities on the subdiagonal, with omega > 0.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from phmin.errors import SingularSampleSystem, ZeroPole
from phmin.poly import PoleMultiset, RationalLst
from shared.utils import get_logger, sample_points

logger = get_logger(__name__)

BETA_RETRIES = 5


@dataclass(frozen=True)
class RealBlock:
    lam: float
    m: int

    @property
    def size(self) -> int:
        return self.m

    def dense(self) -> np.ndarray:
        return self.lam * np.eye(self.m) + np.eye(self.m, k=-1)


@dataclass(frozen=True)
class ComplexBlock:
    mu: float
    omega: float
    m: int

    @property
    def size(self) -> int:
        return 2 * self.m

    def theta(self) -> np.ndarray:
        return np.array([[self.mu, -self.omega], [self.omega, self.mu]])

    def dense(self) -> np.ndarray:
        return np.kron(np.eye(self.m), self.theta()) + np.kron(np.eye(self.m, k=-1), np.eye(2))


Block = Union[RealBlock, ComplexBlock]


@dataclass(frozen=True, eq=False)
class RealJordanForm:
    blocks: Tuple[Block, ...]
    n: int
    dense: np.ndarray = field(repr=False)

    def offsets(self) -> List[Tuple[int, int]]:
        """Row range (start, stop) of each block."""
        out = []
        start = 0
        for block in self.blocks:
            out.append((start, start + block.size))
            start += block.size
        return out


@dataclass(frozen=True, eq=False)
class ProblemData:
    jordan: RealJordanForm
    beta: np.ndarray
    xi: float
    n: int

    def beta_blocks(self) -> List[np.ndarray]:
        return [self.beta[a:b] for a, b in self.jordan.offsets()]


def build_jordan(poles: PoleMultiset) -> RealJordanForm:
    """
    One Jordan block per distinct pole, real blocks first.

    Args:
        poles: Clustered poles

    Returns:
        RealJordanForm with its dense realization
    """
    blocks: List[Block] = [RealBlock(rp.value, rp.mult) for rp in poles.real_poles]
    blocks += [ComplexBlock(cp.mu, cp.omega, cp.mult) for cp in poles.complex_pairs]
    dense = scipy.linalg.block_diag(*[b.dense() for b in blocks]) if blocks else np.zeros((0, 0))
    return RealJordanForm(blocks=tuple(blocks), n=dense.shape[0], dense=dense)


def compute_xi(poles: PoleMultiset) -> float:
    """Trace budget xi = -(sum n_i lambda_i + 2 sum n_j mu_j)."""
    total = math.fsum(rp.mult * rp.value for rp in poles.real_poles)
    total += math.fsum(2 * cp.mult * cp.mu for cp in poles.complex_pairs)
    return -total


def resolvent_column(jordan: RealJordanForm, s: float) -> np.ndarray:
    """-J (sI - J)^{-1} 1 for one sample point."""
    n = jordan.n
    return -jordan.dense @ np.linalg.solve(s * np.eye(n) - jordan.dense, np.ones(n))


def compute_beta(lst: RationalLst, jordan: RealJordanForm) -> np.ndarray:
    """
    Solve beta M = v at deterministic real sample points.

    Column m of M is -J (s_m I - J)^{-1} 1 and v_m = L(s_m). A singular system
    is retried with shifted points.

    Args:
        lst: Admissible LST
        jordan: Jordan form built from ``lst.poles``

    Returns:
        beta as a length-n array
    """
    n = jordan.n
    poles = lst.poles.roots_list()
    for attempt in range(BETA_RETRIES):
        points = sample_points(n, poles, start=1.0 + 0.5 * attempt)
        M = np.column_stack([resolvent_column(jordan, s) for s in points])
        v = np.array([lst.evaluate(s) for s in points])
        # rows of M^T are sample points; scaling them leaves beta unchanged
        scale = 1.0 / np.max(np.abs(M), axis=0)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                beta = scipy.linalg.solve(M.T * scale[:, None], v * scale)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            logger.info("beta sample system singular at %s (%s); retrying", points, exc)
            continue
        return beta
    raise SingularSampleSystem(f"beta system stayed singular after {BETA_RETRIES} attempts")


def beta_residual(
    beta: np.ndarray, jordan: RealJordanForm, lst: RationalLst, points: Sequence[float]
) -> float:
    """Largest |-beta J (sI-J)^{-1} 1 - L(s)| / (1 + |L(s)|) over the points."""
    worst = 0.0
    for s in points:
        value = lst.evaluate(s)
        worst = max(worst, abs(beta @ resolvent_column(jordan, s) - value) / (1.0 + abs(value)))
    return worst


def beta_closed_form(lst: RationalLst, jordan: RealJordanForm) -> np.ndarray:
    """
    beta from the closed-form recursions on the partial-fraction coefficients.

    Complex blocks use the (1-i)/sqrt(2) expressions literally; compare with
    ``compute_beta`` through ``compare_beta``.
    """
    pieces: List[np.ndarray] = []
    for pole, coeffs in zip(lst.poles.real_poles, lst.pf.real):
        lam = pole.value
        if lam == 0.0:
            raise ZeroPole("real pole at the origin")
        m = len(coeffs)
        block = np.zeros(m)
        for r in range(m, 0, -1):
            tail = sum((-1.0 / lam) ** l * coeffs[r + l - 1] for l in range(1, m - r + 1))
            block[r - 1] = -(coeffs[r - 1] + (lam + 1.0) * tail) / lam
        pieces.append(block)

    for pair, coeffs in zip(lst.poles.complex_pairs, lst.pf.pairs):
        z = pair.root
        if z == 0:
            raise ZeroPole("complex pole at the origin")
        m = len(coeffs)
        block = np.zeros(2 * m)
        factor = (1 - 1j) / (math.sqrt(2.0) * z)
        for r in range(1, m + 1):
            tail = sum((-1.0 / z) ** l * coeffs[r + l - 1] for l in range(1, m - r + 1))
            w = factor * (coeffs[r - 1] + (1.0 + z) * tail) if r < m else factor * coeffs[r - 1]
            block[2 * (r - 1)] = -w.real
            block[2 * (r - 1) + 1] = w.imag
        pieces.append(block)
    return np.concatenate(pieces) if pieces else np.zeros(0)


@dataclass(frozen=True)
class BetaComparison:
    """Per-block relation between closed-form and solved beta."""

    max_real_block_error: float
    complex_ratios: Tuple[float, ...]
    complex_swapped: Tuple[bool, ...]


def compare_beta(closed: np.ndarray, solved: np.ndarray, jordan: RealJordanForm) -> BetaComparison:
    """
    Relate the closed-form beta to the solved one block by block.

    For complex blocks the norm ratio solved/closed is reported, together with
    whether the component pairs match better after swapping the two entries.
    """
    real_err = 0.0
    ratios: List[float] = []
    swapped: List[bool] = []
    for block, (a, b) in zip(jordan.blocks, jordan.offsets()):
        c, s = closed[a:b], solved[a:b]
        if isinstance(block, RealBlock):
            real_err = max(real_err, float(np.max(np.abs(c - s))))
            continue
        norm_c = float(np.linalg.norm(c))
        ratio = float(np.linalg.norm(s)) / norm_c if norm_c > 0 else float("inf")
        ratios.append(ratio)
        scaled = c * ratio
        flipped = scaled.reshape(-1, 2)[:, ::-1].ravel()
        swapped.append(bool(np.linalg.norm(flipped - s) < np.linalg.norm(scaled - s)))
    return BetaComparison(real_err, tuple(ratios), tuple(swapped))


def build_problem(lst: RationalLst, xi_override: Optional[float] = None) -> ProblemData:
    """
    Assemble (J, beta, xi) for the alternating minimization.

    Args:
        lst: Admissible LST
        xi_override: Replace the trace budget (1.0 for the discrete reduction)

    Returns:
        ProblemData
    """
    jordan = build_jordan(lst.poles)
    beta = compute_beta(lst, jordan)
    xi = compute_xi(lst.poles) if xi_override is None else float(xi_override)

    for block, (a, b) in zip(jordan.blocks, jordan.offsets()):
        top = beta[b - 1] if isinstance(block, RealBlock) else np.hypot(beta[b - 2], beta[b - 1])
        if top == 0.0:
            logger.warning("beta vanishes on the last row of block %s", block)
    logger.info("problem n=%d xi=%.6g blocks=%d", jordan.n, xi, len(jordan.blocks))
    return ProblemData(jordan=jordan, beta=beta, xi=xi, n=jordan.n)
