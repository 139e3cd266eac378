"""
Discrete-time PH support through the substitution z = 1/(s+1).

A generating function G(z) = p~(z)/q~(z) maps to the continuous LST
L0(s) = G(1/(s+1)); a continuous representation (alpha, A) of L0 whose
diagonal stays above -1 lifts back to the discrete pair (alpha, A + I).
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from phmin.am import AmOutcome, AmReport, extract_representation, run_am, run_am_multistart
from phmin.errors import ClusterAmbiguity, DimensionMismatch, InvalidGf
from phmin.jordan import ProblemData, build_problem
from phmin.phgen import reverse_charpolys
from phmin.poly import (
    Polynomial,
    RationalLst,
    build_lst_from_coeffs,
    common_factor,
    roots,
    validate_lst,
)
from phmin.verify import DiscreteVerifyReport, check_discrete_representation
from shared.config import Config
from shared.models import AmConfig
from shared.utils import get_logger

logger = get_logger(__name__)

DISCRETE_XI = 1.0


@dataclass(frozen=True)
class GeneratingFunction:
    """G(z) = p~(z)/q~(z) with ascending coefficients in z."""

    p_tilde: Polynomial
    q_tilde: Polynomial

    @classmethod
    def from_coeffs(cls, p_tilde, q_tilde) -> "GeneratingFunction":
        return cls(Polynomial(tuple(p_tilde)), Polynomial(tuple(q_tilde)))

    @property
    def order(self) -> int:
        return max(self.p_tilde.degree, self.q_tilde.degree)

    def evaluate(self, z: complex) -> complex:
        return complex(self.p_tilde(z) / self.q_tilde(z))


@dataclass(frozen=True)
class GfValidation:
    zero_mass_at_zero: bool
    unit_constant: bool
    coprime: bool
    unit_mass: bool
    dominant_root: bool
    mass: float
    messages: Tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return all(
            (
                self.zero_mass_at_zero,
                self.unit_constant,
                self.coprime,
                self.unit_mass,
                self.dominant_root,
            )
        )


@dataclass(frozen=True, eq=False)
class DiscretePhRepresentation:
    alpha_tilde: np.ndarray
    A_tilde: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscreteResult:
    """Continuous run on L0 plus the lifted representation when one was found."""

    lst: RationalLst
    problem: ProblemData
    report: AmReport
    representation: Optional[DiscretePhRepresentation] = None
    check: Optional[DiscreteVerifyReport] = None
    runs: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.representation is not None


def _minimal_modulus_root_ok(q_tilde: Polynomial, tol: float) -> Tuple[bool, str]:
    if q_tilde.degree < 1:
        return True, ""
    try:
        poles = roots(q_tilde, tol)
    except ClusterAmbiguity as exc:
        return False, f"roots of q~ are ambiguous: {exc}"
    candidates = [(abs(rp.value), rp.value, True) for rp in poles.real_poles]
    candidates += [(abs(cp.root), cp.root, False) for cp in poles.complex_pairs]
    candidates.sort(key=lambda item: item[0])
    modulus, root, real = candidates[0]
    if not real or root <= 1.0:
        return False, f"root of minimal modulus {root!r} is not real and greater than 1"
    if len(candidates) > 1 and candidates[1][0] <= modulus * (1.0 + tol):
        return False, f"root {root!r} does not strictly dominate {candidates[1][1]!r}"
    return True, ""


def validate_gf(
    g: GeneratingFunction, tol_cluster: Optional[float] = None, mass_tol: float = 1e-12
) -> GfValidation:
    """
    Check a generating function; never raises for an invalid one.

    Conditions: no mass at zero (p~(0) = 0), q~(0) = 1, p~ and q~ coprime,
    G(1) = 1, and the root of q~ of minimal modulus real, greater than 1 and
    strictly smaller in modulus than every other root.
    """
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    messages: List[str] = []
    p, q = g.p_tilde, g.q_tilde

    zero_mass = not p.is_zero and p(0.0) == 0.0
    if p.is_zero:
        messages.append("p~ is the zero polynomial")
    elif not zero_mass:
        messages.append(f"p~(0) = {p(0.0)!r}: mass at zero is not supported")
    unit_constant = abs(q(0.0) - 1.0) <= mass_tol
    if not unit_constant:
        messages.append(f"q~(0) = {q(0.0)!r}, expected 1")

    try:
        coprime = common_factor(p, q, tol) is None
    except ClusterAmbiguity as exc:
        coprime = False
        messages.append(str(exc))
    if not coprime:
        messages.append("p~ and q~ share a root")

    q_one = q(1.0)
    mass = float(p(1.0) / q_one) if q_one != 0.0 else float("nan")
    unit_mass = math.isfinite(mass) and abs(mass - 1.0) <= mass_tol
    if not unit_mass:
        messages.append(f"G(1) = {mass!r} is not 1")

    dominant, note = _minimal_modulus_root_ok(q, tol) if not q.is_zero else (False, "q~ = 0")
    if note:
        messages.append(note)

    return GfValidation(
        zero_mass_at_zero=zero_mass,
        unit_constant=unit_constant,
        coprime=coprime,
        unit_mass=unit_mass,
        dominant_root=dominant,
        mass=mass,
        messages=tuple(messages),
    )


def _shifted_reversal(coeffs: Tuple[float, ...], n: int) -> np.ndarray:
    """sum_r c_r (s+1)^(n-r), ascending in s."""
    out = np.zeros(n + 1)
    for r, c in enumerate(coeffs):
        if c == 0.0:
            continue
        term = npoly.polypow([1.0, 1.0], n - r)
        out[: len(term)] += c * term
    return out


def to_continuous(g: GeneratingFunction, renormalize: bool = False) -> RationalLst:
    """
    L0(s) = G(1/(s+1)) with p0(s) = (s+1)^n p~(1/(s+1)), q0 likewise.

    Raises:
        InvalidGf: ``g`` fails validation
    """
    report = validate_gf(g, mass_tol=Config.MASS_TOL if renormalize else 1e-12)
    if not report.valid:
        raise InvalidGf("; ".join(report.messages))
    n = g.order
    p0 = _shifted_reversal(g.p_tilde.coeffs, n)
    q0 = _shifted_reversal(g.q_tilde.coeffs, n)
    lst = build_lst_from_coeffs(p0, q0, renormalize=renormalize)
    check = validate_lst(lst, mass_tol=Config.MASS_TOL if renormalize else 1e-9)
    if not check.admissible:
        logger.warning("converted LST fails admissibility: %s", "; ".join(check.messages))
    return lst


def gf_of(alpha_tilde, A_tilde) -> GeneratingFunction:
    """Generating function of a discrete (alpha, A), not reduced."""
    p_tilde, q_tilde = reverse_charpolys(alpha_tilde, A_tilde)
    return GeneratingFunction(Polynomial.from_array(p_tilde), Polynomial.from_array(q_tilde))


def lift(alpha, A) -> DiscretePhRepresentation:
    """(alpha, A + I) from a continuous representation with diagonal >= -1."""
    M = np.atleast_2d(np.asarray(A, dtype=float))
    a = np.asarray(alpha, dtype=float).ravel()
    if M.shape != (a.shape[0], a.shape[0]):
        raise DimensionMismatch(f"alpha has length {a.shape[0]} but A has shape {M.shape}")
    return DiscretePhRepresentation(alpha_tilde=a, A_tilde=M + np.eye(M.shape[0]))


def solve_discrete(
    g: GeneratingFunction,
    config: Optional[AmConfig] = None,
    extra_configs: Tuple[AmConfig, ...] = (),
    workers: int = 1,
    renormalize: bool = False,
) -> DiscreteResult:
    """
    Search for a discrete PH representation of ``g`` of order deg q~.

    The continuous search on L0 runs with the trace budget fixed to 1, which
    keeps every diagonal entry of A in [-1, 0] so that A + I is nonnegative.

    Raises:
        InvalidGf: ``g`` fails validation
        InfeasibleBeta: no representation of this order exists
    """
    config = config or AmConfig()
    lst = to_continuous(g, renormalize=renormalize)
    problem = build_problem(lst, xi_override=DISCRETE_XI)
    runs: List[Dict[str, Any]] = []
    if extra_configs:
        multi = run_am_multistart(problem, (config,) + tuple(extra_configs), workers)
        report, runs = multi.best, multi.runs
    else:
        report = run_am(problem, config)

    if report.outcome != AmOutcome.FOUND:
        return DiscreteResult(lst=lst, problem=problem, report=report, runs=runs)
    continuous = extract_representation(report, problem)
    representation = lift(continuous.alpha, continuous.A)
    check = check_discrete_representation(
        representation.alpha_tilde, representation.A_tilde, g
    )
    return DiscreteResult(lst, problem, report, representation, check, runs)
