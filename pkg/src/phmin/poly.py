"""
Real polynomials, clustered root extraction, partial fractions and the
admissibility checks for a rational LST p(s)/q(s).

Coefficient arrays are ascending (``coeffs[k]`` multiplies s**k), matching
``numpy.polynomial.polynomial``.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from phmin.errors import (
    ClusterAmbiguity,
    DegreeViolation,
    DimensionMismatch,
    SingularSystem,
    ZeroDenominator,
)
from shared.config import Config
from shared.utils import get_logger

logger = get_logger(__name__)

MAX_DEGREE = 64
_EPS = float(np.finfo(float).eps)
# Spread of an m-fold root computed from coefficients grows like eps**(1/m).
_MULTIPLE_ROOT_SCALE = 10.0
_CONDITIONED_ROOT_SCALE = 4.0

Number = Union[float, complex]


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients; the zero polynomial has no coefficients."""

    coeffs: Tuple[float, ...] = ()

    def __post_init__(self):
        values = [float(c) for c in self.coeffs]
        while values and values[-1] == 0.0:
            values.pop()
        object.__setattr__(self, "coeffs", tuple(values))

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "Polynomial":
        return cls(tuple(np.real_if_close(np.asarray(list(values))).astype(float)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs if self.coeffs else (0.0,), dtype=float)

    def __call__(self, s: Number) -> Number:
        if not self.coeffs:
            return 0.0
        return npoly.polyval(s, self.coeffs)


@dataclass(frozen=True)
class RealPole:
    value: float
    mult: int


@dataclass(frozen=True)
class ComplexPair:
    """Conjugate pair mu +/- i*omega, stored with omega > 0."""

    mu: float
    omega: float
    mult: int

    @property
    def root(self) -> complex:
        return complex(self.mu, self.omega)


@dataclass(frozen=True)
class PoleMultiset:
    """
    Distinct poles with multiplicities.

    Real poles are kept in descending order (dominant first); complex pairs by
    descending real part, then ascending imaginary part.
    """

    real_poles: Tuple[RealPole, ...] = ()
    complex_pairs: Tuple[ComplexPair, ...] = ()

    def __post_init__(self):
        real = tuple(sorted(self.real_poles, key=lambda rp: -rp.value))
        pairs = tuple(sorted(self.complex_pairs, key=lambda cp: (-cp.mu, cp.omega)))
        for pole in real:
            if pole.mult < 1:
                raise ValueError(f"multiplicity must be positive, got {pole.mult}")
        for pair in pairs:
            if pair.mult < 1:
                raise ValueError(f"multiplicity must be positive, got {pair.mult}")
            if not pair.omega > 0.0:
                raise ValueError(f"omega must be positive, got {pair.omega}")
        if len({rp.value for rp in real}) != len(real):
            raise ValueError("real poles must be distinct")
        if len({(cp.mu, cp.omega) for cp in pairs}) != len(pairs):
            raise ValueError("complex pairs must be distinct")
        object.__setattr__(self, "real_poles", real)
        object.__setattr__(self, "complex_pairs", pairs)

    @property
    def order(self) -> int:
        real = sum(rp.mult for rp in self.real_poles)
        return real + 2 * sum(cp.mult for cp in self.complex_pairs)

    @property
    def has_complex(self) -> bool:
        return bool(self.complex_pairs)

    def roots_list(self) -> List[complex]:
        """All roots with multiplicity, conjugates included."""
        out: List[complex] = []
        for rp in self.real_poles:
            out.extend([complex(rp.value, 0.0)] * rp.mult)
        for cp in self.complex_pairs:
            out.extend([cp.root] * cp.mult)
            out.extend([cp.root.conjugate()] * cp.mult)
        return out

    def dominant_real_pole(self) -> Optional[float]:
        """The real pole strictly to the right of every other pole, if there is one."""
        if not self.real_poles:
            return None
        lead = self.real_poles[0].value
        others = [rp.value for rp in self.real_poles[1:]] + [cp.mu for cp in self.complex_pairs]
        if all(lead > other for other in others):
            return lead
        return None


@dataclass(frozen=True)
class PartialFractions:
    """
    Coefficients aligned with a PoleMultiset.

    ``real[i][r-1]`` multiplies 1/(s-lambda_i)**r; ``pairs[j][r-1]`` multiplies
    1/(s-(mu_j+i omega_j))**r, the conjugate term carries the conjugate coefficient.
    """

    real: Tuple[Tuple[float, ...], ...] = ()
    pairs: Tuple[Tuple[complex, ...], ...] = ()


@dataclass(frozen=True)
class RationalLst:
    p: Polynomial
    q: Polynomial
    poles: PoleMultiset
    pf: PartialFractions = field(default_factory=PartialFractions)

    @property
    def order(self) -> int:
        return self.q.degree

    def evaluate(self, s: Number) -> Number:
        """L(s) from the partial-fraction form."""
        total: complex = 0.0 + 0.0j
        for pole, coeffs in zip(self.poles.real_poles, self.pf.real):
            x = s - pole.value
            for r, c in enumerate(coeffs, start=1):
                total += c / x**r
        for pair, coeffs in zip(self.poles.complex_pairs, self.pf.pairs):
            x = s - pair.root
            xc = s - pair.root.conjugate()
            for r, c in enumerate(coeffs, start=1):
                total += c / x**r + np.conj(c) / xc**r
        if isinstance(s, (float, int, np.floating, np.integer)):
            return float(np.real(total))
        return complex(total)

    def evaluate_ratio(self, s: Number) -> Number:
        """L(s) as p(s)/q(s)."""
        return self.p(s) / self.q(s)

    def at_zero(self) -> float:
        return float(self.p(0.0) / self.q(0.0))

    def scaled(self, factor: float) -> "RationalLst":
        """The LST multiplied by a constant."""
        return RationalLst(
            p=Polynomial(tuple(factor * c for c in self.p.coeffs)),
            q=self.q,
            poles=self.poles,
            pf=PartialFractions(
                real=tuple(tuple(factor * c for c in cs) for cs in self.pf.real),
                pairs=tuple(tuple(factor * c for c in cs) for cs in self.pf.pairs),
            ),
        )


@dataclass(frozen=True)
class ValidationReport:
    real_coefficients: bool
    coprime: bool
    unit_mass: bool
    dominant_real_pole: bool
    mass: float
    messages: Tuple[str, ...] = ()

    @property
    def admissible(self) -> bool:
        return all(
            (self.real_coefficients, self.coprime, self.unit_mass, self.dominant_real_pole)
        )


def _cluster_radius(
    center: complex, size: int, tol_cluster: float, coeffs: Optional[np.ndarray] = None
) -> float:
    """
    How far the computed members of a size-fold root at ``center`` may sit from it.

    With ``coeffs`` the estimate uses the conditioning of that root of q: a
    backward error of eps * sum |a_j| |c|^j moves an m-fold root by about
    (error / |q^(m)(c) / m!|)^(1/m).
    """
    scale = 1.0 + abs(center)
    spread = _MULTIPLE_ROOT_SCALE * _EPS ** (1.0 / size)
    if coeffs is not None and size > 1:
        leading = abs(npoly.polyval(center, npoly.polyder(coeffs, size))) / math.factorial(size)
        if leading > 0.0:
            backward = _EPS * npoly.polyval(abs(center), np.abs(coeffs))
            conditioned = _CONDITIONED_ROOT_SCALE * (backward / leading) ** (1.0 / size) / scale
            spread = max(spread, conditioned)
    return max(tol_cluster, spread) * scale


def _polish(coeffs: np.ndarray, raw: np.ndarray) -> np.ndarray:
    """One Newton step per root, kept only when it reduces |q|."""
    deriv = npoly.polyder(coeffs)
    polished = raw.astype(complex)
    for k, r in enumerate(polished):
        value = npoly.polyval(r, coeffs)
        slope = npoly.polyval(r, deriv)
        if slope == 0:
            continue
        candidate = r - value / slope
        if abs(npoly.polyval(candidate, coeffs)) < abs(value):
            polished[k] = candidate if r.imag != 0.0 else complex(candidate.real, 0.0)
    return polished


def _cluster(
    raw: Sequence[complex], tol_cluster: float, coeffs: Optional[np.ndarray] = None
) -> List[List[complex]]:
    """
    Group computed roots into multiplicity clusters.

    Sizes are tried from the largest down, so a k-fold root is judged against the
    radius for k members rather than grown two at a time.
    """
    free = sorted((complex(r) for r in raw), key=lambda z: (z.real, z.imag))
    clusters: List[List[complex]] = []

    def centroid(members: List[complex]) -> complex:
        return complex(np.mean(members))

    for size in range(len(free), 1, -1):
        while len(free) >= size:
            best = None
            for seed in free:
                members = sorted(free, key=lambda z: abs(z - seed))[:size]
                center = centroid(members)
                spread = max(abs(m - center) for m in members)
                if spread <= _cluster_radius(center, size, tol_cluster, coeffs):
                    if best is None or spread < best[0]:
                        best = (spread, members)
            if best is None:
                break
            members = best[1]
            clusters.append(members)
            for m in members:
                free.remove(m)
    clusters.extend([r] for r in free)
    clusters.sort(key=lambda members: (centroid(members).real, centroid(members).imag))

    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            ca, cb = centroid(clusters[a]), centroid(clusters[b])
            reach = _cluster_radius(ca, len(clusters[a]), tol_cluster, coeffs) + _cluster_radius(
                cb, len(clusters[b]), tol_cluster, coeffs
            )
            if abs(ca - cb) <= reach:
                raise ClusterAmbiguity(
                    f"root clusters near {ca:.6g} and {cb:.6g} overlap but cannot be merged"
                )
    return clusters


def _clustered_roots(
    coeffs: np.ndarray, tol_cluster: float
) -> Tuple[List[RealPole], List[ComplexPair]]:
    raw = npoly.polyroots(coeffs)
    polished = _polish(coeffs, np.atleast_1d(raw))
    clusters = _cluster(list(polished), tol_cluster, coeffs)

    real: List[RealPole] = []
    upper: List[Tuple[complex, int]] = []
    lower: List[Tuple[complex, int]] = []
    for members in clusters:
        center = complex(np.mean(members))
        size = len(members)
        if abs(center.imag) <= _cluster_radius(center, size, tol_cluster, coeffs):
            real.append(RealPole(center.real, size))
        elif center.imag > 0:
            upper.append((center, size))
        else:
            lower.append((center, size))

    pairs: List[ComplexPair] = []
    unmatched = list(lower)
    for center, size in upper:
        match = None
        for idx, (other, other_size) in enumerate(unmatched):
            if other_size == size and abs(other - center.conjugate()) <= _cluster_radius(
                center, size, tol_cluster, coeffs
            ):
                match = idx
                break
        if match is None:
            raise ClusterAmbiguity(f"root {center:.6g} has no conjugate partner")
        other, _ = unmatched.pop(match)
        mu = (center.real + other.real) / 2
        pairs.append(ComplexPair(mu, (center.imag - other.imag) / 2, size))
    if unmatched:
        raise ClusterAmbiguity(f"root {unmatched[0][0]:.6g} has no conjugate partner")
    return real, pairs


def roots(q: Polynomial, tol_cluster: Optional[float] = None) -> PoleMultiset:
    """
    Clustered roots of a monic polynomial.

    Companion-matrix eigenvalues are polished by one Newton step and grouped
    into clusters; conjugate clusters are paired and near-real clusters snapped
    to the real axis.

    Args:
        q: Monic polynomial of degree >= 1
        tol_cluster: Relative clustering tolerance

    Returns:
        PoleMultiset whose multiplicities sum to deg q
    """
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    if q.degree < 1:
        raise DegreeViolation("root extraction needs degree >= 1")
    if q.degree > MAX_DEGREE:
        raise DegreeViolation(f"degree {q.degree} exceeds {MAX_DEGREE}")
    coeffs = q.as_array() / q.leading
    real, pairs = _clustered_roots(coeffs, tol)
    return PoleMultiset(tuple(real), tuple(pairs))


def expand(poles: PoleMultiset) -> Polynomial:
    """Monic polynomial with the given roots."""
    return Polynomial.from_array(_product(_factors(poles)))


def _factors(poles: PoleMultiset) -> List[np.ndarray]:
    factors = []
    for rp in poles.real_poles:
        factors.append(npoly.polypow([-rp.value, 1.0], rp.mult))
    for cp in poles.complex_pairs:
        factors.append(npoly.polypow([cp.mu**2 + cp.omega**2, -2.0 * cp.mu, 1.0], cp.mult))
    return factors


def _product(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([1.0])
    for factor in factors:
        out = npoly.polymul(out, factor)
    return out


def _pad(coeffs: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.asarray(coeffs).dtype)
    k = min(len(coeffs), size)
    out[:k] = coeffs[:k]
    return out


def _pf_basis(poles: PoleMultiset) -> np.ndarray:
    """
    Columns are the numerators (over q) of each partial-fraction unknown, in the
    order real poles (c_1..c_m each), then complex pairs (Re c_1, Im c_1, ...).
    """
    n = poles.order
    factors = _factors(poles)
    n_real = len(poles.real_poles)
    columns: List[np.ndarray] = []

    for k, rp in enumerate(poles.real_poles):
        rest = _product(factors[:k] + factors[k + 1 :])
        for r in range(1, rp.mult + 1):
            numerator = npoly.polymul(rest, npoly.polypow([-rp.value, 1.0], rp.mult - r))
            columns.append(_pad(numerator, n))

    for j, cp in enumerate(poles.complex_pairs):
        idx = n_real + j
        rest = _product(factors[:idx] + factors[idx + 1 :])
        quad = np.array([cp.mu**2 + cp.omega**2, -2.0 * cp.mu, 1.0])
        for r in range(1, cp.mult + 1):
            # c/(s-z)^r + conj(c)/(s-conj z)^r = 2 Re(c (s-conj z)^r) / D^r
            w = npoly.polypow(np.array([-cp.root.conjugate(), 1.0], dtype=complex), r)
            tail = npoly.polymul(rest, npoly.polypow(quad, cp.mult - r))
            columns.append(_pad(npoly.polymul(2.0 * w.real, tail), n))
            columns.append(_pad(npoly.polymul(-2.0 * w.imag, tail), n))

    return np.column_stack(columns) if columns else np.zeros((0, 0))


def _unpack(poles: PoleMultiset, x: np.ndarray) -> PartialFractions:
    pos = 0
    real = []
    for rp in poles.real_poles:
        real.append(tuple(float(v) for v in x[pos : pos + rp.mult]))
        pos += rp.mult
    pairs = []
    for cp in poles.complex_pairs:
        coeffs = []
        for _ in range(cp.mult):
            coeffs.append(complex(x[pos], x[pos + 1]))
            pos += 2
        pairs.append(tuple(coeffs))
    return PartialFractions(real=tuple(real), pairs=tuple(pairs))


def _pack(poles: PoleMultiset, pf: PartialFractions) -> np.ndarray:
    values: List[float] = []
    for rp, coeffs in zip(poles.real_poles, pf.real):
        if len(coeffs) != rp.mult:
            raise DimensionMismatch(f"pole {rp.value} needs {rp.mult} coefficients")
        values.extend(float(c) for c in coeffs)
    for cp, coeffs in zip(poles.complex_pairs, pf.pairs):
        if len(coeffs) != cp.mult:
            raise DimensionMismatch(f"pole {cp.root} needs {cp.mult} coefficients")
        for c in coeffs:
            values.extend([complex(c).real, complex(c).imag])
    return np.array(values)


def partial_fractions(p: Polynomial, q: Polynomial, poles: PoleMultiset) -> PartialFractions:
    """
    Partial-fraction coefficients of p/q by coefficient matching.

    Args:
        p: Numerator with deg p < deg q
        q: Monic denominator
        poles: Clustered roots of q

    Returns:
        PartialFractions aligned with ``poles``
    """
    n = poles.order
    if q.degree != n:
        raise DimensionMismatch(f"deg q = {q.degree} but poles have total order {n}")
    if p.degree >= n:
        raise DegreeViolation(f"deg p = {p.degree} must be below {n}")
    basis = _pf_basis(poles)
    rhs = _pad(p.as_array(), n)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            x = scipy.linalg.solve(basis, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularSystem(f"partial-fraction system is singular: {exc}") from exc
    return _unpack(poles, x)


def _common_factor(p_coeffs: np.ndarray, q_coeffs: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """A linear or quadratic factor shared by p and q, taken from q's roots."""
    if len(p_coeffs) < 2 or len(q_coeffs) < 2:
        return None
    q_real, q_pairs = _clustered_roots(q_coeffs, tol)
    p_real, p_pairs = _clustered_roots(p_coeffs / p_coeffs[-1], tol)
    p_roots = [(complex(rp.value), rp.mult) for rp in p_real]
    p_roots += [(cp.root, cp.mult) for cp in p_pairs]

    for rp in q_real:
        root = complex(rp.value)
        for other, size in p_roots:
            radius = max(_cluster_radius(root, rp.mult, tol), _cluster_radius(other, size, tol))
            if abs(root - other) <= radius:
                return np.array([-rp.value, 1.0])
    for cp in q_pairs:
        for other, size in p_roots:
            radius = max(_cluster_radius(cp.root, cp.mult, tol), _cluster_radius(other, size, tol))
            if abs(cp.root - other) <= radius:
                return np.array([cp.mu**2 + cp.omega**2, -2.0 * cp.mu, 1.0])
    return None


def common_factor(
    p: Polynomial, q: Polynomial, tol_cluster: Optional[float] = None
) -> Optional[Polynomial]:
    """A real linear or quadratic factor shared by p and q, or None."""
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    if p.degree < 1 or q.degree < 1:
        return None
    factor = _common_factor(p.as_array(), q.as_array() / q.leading, tol)
    return None if factor is None else Polynomial.from_array(factor)


def normalize(
    p: Polynomial, q: Polynomial, tol_cluster: Optional[float] = None
) -> Tuple[Polynomial, Polynomial]:
    """
    Make q monic and cancel common roots of p and q.

    Args:
        p: Numerator
        q: Denominator, nonzero with q(0) != 0
        tol_cluster: Relative tolerance for deciding that roots coincide

    Returns:
        (p, q) in coprime form with q monic
    """
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    if q.is_zero:
        raise ZeroDenominator("denominator is the zero polynomial")
    if q(0.0) == 0.0:
        raise ZeroDenominator("q(0) = 0: pole at the origin")
    if q.degree > MAX_DEGREE:
        raise DegreeViolation(f"degree {q.degree} exceeds {MAX_DEGREE}")

    lead = q.leading
    p_arr = Polynomial(tuple(c / lead for c in p.coeffs)).as_array() if not p.is_zero else None
    q_arr = q.as_array() / lead

    while p_arr is not None:
        factor = _common_factor(p_arr, q_arr, tol)
        if factor is None:
            break
        q_arr = npoly.polydiv(q_arr, factor)[0]
        p_arr = npoly.polydiv(p_arr, factor)[0]
        logger.debug("cancelled common factor %s", factor.tolist())

    p_out = Polynomial() if p_arr is None else Polynomial.from_array(p_arr)
    q_out = Polynomial.from_array(q_arr)
    if not p_out.is_zero and p_out.degree >= q_out.degree:
        raise DegreeViolation(f"deg p = {p_out.degree} is not below deg q = {q_out.degree}")
    return p_out, q_out


def closest_cancellation_gap(
    p: Polynomial, q: Polynomial, tol_cluster: Optional[float] = None
) -> float:
    """Smallest relative distance between a root of q and a root of p (inf if p is constant)."""
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    if p.degree < 1 or q.degree < 1:
        return float("inf")
    q_real, q_pairs = _clustered_roots(q.as_array() / q.leading, tol)
    p_real, p_pairs = _clustered_roots(p.as_array() / p.leading, tol)
    q_roots = [complex(rp.value) for rp in q_real] + [cp.root for cp in q_pairs]
    p_roots = [complex(rp.value) for rp in p_real] + [cp.root for cp in p_pairs]
    return min(abs(a - b) / (1.0 + abs(a)) for a in q_roots for b in p_roots)


def validate_lst(
    lst: RationalLst, tol_cluster: Optional[float] = None, mass_tol: float = 1e-12
) -> ValidationReport:
    """
    Check the admissibility conditions of an LST.

    Args:
        lst: Candidate LST
        tol_cluster: Tolerance for the coprimality test
        mass_tol: Allowed deviation of L(0) from 1

    Returns:
        ValidationReport with one flag per condition
    """
    tol = Config.TOL_CLUSTER if tol_cluster is None else tol_cluster
    messages: List[str] = []

    real_coefficients = all(np.isfinite(lst.p.coeffs)) and all(np.isfinite(lst.q.coeffs))
    if not real_coefficients:
        messages.append("(A1) coefficients must be finite reals")

    try:
        coprime = _common_factor(lst.p.as_array(), lst.q.as_array() / lst.q.leading, tol) is None
    except ClusterAmbiguity as exc:
        coprime = False
        messages.append(f"(A2) {exc}")
    if not coprime:
        messages.append("(A2) p and q share a root")

    mass = lst.at_zero() if lst.q(0.0) != 0.0 else float("nan")
    unit_mass = bool(np.isfinite(mass) and abs(mass - 1.0) <= mass_tol)
    if not unit_mass:
        messages.append(f"(A3) L(0) = {mass!r} is not 1")

    lead = lst.poles.dominant_real_pole()
    dominant = lead is not None and lead < 0.0
    if lead is None:
        messages.append("(A3) no real pole strictly dominates the others")
    elif lead >= 0.0:
        messages.append(f"(A3) dominant pole {lead!r} is not negative")

    return ValidationReport(
        real_coefficients=real_coefficients,
        coprime=coprime,
        unit_mass=unit_mass,
        dominant_real_pole=dominant,
        mass=mass,
        messages=tuple(messages),
    )


def renormalize_mass(
    lst: RationalLst, mass_tol: Optional[float] = None
) -> Tuple[RationalLst, float]:
    """
    Rescale an LST whose L(0) is off by rounding of printed coefficients.

    Returns:
        (lst, factor) where factor is the applied scale (1.0 when nothing changed)
    """
    tol = Config.MASS_TOL if mass_tol is None else mass_tol
    mass = lst.at_zero()
    if abs(mass - 1.0) <= 1e-12 or not abs(mass - 1.0) <= tol or mass <= 0.0:
        return lst, 1.0
    logger.warning("L(0) = %.17g; rescaling the LST by 1/L(0)", mass)
    return lst.scaled(1.0 / mass), 1.0 / mass


def build_lst_from_coeffs(
    p: Sequence[float],
    q: Sequence[float],
    tol_cluster: Optional[float] = None,
    renormalize: bool = False,
) -> RationalLst:
    """
    Build a RationalLst from ascending coefficient lists.

    Args:
        p: Numerator coefficients
        q: Denominator coefficients
        tol_cluster: Relative clustering tolerance
        renormalize: Rescale small L(0) defects to 1

    Returns:
        Normalized LST with poles and partial fractions
    """
    p_norm, q_norm = normalize(Polynomial(tuple(p)), Polynomial(tuple(q)), tol_cluster)
    if q_norm.degree < 1:
        raise DegreeViolation("denominator reduces to a constant after cancellation")
    poles = roots(q_norm, tol_cluster)
    pf = partial_fractions(p_norm, q_norm, poles)
    lst = RationalLst(p=p_norm, q=q_norm, poles=poles, pf=pf)
    if renormalize:
        lst, _ = renormalize_mass(lst)
    return lst


def build_lst_from_pf(poles: PoleMultiset, pf: PartialFractions) -> RationalLst:
    """Assemble p and q from poles and partial-fraction coefficients."""
    if len(pf.real) != len(poles.real_poles) or len(pf.pairs) != len(poles.complex_pairs):
        raise DimensionMismatch("partial fractions do not match the pole list")
    q = expand(poles)
    p = Polynomial.from_array(_pf_basis(poles) @ _pack(poles, pf))
    return RationalLst(p=p, q=q, poles=poles, pf=pf)


def lst_from_terms(
    real_terms: Sequence[Tuple[float, Sequence[float]]],
    complex_terms: Sequence[Tuple[complex, Sequence[complex]]],
) -> RationalLst:
    """
    Build an LST from pole/coefficient terms as they appear in input files.

    A complex pole given with negative imaginary part is replaced by its
    conjugate together with the conjugated coefficients.
    """
    real_pairs = sorted(
        ((float(pole), tuple(float(c) for c in cs)) for pole, cs in real_terms),
        key=lambda t: -t[0],
    )
    cplx = []
    for pole, coeffs in complex_terms:
        pole = complex(pole)
        coeffs = tuple(complex(c) for c in coeffs)
        if pole.imag < 0:
            pole = pole.conjugate()
            coeffs = tuple(c.conjugate() for c in coeffs)
        cplx.append((pole, coeffs))
    cplx.sort(key=lambda t: (-t[0].real, t[0].imag))

    poles = PoleMultiset(
        tuple(RealPole(pole, len(cs)) for pole, cs in real_pairs),
        tuple(ComplexPair(pole.real, pole.imag, len(cs)) for pole, cs in cplx),
    )
    pf = PartialFractions(
        real=tuple(cs for _, cs in real_pairs), pairs=tuple(cs for _, cs in cplx)
    )
    return build_lst_from_pf(poles, pf)
