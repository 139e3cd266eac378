"""
Exception hierarchy for phmin.

Input and value problems subclass ``ValueError``; numerical breakdowns subclass
``ArithmeticError``. Everything derives from ``PhminError`` so command handlers
can map failures to exit codes in one place.
"""

from typing import Optional


class PhminError(Exception):
    """Base class for all solver errors."""


class ZeroDenominator(PhminError, ValueError):
    """Denominator is the zero polynomial or vanishes at s = 0."""


class DegreeViolation(PhminError, ValueError):
    """Numerator degree is not below the denominator degree."""


class ClusterAmbiguity(PhminError, ArithmeticError):
    """Root clusters overlap but cannot be merged consistently."""


class SingularSystem(PhminError, ArithmeticError):
    """Partial-fraction system is singular; usually a clustering error upstream."""


class SingularSampleSystem(PhminError, ArithmeticError):
    """The sampling system for beta stayed singular after all retries."""


class ZeroPole(PhminError, ValueError):
    """A pole at the origin makes the closed-form recursions undefined."""


class DimensionMismatch(PhminError, ValueError):
    """Array shapes are inconsistent."""


class InfeasibleBeta(PhminError):
    """No P satisfies P1 = 1 and beta P >= 0, so no representation of this order exists."""


class InvalidGf(PhminError, ValueError):
    """A generating function violates an admissibility condition."""


class SingularA(PhminError, ArithmeticError):
    """The matrix A is singular."""


class InputError(PhminError, ValueError):
    """An input file could not be parsed or validated."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(f"{where}{message}")


class SamplingExhausted(PhminError, RuntimeError):
    """No admissible instance was drawn within the attempt budget."""
