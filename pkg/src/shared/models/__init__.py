"""
Pydantic models for run configuration, instance generation and input files.
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from shared.config import Config


class InitKind(str, Enum):
    """Starting matrix A0 of the alternating minimization."""

    JORDAN_PLUS_ONES = "jordan-plus-ones"
    JORDAN = "jordan"
    MINUS_XI_I = "minus-xi-i"
    CUSTOM = "custom"
    RANDOM = "random"


class AmConfig(BaseModel):
    """Settings of one alternating-minimization run."""

    model_config = ConfigDict(frozen=True)

    init: InitKind = InitKind.JORDAN_PLUS_ONES
    init_matrix: Optional[List[List[float]]] = None
    seed: int = Config.SEED
    tol_term: float = Field(default=Config.TOL_TERM, gt=0)
    success_threshold_factor: float = Field(default=Config.SUCCESS_FACTOR, gt=0)
    max_outer_iter: int = Field(default=Config.MAX_OUTER_ITER, ge=1)
    qp_tol: float = Field(default=Config.QP_TOL, gt=0)
    extrapolate: bool = Config.EXTRAPOLATE

    @model_validator(mode="after")
    def check_init_matrix(self) -> "AmConfig":
        if self.init == InitKind.CUSTOM:
            if not self.init_matrix:
                raise ValueError("init 'custom' needs init_matrix")
            size = len(self.init_matrix)
            if any(len(row) != size for row in self.init_matrix):
                raise ValueError("init_matrix must be square")
        return self


class Variant(str, Enum):
    BALANCED = "balanced"
    SPARSE = "sparse"
    STIFF = "stiff"


class GenSpec(BaseModel):
    """
    Random instance specification.

    Sparse zeroes each off-diagonal entry with probability p; Stiff draws it
    from U(0, 1000c) with probability p.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    c: float = Field(default=1.0, gt=0)
    variant: Variant = Variant.BALANCED
    p: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int = 0


class ComplexValue(BaseModel):
    model_config = ConfigDict(extra="forbid")

    re: float
    im: float = 0.0

    def value(self) -> complex:
        return complex(self.re, self.im)


class PfTerm(BaseModel):
    """One pole with its coefficients c_1..c_m of 1/(s-pole)^r."""

    model_config = ConfigDict(extra="forbid")

    pole: ComplexValue
    mult: Optional[int] = Field(default=None, ge=1)
    coeffs: List[ComplexValue] = Field(min_length=1)

    @model_validator(mode="after")
    def check_mult(self) -> "PfTerm":
        if self.mult is not None and self.mult != len(self.coeffs):
            raise ValueError(f"mult is {self.mult} but {len(self.coeffs)} coefficients are given")
        if self.pole.im == 0.0 and any(c.im != 0.0 for c in self.coeffs):
            raise ValueError("a real pole needs real coefficients")
        return self

    @property
    def multiplicity(self) -> int:
        return len(self.coeffs)


class CoeffsInput(BaseModel):
    """Ascending coefficient lists; with z_form the pair is a generating function."""

    model_config = ConfigDict(extra="forbid")

    form: Literal["coeffs"]
    p: List[float] = Field(min_length=1)
    q: List[float] = Field(min_length=2)
    z_form: bool = False


class PartialFractionsInput(BaseModel):
    model_config = ConfigDict(extra="forbid")

    form: Literal["partial_fractions"]
    terms: List[PfTerm] = Field(min_length=1)


class BetaJordanInput(BaseModel):
    """L(s) = -beta J (sI - J)^{-1} 1 for a square J."""

    model_config = ConfigDict(extra="forbid")

    form: Literal["beta_jordan"]
    beta: List[float] = Field(min_length=1)
    jordan: List[List[float]] = Field(min_length=1)

    @model_validator(mode="after")
    def check_shapes(self) -> "BetaJordanInput":
        n = len(self.beta)
        if len(self.jordan) != n or any(len(row) != n for row in self.jordan):
            raise ValueError(f"jordan must be {n}x{n} to match beta")
        return self


InputDocument = Annotated[
    Union[CoeffsInput, PartialFractionsInput, BetaJordanInput], Field(discriminator="form")
]
