"""Pydantic v2 models for spectra, phase parameters, summaries and run manifests."""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from .errors import InvalidDims


def parse_mu(value: str | int | float | Fraction) -> Fraction:
    """Parse an imbalance such as ``"0"``, ``"1/2"`` or ``1.5`` into an exact rational."""
    try:
        mu = Fraction(value) if not isinstance(value, float) else Fraction(value).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidDims(f"mu must be a rational number, got {value!r}") from e
    if mu < 0:
        raise InvalidDims(f"mu must be >= 0, got {mu}")
    return mu


class Phase(str, Enum):
    HIGH_TEMP = "high_temp"
    SEMICIRCLE = "semicircle"


class InitMode(str, Enum):
    UNIFORM_JITTER = "uniform-jitter"
    HAAR_DRAW = "haar-draw"


class RecordMode(str, Enum):
    PURITY = "purity"
    SPECTRUM = "spectrum"
    BOTH = "both"


# ── Core values ──────────────────────────────────────────────────────────────

class BipartitionDims(BaseModel):
    """Dimensions n = dim H_A <= m = dim H_B of a bipartition."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_order(self):
        if self.m < self.n:
            raise ValueError(f"need m >= n, got n={self.n}, m={self.m}")
        return self

    @property
    def mu(self) -> Fraction:
        return Fraction(self.m - self.n, self.n)

    @classmethod
    def from_imbalance(cls, n: int, mu: Fraction) -> "BipartitionDims":
        extra = mu * n
        if extra.denominator != 1:
            raise InvalidDims(f"m = n(1+mu) is not an integer for n={n}, mu={mu}")
        return cls(n=n, m=n + int(extra))


class SchmidtSpectrum(BaseModel):
    """Eigenvalues of the reduced state, sorted descending, on the unit simplex."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_simplex(self):
        v = self.values
        n = len(v)
        if any(x < 0.0 or x > 1.0 for x in v):
            raise ValueError("Schmidt coefficients must lie in [0, 1]")
        if any(v[k] < v[k + 1] for k in range(n - 1)):
            raise ValueError("Schmidt coefficients must be sorted descending")
        if abs(sum(v) - 1.0) > 1e-12 * n:
            raise ValueError(f"Schmidt coefficients sum to {sum(v)!r}, not 1")
        return self

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class PurityRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    purity: float
    n: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_bounds(self):
        if not (1.0 / self.n <= self.purity <= 1.0):
            raise ValueError(f"purity {self.purity!r} outside [1/{self.n}, 1]")
        return self

    @computed_field
    @property
    def rescaled(self) -> float:
        """R = n^3 * purity."""
        return self.n**3 * self.purity


class PhaseParams(BaseModel):
    """Support parameters of the limiting eigenvalue density at one beta.

    ``c = beta * b`` stays finite at beta = 0 where ``b`` is undefined.
    """

    model_config = ConfigDict(frozen=True)

    beta: float
    phase: Phase
    a: float
    c: float
    b: Optional[float] = None
    xi_im: float

    @model_validator(mode="after")
    def check_phase(self):
        tol = 1e-10
        if self.phase == Phase.HIGH_TEMP:
            if self.a <= 0:
                raise ValueError(f"right edge a={self.a} must be positive")
            # c/2 + beta*lambda is linear in lambda: check both ends of [0, a]
            if self.c / 2 < -tol or self.c / 2 + self.beta * self.a < -tol:
                raise ValueError(f"negative density on [0, a] at beta={self.beta}")
        else:
            if self.b is None or not (0 <= self.b < self.a):
                raise ValueError(f"semicircle needs 0 <= b < a, got a={self.a}, b={self.b}")
            if abs(self.a + self.b - 2) > tol:
                raise ValueError("semicircle support must be centred at 1")
        return self

    @property
    def b_or_c(self) -> float:
        return self.b if self.b is not None else self.c


@dataclass(frozen=True)
class CumulantSet:
    """Exact purity cumulants: order -> (coefficient, power) meaning coefficient / N**power."""
    mu: Fraction
    entries: dict[int, tuple[Fraction, int]] = field(default_factory=dict)

    def __post_init__(self):
        for order, (_, power) in self.entries.items():
            if power != 3 * order - 2:
                raise ValueError(f"order {order} cumulant must scale as N^-{3 * order - 2}")
            if self.mu > 0 and order > 5:
                raise ValueError("unbalanced cumulants are known up to order 5 only")

    def value(self, order: int, n: int) -> float:
        coefficient, power = self.entries[order]
        return float(coefficient) / float(n) ** power


# ── Statistics ───────────────────────────────────────────────────────────────

class KStat(BaseModel):
    estimate: float
    stderr: Optional[float] = None
    high_variance: bool = False
    few_blocks: bool = False  # stderr from fewer than MIN_BLOCKS jackknife blocks


class SampleSummary(BaseModel):
    count: int = Field(..., ge=1)
    mean: float
    k_stats: dict[int, KStat]

    @model_validator(mode="after")
    def check_mean(self):
        if 1 in self.k_stats and self.k_stats[1].estimate != self.mean:
            raise ValueError("k1 must equal the sample mean")
        return self


class EmpiricalDensity(BaseModel):
    """Normalised histogram of rescaled eigenvalues n * lambda."""

    edges: list[float] = Field(..., min_length=3)
    densities: list[float]
    count: int = Field(..., ge=1)
    out_of_range: int = 0

    @model_validator(mode="after")
    def check_histogram(self):
        edges = np.asarray(self.edges)
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if len(self.densities) != len(self.edges) - 1:
            raise ValueError("need exactly one density per bin")
        total = float(np.sum(np.asarray(self.densities) * np.diff(edges)))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"histogram integrates to {total!r}, not 1")
        return self

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.asarray(self.edges))

    @property
    def midpoints(self) -> np.ndarray:
        edges = np.asarray(self.edges)
        return 0.5 * (edges[:-1] + edges[1:])


class ChainDiagnostics(BaseModel):
    chain: int
    n: int
    beta: float
    mu: str
    sweeps: int
    burn_in: int
    thin: int
    recorded: int
    acceptance_rate: float
    final_step: float
    mean_purity: float
    mean_scaled_purity: float  # n * <purity>, compared with r(beta)
    stderr_scaled_purity: Optional[float] = None
    few_jackknife_blocks: bool = False
    tau: Optional[float] = None
    ess: Optional[float] = None
    zero_variance: bool = False
    evaporation_flag: bool = False
    first_escape_sweep: Optional[int] = None
    max_renorm_correction: float = 0.0
    max_cache_drift: float = 0.0


# ── Theory tables ────────────────────────────────────────────────────────────

class TheoryRow(BaseModel):
    beta: float
    phase: Optional[Phase] = None
    a: Optional[float] = None
    b_or_c: Optional[float] = None
    r: Optional[float] = None
    G: Optional[float] = None
    s_rel: Optional[float] = None
    error: Optional[str] = None


class TheoryTable(BaseModel):
    mu: str = "0"
    rows: list[TheoryRow] = Field(default_factory=list)


# ── Command parameters and manifests ─────────────────────────────────────────

class _MuParams(BaseModel):
    mu: str = "0"

    @field_validator("mu", mode="before")
    @classmethod
    def normalise_mu(cls, v: Any) -> str:
        return str(parse_mu(v))

    @property
    def mu_fraction(self) -> Fraction:
        return Fraction(self.mu)


class TheoryParams(_MuParams):
    beta: float
    quantities: list[str] = Field(default_factory=lambda: ["a", "b", "c", "r"])
    lam: Optional[float] = None
    allow_below_critical: bool = False


class SweepParams(_MuParams):
    beta_min: float
    beta_max: float
    steps: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_range(self):
        if self.beta_max < self.beta_min:
            raise ValueError("beta_max must be >= beta_min")
        return self


class HaarParams(BaseModel):
    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    samples: int = Field(..., ge=1)
    seed: int = 0
    chains: int = Field(1, ge=1)
    emit: RecordMode = RecordMode.PURITY

    @model_validator(mode="after")
    def check_dims(self):
        if self.m < self.n:
            raise ValueError(f"need m >= n, got n={self.n}, m={self.m}")
        return self


class McmcParams(_MuParams):
    n: int = Field(..., ge=2)
    beta: float
    sweeps: int = Field(..., ge=1)
    burn_in: int = Field(0, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = 0
    chains: int = Field(1, ge=1)
    init: InitMode = InitMode.UNIFORM_JITTER

    @model_validator(mode="after")
    def check_sweeps(self):
        if self.sweeps <= self.burn_in:
            raise ValueError(f"sweeps ({self.sweeps}) must exceed burn_in ({self.burn_in})")
        return self


class CompareParams(_MuParams):
    spectra: str
    beta: float
    bins: int = Field(60, ge=2)


class OutputFile(BaseModel):
    path: str
    sha256: str
    size_bytes: int


class RunManifest(BaseModel):
    tool_version: str
    command: str
    parameters: dict[str, Any]
    started_at: datetime
    finished_at: datetime
    outputs: list[OutputFile] = Field(default_factory=list)
