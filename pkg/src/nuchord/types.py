"""
Type definitions and data models for the nuchord package.

This module contains the enums, dataclasses and type aliases shared by the
boundary algebra, index, factorization, metric and stability modules.
All value types are immutable after construction.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple, Dict, Any, Callable

import numpy as np

from .exceptions import ConfigurationError


class LogLevel(str, Enum):
    """Enumeration of supported log levels."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class InstanceKind(str, Enum):
    """Concrete stable-ring instances with their boundary algebra and index group."""
    CIRCLE = "circle"
    HALFPLANE_C0AP = "halfplane_c0ap"
    ANNULUS = "annulus"


class Domain(str, Enum):
    """Boundary domain on which elements are evaluated."""
    CIRCLE = "circle"
    HALF_PLANE = "halfplane"


class Branch(str, Enum):
    """Which branch of the metric definition produced the value."""
    KAPPA_SUP = "kappa_sup"
    INDEX_CONDITION_FAILED = "index_condition_failed"


class PointwiseOp(str, Enum):
    """Pointwise operations on sampled curves."""
    ADD = "add"
    MUL = "mul"
    CONJ = "conj"
    ABS2 = "abs2"


DEFAULT_ANNULUS_RADII: Tuple[float, ...] = (0.9, 0.99, 0.999, 0.9999, 0.99999)


@dataclass(frozen=True)
class Tolerances:
    """
    Numerical tolerances of an algebra instance.

    Attributes:
        invertibility_tol: Relative threshold; f is invertible when
            inf |f| > invertibility_tol * sup |f|
        sup_tol: Agreement required between successive sup/inf estimates
    """
    invertibility_tol: float = 1e-9
    sup_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not (self.invertibility_tol > 0 and self.sup_tol > 0):
            raise ConfigurationError(
                "Tolerances must be positive",
                {"invertibility_tol": self.invertibility_tol, "sup_tol": self.sup_tol},
            )


@dataclass(frozen=True)
class GridSettings:
    """
    Adaptive grid budget.

    Attributes:
        initial_size: Number of boundary samples on the first pass
        max_size: Largest grid before NoConvergence is raised
        refinement_depth: Bisection levels allowed when unwrapping phase
        polish_candidates: Local extrema polished by the scalar optimizer
    """
    initial_size: int = 2**10
    max_size: int = 2**20
    refinement_depth: int = 24
    polish_candidates: int = 4

    def __post_init__(self) -> None:
        if self.initial_size < 16:
            raise ConfigurationError("initial grid must hold at least 16 samples")
        if self.max_size < self.initial_size:
            raise ConfigurationError(
                "max grid must not be smaller than the initial grid",
                {"initial_size": self.initial_size, "max_size": self.max_size},
            )
        if self.refinement_depth < 0 or self.polish_candidates < 1:
            raise ConfigurationError("refinement_depth >= 0 and polish_candidates >= 1 required")


@dataclass(frozen=True)
class AlgebraInstance:
    """
    Descriptor of a concrete instance (R, S, G, iota).

    Attributes:
        kind: Which instance (circle, half-plane C0+AP, annulus limit)
        tolerances: Numerical tolerances
        grid: Adaptive grid budget
        annulus_radii: Ascending radii schedule (annulus instance only)
        ap_window: Half-width W of the frequency window used for C0+AP infima
        ap_grid_density: Samples per radian of the largest delay on the window
    """
    kind: InstanceKind
    tolerances: Tolerances = field(default_factory=Tolerances)
    grid: GridSettings = field(default_factory=GridSettings)
    annulus_radii: Tuple[float, ...] = DEFAULT_ANNULUS_RADII
    ap_window: float = 1e4
    ap_grid_density: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", InstanceKind(self.kind))
        object.__setattr__(self, "annulus_radii", tuple(float(r) for r in self.annulus_radii))
        if self.kind is InstanceKind.ANNULUS:
            radii = self.annulus_radii
            if len(radii) < 3:
                raise ConfigurationError("annulus_radii needs at least 3 radii", {"radii": radii})
            if any(not (0.0 < r < 1.0) for r in radii):
                raise ConfigurationError("annulus_radii must lie in (0, 1)", {"radii": radii})
            if any(b <= a for a, b in zip(radii, radii[1:])):
                raise ConfigurationError("annulus_radii must be strictly increasing", {"radii": radii})
        if self.ap_window <= 0 or self.ap_grid_density <= 0:
            raise ConfigurationError(
                "ap_window and ap_grid_density must be positive",
                {"ap_window": self.ap_window, "ap_grid_density": self.ap_grid_density},
            )

    @property
    def domain(self) -> Domain:
        """Boundary domain of the elements of R for this instance."""
        if self.kind is InstanceKind.HALFPLANE_C0AP:
            return Domain.HALF_PLANE
        return Domain.CIRCLE

    def with_overrides(
        self,
        sup_tol: Optional[float] = None,
        max_grid: Optional[int] = None,
    ) -> "AlgebraInstance":
        """Return a copy with CLI-level overrides applied."""
        instance = self
        if sup_tol is not None:
            instance = replace(instance, tolerances=replace(instance.tolerances, sup_tol=sup_tol))
        if max_grid is not None:
            initial = min(instance.grid.initial_size, max_grid)
            instance = replace(
                instance, grid=replace(instance.grid, initial_size=initial, max_size=max_grid)
            )
        return instance


@dataclass(frozen=True)
class BoundaryPoint:
    """
    A point of the boundary parameterized by an angle.

    On the circle z = exp(i*theta). On the compactified imaginary axis
    omega = tan(theta / 2) and theta = pi is the point at infinity.
    """
    theta: float

    def __post_init__(self) -> None:
        if not (-math.pi < self.theta <= math.pi):
            raise ValueError(f"theta must lie in (-pi, pi], got {self.theta}")

    @classmethod
    def from_omega(cls, omega: float) -> "BoundaryPoint":
        """Boundary point of the imaginary axis at s = i*omega."""
        if math.isinf(omega):
            return cls(math.pi)
        return cls(2.0 * math.atan(omega))

    @property
    def is_infinity(self) -> bool:
        return self.theta == math.pi

    @property
    def omega(self) -> float:
        """Frequency on the imaginary axis (inf at theta = pi)."""
        if self.is_infinity:
            return math.inf
        return math.tan(self.theta / 2.0)


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """
    Ordered complex samples of a boundary function.

    Attributes:
        thetas: Strictly increasing parameters in (-pi, pi]
        values: Samples, same length as thetas
        closed: True when the parameter range wraps around
    """
    thetas: np.ndarray
    values: np.ndarray
    closed: bool = True

    def __post_init__(self) -> None:
        thetas = np.asarray(self.thetas, dtype=float)
        values = np.asarray(self.values)
        if thetas.ndim != 1 or thetas.shape != values.shape:
            raise ValueError("thetas and values must be 1-D arrays of equal length")
        if thetas.size == 0:
            raise ValueError("a sampled curve needs at least one sample")
        if np.any(np.diff(thetas) <= 0):
            raise ValueError("thetas must be strictly increasing")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.thetas.size)

    @property
    def omegas(self) -> np.ndarray:
        """Parameters mapped to the imaginary axis (inf at theta = pi)."""
        with np.errstate(over="ignore"):
            omegas = np.tan(self.thetas / 2.0)
        omegas[self.thetas == math.pi] = np.inf
        return omegas


@dataclass(frozen=True)
class APTerm:
    """One term coeff * exp(-i*omega*delay) of a finite Dirichlet sum."""
    coeff: complex
    delay: float


@dataclass(frozen=True)
class IndexValue:
    """
    Element of the index group G.

    Integer variant (w_av is None) for G = Z, real-integer variant for
    G = R x Z. Supports the group law so additivity can be asserted directly.
    """
    w: int
    w_av: Optional[float] = None

    @classmethod
    def integer(cls, w: int) -> "IndexValue":
        return cls(int(w))

    @classmethod
    def real_integer(cls, w_av: float, w: int) -> "IndexValue":
        return cls(int(w), float(w_av))

    @classmethod
    def identity(cls, kind: InstanceKind) -> "IndexValue":
        if kind is InstanceKind.HALFPLANE_C0AP:
            return cls.real_integer(0.0, 0)
        return cls.integer(0)

    @property
    def is_real_integer(self) -> bool:
        return self.w_av is not None

    def __add__(self, other: "IndexValue") -> "IndexValue":
        if self.is_real_integer != other.is_real_integer:
            raise TypeError("cannot add index values of different groups")
        if self.w_av is None:
            return IndexValue.integer(self.w + other.w)
        return IndexValue.real_integer(self.w_av + (other.w_av or 0.0), self.w + other.w)

    def __neg__(self) -> "IndexValue":
        if self.w_av is None:
            return IndexValue.integer(-self.w)
        return IndexValue.real_integer(-self.w_av, -self.w)

    def to_dict(self) -> Dict[str, Any]:
        if self.w_av is None:
            return {"w": self.w}
        return {"w_av": self.w_av, "w": self.w}


@dataclass(frozen=True)
class InvertibilityReport:
    """
    Numerical membership test for inv S.

    Attributes:
        invertible: min_modulus > invertibility_tol * sup_modulus
        min_modulus: Estimated infimum of |f| on the boundary
        witness_point: Where the infimum estimate is attained
        sup_modulus: Estimated supremum of |f|
        threshold: invertibility_tol * sup_modulus
        ambiguous: The infimum is within numerical reach of the threshold
        grid_size: Final grid size of the infimum search
    """
    invertible: bool
    min_modulus: float
    witness_point: BoundaryPoint
    sup_modulus: float = 0.0
    threshold: float = 0.0
    ambiguous: bool = False
    grid_size: int = 0


@dataclass(frozen=True)
class GridReport:
    """Grid size and achieved tolerance of an adaptive sup/inf."""
    grid_size: int
    sup_tolerance: float
    branch_ambiguous: bool = False
    window: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid_size": self.grid_size,
            "sup_tolerance": self.sup_tolerance,
            "branch_ambiguous": self.branch_ambiguous,
            "window": self.window,
        }


@dataclass(frozen=True)
class IndexCondition:
    """
    Outcome of the invertibility-and-index test on n1* n2 + d1* d2.

    Attributes:
        invertible: Whether the expression is invertible in S
        min_modulus: Infimum estimate of its modulus
        index: Its index (absent when not invertible)
        holds: invertible and the index is the group identity
        ambiguous: Invertibility decided within numerical reach of the threshold
    """
    invertible: bool
    min_modulus: float
    index: Optional[IndexValue]
    holds: bool
    ambiguous: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "invertible": self.invertible,
            "min_modulus": self.min_modulus,
            "index": self.index.to_dict() if self.index is not None else None,
            "holds": self.holds,
            "ambiguous": self.ambiguous,
        }


@dataclass(frozen=True)
class MetricResult:
    """
    Value of the chordal metric between two plants.

    Attributes:
        value: Metric value in [0, 1]
        branch: Which branch of the definition produced the value
        condition: Index condition details
        grid_report: Grid size and achieved tolerance of the supremum
    """
    value: float
    branch: Branch
    condition: IndexCondition
    grid_report: GridReport

    def __post_init__(self) -> None:
        if self.branch is Branch.INDEX_CONDITION_FAILED and self.value != 1.0:
            raise ValueError("index-condition branch must carry value 1")
        if not (0.0 <= self.value <= 1.0 + 1e-12):
            raise ValueError(f"metric value out of range: {self.value}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d_cr": self.value,
            "branch": self.branch.value,
            "condition": self.condition.to_dict(),
            **self.grid_report.to_dict(),
        }


@dataclass(frozen=True)
class MarginResult:
    """
    Stability margin of a plant/controller pair.

    Attributes:
        value: Margin in [0, 1]; 0 when the controller does not stabilize
        stabilizes: Verdict of the index test
        grid_size: Final grid size of the infimum search (0 if skipped)
        sup_tolerance: Achieved agreement of the infimum estimate
    """
    value: float
    stabilizes: bool
    grid_size: int = 0
    sup_tolerance: float = 0.0

    @property
    def inverse(self) -> float:
        return 1.0 / self.value if self.value > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.value,
            "mu_inverse": self.inverse if self.value > 0 else None,
            "stabilizes": self.stabilizes,
            "grid_size": self.grid_size,
            "sup_tolerance": self.sup_tolerance,
        }


@dataclass(frozen=True)
class Certificate:
    """
    Robust stabilization certificate.

    Attributes:
        mu_nominal: Stability margin of the nominal pair
        distance: Metric distance between perturbed and nominal plant
        lower_bound: mu_nominal - distance
        stabilized: True when lower_bound > 0
        mu_perturbed: Directly computed margin of the perturbed pair, if requested
    """
    mu_nominal: float
    distance: float
    lower_bound: float
    stabilized: bool
    mu_perturbed: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu_nominal": self.mu_nominal,
            "distance": self.distance,
            "lower_bound": self.lower_bound,
            "stabilized": self.stabilized,
            "mu_perturbed": self.mu_perturbed,
        }


@dataclass(frozen=True)
class NumericsConfig:
    """[numerics] section of the configuration file."""
    sup_tol: float = 1e-9
    invertibility_tol: float = 1e-9
    initial_grid: int = 2**10
    max_grid: int = 2**20
    refinement_depth: int = 24
    polish_candidates: int = 4
    ap_window: float = 1e4
    ap_grid_density: float = 2.0
    annulus_radii: Tuple[float, ...] = DEFAULT_ANNULUS_RADII


@dataclass(frozen=True)
class AppConfig:
    """
    Application configuration.

    Attributes:
        numerics: Tolerances and grid budget shared by all instances
        threads: Worker cap for grid evaluation (None: automatic)
        log_level: Default log level
    """
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    threads: Optional[int] = None
    log_level: LogLevel = LogLevel.INFO

    def instance(self, kind: InstanceKind) -> AlgebraInstance:
        """Algebra instance of the given kind built from the numerics section."""
        numerics = self.numerics
        return AlgebraInstance(
            kind=InstanceKind(kind),
            tolerances=Tolerances(numerics.invertibility_tol, numerics.sup_tol),
            grid=GridSettings(
                numerics.initial_grid,
                numerics.max_grid,
                numerics.refinement_depth,
                numerics.polish_candidates,
            ),
            annulus_radii=numerics.annulus_radii,
            ap_window=numerics.ap_window,
            ap_grid_density=numerics.ap_grid_density,
        )


# Type aliases
ThetaFunction = Callable[[np.ndarray], np.ndarray]
