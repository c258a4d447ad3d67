"""Oracle descriptions of deterministic and stochastic min-max problems.

A problem is ``min_x max_y f(x, y)`` presented through a value oracle, plus
the smoothness/curvature constants the step-size schedules consume, and
optional analytic helpers used only for verification and diagnostics.
Feasible sets are limited to an axis-aligned box for x and a Euclidean ball
for y; unconstrained problems simply leave them unset (identity projection).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionMismatchError


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and coerce to a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"{name} has dim {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries: {arr!r}")
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box constraint, one [lo, hi] interval per coordinate."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lo, name="box lo")
        hi = as_vector(self.hi, dim=lo.shape[0], name="box hi")
        if np.any(lo > hi):
            raise ConfigError(f"box has lo > hi: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True)
class Ball:
    """Euclidean ball constraint {y : ||y - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = as_vector(self.center, name="ball center")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def project_box(x: np.ndarray, box) -> np.ndarray:
    """Clamp each coordinate of x into its [lo, hi] interval. Idempotent."""
    if not isinstance(box, Box):
        pairs = list(box)
        box = Box(np.array([p[0] for p in pairs], dtype=float),
                  np.array([p[1] for p in pairs], dtype=float))
    x = as_vector(x, dim=box.dim, name="x")
    return np.clip(x, box.lo, box.hi)


def project_ball(y: np.ndarray, center, radius: float) -> np.ndarray:
    """Radially project y onto the ball of given center and radius.

    Returns y unchanged when it is already inside, otherwise
    center + radius * (y - center) / ||y - center||. Idempotent.
    """
    if not (radius > 0):
        raise ConfigError(f"radius must be positive, got {radius}")
    center = as_vector(center, name="center")
    y = as_vector(y, dim=center.shape[0], name="y")
    offset = y - center
    norm = float(np.linalg.norm(offset))
    # the relative slack absorbs rescaling round-off so the map stays
    # idempotent in floating point
    if norm <= radius * (1.0 + 1e-12):
        return y
    return center + (radius / norm) * offset


@dataclass(frozen=True)
class ProblemConstants:
    """Smoothness and curvature constants supplied with a problem.

    l       gradient-Lipschitz constant of f (> 0)
    mu_pl   curvature constant of the inner maximization:
            ||grad_y f(x, y)||^2 >= 2 * mu_pl * (max_y f(x, y) - f(x, y))
    sigma   bound on the single-sample estimator noise (stochastic problems)
    known_optimum   optional min_x max_y value, used only by diagnostics

    Derived: kappa = l / mu_pl (condition number) and
    L = l + l^2 / (2 mu_pl), the smoothness constant of the envelope
    Phi(x) = max_y f(x, y).
    """

    l: float
    mu_pl: float
    sigma: Optional[float] = None
    known_optimum: Optional[float] = None

    def __post_init__(self):
        if not (self.l > 0 and math.isfinite(self.l)):
            raise ConfigError(f"l must be positive and finite, got {self.l}")
        if not (self.mu_pl > 0 and math.isfinite(self.mu_pl)):
            raise ConfigError(f"mu_pl must be positive and finite, got {self.mu_pl}")
        if self.l < self.mu_pl:
            # kappa < 1 is impossible for an l-smooth function with
            # inner curvature constant mu_pl.
            raise ConfigError(
                f"l={self.l} < mu_pl={self.mu_pl} (condition number below 1)")
        if self.sigma is not None and self.sigma < 0:
            raise ConfigError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def kappa(self) -> float:
        return self.l / self.mu_pl

    @property
    def L(self) -> float:
        return self.l + self.l ** 2 / (2.0 * self.mu_pl)


@dataclass
class MinimaxProblem:
    """Deterministic min-max problem described by a value oracle.

    ``value`` must be pure: identical inputs give bit-identical outputs.
    The analytic fields are optional verification helpers; algorithms never
    require them (only the first-order baseline does).
    """

    d1: int
    d2: int
    value: Callable[[np.ndarray, np.ndarray], float]
    constants: ProblemConstants
    analytic_grad_x: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    analytic_grad_y: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    phi_value: Optional[Callable[[np.ndarray], float]] = None
    phi_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    y_star: Optional[Callable[[np.ndarray], np.ndarray]] = None
    x_box: Optional[Box] = None
    y_ball: Optional[Ball] = None
    x_star: Optional[np.ndarray] = None
    reference_value: Optional[float] = None
    x0: Optional[np.ndarray] = None
    y0: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ConfigError(f"dimensions must be positive, got d1={self.d1}, d2={self.d2}")
        if self.x_box is not None and self.x_box.dim != self.d1:
            raise DimensionMismatchError("x_box dimension does not match d1")
        if self.y_ball is not None and self.y_ball.dim != self.d2:
            raise DimensionMismatchError("y_ball dimension does not match d2")

    @property
    def stochastic(self) -> bool:
        return False

    def project_x(self, x: np.ndarray) -> np.ndarray:
        return x if self.x_box is None else project_box(x, self.x_box)

    def project_y(self, y: np.ndarray) -> np.ndarray:
        if self.y_ball is None:
            return y
        return project_ball(y, self.y_ball.center, self.y_ball.radius)

    def start_point(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.zeros(self.d1) if self.x0 is None else np.array(self.x0, dtype=float)
        y = np.zeros(self.d2) if self.y0 is None else np.array(self.y0, dtype=float)
        return x, y


@dataclass
class StochasticMinimaxProblem:
    """Expectation min-max problem: minimize_x maximize_y E_xi G(x, y; xi).

    ``sample(gen)`` draws xi from a numpy Generator; ``value_at(x, y, xi)``
    must be deterministic given its three arguments, so estimators can
    re-evaluate the same sample at several points (common random numbers).
    ``expected`` optionally carries the closed-form expectation as a full
    deterministic problem for verification and diagnostics; ``sample_grad_*``
    are per-sample analytic gradients for the first-order baseline.
    """

    d1: int
    d2: int
    sample: Callable[[np.random.Generator], Any]
    value_at: Callable[[np.ndarray, np.ndarray, Any], float]
    constants: ProblemConstants
    expected: Optional[MinimaxProblem] = None
    sample_grad_x: Optional[Callable[[np.ndarray, np.ndarray, Any], np.ndarray]] = None
    sample_grad_y: Optional[Callable[[np.ndarray, np.ndarray, Any], np.ndarray]] = None
    x_box: Optional[Box] = None
    y_ball: Optional[Ball] = None
    x_star: Optional[np.ndarray] = None
    reference_value: Optional[float] = None
    x0: Optional[np.ndarray] = None
    y0: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ConfigError(f"dimensions must be positive, got d1={self.d1}, d2={self.d2}")

    @property
    def stochastic(self) -> bool:
        return True

    @property
    def expected_value(self) -> Optional[Callable[[np.ndarray, np.ndarray], float]]:
        return None if self.expected is None else self.expected.value

    def project_x(self, x: np.ndarray) -> np.ndarray:
        return x if self.x_box is None else project_box(x, self.x_box)

    def project_y(self, y: np.ndarray) -> np.ndarray:
        if self.y_ball is None:
            return y
        return project_ball(y, self.y_ball.center, self.y_ball.radius)

    def start_point(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.zeros(self.d1) if self.x0 is None else np.array(self.x0, dtype=float)
        y = np.zeros(self.d2) if self.y0 is None else np.array(self.y0, dtype=float)
        return x, y


def with_value_noise(problem: MinimaxProblem, variance: float) -> StochasticMinimaxProblem:
    """Wrap a deterministic problem with additive Gaussian value noise.

    The sample xi is the noise realization itself:
    ``value_at(x, y, xi) = value(x, y) + xi`` with xi ~ Normal(0, variance).
    The exact expectation is the wrapped problem. Per-sample gradients equal
    the clean gradients (the noise does not depend on x or y).
    """
    if variance < 0:
        raise ConfigError(f"variance must be non-negative, got {variance}")
    std = math.sqrt(variance)
    clean_value = problem.value

    def sample(gen: np.random.Generator) -> float:
        return float(gen.normal(0.0, std)) if std > 0 else 0.0

    def value_at(x, y, xi) -> float:
        return clean_value(x, y) + xi

    grad_x = problem.analytic_grad_x
    grad_y = problem.analytic_grad_y
    return StochasticMinimaxProblem(
        d1=problem.d1,
        d2=problem.d2,
        sample=sample,
        value_at=value_at,
        constants=problem.constants,
        expected=problem,
        sample_grad_x=None if grad_x is None else (lambda x, y, xi: grad_x(x, y)),
        sample_grad_y=None if grad_y is None else (lambda x, y, xi: grad_y(x, y)),
        x_box=problem.x_box,
        y_ball=problem.y_ball,
        x_star=problem.x_star,
        reference_value=problem.reference_value,
        x0=problem.x0,
        y0=problem.y0,
        name=f"{problem.name}-noisy" if problem.name else "noisy",
    )
