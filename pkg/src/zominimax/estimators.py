"""Two-point gradient estimators along uniform unit-sphere directions.

For a direction u uniform on the unit sphere of R^{d1}, the x-block estimate

    g_x = d1 * (f(x + mu1 * u, y) - f(x, y)) / mu1 * u

is an unbiased estimate of grad_x of the smoothed function
f_mu1(x, y) = E_u f(x + mu1 * u, y), and analogously for the y block with
its own radius mu2 and direction v. Each single-sample estimate costs
exactly two oracle queries; a batch of r samples costs 2r.

Minibatch estimators take their directions as explicit arguments instead of
drawing internally: the variance-reduced recursion must evaluate the same
sample xi_i with the same direction u_i at two different points, and that
coupling is only possible when the caller owns the directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, OracleError
from .rng import as_generator

_UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing radii for the two blocks: mu1 for x, mu2 for y."""

    mu1: float
    mu2: float

    def __post_init__(self):
        for name, v in (("mu1", self.mu1), ("mu2", self.mu2)):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class DirectionBatch:
    """A stack of unit directions, one per row."""

    directions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.directions, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"directions must be 2-D, got shape {arr.shape}")
        norms = np.linalg.norm(arr, axis=1)
        if not np.all(np.abs(norms - 1.0) <= _UNIT_NORM_TOL):
            worst = float(np.max(np.abs(norms - 1.0)))
            raise ValueError(f"directions are not unit length (max deviation {worst:.3e})")
        object.__setattr__(self, "directions", arr)

    @classmethod
    def draw(cls, dim: int, r: int, rng) -> "DirectionBatch":
        return cls(sample_unit_sphere_batch(dim, r, rng))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]

    def __iter__(self):
        return iter(self.directions)


def sample_unit_sphere(dim: int, rng) -> np.ndarray:
    """One draw from the uniform distribution on the unit sphere of R^dim.

    Implemented as a normalized isotropic Gaussian; the zero vector is
    redrawn (a probability-zero event, guarded anyway).
    """
    return sample_unit_sphere_batch(dim, 1, rng)[0]


def sample_unit_sphere_batch(dim: int, n: int, rng) -> np.ndarray:
    """n independent uniform unit directions, stacked as an (n, dim) array."""
    if dim < 1:
        raise DimensionMismatchError(f"dim must be >= 1, got {dim}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = as_generator(rng)
    out = gen.standard_normal((n, dim))
    norms = np.linalg.norm(out, axis=1)
    while np.any(norms == 0.0):  # pragma: no cover - probability-zero guard
        bad = norms == 0.0
        out[bad] = gen.standard_normal((int(np.sum(bad)), dim))
        norms = np.linalg.norm(out, axis=1)
    return out / norms[:, None]


def _checked(value, x, y) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise OracleError(f"oracle returned non-finite value {v!r}", x=x, y=y, value=v)
    return v


def two_point_grad_x(value, x, y, mu1: float, u: np.ndarray) -> np.ndarray:
    """Single-sample x-block estimate d1 (f(x+mu1 u, y) - f(x, y)) / mu1 * u.

    Consumes exactly 2 oracle queries.
    """
    d1 = x.shape[0]
    f_shift = _checked(value(x + mu1 * u, y), x + mu1 * u, y)
    f_base = _checked(value(x, y), x, y)
    return (d1 * (f_shift - f_base) / mu1) * u


def two_point_grad_y(value, x, y, mu2: float, v: np.ndarray) -> np.ndarray:
    """Single-sample y-block estimate d2 (f(x, y+mu2 v) - f(x, y)) / mu2 * v."""
    d2 = y.shape[0]
    f_shift = _checked(value(x, y + mu2 * v), x, y + mu2 * v)
    f_base = _checked(value(x, y), x, y)
    return (d2 * (f_shift - f_base) / mu2) * v


def two_point_grad_x_batch(value_at, x, y, mu1: float, samples, directions: DirectionBatch) -> np.ndarray:
    """Average of per-sample x-block estimates over paired (xi_i, u_i).

    Each term evaluates G at (x + mu1 u_i, y) and (x, y) with the same xi_i,
    so additive sample noise cancels within the difference. Costs
    2 * len(samples) queries.
    """
    if len(samples) != len(directions):
        raise DimensionMismatchError(
            f"got {len(samples)} samples but {len(directions)} directions")
    if len(samples) < 1:
        raise ValueError("batch must contain at least one sample")
    d1 = x.shape[0]
    acc = np.zeros(d1)
    for xi, u in zip(samples, directions):
        xs = x + mu1 * u
        f_shift = _checked(value_at(xs, y, xi), xs, y)
        f_base = _checked(value_at(x, y, xi), x, y)
        acc += (d1 * (f_shift - f_base) / mu1) * u
    return acc / len(samples)


def two_point_grad_y_batch(value_at, x, y, mu2: float, samples, directions: DirectionBatch) -> np.ndarray:
    """y-block counterpart of :func:`two_point_grad_x_batch`."""
    if len(samples) != len(directions):
        raise DimensionMismatchError(
            f"got {len(samples)} samples but {len(directions)} directions")
    if len(samples) < 1:
        raise ValueError("batch must contain at least one sample")
    d2 = y.shape[0]
    acc = np.zeros(d2)
    for xi, v in zip(samples, directions):
        ys = y + mu2 * v
        f_shift = _checked(value_at(x, ys, xi), x, ys)
        f_base = _checked(value_at(x, y, xi), x, y)
        acc += (d2 * (f_shift - f_base) / mu2) * v
    return acc / len(samples)
