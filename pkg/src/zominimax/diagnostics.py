"""Run traces, stationarity measurement, and estimator-quality statistics.

Stationarity of x is ||grad Phi(x)|| with Phi(x) = max_y f(x, y). When the
problem carries an analytic envelope gradient that is used directly;
otherwise y*(x) is approximated by gradient ascent in y (linear rate under
the inner curvature assumption) and ||grad_x f(x, y_hat)|| is reported. The
gap between the two is bounded by kappa * ||grad_y f(x, y_hat)||, so the
inner tolerance controls the measurement error.

All diagnostic oracle queries are metered on the aux channel so that
algorithm query counts stay comparable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DivergenceError, UnknownMetricError
from .estimators import sample_unit_sphere_batch, two_point_grad_y
from .metering import QueryMeter
from .problems import MinimaxProblem, StochasticMinimaxProblem, as_vector, project_ball
from .rng import ROLE_METRIC, RngStream, as_generator

# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class TraceRow:
    t: int
    queries: int
    aux_queries: int
    metrics: dict[str, float]


@dataclass
class RunTrace:
    """Per-iteration record of a single run.

    Invariants: t strictly increasing, queries non-decreasing, and every row
    carries the same metric keys (enforced on append).
    """

    metric_names: tuple[str, ...]
    seed: Optional[int] = None
    problem_id: str = ""
    config: dict = field(default_factory=dict)
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows:
            last = self.rows[-1]
            if row.t <= last.t:
                raise ValueError(f"trace t must increase: {last.t} -> {row.t}")
            if row.queries < last.queries:
                raise ValueError("trace queries must be non-decreasing")
        if tuple(row.metrics.keys()) != self.metric_names:
            raise ValueError(
                f"row metrics {tuple(row.metrics)} != trace metrics {self.metric_names}")
        self.rows.append(row)

    def metric(self, name: str) -> np.ndarray:
        if name == "t":
            return np.array([r.t for r in self.rows], dtype=float)
        if name == "queries":
            return np.array([r.queries for r in self.rows], dtype=float)
        if name == "aux_queries":
            return np.array([r.aux_queries for r in self.rows], dtype=float)
        if name not in self.metric_names:
            raise UnknownMetricError(name, self.metric_names)
        return np.array([r.metrics[name] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Stationarity


@dataclass(frozen=True)
class StationarityOptions:
    inner_iters: int = 500
    inner_tol: float = 1e-6
    step: Optional[float] = None  # default 1/l
    radius_guard: float = 1e8
    mu: float = 1e-6  # smoothing radius for the estimator fallback
    prefer_analytic: bool = True


@dataclass(frozen=True)
class StationarityReport:
    grad_phi_norm: float
    method: str  # "analytic" | "inner-ascent"
    inner_iterations: int
    queries_used: int


def _diagnostic_view(problem):
    """Deterministic view of a problem for measurement purposes."""
    if isinstance(problem, StochasticMinimaxProblem):
        if problem.expected is None:
            raise ConfigError(
                "stationarity of a stochastic problem needs a closed-form "
                "expectation; none is attached")
        return problem.expected
    return problem


def stationarity(problem, x, opts: StationarityOptions = StationarityOptions(),
                 y0=None, meter: Optional[QueryMeter] = None,
                 rng: Optional[RngStream] = None) -> StationarityReport:
    """Measure ||grad Phi(x)||, analytically when possible."""
    prob = _diagnostic_view(problem)
    x = as_vector(x, dim=prob.d1, name="x")
    meter = meter or QueryMeter()
    with meter.auxiliary():
        before = meter.aux
        if prob.phi_grad is not None and opts.prefer_analytic:
            norm = float(np.linalg.norm(prob.phi_grad(x)))
            return StationarityReport(norm, "analytic", 0, meter.aux - before)
        y = np.zeros(prob.d2) if y0 is None else as_vector(y0, dim=prob.d2, name="y0")
        step = opts.step if opts.step is not None else 1.0 / prob.constants.l
        value = meter.wrap_value(prob.value)
        if prob.analytic_grad_y is not None:
            grad_y = prob.analytic_grad_y
        else:
            if rng is None:
                raise ConfigError("estimator-based inner ascent needs an rng")
            gen = rng.generator()

            def grad_y(xx, yy):
                v = sample_unit_sphere_batch(prob.d2, 1, gen)[0]
                return two_point_grad_y(value, xx, yy, opts.mu, v)

        iterations = 0
        for k in range(opts.inner_iters):
            g = grad_y(x, y)
            if float(np.linalg.norm(g)) <= opts.inner_tol:
                break
            y = y + step * g
            y = prob.project_y(y)
            iterations = k + 1
            if float(np.linalg.norm(y)) > opts.radius_guard:
                raise DivergenceError(
                    f"inner ascent diverged: ||y||={np.linalg.norm(y):.3e} "
                    f"exceeded guard {opts.radius_guard:.3e}", t=iterations)
        if prob.analytic_grad_x is not None:
            gx = prob.analytic_grad_x(x, y)
        else:
            if rng is None:
                raise ConfigError("estimator-based stationarity needs an rng")
            gen = rng.child(1).generator()
            dirs = sample_unit_sphere_batch(prob.d1, 256, gen)
            acc = np.zeros(prob.d1)
            base = value(x, y)
            for u in dirs:
                xs = x + opts.mu * u
                acc += (prob.d1 * (value(xs, y) - base) / opts.mu) * u
            gx = acc / len(dirs)
        norm = float(np.linalg.norm(gx))
        return StationarityReport(norm, "inner-ascent", iterations, meter.aux - before)


def _phi_at(problem, x, opts: StationarityOptions, meter: QueryMeter, y0=None) -> float:
    prob = _diagnostic_view(problem)
    if prob.phi_value is not None:
        return float(prob.phi_value(x))
    # Reuse the ascent machinery to locate y_hat, then evaluate f there.
    y = np.zeros(prob.d2) if y0 is None else as_vector(y0, dim=prob.d2)
    step = opts.step if opts.step is not None else 1.0 / prob.constants.l
    if prob.analytic_grad_y is None:
        raise ConfigError("potential needs phi_value or analytic_grad_y")
    with meter.auxiliary():
        for _ in range(opts.inner_iters):
            g = prob.analytic_grad_y(x, y)
            if float(np.linalg.norm(g)) <= opts.inner_tol:
                break
            y = prob.project_y(y + step * g)
        value = meter.wrap_value(prob.value)
        return float(value(x, y))


def potential_v(problem, x, y, opts: StationarityOptions = StationarityOptions(),
                meter: Optional[QueryMeter] = None) -> float:
    """Lyapunov quantity (3/2) Phi(x) - (1/2) f(x, y); always >= Phi(x)."""
    prob = _diagnostic_view(problem)
    x = as_vector(x, dim=prob.d1, name="x")
    y = as_vector(y, dim=prob.d2, name="y")
    meter = meter or QueryMeter()
    phi = _phi_at(prob, x, opts, meter, y0=y)
    with meter.auxiliary():
        f_xy = meter.wrap_value(prob.value)(x, y)
    return 1.5 * phi - 0.5 * float(f_xy)


# ---------------------------------------------------------------------------
# Monte-Carlo reference for the smoothed gradient


def smoothed_grad_reference(value, x, y, mu: float, block: str, n_samples: int,
                            rng) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo mean of n single-draw two-point estimates, with its SE.

    Returns (mean, standard_error) per coordinate. The base value f(x, y)
    is evaluated once and reused across draws, which is exact for a pure
    oracle and keeps the cost at n + 1 queries.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if block not in ("x", "y"):
        raise ValueError(f"block must be 'x' or 'y', got {block!r}")
    gen = as_generator(rng)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dim = x.shape[0] if block == "x" else y.shape[0]
    base = float(value(x, y))
    total = np.zeros(dim)
    total_sq = np.zeros(dim)
    chunk = 8192
    done = 0
    while done < n_samples:
        r = min(chunk, n_samples - done)
        dirs = sample_unit_sphere_batch(dim, r, gen)
        if block == "x":
            points = x[None, :] + mu * dirs
            vals = np.array([value(points[i], y) for i in range(r)])
        else:
            points = y[None, :] + mu * dirs
            vals = np.array([value(x, points[i]) for i in range(r)])
        est = (dim * (vals - base) / mu)[:, None] * dirs
        total += est.sum(axis=0)
        total_sq += (est * est).sum(axis=0)
        done += r
    mean = total / n_samples
    if n_samples > 1:
        var = (total_sq - n_samples * mean * mean) / (n_samples - 1)
        se = np.sqrt(np.maximum(var, 0.0) / n_samples)
    else:
        se = np.full(dim, np.inf)
    return mean, se


@dataclass(frozen=True)
class EstimatorStats:
    mean: np.ndarray
    cov_trace: float
    second_moment: float
    n_reps: int


def estimator_stats(draw: Callable[[np.random.Generator], np.ndarray],
                    n_reps: int, rng) -> EstimatorStats:
    """Sample mean, covariance trace (Bessel), and E||.||^2 over draws."""
    if n_reps < 2:
        raise ValueError(f"n_reps must be >= 2, got {n_reps}")
    gen = as_generator(rng)
    draws = np.array([np.asarray(draw(gen), dtype=float) for _ in range(n_reps)])
    mean = draws.mean(axis=0)
    centered = draws - mean
    cov_trace = float((centered * centered).sum() / (n_reps - 1))
    second_moment = float((draws * draws).sum(axis=1).mean())
    return EstimatorStats(mean=mean, cov_trace=cov_trace,
                          second_moment=second_moment, n_reps=n_reps)


# ---------------------------------------------------------------------------
# Regret for the robust polynomial family


@dataclass(frozen=True)
class RegretOptions:
    starts: int = 16
    iters: int = 600
    step: float = 5e-4
    tol: float = 1e-10


@dataclass(frozen=True)
class RegretReport:
    regret: float
    inner_min: float  # min over the ball, original orientation
    converged: bool


def _inner_min_original(problem: MinimaxProblem, x, opts: RegretOptions,
                        rng) -> tuple[float, bool]:
    """min over the y-ball of the original-orientation objective at x.

    The library problem stores the negated objective, so this maximizes the
    stored value by projected gradient ascent from multiple starts and
    negates the best value found. The inner landscape is nonconvex
    (degree 6), hence the multi-start.
    """
    if problem.y_ball is None or problem.analytic_grad_y is None:
        raise ConfigError("regret needs a y-ball constraint and analytic_grad_y")
    ball = problem.y_ball
    gen = as_generator(rng)
    starts = [np.zeros(problem.d2)]
    # Uniform starts in the ball via rejection from the bounding box.
    while len(starts) < opts.starts:
        cand = gen.uniform(-ball.radius, ball.radius, size=problem.d2)
        if float(np.linalg.norm(cand)) <= ball.radius:
            starts.append(ball.center + cand)
    best = -math.inf
    converged = False
    for y in starts:
        prev = -math.inf
        for _ in range(opts.iters):
            g = problem.analytic_grad_y(x, y)
            y = project_ball(y + opts.step * g, ball.center, ball.radius)
            cur = problem.value(x, y)
            if abs(cur - prev) <= opts.tol:
                converged = True
                break
            prev = cur
        val = float(problem.value(x, y))
        if val > best:
            best = val
    return -best, converged


def regret(problem: MinimaxProblem, x, opts: RegretOptions = RegretOptions(),
           rng: Optional[RngStream] = None,
           meter: Optional[QueryMeter] = None) -> RegretReport:
    """Reference optimal inner value minus the inner minimum at x.

    Zero at the reference solution; positive elsewhere (up to inner-solver
    tolerance). Requires the problem to carry ``reference_value``.
    """
    if problem.reference_value is None:
        raise ConfigError("problem carries no reference value for regret")
    x = as_vector(x, dim=problem.d1, name="x")
    rng = rng or RngStream(0)
    meter = meter or QueryMeter()
    with meter.auxiliary():
        prob = _diagnostic_view(problem)
        metered = replace_value_with_meter(prob, meter)
        inner_min, converged = _inner_min_original(metered, x, opts, rng)
    return RegretReport(regret=float(problem.reference_value) - inner_min,
                        inner_min=inner_min, converged=converged)


def replace_value_with_meter(problem: MinimaxProblem, meter: QueryMeter) -> MinimaxProblem:
    return replace(problem, value=meter.wrap_value(problem.value))


# ---------------------------------------------------------------------------
# Metrics catalog and the trace recorder used by the run loops

METRIC_NAMES = ("dist_to_opt", "grad_phi_norm", "grad_x_norm", "grad_y_norm",
                "potential_v", "regret", "value")


def compute_metric(name: str, problem, x, y, *, meter: QueryMeter,
                   rng: RngStream, stationarity_opts: StationarityOptions,
                   regret_opts: RegretOptions) -> float:
    prob = _diagnostic_view(problem)
    if name == "dist_to_opt":
        if problem.x_star is None:
            raise ConfigError(f"problem {problem.name!r} has no known x*")
        return float(np.linalg.norm(x - problem.x_star))
    if name == "grad_phi_norm":
        return stationarity(problem, x, stationarity_opts, y0=y, meter=meter,
                            rng=rng).grad_phi_norm
    if name == "grad_x_norm":
        if prob.analytic_grad_x is None:
            raise ConfigError("grad_x_norm needs an analytic gradient")
        return float(np.linalg.norm(prob.analytic_grad_x(x, y)))
    if name == "grad_y_norm":
        if prob.analytic_grad_y is None:
            raise ConfigError("grad_y_norm needs an analytic gradient")
        return float(np.linalg.norm(prob.analytic_grad_y(x, y)))
    if name == "potential_v":
        return potential_v(problem, x, y, stationarity_opts, meter=meter)
    if name == "regret":
        base = prob if isinstance(problem, StochasticMinimaxProblem) else problem
        return regret(base, x, regret_opts, rng=rng, meter=meter).regret
    if name == "value":
        with meter.auxiliary():
            return float(meter.wrap_value(prob.value)(x, y))
    raise UnknownMetricError(name, METRIC_NAMES)


class TraceRecorder:
    """Builds a RunTrace during a run and fans out to an optional callback.

    The callback receives (t, x, y, metrics) after each recorded row and
    must not mutate its arguments.
    """

    def __init__(self, problem, metrics=(), record_every: int = 1,
                 meter: Optional[QueryMeter] = None,
                 rng: Optional[RngStream] = None,
                 stationarity_opts: StationarityOptions = StationarityOptions(),
                 regret_opts: RegretOptions = RegretOptions(),
                 callback=None, seed: Optional[int] = None,
                 config: Optional[dict] = None, problem_id: str = ""):
        if record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {record_every}")
        for m in metrics:
            if m not in METRIC_NAMES:
                raise UnknownMetricError(m, METRIC_NAMES)
        self.problem = problem
        self.metrics = tuple(metrics)
        self.record_every = record_every
        self.meter = meter or QueryMeter()
        self.rng = rng or RngStream(0, (ROLE_METRIC,))
        self.stationarity_opts = stationarity_opts
        self.regret_opts = regret_opts
        self.callback = callback
        self.trace = RunTrace(metric_names=self.metrics, seed=seed,
                              problem_id=problem_id or getattr(problem, "name", ""),
                              config=dict(config or {}))

    def record(self, t: int, x, y) -> None:
        values = {}
        for name in self.metrics:
            values[name] = compute_metric(
                name, self.problem, x, y, meter=self.meter,
                rng=self.rng.child(t), stationarity_opts=self.stationarity_opts,
                regret_opts=self.regret_opts)
        self.trace.append(TraceRow(t=t, queries=self.meter.algorithm,
                                   aux_queries=self.meter.aux, metrics=values))
        if self.callback is not None:
            self.callback(t, x, y, dict(values))

    def maybe_record(self, t: int, x, y, force: bool = False) -> None:
        if self.trace.rows and self.trace.rows[-1].t == t:
            return
        if force or t % self.record_every == 0:
            self.record(t, x, y)
