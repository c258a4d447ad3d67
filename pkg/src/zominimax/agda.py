"""Alternating descent/ascent with two-point gradient estimates (ZO-AGDA).

One iteration performs, in order,

    x_{t+1} = P_X( x_t - alpha * s_t ),   s_t estimating grad_x f(x_t, y_t)
    y_{t+1} = P_Y( y_t + beta  * w_t ),   w_t estimating grad_y f(x_{t+1}, y_t)

with fresh sphere directions u_t, v_t each step. The y step sees the
already-updated x_{t+1}; that alternation is what distinguishes the scheme
from simultaneous descent/ascent. Each iteration costs exactly 4 value
queries.

``derive_agda_params`` instantiates the guarantee-backed schedule: with
L = l + l^2/(2 mu) and kappa = l/mu,

    beta  = 1 / (4 d2 L)
    alpha = min( beta / (32 kappa^2), 1 / (10 d1 L) )
    theta1 = (5 d1 L + 3/(2 alpha) + (3/2) L + d2 L) * d1^2 L^2 alpha^2
    mu1   = sqrt(alpha) * eps / (2 sqrt(theta1))
    mu2   = sqrt(alpha) * eps / (sqrt(3 beta) * d2 * L)

taking the step-size bounds at their maxima; callers may override.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import TraceRecorder, stationarity
from .errors import ConfigError, DivergenceError
from .estimators import SmoothingParams, sample_unit_sphere, two_point_grad_x, two_point_grad_y
from .metering import QueryMeter
from .problems import ProblemConstants, StochasticMinimaxProblem, as_vector
from .rng import ROLE_X_DIRECTION, ROLE_X_SAMPLE, ROLE_Y_DIRECTION, ROLE_Y_SAMPLE, RngStream


@dataclass(frozen=True)
class AgdaConfig:
    alpha: float
    beta: float
    smoothing: SmoothingParams
    max_iter: int
    target_eps: float = 0.0  # 0 = run to max_iter
    projection_enabled: bool = True
    check_every: int = 100  # stationarity-check cadence when target_eps > 0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.target_eps < 0:
            raise ConfigError(f"target_eps must be >= 0, got {self.target_eps}")
        if self.check_every < 1:
            raise ConfigError(f"check_every must be >= 1, got {self.check_every}")


@dataclass(frozen=True)
class AgdaState:
    t: int
    x: np.ndarray
    y: np.ndarray
    last_s: np.ndarray  # most recent x-block estimate
    last_w: np.ndarray  # most recent y-block estimate


def derive_agda_params(constants: ProblemConstants, d1: int, d2: int, eps: float,
                       max_iter: int = 10 ** 6, target_eps: Optional[float] = None,
                       projection_enabled: bool = True, check_every: int = 100) -> AgdaConfig:
    """Step sizes and smoothing radii for a target accuracy eps."""
    if not (eps > 0 and math.isfinite(eps)):
        raise ConfigError(f"eps must be positive, got {eps}")
    if d1 < 1 or d2 < 1:
        raise ConfigError(f"dimensions must be positive, got d1={d1}, d2={d2}")
    L = constants.L
    kappa = constants.kappa
    beta = 1.0 / (4.0 * d2 * L)
    alpha = min(beta / (32.0 * kappa ** 2), 1.0 / (10.0 * d1 * L))
    theta1 = (5.0 * d1 * L + 3.0 / (2.0 * alpha) + 1.5 * L + d2 * L) \
        * d1 ** 2 * L ** 2 * alpha ** 2
    mu1 = math.sqrt(alpha) * eps / (2.0 * math.sqrt(theta1))
    mu2 = math.sqrt(alpha) * eps / (math.sqrt(3.0 * beta) * d2 * L)
    for name, v in (("alpha", alpha), ("beta", beta), ("mu1", mu1), ("mu2", mu2)):
        if not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"derived {name}={v!r} is not positive and finite; "
                              "constants are too extreme for this schedule")
    return AgdaConfig(alpha=alpha, beta=beta, smoothing=SmoothingParams(mu1, mu2),
                      max_iter=max_iter,
                      target_eps=eps if target_eps is None else target_eps,
                      projection_enabled=projection_enabled, check_every=check_every)


def _step_oracles(problem, t: int, rng: RngStream, meter: Optional[QueryMeter]):
    """Per-step value oracles for the two blocks.

    Deterministic problems expose their oracle directly. Stochastic problems
    get one fresh sample per block, shared by the two evaluation points of
    that block's difference (the single-sample minibatch convention).
    """
    if isinstance(problem, StochasticMinimaxProblem):
        value_at = problem.value_at if meter is None else meter.wrap_value_at(problem.value_at)
        xi_x = problem.sample(rng.child(t, ROLE_X_SAMPLE).generator())
        xi_y = problem.sample(rng.child(t, ROLE_Y_SAMPLE).generator())
        return (lambda x, y: value_at(x, y, xi_x)), (lambda x, y: value_at(x, y, xi_y))
    value = problem.value if meter is None else meter.wrap_value(problem.value)
    return value, value


def agda_step(problem, state: AgdaState, config: AgdaConfig, rng: RngStream,
              meter: Optional[QueryMeter] = None) -> AgdaState:
    """One alternating update; consumes exactly 4 value queries."""
    t = state.t
    f_x, f_y = _step_oracles(problem, t, rng, meter)
    u = sample_unit_sphere(problem.d1, rng.child(t, ROLE_X_DIRECTION))
    s = two_point_grad_x(f_x, state.x, state.y, config.smoothing.mu1, u)
    x_next = state.x - config.alpha * s
    if config.projection_enabled:
        x_next = problem.project_x(x_next)
    v = sample_unit_sphere(problem.d2, rng.child(t, ROLE_Y_DIRECTION))
    w = two_point_grad_y(f_y, x_next, state.y, config.smoothing.mu2, v)
    y_next = state.y + config.beta * w
    if config.projection_enabled:
        y_next = problem.project_y(y_next)
    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(y_next))):
        raise DivergenceError(
            f"iterate became non-finite at t={t}: x={x_next!r}, y={y_next!r}", t=t)
    return AgdaState(t=t + 1, x=x_next, y=y_next, last_s=s, last_w=w)


def _run_loop(problem, config, rng, recorder, step_fn, x0, y0):
    x, y = problem.start_point()
    if x0 is not None:
        x = as_vector(x0, dim=problem.d1, name="x0")
    if y0 is not None:
        y = as_vector(y0, dim=problem.d2, name="y0")
    state = AgdaState(t=0, x=x, y=y,
                      last_s=np.zeros(problem.d1), last_w=np.zeros(problem.d2))
    recorder.maybe_record(0, state.x, state.y, force=True)
    try:
        for _ in range(config.max_iter):
            state = step_fn(state)
            recorder.maybe_record(state.t, state.x, state.y)
            if config.target_eps > 0 and state.t % config.check_every == 0:
                report = stationarity(problem, state.x, y0=state.y,
                                      meter=recorder.meter,
                                      opts=recorder.stationarity_opts)
                if report.grad_phi_norm <= config.target_eps:
                    break
    except DivergenceError as err:
        recorder.maybe_record(state.t, state.x, state.y, force=True)
        err.trace = recorder.trace
        raise
    recorder.maybe_record(state.t, state.x, state.y, force=True)
    return recorder.trace


def run_agda(problem, config: AgdaConfig, rng: RngStream,
             recorder: Optional[TraceRecorder] = None,
             x0=None, y0=None):
    """Iterate agda_step until max_iter or measured stationarity <= target."""
    recorder = recorder or TraceRecorder(problem)
    step = lambda state: agda_step(problem, state, config, rng, recorder.meter)
    return _run_loop(problem, config, rng, recorder, step, x0, y0)


def run_fo_agda(problem, alpha: float, beta: float, max_iter: int, rng: RngStream,
                recorder: Optional[TraceRecorder] = None,
                x0=None, y0=None, projection_enabled: bool = True):
    """First-order alternating baseline using analytic gradients.

    Deterministic problems use their exact gradients; stochastic problems use
    single-sample gradients with one fresh sample per block per iteration.
    Consumes no value queries.
    """
    stochastic = isinstance(problem, StochasticMinimaxProblem)
    if stochastic:
        if problem.sample_grad_x is None or problem.sample_grad_y is None:
            raise ConfigError("first-order baseline needs per-sample gradients")
    elif problem.analytic_grad_x is None or problem.analytic_grad_y is None:
        raise ConfigError("first-order baseline needs analytic gradients")
    config = AgdaConfig(alpha=alpha, beta=beta, smoothing=SmoothingParams(1.0, 1.0),
                        max_iter=max_iter, projection_enabled=projection_enabled)
    recorder = recorder or TraceRecorder(problem)

    def step(state: AgdaState) -> AgdaState:
        t = state.t
        if stochastic:
            xi_x = problem.sample(rng.child(t, ROLE_X_SAMPLE).generator())
            gx = problem.sample_grad_x(state.x, state.y, xi_x)
        else:
            gx = problem.analytic_grad_x(state.x, state.y)
        x_next = state.x - alpha * gx
        if projection_enabled:
            x_next = problem.project_x(x_next)
        if stochastic:
            xi_y = problem.sample(rng.child(t, ROLE_Y_SAMPLE).generator())
            gy = problem.sample_grad_y(x_next, state.y, xi_y)
        else:
            gy = problem.analytic_grad_y(x_next, state.y)
        y_next = state.y + beta * gy
        if projection_enabled:
            y_next = problem.project_y(y_next)
        if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(y_next))):
            raise DivergenceError(
                f"iterate became non-finite at t={t}: x={x_next!r}, y={y_next!r}", t=t)
        return AgdaState(t=t + 1, x=x_next, y=y_next, last_s=gx, last_w=gy)

    return _run_loop(problem, config, rng, recorder, step, x0, y0)
