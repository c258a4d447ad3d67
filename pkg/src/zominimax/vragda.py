"""Variance-reduced alternating descent/ascent for stochastic problems
(ZO-VRAGDA).

The running estimators m_t (x block) and n_t (y block) are rebuilt from a
large batch of B samples whenever t is a multiple of the epoch length q
(t = 0 counts), and otherwise advanced by a coupled-difference recursion on
a small batch of b samples:

    m_t = est_x(x_t, y_t; I_t) - est_x(x_{t-1}, y_{t-1}; I_t) + m_{t-1}
    x_{t+1} = P_X( x_t - alpha * m_t )
    n_t = est_y(x_{t+1}, y_t; J_t) - est_y(x_t, y_{t-1}; J_t) + n_{t-1}
    y_{t+1} = P_Y( y_t + beta * n_t )

Inside one recursion step the two batch evaluations share both the samples
and the sphere directions; the coupling is what makes the difference small
when consecutive iterates are close. The y block always sees the
already-updated x_{t+1} in its fresh term (alternating order), and draws its
samples from a stream disjoint from the x block's.

Query cost per block: 2B at an epoch boundary, 4b otherwise.

``derive_vragda_params`` instantiates the guarantee-backed schedule: with
Lbar = l + l^2/(2 mu) and kappa = l/mu,

    C    = Lbar * (1 + 30 d1 + 6 d2 + 36 d1 d2)
    beta  = 1 / C,  alpha = beta / (16 kappa^2)
    q = b = ceil(kappa / eps)
    B     = ceil((40 + 128 kappa^2) sigma^2 / eps^2)   (capped, see below)
    mu1   = eps / sqrt(35 d1^2 Lbar^2 + 576 kappa^2 d1^2 d2 Lbar^2)
    mu2   = eps / sqrt(112 kappa^2 d2^2 Lbar^2)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .agda import AgdaState, _run_loop  # shared run-loop plumbing
from .diagnostics import TraceRecorder
from .errors import ConfigError, DivergenceError
from .estimators import (
    DirectionBatch,
    SmoothingParams,
    two_point_grad_x_batch,
    two_point_grad_y_batch,
)
from .metering import QueryMeter
from .problems import ProblemConstants, StochasticMinimaxProblem
from .rng import ROLE_X_DIRECTION, ROLE_X_SAMPLE, ROLE_Y_DIRECTION, ROLE_Y_SAMPLE, RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VragdaConfig:
    alpha: float
    beta: float
    smoothing: SmoothingParams
    q: int  # epoch length
    B: int  # full-batch size at epoch boundaries
    b: int  # small-batch size in the recursion
    max_iter: int
    target_eps: float = 0.0
    projection_enabled: bool = True
    check_every: int = 100

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must be positive, got {self.beta}")
        for name, v in (("q", self.q), ("B", self.B), ("b", self.b)):
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.B < self.b:
            raise ConfigError(f"B={self.B} must be >= b={self.b}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.check_every < 1:
            raise ConfigError(f"check_every must be >= 1, got {self.check_every}")


@dataclass(frozen=True)
class VragdaState:
    """Iterates and running estimators at the start of iteration t.

    x = x_t, y = y_t, x_prev = x_{t-1}, y_prev = y_{t-1}, m = m_{t-1},
    n = n_{t-1}. The x update advances x/x_prev/m; the y update advances
    y/y_prev/n and the iteration counter.
    """

    t: int
    x: np.ndarray
    y: np.ndarray
    x_prev: Optional[np.ndarray] = None
    y_prev: Optional[np.ndarray] = None
    m: Optional[np.ndarray] = None
    n: Optional[np.ndarray] = None

    def epoch_index(self, q: int) -> int:
        """Epoch number ceil(t / q); restarts happen when t % q == 0."""
        return -(-self.t // q)


def derive_vragda_params(constants: ProblemConstants, d1: int, d2: int, eps: float,
                         max_iter: int = 10 ** 6, max_batch: int = 10 ** 5,
                         target_eps: float = 0.0, projection_enabled: bool = True,
                         check_every: int = 100) -> VragdaConfig:
    """Theory-backed schedule for target accuracy eps. Needs sigma."""
    if not (eps > 0 and math.isfinite(eps)):
        raise ConfigError(f"eps must be positive, got {eps}")
    if d1 < 1 or d2 < 1:
        raise ConfigError(f"dimensions must be positive, got d1={d1}, d2={d2}")
    if constants.sigma is None:
        raise ConfigError("stochastic schedule needs constants.sigma")
    Lb = constants.L
    kappa = constants.kappa
    C = Lb * (1.0 + 30.0 * d1 + 6.0 * d2 + 36.0 * d1 * d2)
    beta = 1.0 / C
    alpha = beta / (16.0 * kappa ** 2)
    q = max(1, math.ceil(kappa / eps))
    b = q
    B_raw = math.ceil((40.0 + 128.0 * kappa ** 2) * constants.sigma ** 2 / eps ** 2)
    B = max(1, min(B_raw, max_batch))
    if B < B_raw:
        logger.warning(
            "full-batch size capped: schedule asked for B=%d, using max_batch=%d; "
            "the variance guarantee degrades accordingly", B_raw, max_batch)
    B = max(B, b)
    mu1 = eps / math.sqrt(35.0 * d1 ** 2 * Lb ** 2 + 576.0 * kappa ** 2 * d1 ** 2 * d2 * Lb ** 2)
    mu2 = eps / math.sqrt(112.0 * kappa ** 2 * d2 ** 2 * Lb ** 2)
    for name, v in (("alpha", alpha), ("beta", beta), ("mu1", mu1), ("mu2", mu2)):
        if not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"derived {name}={v!r} is not positive and finite")
    return VragdaConfig(alpha=alpha, beta=beta, smoothing=SmoothingParams(mu1, mu2),
                        q=q, B=B, b=b, max_iter=max_iter, target_eps=target_eps,
                        projection_enabled=projection_enabled, check_every=check_every)


def _draw_batch(problem, t: int, rng: RngStream, size: int, sample_role: int,
                direction_role: int, dim: int):
    gen = rng.child(t, sample_role).generator()
    samples = [problem.sample(gen) for _ in range(size)]
    directions = DirectionBatch.draw(dim, size, rng.child(t, direction_role))
    return samples, directions


def vragda_x_update(problem: StochasticMinimaxProblem, state: VragdaState,
                    config: VragdaConfig, rng: RngStream,
                    meter: Optional[QueryMeter] = None) -> VragdaState:
    """Advance the x block: compute m_t and x_{t+1}."""
    t = state.t
    value_at = problem.value_at if meter is None else meter.wrap_value_at(problem.value_at)
    mu1 = config.smoothing.mu1
    if t % config.q == 0:
        samples, dirs = _draw_batch(problem, t, rng, config.B,
                                    ROLE_X_SAMPLE, ROLE_X_DIRECTION, problem.d1)
        m = two_point_grad_x_batch(value_at, state.x, state.y, mu1, samples, dirs)
    else:
        if state.m is None or state.x_prev is None or state.y_prev is None:
            raise ConfigError(f"recursion at t={t} requires previous iterates and m")
        samples, dirs = _draw_batch(problem, t, rng, config.b,
                                    ROLE_X_SAMPLE, ROLE_X_DIRECTION, problem.d1)
        fresh = two_point_grad_x_batch(value_at, state.x, state.y, mu1, samples, dirs)
        stale = two_point_grad_x_batch(value_at, state.x_prev, state.y_prev, mu1,
                                       samples, dirs)
        m = fresh - stale + state.m
    x_next = state.x - config.alpha * m
    if config.projection_enabled:
        x_next = problem.project_x(x_next)
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError(f"x iterate became non-finite at t={t}", t=t)
    return replace(state, x=x_next, x_prev=state.x, m=m)


def vragda_y_update(problem: StochasticMinimaxProblem, state: VragdaState,
                    config: VragdaConfig, rng: RngStream,
                    meter: Optional[QueryMeter] = None) -> VragdaState:
    """Advance the y block; requires x already advanced this iteration.

    The fresh term is evaluated at (x_{t+1}, y_t) and the stale term at
    (x_t, y_{t-1}); samples come from a stream disjoint from the x block's.
    """
    t = state.t
    value_at = problem.value_at if meter is None else meter.wrap_value_at(problem.value_at)
    mu2 = config.smoothing.mu2
    x_new, x_old = state.x, state.x_prev  # x_{t+1} and x_t
    if t % config.q == 0:
        samples, dirs = _draw_batch(problem, t, rng, config.B,
                                    ROLE_Y_SAMPLE, ROLE_Y_DIRECTION, problem.d2)
        n = two_point_grad_y_batch(value_at, x_new, state.y, mu2, samples, dirs)
    else:
        if state.n is None or state.y_prev is None or x_old is None:
            raise ConfigError(f"recursion at t={t} requires previous iterates and n")
        samples, dirs = _draw_batch(problem, t, rng, config.b,
                                    ROLE_Y_SAMPLE, ROLE_Y_DIRECTION, problem.d2)
        fresh = two_point_grad_y_batch(value_at, x_new, state.y, mu2, samples, dirs)
        stale = two_point_grad_y_batch(value_at, x_old, state.y_prev, mu2,
                                       samples, dirs)
        n = fresh - stale + state.n
    y_next = state.y + config.beta * n
    if config.projection_enabled:
        y_next = problem.project_y(y_next)
    if not np.all(np.isfinite(y_next)):
        raise DivergenceError(f"y iterate became non-finite at t={t}", t=t)
    return replace(state, t=t + 1, y=y_next, y_prev=state.y, n=n)


def run_vragda(problem: StochasticMinimaxProblem, config: VragdaConfig,
               rng: RngStream, recorder: Optional[TraceRecorder] = None,
               x0=None, y0=None):
    """Run the variance-reduced loop; returns the recorded trace."""
    if not isinstance(problem, StochasticMinimaxProblem):
        raise ConfigError("variance-reduced solver requires a stochastic problem")
    recorder = recorder or TraceRecorder(problem)
    box = {"state": None}

    def step(agda_state: AgdaState) -> AgdaState:
        state = box["state"]
        if state is None:
            state = VragdaState(t=agda_state.t, x=agda_state.x, y=agda_state.y)
        state = vragda_x_update(problem, state, config, rng, recorder.meter)
        state = vragda_y_update(problem, state, config, rng, recorder.meter)
        box["state"] = state
        return AgdaState(t=state.t, x=state.x, y=state.y,
                         last_s=state.m, last_w=state.n)

    return _run_loop(problem, config, rng, recorder, step, x0, y0)
