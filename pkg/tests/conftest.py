import numpy as np
import pytest

from zominimax import MinimaxProblem, ProblemConstants, StochasticMinimaxProblem


@pytest.fixture
def scalar_quadratic():
    from zominimax import scalar_pl_quadratic
    return scalar_pl_quadratic()


def make_recording_value(value):
    """Wrap a (x, y) oracle so every query point is captured."""
    calls = []

    def wrapped(x, y):
        calls.append((np.array(x, copy=True), np.array(y, copy=True)))
        return value(x, y)

    return wrapped, calls


def make_constant_stochastic(c: float = 3.25, d1: int = 2, d2: int = 2):
    """Stochastic problem whose value is constant: every two-point estimate
    vanishes, so iterates stay frozen and recursions cancel exactly."""
    return StochasticMinimaxProblem(
        d1=d1, d2=d2,
        sample=lambda gen: float(gen.standard_normal()),
        value_at=lambda x, y, xi: c,
        constants=ProblemConstants(l=1.0, mu_pl=1.0, sigma=1.0),
    )


def deterministic_stochastic(problem: MinimaxProblem) -> StochasticMinimaxProblem:
    """Wrap a deterministic problem as stochastic with inert samples."""
    return StochasticMinimaxProblem(
        d1=problem.d1, d2=problem.d2,
        sample=lambda gen: 0.0,
        value_at=lambda x, y, xi: problem.value(x, y),
        constants=problem.constants,
        expected=problem,
        x_box=problem.x_box, y_ball=problem.y_ball,
    )
