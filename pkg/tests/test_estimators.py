import math

import numpy as np
import pytest

from zominimax import (
    DimensionMismatchError,
    DirectionBatch,
    OracleError,
    QueryMeter,
    RngStream,
    SmoothingParams,
    estimator_stats,
    make_wgan,
    sample_unit_sphere,
    sample_unit_sphere_batch,
    two_point_grad_x,
    two_point_grad_x_batch,
    two_point_grad_y,
    two_point_grad_y_batch,
)

# ---------------------------------------------------------------------------
# Sphere sampling


def test_sphere_dim1_is_sign():
    draws = {float(sample_unit_sphere(1, RngStream(0).child(k))[0]) for k in range(50)}
    assert draws <= {1.0, -1.0}
    assert len(draws) == 2


def test_sphere_unit_norm():
    for k in range(20):
        u = sample_unit_sphere(7, RngStream(1).child(k))
        assert abs(np.linalg.norm(u) - 1.0) <= 1e-12


def test_sphere_moments_dim3():
    # E[u] = 0 and E[u u'] = I/3 for the uniform sphere in R^3.
    n = 10 ** 5
    u = sample_unit_sphere_batch(3, n, RngStream(2))
    assert np.all(np.abs(u.mean(axis=0)) <= 3.0 / math.sqrt(3 * n))
    cov = u.T @ u / n
    assert np.all(np.abs(cov - np.eye(3) / 3.0) <= 0.05 / 3.0)


def test_sphere_rejects_bad_args():
    with pytest.raises(DimensionMismatchError):
        sample_unit_sphere(0, RngStream(0))
    with pytest.raises(ValueError):
        sample_unit_sphere_batch(2, 0, RngStream(0))


def test_direction_batch_validates_norms():
    with pytest.raises(ValueError):
        DirectionBatch(np.array([[1.0, 1.0]]))
    batch = DirectionBatch.draw(4, 6, RngStream(3))
    assert len(batch) == 6 and batch.dim == 4


def test_smoothing_params_validation():
    with pytest.raises(ValueError):
        SmoothingParams(0.0, 0.1)
    with pytest.raises(ValueError):
        SmoothingParams(0.1, math.inf)


# ---------------------------------------------------------------------------
# Single-sample estimators


def test_constant_oracle_gives_zero():
    u = sample_unit_sphere(3, RngStream(4))
    g = two_point_grad_x(lambda x, y: 7.5, np.zeros(3), np.zeros(2), 0.1, u)
    assert np.array_equal(g, np.zeros(3))


def test_quadratic_at_origin_x():
    # f = ||x||^2 at x = 0: difference is mu^2, estimate is d1 * mu * u.
    u = sample_unit_sphere(2, RngStream(5))
    g = two_point_grad_x(lambda x, y: float(x @ x), np.zeros(2), np.zeros(1), 0.1, u)
    assert g == pytest.approx(0.2 * u)


def test_quadratic_at_origin_y():
    v = sample_unit_sphere(3, RngStream(6))
    g = two_point_grad_y(lambda x, y: float(y @ y), np.zeros(1), np.zeros(3), 0.05, v)
    assert g == pytest.approx(0.15 * v)


def test_linear_oracle_unbiased_monte_carlo():
    # E[d (a'u) u] = a because E[uu'] = I/d on the sphere.
    a = np.array([0.3, -0.7, 0.2])
    x = np.array([0.1, 0.0, -0.5])
    value = lambda xx, yy: float(a @ xx)
    n = 10 ** 6
    gen = RngStream(7).generator()
    dirs = sample_unit_sphere_batch(3, n, gen)
    base = value(x, None)
    est = (3.0 * (dirs @ a))[:, None] * dirs  # equals the estimator for linear f
    # spot-check the vectorized oracle against the real estimator
    for i in range(5):
        direct = two_point_grad_x(value, x, None, 0.01, dirs[i])
        assert direct == pytest.approx(est[i], rel=1e-9, abs=1e-12)
    mean = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(mean - a) <= 3.0 * se)
    assert base == pytest.approx(a @ x)


def test_quadratic_mc_matches_analytic_grad_y(scalar_quadratic):
    # Smoothing shifts a quadratic's value by a constant, so the smoothed
    # y-gradient equals the exact one; the sample mean must approach it.
    x, y = np.array([0.4]), np.array([-0.3])
    grad = scalar_quadratic.analytic_grad_y(x, y)
    n = 200_000
    draws = np.empty((n, 1))
    gen = RngStream(8).generator()
    dirs = sample_unit_sphere_batch(1, n, gen)
    for i in range(n):
        draws[i] = two_point_grad_y(scalar_quadratic.value, x, y, 0.05, dirs[i])
    se = draws.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - grad) <= 3.0 * se)


def test_non_finite_oracle_raises_with_point():
    def bad(x, y):
        return math.inf if x[0] > 0.5 else 0.0

    u = np.array([1.0])
    with pytest.raises(OracleError) as err:
        two_point_grad_x(bad, np.array([0.49]), np.zeros(1), 0.1, u)
    assert err.value.x is not None


# ---------------------------------------------------------------------------
# Batch estimators


def test_batch_r1_reduces_to_single():
    problem = make_wgan()
    x, y = np.array([0.2, 0.3]), np.array([0.1, -0.2])
    xi = problem.sample(RngStream(9).generator())
    u = sample_unit_sphere(2, RngStream(10))
    single = two_point_grad_x(lambda a, b: problem.value_at(a, b, xi), x, y, 0.05, u)
    batch = two_point_grad_x_batch(problem.value_at, x, y, 0.05, [xi],
                                   DirectionBatch(u[None, :]))
    assert np.array_equal(single, batch)


def test_batch_is_mean_of_singles():
    problem = make_wgan()
    x, y = np.array([0.2, 0.3]), np.array([0.1, -0.2])
    xi = problem.sample(RngStream(11).generator())
    dirs = DirectionBatch.draw(2, 8, RngStream(12))
    singles = [two_point_grad_y(lambda a, b: problem.value_at(a, b, xi), x, y, 0.05, v)
               for v in dirs]
    batch = two_point_grad_y_batch(problem.value_at, x, y, 0.05, [xi] * 8, dirs)
    assert batch == pytest.approx(np.mean(singles, axis=0), rel=1e-12)


def test_batch_length_mismatch():
    problem = make_wgan()
    dirs = DirectionBatch.draw(2, 3, RngStream(13))
    with pytest.raises(DimensionMismatchError):
        two_point_grad_x_batch(problem.value_at, np.zeros(2), np.zeros(2), 0.1,
                               [None, None], dirs)


def test_batch_variance_scales_inversely_with_r():
    problem = make_wgan()
    x, y = np.array([0.2, 0.3]), np.array([0.4, -0.3])
    sizes = [1, 4, 16, 64]
    variances = []
    for idx, r in enumerate(sizes):
        def draw(gen, r=r):
            samples = [problem.sample(gen) for _ in range(r)]
            dirs = DirectionBatch(sample_unit_sphere_batch(2, r, gen))
            return two_point_grad_x_batch(problem.value_at, x, y, 0.05, samples, dirs)

        stats = estimator_stats(draw, 600, RngStream(14).child(idx))
        variances.append(stats.cov_trace)
    slope = np.polyfit(np.log(sizes), np.log(variances), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.15)


def test_query_accounting_exact():
    meter = QueryMeter()
    problem = make_wgan()
    value_at = meter.wrap_value_at(problem.value_at)
    value = meter.wrap_value(lambda x, y: problem.value_at(x, y, (0.0, 0.0)))
    x, y = np.zeros(2), np.zeros(2)
    u = sample_unit_sphere(2, RngStream(15))
    two_point_grad_x(value, x, y, 0.1, u)
    assert meter.algorithm == 2
    dirs = DirectionBatch.draw(2, 5, RngStream(16))
    samples = [problem.sample(RngStream(17).child(i).generator()) for i in range(5)]
    two_point_grad_y_batch(value_at, x, y, 0.1, samples, dirs)
    assert meter.algorithm == 2 + 2 * 5
