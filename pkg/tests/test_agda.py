import numpy as np
import pytest

from zominimax import (
    AgdaConfig,
    ConfigError,
    PlQuadraticSpec,
    QueryMeter,
    RngStream,
    SmoothingParams,
    TraceRecorder,
    WganSpec,
    agda_step,
    derive_agda_params,
    make_pl_quadratic,
    make_wgan,
    run_agda,
    run_fo_agda,
)
from zominimax.agda import AgdaState

from tests.conftest import make_recording_value

# ---------------------------------------------------------------------------
# Parameter derivation


def test_derive_params_recomputed_independently(scalar_quadratic):
    # Recompute the schedule at high precision with mpmath and compare.
    import mpmath as mp
    mp.mp.dps = 50
    cfg = derive_agda_params(scalar_quadratic.constants, 1, 1, 0.1)
    L = mp.mpf(1) + mp.mpf(1) / 2
    kappa = mp.mpf(1)
    beta = 1 / (4 * 1 * L)
    alpha = min(beta / (32 * kappa ** 2), 1 / (10 * 1 * L))
    theta1 = (5 * 1 * L + 3 / (2 * alpha) + mp.mpf(3) / 2 * L + 1 * L) * 1 * L ** 2 * alpha ** 2
    mu1 = mp.sqrt(alpha) * mp.mpf("0.1") / (2 * mp.sqrt(theta1))
    mu2 = mp.sqrt(alpha) * mp.mpf("0.1") / (mp.sqrt(3 * beta) * 1 * L)
    assert cfg.beta == pytest.approx(float(beta), rel=1e-12)
    assert cfg.alpha == pytest.approx(float(alpha), rel=1e-12)
    assert cfg.smoothing.mu1 == pytest.approx(float(mu1), rel=1e-12)
    assert cfg.smoothing.mu2 == pytest.approx(float(mu2), rel=1e-12)
    # the rounded magnitudes usually quoted for this instance
    assert cfg.alpha == pytest.approx(5.208e-3, rel=1e-3)
    assert cfg.smoothing.mu1 == pytest.approx(2.67e-2, rel=1e-2)
    assert cfg.smoothing.mu2 == pytest.approx(6.80e-3, rel=1e-2)


def test_derive_params_alpha_shrinks_with_condition_number():
    from zominimax import ProblemConstants
    base = derive_agda_params(ProblemConstants(l=1.0, mu_pl=1.0), 1, 1, 0.1)
    harder = derive_agda_params(ProblemConstants(l=2.0, mu_pl=1.0), 1, 1, 0.1)
    assert harder.alpha < base.alpha


def test_derive_params_smoothing_linear_in_eps(scalar_quadratic):
    a = derive_agda_params(scalar_quadratic.constants, 1, 1, 0.1)
    b = derive_agda_params(scalar_quadratic.constants, 1, 1, 0.05)
    assert b.smoothing.mu1 == pytest.approx(a.smoothing.mu1 / 2, rel=1e-12)
    assert b.smoothing.mu2 == pytest.approx(a.smoothing.mu2 / 2, rel=1e-12)
    assert b.alpha == a.alpha and b.beta == a.beta


def test_derive_params_rejects_bad_eps(scalar_quadratic):
    with pytest.raises(ConfigError):
        derive_agda_params(scalar_quadratic.constants, 1, 1, 0.0)


# ---------------------------------------------------------------------------
# Single step


def _state(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return AgdaState(t=0, x=x, y=y, last_s=np.zeros_like(x), last_w=np.zeros_like(y))


def test_step_zero_oracle_keeps_iterates(scalar_quadratic):
    import dataclasses
    problem = dataclasses.replace(scalar_quadratic, value=lambda x, y: 0.0)
    cfg = AgdaConfig(alpha=0.1, beta=0.1, smoothing=SmoothingParams(0.01, 0.01), max_iter=1)
    state = agda_step(problem, _state([0.4], [0.2]), cfg, RngStream(1))
    assert state.t == 1
    assert np.array_equal(state.x, np.array([0.4]))
    assert np.array_equal(state.y, np.array([0.2]))


def test_step_one_dimensional_ascent_hand_value():
    # f = -y^2/2: after one ascent step from y=1 with beta=1/2 the iterate
    # lands at 1/2 up to the O(mu) smoothing term.
    spec = PlQuadraticSpec(A=np.array([[0.0]]), Bm=np.array([[0.0]]), Cm=np.array([[1.0]]))
    problem = make_pl_quadratic(spec)
    mu = 1e-3
    cfg = AgdaConfig(alpha=0.1, beta=0.5, smoothing=SmoothingParams(mu, mu), max_iter=1)
    state = agda_step(problem, _state([0.0], [1.0]), cfg, RngStream(2))
    assert abs(float(state.y[0]) - 0.5) <= 0.3 * mu


def test_step_alternation_uses_updated_x(scalar_quadratic):
    import dataclasses
    recording, calls = make_recording_value(scalar_quadratic.value)
    problem = dataclasses.replace(scalar_quadratic, value=recording)
    cfg = AgdaConfig(alpha=0.2, beta=0.1, smoothing=SmoothingParams(0.01, 0.01), max_iter=1)
    state0 = _state([1.0], [0.5])
    state1 = agda_step(problem, state0, cfg, RngStream(3))
    assert len(calls) == 4
    # the two y-block evaluations (calls 3 and 4) must sit at x_{t+1}
    for x_seen, _ in calls[2:]:
        assert np.array_equal(x_seen, state1.x)
    # and the x-block evaluations at the original x (or its perturbation)
    assert np.array_equal(calls[1][0], state0.x)


def test_step_counts_four_queries(scalar_quadratic):
    meter = QueryMeter()
    cfg = AgdaConfig(alpha=0.1, beta=0.1, smoothing=SmoothingParams(0.01, 0.01), max_iter=1)
    agda_step(scalar_quadratic, _state([1.0], [0.0]), cfg, RngStream(4), meter)
    assert meter.algorithm == 4


def test_step_stochastic_wgan_paper_settings_stay_finite():
    problem = make_wgan(WganSpec(data_batch=256, paired=True))
    cfg = AgdaConfig(alpha=0.1, beta=0.5, smoothing=SmoothingParams(0.05, 0.05),
                     max_iter=1000)
    trace = run_agda(problem, cfg, RngStream(5), x0=[0.5, 0.8], y0=[0.0, 0.0])
    assert len(trace) == 1001
    assert trace.rows[-1].queries == 4000


# ---------------------------------------------------------------------------
# Run loop


def test_run_rejects_zero_max_iter(scalar_quadratic):
    with pytest.raises(ConfigError):
        AgdaConfig(alpha=0.1, beta=0.1, smoothing=SmoothingParams(0.01, 0.01), max_iter=0)


def test_run_single_iteration_two_rows(scalar_quadratic):
    cfg = AgdaConfig(alpha=0.1, beta=0.1, smoothing=SmoothingParams(0.01, 0.01), max_iter=1)
    trace = run_agda(scalar_quadratic, cfg, RngStream(6), x0=[1.0], y0=[0.0])
    assert [row.t for row in trace.rows] == [0, 1]


def test_run_converges_with_theory_parameters(scalar_quadratic):
    cfg = derive_agda_params(scalar_quadratic.constants, 1, 1, 0.1,
                             max_iter=10 ** 6, check_every=50)
    recorder = TraceRecorder(scalar_quadratic, metrics=("grad_phi_norm",),
                             record_every=50)
    trace = run_agda(scalar_quadratic, cfg, RngStream(7), recorder, x0=[1.0], y0=[0.0])
    assert trace.rows[-1].metrics["grad_phi_norm"] <= 0.1
    assert trace.rows[-1].t < 10 ** 6


def test_run_bit_identical_with_same_seed(scalar_quadratic):
    cfg = AgdaConfig(alpha=0.05, beta=0.2, smoothing=SmoothingParams(0.01, 0.01),
                     max_iter=200)

    def run():
        recorder = TraceRecorder(scalar_quadratic, metrics=("grad_phi_norm",),
                                 record_every=10)
        return run_agda(scalar_quadratic, cfg, RngStream(8), recorder,
                        x0=[1.0], y0=[0.0])

    t1, t2 = run(), run()
    assert len(t1) == len(t2)
    for r1, r2 in zip(t1.rows, t2.rows):
        assert r1 == r2


def test_run_query_budget_is_4T(scalar_quadratic):
    cfg = AgdaConfig(alpha=0.05, beta=0.2, smoothing=SmoothingParams(0.01, 0.01),
                     max_iter=137)
    recorder = TraceRecorder(scalar_quadratic, metrics=("grad_phi_norm",),
                             record_every=137)
    trace = run_agda(scalar_quadratic, cfg, RngStream(9), recorder, x0=[1.0], y0=[0.0])
    assert trace.rows[-1].queries == 4 * 137
    assert trace.rows[-1].aux_queries == 0  # analytic metric needs no oracle


# ---------------------------------------------------------------------------
# First-order baseline


def test_fo_scalar_contraction():
    # f = x^2/2 - y^2/2 decouples; x contracts by exactly (1 - alpha).
    spec = PlQuadraticSpec(A=np.array([[1.0]]), Bm=np.array([[0.0]]), Cm=np.array([[1.0]]))
    problem = make_pl_quadratic(spec)
    xs = []
    recorder = TraceRecorder(problem, callback=lambda t, x, y, m: xs.append(float(x[0])))
    run_fo_agda(problem, 0.1, 0.1, 30, RngStream(10), recorder, x0=[1.0], y0=[0.0])
    for t, xv in enumerate(xs):
        assert xv == pytest.approx(0.9 ** t, rel=1e-12)


def test_fo_requires_gradients(scalar_quadratic):
    import dataclasses
    problem = dataclasses.replace(scalar_quadratic, analytic_grad_x=None)
    with pytest.raises(ConfigError):
        run_fo_agda(problem, 0.1, 0.1, 5, RngStream(11))


def test_fo_agrees_with_zo_in_small_smoothing_limit(scalar_quadratic):
    # With mu -> 0 the direction-averaged two-point paths track the exact
    # gradient path; 64 direction resamples collapse the +-mu/2 noise.
    alpha, beta, steps = 0.05, 0.2, 50
    fo_path = []
    recorder = TraceRecorder(scalar_quadratic,
                             callback=lambda t, x, y, m: fo_path.append(float(x[0])))
    run_fo_agda(scalar_quadratic, alpha, beta, steps, RngStream(12), recorder,
                x0=[1.0], y0=[0.0])
    zo_paths = np.zeros((64, steps + 1))
    cfg = AgdaConfig(alpha=alpha, beta=beta, smoothing=SmoothingParams(1e-7, 1e-7),
                     max_iter=steps)
    for k in range(64):
        path = []
        recorder = TraceRecorder(scalar_quadratic,
                                 callback=lambda t, x, y, m: path.append(float(x[0])))
        run_agda(scalar_quadratic, cfg, RngStream(13).child(k), recorder,
                 x0=[1.0], y0=[0.0])
        zo_paths[k] = path
    mean_path = zo_paths.mean(axis=0)
    rel = np.abs(mean_path - np.array(fo_path)) / np.maximum(np.abs(fo_path), 1e-9)
    assert rel.max() <= 0.10


# ---------------------------------------------------------------------------
# Trajectory-level properties


def test_potential_decreases_with_theory_parameters(scalar_quadratic):
    from zominimax import potential_v
    cfg0 = derive_agda_params(scalar_quadratic.constants, 1, 1, 0.1)
    cfg = AgdaConfig(alpha=cfg0.alpha, beta=cfg0.beta, smoothing=cfg0.smoothing,
                     max_iter=1000)
    head, tail = [], []
    for seed in range(20):
        vs = []
        recorder = TraceRecorder(
            scalar_quadratic, record_every=10,
            callback=lambda t, x, y, m: vs.append(potential_v(scalar_quadratic, x, y)))
        run_agda(scalar_quadratic, cfg, RngStream(100 + seed), recorder,
                 x0=[1.0], y0=[0.0])
        k = len(vs) // 10
        head.append(np.mean(vs[:k]))
        tail.append(np.mean(vs[-k:]))
    assert np.mean(tail) < np.mean(head)


def _hitting_times(trace, thresholds):
    g = trace.metric("grad_phi_norm")
    t = trace.metric("t")
    out = []
    for eps in thresholds:
        idx = np.argmax(g <= eps)
        assert g[idx] <= eps, f"never reached {eps}"
        out.append(int(t[idx]))
    return out


def test_iteration_scaling_ratio_band(scalar_quadratic):
    # Hitting-time ratios T(eps/2) / T(eps) measured from starts scaled to
    # 1.5 * eps so both crossings happen in a regime with measurable times.
    for eps in (0.2, 0.1):
        cfg0 = derive_agda_params(scalar_quadratic.constants, 1, 1, eps)
        cfg = AgdaConfig(alpha=cfg0.alpha, beta=cfg0.beta, smoothing=cfg0.smoothing,
                         max_iter=3000)
        ratios = []
        for seed in range(10):
            x0 = 1.5 * eps / 2.0  # grad Phi = 2 x0 = 1.5 eps
            recorder = TraceRecorder(scalar_quadratic, metrics=("grad_phi_norm",),
                                     record_every=1)
            trace = run_agda(scalar_quadratic, cfg, RngStream(300 + seed), recorder,
                             x0=[x0], y0=[x0])
            t_eps, t_half = _hitting_times(trace, [eps, eps / 2.0])
            assert t_eps >= 1
            ratios.append(t_half / t_eps)
        assert 2.0 <= np.mean(ratios) <= 8.0
