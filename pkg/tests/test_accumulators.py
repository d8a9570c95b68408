import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats

from percept_fusion.accumulators import (
    Choice,
    DdmParams,
    ExponentialLatency,
    ShiftedGaussianLatency,
    coactivation_params,
    coactivation_simulate,
    ddm_error_rate,
    ddm_mean_rt,
    ddm_simulate,
    ddm_simulate_batch,
    diffuse,
    race_cdf,
    race_simulate,
    race_time,
)
from percept_fusion.core import THREADS_ENV, InvalidParameterError, SimulationTimeoutError, substream

# (z / A) tanh(A z / c^2) and 1 / (1 + exp(2 A z / c^2)) at A=0.5, c=1, z=2
TANH_1 = 0.7615941559557649
ER_2 = 0.11920292202211755


def test_ddm_closed_forms_reference():
    p = DdmParams(0.5, 1.0, 2.0)
    assert ddm_mean_rt(p) == pytest.approx(4 * TANH_1, rel=1e-14)
    assert ddm_error_rate(p) == pytest.approx(ER_2, rel=1e-14)
    assert ddm_mean_rt(DdmParams(0.5, 1.0, 2.0, nondecision_ms=300)) == pytest.approx(300 + 4 * TANH_1)


def test_zero_drift_limit():
    assert ddm_mean_rt(DdmParams(0.0, 2.0, 3.0)) == pytest.approx(9 / 4)
    assert ddm_error_rate(DdmParams(0.0, 2.0, 3.0)) == 0.5
    # continuity through A = 0
    assert ddm_mean_rt(DdmParams(1e-7, 2.0, 3.0)) == pytest.approx(9 / 4, rel=1e-6)


def test_offset_start_point_gamblers_ruin():
    p = DdmParams(1.0, 1.0, 1.0, start_x0=0.5)
    p_up = (1 - math.exp(-3)) / (1 - math.exp(-4))
    assert ddm_error_rate(p) == pytest.approx(1 - p_up, rel=1e-12)
    assert ddm_mean_rt(p) == pytest.approx(2 * p_up - 1.5, rel=1e-12)


def test_negative_drift_mirrors():
    a = DdmParams(0.7, 1.0, 1.5, start_x0=0.2)
    b = DdmParams(-0.7, 1.0, 1.5, start_x0=-0.2)
    assert ddm_error_rate(a) == pytest.approx(1 - ddm_error_rate(b), abs=1e-14)
    assert ddm_mean_rt(a) == pytest.approx(ddm_mean_rt(b), rel=1e-12)


def test_ddm_error_rate_no_overflow():
    assert ddm_error_rate(DdmParams(1000.0, 0.1, 10.0)) == 0.0
    assert ddm_error_rate(DdmParams(-1000.0, 0.1, 10.0)) == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(drift_A=1, noise_c=0, threshold_z=1),
        dict(drift_A=1, noise_c=1, threshold_z=0),
        dict(drift_A=1, noise_c=1, threshold_z=1, nondecision_ms=-1),
        dict(drift_A=1, noise_c=1, threshold_z=1, start_x0=1),
    ],
)
def test_ddm_params_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        DdmParams(**kwargs)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.1, 3), st.floats(1.01, 2))
def test_error_rate_strictly_decreasing_in_drift_and_threshold(A, z, c, factor):
    base = ddm_error_rate(DdmParams(A, c, z))
    assume(base > 1e-300)
    assert ddm_error_rate(DdmParams(A * factor, c, z)) < base
    assert ddm_error_rate(DdmParams(A, c, z * factor)) < base


@given(st.floats(0, 1e4), st.floats(0, 1e4))
def test_race_time_is_min(a, b):
    assert race_time(a, b) <= min(a, b) + 0
    assert race_time(a, b) == min(a, b)


def test_race_time_rejects_negative():
    with pytest.raises(InvalidParameterError):
        race_time(-1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        race_time(math.inf, 2.0)


def test_race_cdf_matches_samples_ks():
    ma, mv = ExponentialLatency(0.02), ShiftedGaussianLatency(60.0, 15.0, floor=10.0)
    samples = race_simulate(ma, mv, 10**6, substream(3, 0))
    ks = stats.kstest(samples, lambda t: race_cdf(ma, mv, t))
    assert ks.statistic < 0.01


def test_exponential_race_is_exponential():
    ma, mv = ExponentialLatency(0.02), ExponentialLatency(0.03)
    t = np.linspace(0, 300, 31)
    assert np.allclose(race_cdf(ma, mv, t), -np.expm1(-0.05 * t), atol=1e-15)


def test_shifted_gaussian_cdf_floor():
    m = ShiftedGaussianLatency(50.0, 10.0, floor=45.0)
    assert m.cdf(45.0) == 0.0
    assert m.cdf(1e6) == pytest.approx(1.0)
    assert np.all(m.sample(substream(0, 0).gen, 1000) >= 45.0)


def test_ddm_simulate_single_trial_deterministic():
    p = DdmParams(1.0, 1.0, 1.0, nondecision_ms=100.0)
    a = ddm_simulate(p, 0.01, substream(4, 2))
    b = ddm_simulate(p, 0.01, substream(4, 2))
    assert a == b
    assert isinstance(a[0], Choice)
    assert a[1] > 100.0


def test_ddm_batch_moderate_agreement():
    p = DdmParams(1.0, 1.0, 1.0, start_x0=0.5)
    b = ddm_simulate_batch(p, 100_000, seed=3)
    assert abs(b.error_rate - ddm_error_rate(p)) < 0.003
    assert abs(b.mean_rt - ddm_mean_rt(p)) / ddm_mean_rt(p) < 0.02


@pytest.mark.parametrize("threads", ["1", "4"])
def test_ddm_batch_thread_invariant(monkeypatch, threads):
    p = DdmParams(0.8, 1.0, 1.0)
    monkeypatch.setenv(THREADS_ENV, "1")
    ref = ddm_simulate_batch(p, 5000, seed=11, chunk=512)
    monkeypatch.setenv(THREADS_ENV, threads)
    got = ddm_simulate_batch(p, 5000, seed=11, chunk=512)
    assert np.array_equal(ref.upper, got.upper)
    assert np.array_equal(ref.rt_ms, got.rt_ms)


def test_bridge_reduces_overshoot_bias():
    # coarse step: without the bridge correction mean RT is biased upward
    p = DdmParams(0.5, 1.0, 1.0)
    target = ddm_mean_rt(p)
    plain = diffuse(40_000, 0.5, 1.0, 1.0, 0.0, 0.05, substream(1, 0).gen, bridge=False)
    corrected = diffuse(40_000, 0.5, 1.0, 1.0, 0.0, 0.05, substream(1, 0).gen, bridge=True)
    assert abs(corrected.decision_ms.mean() - target) < abs(plain.decision_ms.mean() - target)


def test_diffuse_schedule_end_leaves_paths_unresolved():
    out = diffuse(50, np.zeros(3), 0.01, 1.0, 0.0, 1.0, substream(0, 0).gen)
    assert not out.resolved.any()
    assert np.all(out.decision_ms == 3.0)


def test_diffuse_timeout():
    with pytest.raises(SimulationTimeoutError):
        diffuse(10, 0.0, 0.001, 1.0, 0.0, 1.0, substream(0, 0).gen, max_steps=5)


def test_coactivation_sums_drift_and_variance():
    shared = DdmParams(0.0, 1.0, 1.0, nondecision_ms=50.0)
    p = coactivation_params(0.3, 0.4, shared, 0.6, 0.8)
    assert p.drift_A == pytest.approx(0.7)
    assert p.noise_c == pytest.approx(1.0)
    assert p.nondecision_ms == 50.0


def test_coactivation_with_silent_channel_is_unimodal():
    uni = DdmParams(0.6, 1.0, 1.0, nondecision_ms=20.0)
    p = coactivation_params(0.6, 0.0, uni, stream_2_noise=0.0)
    assert p == uni
    for i in range(20):
        assert coactivation_simulate(0.6, 0.0, uni, 0.01, substream(8, i), stream_2_noise=0.0) == ddm_simulate(
            uni, 0.01, substream(8, i)
        )
