import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats

from percept_fusion.core import DegeneratePriorError, GaussianEstimate, InvalidParameterError
from percept_fusion.fusion import (
    CountPrior,
    Readout,
    combine_gaussian,
    common_cause_posterior,
    count_posterior,
    count_posterior_trimodal,
    coupled_prior,
    localize_with_causal_inference,
    visual_count_report_distribution,
)

sds = st.floats(0.01, 100)
means = st.floats(-100, 100)


def brute_posterior(obs, sigmas, prior):
    """Direct normalised product over every cell, no vectorisation."""
    prior = np.asarray(prior)
    out = np.zeros_like(prior)
    for cell in np.ndindex(prior.shape):
        w = prior[cell]
        for o, s, k in zip(obs, sigmas, cell):
            if o is not None:
                w *= stats.norm.pdf(o, k, s)
        out[cell] = w
    return out / out.sum()


# -- combine_gaussian -------------------------------------------------------


def test_combine_reference():
    r = combine_gaussian(GaussianEstimate(0.0, 1.0), GaussianEstimate(10.0, 2.0))
    assert r.weight_1 == pytest.approx(0.8)
    assert r.weight_2 == pytest.approx(0.2)
    assert r.combined.mean == pytest.approx(2.0)
    assert r.combined.variance == pytest.approx(0.8)


@given(means, sds, means, sds)
def test_combined_variance_below_both(m1, s1, m2, s2):
    r = combine_gaussian(GaussianEstimate(m1, s1), GaussianEstimate(m2, s2))
    assert r.combined.variance < min(s1**2, s2**2)
    assert r.weight_1 + r.weight_2 == pytest.approx(1.0, abs=1e-15)
    assert min(m1, m2) - 1e-9 <= r.combined.mean <= max(m1, m2) + 1e-9


@given(means, sds, means, sds, st.floats(0.01, 50))
def test_combined_mean_monotone_in_inputs(m1, s1, m2, s2, delta):
    base = combine_gaussian(GaussianEstimate(m1, s1), GaussianEstimate(m2, s2)).combined.mean
    up1 = combine_gaussian(GaussianEstimate(m1 + delta, s1), GaussianEstimate(m2, s2)).combined.mean
    up2 = combine_gaussian(GaussianEstimate(m1, s1), GaussianEstimate(m2 + delta, s2)).combined.mean
    assert up1 >= base
    assert up2 >= base


def test_combine_infinite_sd_passthrough():
    e = GaussianEstimate(3.0, 2.0)
    r = combine_gaussian(e, GaussianEstimate(0.0, math.inf))
    assert r.combined == e and r.weight_1 == 1.0
    with pytest.raises(InvalidParameterError):
        combine_gaussian(GaussianEstimate(0, math.inf), GaussianEstimate(0, math.inf))


def test_suboptimal_exponent_is_actual_variance():
    r = combine_gaussian(GaussianEstimate(0.0, 1.0), GaussianEstimate(0.0, 2.0), weight_exponent=2.0)
    w1 = 16 / 17
    assert r.weight_1 == pytest.approx(w1)
    assert r.combined.variance == pytest.approx(w1**2 + (1 - w1) ** 2 * 4)
    optimal = combine_gaussian(GaussianEstimate(0.0, 1.0), GaussianEstimate(0.0, 2.0))
    assert r.combined.variance > optimal.combined.variance


# -- count priors and posteriors -------------------------------------------


def test_coupled_prior_reference():
    p = coupled_prior(1, kappa=3.0)
    assert np.allclose(p, np.array([[3, 1], [1, 3]]) / 8)
    p3 = coupled_prior(1, kappa=2.0, ndim=3)
    # all-equal cells have 3 equal pairs, the rest exactly one
    assert p3[0, 0, 0] / p3[0, 0, 1] == pytest.approx(4.0)
    with pytest.raises(InvalidParameterError):
        coupled_prior(4, kappa=0.5)


def test_count_prior_validation():
    with pytest.raises(InvalidParameterError):
        CountPrior(np.ones((2, 3)) / 6)
    with pytest.raises(InvalidParameterError):
        CountPrior(np.ones((2, 2)))


@given(
    st.floats(-1, 5), st.floats(-1, 5), st.floats(0.05, 3), st.floats(0.05, 3), st.floats(1, 20)
)
def test_count_posterior_matches_brute_force(a, v, sa, sv, kappa):
    prior = CountPrior.coupled(4, kappa)
    post = count_posterior(a, v, sa, sv, prior)
    ref = brute_posterior((a, v), (sa, sv), prior.joint)
    assert post.joint.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(post.joint - ref)) < 1e-12
    assert np.allclose(post.marginal_a, ref.sum(axis=1), atol=1e-12)


def test_count_posterior_sharp_likelihood_no_underflow():
    post = count_posterior(2.0, 40.0, 0.01, 0.01, CountPrior.uniform(4))
    assert np.all(np.isfinite(post.joint))
    assert post.mode_a == 2 and post.mode_v == 4


def test_count_posterior_missing_modality_uses_prior():
    prior = CountPrior.coupled(4, 4.0)
    post = count_posterior(None, 1.0, 0.3, 0.01, prior)
    # visual sharply at 1; auditory follows the prior's conditional row
    expected = prior.joint[:, 1] / prior.joint[:, 1].sum()
    assert np.allclose(post.marginal_a, expected, atol=1e-9)


def test_degenerate_prior():
    joint = np.zeros((5, 5))
    joint[0, 0] = 1.0
    post = count_posterior(4.0, 4.0, 0.01, 0.01, CountPrior(joint))
    assert post.mode_a == 0
    # evidence that no count can explain leaves zero unnormalised mass
    with pytest.raises(DegeneratePriorError):
        count_posterior(math.inf, 4.0, 0.3, 1.0, CountPrior(joint))


def test_trimodal_against_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(20):
        prior = coupled_prior(3, rng.uniform(1, 10), ndim=3)
        obs = tuple(rng.uniform(-0.5, 3.5, 3))
        sig = tuple(rng.uniform(0.1, 2, 3))
        post = count_posterior_trimodal(*obs, sig, prior)
        assert np.max(np.abs(post.joint - brute_posterior(obs, sig, prior))) < 1e-12


def test_touch_induced_fission():
    post = count_posterior_trimodal(1.0, 1.0, 2.0, (1.0, 1.0, 0.2), coupled_prior(4, 4.0, ndim=3))
    assert post.mode(2) == 2
    assert post.mode(0) == 2


FISSION = dict(a_obs=2.0, v_obs=1.0)


@given(st.floats(0.05, 1.1), st.floats(0.001, 0.5), st.floats(1.0, 50), st.floats(0.05, 1.0))
def test_fission_mass_nondecreasing_in_sigma_v_below_peak(sv, dsv, kappa, sa):
    prior = CountPrior.coupled(4, kappa)
    lo = count_posterior(sigma_a=sa, sigma_v=sv, prior=prior, **FISSION).marginal_v[2]
    hi = count_posterior(sigma_a=sa, sigma_v=min(sv + dsv, 1.1), prior=prior, **FISSION).marginal_v[2]
    assert hi >= lo - 1e-12


@given(st.floats(0.05, 5), st.floats(0.001, 2), st.floats(1.0, 50), st.floats(0.05, 5))
def test_fission_mass_nonincreasing_in_sigma_a(sa, dsa, kappa, sv):
    prior = CountPrior.coupled(4, kappa)
    lo = count_posterior(sigma_a=sa, sigma_v=sv, prior=prior, **FISSION).marginal_v[2]
    hi = count_posterior(sigma_a=sa + dsa, sigma_v=sv, prior=prior, **FISSION).marginal_v[2]
    assert hi <= lo + 1e-12


def test_fission_mass_peaks_then_relaxes_to_prior_conditional():
    # with very blurry vision the visual marginal falls back to the prior
    # given the auditory evidence, so the Z_V = 2 mass is not monotone forever
    prior = CountPrior.coupled(4, 4.0)
    grid = np.linspace(0.1, 6.0, 300)
    mass = np.array([count_posterior(2.0, 1.0, 0.3, s, prior).marginal_v[2] for s in grid])
    peak = grid[np.argmax(mass)]
    assert 1.0 < peak < 1.4
    limit = count_posterior(2.0, None, 0.3, 1.0, prior).marginal_v[2]
    assert mass[-1] == pytest.approx(limit, abs=0.01)


# -- report distribution ---------------------------------------------------


def mc_report_distribution(n_a, n_v, sa, sv, prior, n, seed):
    rng = np.random.default_rng(seed)
    out = np.zeros(prior.max_count + 1)
    for _ in range(n):
        a = None if n_a is None else rng.normal(n_a, sa)
        out[count_posterior(a, rng.normal(n_v, sv), sa, sv, prior).mode_v] += 1
    return out / n


@pytest.mark.parametrize("n_a,n_v", [(2, 1), (1, 2), (None, 1), (3, 3)])
def test_report_distribution_matches_monte_carlo(n_a, n_v):
    prior = CountPrior.coupled(4, 4.0)
    exact = visual_count_report_distribution(n_a, n_v, 0.3, 1.0, prior)
    mc = mc_report_distribution(n_a, n_v, 0.3, 1.0, prior, 20_000, seed=5)
    assert exact.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(exact - mc)) < 0.015


def test_report_distribution_fission_and_fusion_reference():
    prior = CountPrior.coupled(4, 4.0)
    fission = visual_count_report_distribution(2, 1, 0.3, 1.0, prior)
    fusion = visual_count_report_distribution(1, 2, 0.3, 1.0, prior)
    assert fission[2] == pytest.approx(0.6718, abs=5e-4)
    assert fusion[1] == pytest.approx(0.6728, abs=5e-4)


# -- spatial causal inference ----------------------------------------------


def test_common_cause_endpoints():
    assert common_cause_posterior(0, 30, 1, 1, 10, 0.0) == 0.0
    assert common_cause_posterior(0, 30, 1, 1, 10, 1.0) == 1.0
    with pytest.raises(InvalidParameterError):
        common_cause_posterior(0, 0, 1, 1, 10, 1.5)


def test_common_cause_matches_quadrature():
    from scipy import integrate

    xa, xv, sa, sv, sp, pc = 3.0, -2.0, 2.0, 1.5, 10.0, 0.4
    c1 = integrate.quad(
        lambda s: stats.norm.pdf(xa, s, sa) * stats.norm.pdf(xv, s, sv) * stats.norm.pdf(s, 0, sp), -80, 80
    )[0]
    c2 = integrate.quad(lambda s: stats.norm.pdf(xa, s, sa) * stats.norm.pdf(s, 0, sp), -80, 80)[0] * integrate.quad(
        lambda s: stats.norm.pdf(xv, s, sv) * stats.norm.pdf(s, 0, sp), -80, 80
    )[0]
    expected = pc * c1 / (pc * c1 + (1 - pc) * c2)
    assert common_cause_posterior(xa, xv, sa, sv, sp, pc) == pytest.approx(expected, abs=1e-10)


@given(st.floats(-20, 20), st.floats(0, 30), st.floats(0.1, 5), st.floats(0.05, 0.95))
def test_common_cause_decreasing_in_disparity(xa, d, dd, pc):
    f = lambda x_v: common_cause_posterior(xa, x_v, 2.0, 1.0, 20.0, pc)
    assert f(xa + d + dd) <= f(xa + d) + 1e-12
    assert f(xa - d - dd) <= f(xa - d) + 1e-12


@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0.01, 0.98), st.floats(0.001, 0.5))
def test_common_cause_increasing_in_prior(xa, xv, pc, dp):
    hi = min(pc + dp, 0.99)
    assert common_cause_posterior(xa, xv, 2.0, 1.0, 20.0, hi) >= common_cause_posterior(xa, xv, 2.0, 1.0, 20.0, pc)


@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(0.05, 0.95))
def test_averaging_is_continuous(xa, xv, pc):
    eps = 1e-7
    a = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, pc)
    b = localize_with_causal_inference(xa + eps, xv + eps, 3.0, 1.0, 20.0, pc + eps)
    assert abs(a[0] - b[0]) < 1e-4 and abs(a[1] - b[1]) < 1e-4


@given(st.floats(-30, 30), st.floats(-30, 30), st.sampled_from([0.0, 1.0]))
def test_selection_agrees_with_averaging_at_limits(xa, xv, pc):
    avg = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, pc, Readout.MODEL_AVERAGING)
    sel = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, pc, Readout.MODEL_SELECTION)
    assert avg == pytest.approx(sel, abs=1e-12)


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_selection_is_one_of_the_two_structures(xa, xv):
    sel = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, 0.5, "selection")
    fused = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, 1.0)
    alone = localize_with_causal_inference(xa, xv, 3.0, 1.0, 20.0, 0.0)
    assert sel == pytest.approx(fused) or sel == pytest.approx(alone)


def test_ventriloquism_direction_and_reversal():
    aud_reliable_vis, _ = localize_with_causal_inference(10.0, 0.0, 8.0, 2.0, 20.0, 0.5)
    aud_unreliable_vis, _ = localize_with_causal_inference(10.0, 0.0, 2.0, 8.0, 20.0, 0.5)
    alone = localize_with_causal_inference(10.0, 0.0, 8.0, 2.0, 20.0, 0.0)[0]
    assert aud_reliable_vis < alone
    shift_reliable = alone - aud_reliable_vis
    alone_swapped = localize_with_causal_inference(10.0, 0.0, 2.0, 8.0, 20.0, 0.0)[0]
    shift_swapped = alone_swapped - aud_unreliable_vis
    assert shift_reliable > shift_swapped
