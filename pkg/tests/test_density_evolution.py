import numpy as np
import pytest

from cafbicm.channel import ChannelParams
from cafbicm.density_evolution import (
    DeParams,
    InvalidBracketError,
    Population,
    check_update,
    de_run,
    error_probability,
    find_threshold,
    sample_channel_llr,
    variable_update,
)
from cafbicm.modulation import make_constellation
from oracles import QuantizedDE, quantized_boxplus_law


def bpsk_params(sigma_r, dv=3, dc=6, population=10_000, iters=500):
    """BPSK channel with per-real-dimension noise std ``sigma_r`` (complex variance 2 sigma_r^2)."""
    c = make_constellation("bpsk")
    return DeParams(dv, dc, ChannelParams(c, 2 * sigma_r**2, 0.0, "single"), population, iters)


def test_zero_population_absorbed_by_check():
    out = check_update(Population.zeros(2000), 6, np.random.default_rng(0))
    assert not out.samples0.any() and not out.samples1.any()


@pytest.mark.parametrize("dc", [3, 4, 6, 9])
def test_check_sign_rule(dc):
    """Confident, correct inputs must give a confident, correct output for any check degree."""
    n = 2000
    pop = Population(np.full(n, -20.0), np.full(n, 20.0))
    out = check_update(pop, dc, np.random.default_rng(1))
    assert (out.samples0 < -5).all()
    assert (out.samples1 > 5).all()


def test_check_update_dc3_matches_quantized_law():
    """Two-input check output histogram versus the exact law of the quantized input pmfs."""
    grid = np.linspace(-6, 6, 13)
    rng = np.random.default_rng(2)
    p1 = rng.random(grid.size)
    p1 /= p1.sum()
    p0 = p1[::-1].copy()  # class 0 mirrors class 1
    n = 10**6
    pop = Population(rng.choice(grid, n, p=p0), rng.choice(grid, n, p=p1))
    out = check_update(pop, 3, rng)
    edges = np.linspace(-8, 8, 33)
    for u, samples in ((0, out.samples0), (1, out.samples1)):
        values, weights = quantized_boxplus_law(p0, p1, grid, u, sign=-1.0)
        exact = np.histogram(values, edges, weights=weights)[0] / weights.sum()
        emp = np.histogram(samples, edges)[0] / n
        assert np.abs(exact - emp).sum() < 0.01


def test_error_probability_cases():
    assert error_probability(Population(np.full(10, -3.0), np.full(10, 3.0))) == 0.0
    assert error_probability(Population(np.full(10, 3.0), np.full(10, -3.0))) == 1.0
    assert error_probability(Population.zeros(10)) == 0.5
    assert error_probability(Population(np.array([-1.0, 1.0]), np.array([1.0, 1.0]))) == 0.25


def test_bpsk_channel_llr_moments():
    sigma2 = 0.5
    c = make_constellation("bpsk")
    p = ChannelParams(c, sigma2, 0.0, "single")
    x = sample_channel_llr(0, p, np.random.default_rng(3), n=200_000)
    # bit 0 -> +1; llr = -4 Re(y)/sigma2 with Re(y) ~ N(1, sigma2/2)
    assert x.mean() == pytest.approx(-4 / sigma2, abs=0.05)
    assert x.var() == pytest.approx(8 / sigma2, rel=0.02)


def test_channel_llr_consistency_caf():
    """Symmetric-channel consistency: E[exp(-L) | bit 1] = 1 for exact LLRs."""
    c = make_constellation("qpsk")
    p = ChannelParams.from_psnr(c, 3.0, np.pi / 4, "caf")
    x = sample_channel_llr(1, p, np.random.default_rng(4), n=400_000)
    assert np.mean(np.exp(-x)) == pytest.approx(1.0, abs=0.02)


def test_variable_update_zero_messages_returns_channel():
    c = make_constellation("bpsk")
    p = ChannelParams(c, 0.5, 0.0, "single")
    out = variable_update(Population.zeros(50_000), p, 3, np.random.default_rng(5))
    assert out.samples0.mean() == pytest.approx(-8.0, abs=0.1)
    assert out.samples1.mean() == pytest.approx(8.0, abs=0.1)


def test_high_psnr_converges_quickly():
    c = make_constellation("qpsk")
    params = DeParams(3, 6, ChannelParams.from_psnr(c, 60.0, np.pi / 4, "caf"), 5000, 50)
    res = de_run(params, np.random.default_rng(6))
    assert res.converged and res.iterations <= 3


def test_bpsk_36_brackets():
    rng = np.random.default_rng(7)
    assert de_run(bpsk_params(0.85), rng).converged
    assert not de_run(bpsk_params(0.95, iters=300), rng).converged


def test_odd_check_degree_matches_oracle():
    oracle = QuantizedDE(3, 9, delta=0.1, llr_max=25.0).threshold(0.6, 0.85)
    rng = np.random.default_rng(8)
    assert de_run(bpsk_params(oracle - 0.02, 3, 9), rng).converged
    assert not de_run(bpsk_params(oracle + 0.02, 3, 9, iters=300), rng).converged


def test_find_threshold_rejects_bad_bracket():
    params = bpsk_params(0.9, population=2000, iters=100)
    with pytest.raises(InvalidBracketError):
        find_threshold(params, 10.0, 12.0, rng=0)
    with pytest.raises(InvalidBracketError):
        find_threshold(params, 5.0, 3.0, rng=0)


def test_params_validation():
    c = make_constellation("qpsk")
    ch = ChannelParams(c, 0.3)
    with pytest.raises(ValueError):
        DeParams(3, 3, ch)
    with pytest.raises(ValueError):
        DeParams(3, 6, ch, population=10)
    assert DeParams(3, 6, ch, 10_000, 10).eps_stop == pytest.approx(1e-3)
    assert DeParams(3, 18, ch).rate == pytest.approx(2 * (1 - 3 / 18))


@pytest.mark.parametrize("psnr", [10.0, 16.0, 30.0])
def test_sampler_llrs_finite_and_match_demapper(psnr):
    """The PD sampler's fast LLR path agrees with the reference demapper and never yields NaN."""
    from cafbicm.demap import llr_all
    from cafbicm.density_evolution import _ChannelLlrSampler

    c = make_constellation("8psk")
    p = ChannelParams.from_psnr(c, psnr, np.pi / 8, "caf")
    sampler = _ChannelLlrSampler(p)
    rng = np.random.default_rng(9)
    y = sampler.sample_y(rng.integers(0, 8, 200_000), rng)
    fast = sampler.llr_all(y)
    assert np.isfinite(fast).all()
    ref = llr_all(y[:2000], p)
    assert np.allclose(fast[:2000], ref, atol=1e-6)
