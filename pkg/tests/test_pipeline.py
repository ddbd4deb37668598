import numpy as np
import pytest
from scipy import stats

from cafbicm.channel import ChannelParams
from cafbicm.ldpc import CodeSpec, sample_regular_code
from cafbicm.modulation import make_constellation
from cafbicm.pipeline import (
    Interleaver,
    SimConfig,
    estimate_fer,
    run_caf_trial,
    sample_interleaver,
)


def test_interleaver_inverse():
    pi = sample_interleaver(100, np.random.default_rng(0))
    x = np.arange(100)
    assert np.array_equal(pi.inverse(pi.apply(x)), x)
    assert np.array_equal(pi.apply(pi.inverse(x)), x)


def test_interleaver_rejects_non_permutation():
    with pytest.raises(ValueError):
        Interleaver(np.array([0, 0, 1]))


def test_interleaver_position_uniformity():
    """Where index 0 lands, over many draws of a size-8 interleaver."""
    rng = np.random.default_rng(1)
    counts = np.zeros(8)
    for _ in range(8000):
        counts[np.flatnonzero(sample_interleaver(8, rng).perm == 0)[0]] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.fixture(scope="module")
def small_code():
    rng = np.random.default_rng(2)
    h = sample_regular_code(CodeSpec(3, 6, 600, k=2), rng)
    return h, sample_interleaver(600, rng)


def test_trial_high_psnr_decodes_xor(small_code):
    h, pi = small_code
    p = ChannelParams.from_psnr(make_constellation("qpsk"), 20.0, np.pi / 4, "caf")
    res = run_caf_trial(h, pi, p, np.random.default_rng(3))
    assert not res.frame_error and res.bit_errors == 0


def test_trial_mismatched_interleaver_fails(small_code):
    h, pi = small_code
    p = ChannelParams.from_psnr(make_constellation("qpsk"), 20.0, np.pi / 4, "caf")
    other = sample_interleaver(600, np.random.default_rng(99))
    res = run_caf_trial(h, pi, p, np.random.default_rng(3), relay_interleaver=other)
    assert res.frame_error


def test_trial_rejects_bad_length():
    rng = np.random.default_rng(4)
    h = sample_regular_code(CodeSpec(3, 9, 99), rng)
    p = ChannelParams.from_psnr(make_constellation("qpsk"), 10.0, 0.0, "caf")
    with pytest.raises(ValueError):
        run_caf_trial(h, sample_interleaver(99, rng), p, rng)


def test_estimate_fer_deterministic_and_worker_invariant():
    cfg = SimConfig(3, 6, 300, "qpsk", 4.0, np.pi / 4)
    a = estimate_fer(cfg, 6, seed=5)
    b = estimate_fer(cfg, 6, seed=5)
    c = estimate_fer(cfg, 6, seed=5, workers=2)
    assert a == b == c


def test_estimate_fer_extremes():
    hi = estimate_fer(SimConfig(3, 6, 600, "qpsk", 15.0, 0.0), 5, seed=6)
    assert hi.fer == 0.0 and hi.stderr == pytest.approx(3 / 5)
    lo = estimate_fer(SimConfig(3, 6, 600, "qpsk", -5.0, np.pi / 4), 5, seed=6)
    assert lo.fer == 1.0


def test_fixed_code_8psk():
    cfg = SimConfig(3, 6, 600, "8psk", 16.0, 0.0, fixed_code=True)
    est = estimate_fer(cfg, 3, seed=7)
    assert est.fer == 0.0
