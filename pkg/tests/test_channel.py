import numpy as np
import pytest
from scipy import stats

from cafbicm.channel import (
    ChannelParams,
    gaussian_pdf,
    pdf_degraded,
    pdf_output,
    pdf_single,
    psnr_to_sigma2,
    sample_degraded,
    sample_mac,
)
from cafbicm.modulation import make_constellation, received_constellation
from oracles import direct_gaussian


def grid_integral(f, half_width=6.0, step=0.01):
    """Riemann sum over a square; spectrally accurate for smooth, fast-decaying integrands."""
    x = np.arange(-half_width, half_width + step / 2, step)
    xx, yy = np.meshgrid(x, x)
    return float(f(xx + 1j * yy).sum() * step * step)


@pytest.fixture
def qpsk():
    return make_constellation("qpsk")


@pytest.mark.parametrize("psnr,expected", [(0, 1.0), (10, 0.1), (6, 10 ** -0.6)])
def test_psnr_to_sigma2(psnr, expected):
    assert psnr_to_sigma2(psnr, make_constellation("8psk")) == pytest.approx(expected, rel=1e-12)


def test_gaussian_pdf_values():
    assert gaussian_pdf(0, 0, 1.0) == pytest.approx(1 / np.pi)
    mu = 0.3 - 0.7j
    assert gaussian_pdf(mu, mu, 0.25) == pytest.approx(1 / (np.pi * 0.25))


def test_gaussian_pdf_normalization():
    assert grid_integral(lambda w: gaussian_pdf(w, 0.2 + 0.1j, 0.5)) == pytest.approx(1.0, abs=1e-8)


def test_sample_mac_noiseless_limit(qpsk):
    p = ChannelParams(qpsk, 1e-24, np.pi / 4, "mac")
    rng = np.random.default_rng(0)
    y = sample_mac(np.array([0, 3]), np.array([1, 2]), p, rng)
    expected = qpsk.points[[0, 3]] + qpsk.points[[1, 2]] * np.exp(1j * np.pi / 4)
    assert np.allclose(y, expected, atol=1e-10)


def test_sample_mac_moments(qpsk):
    sigma2 = 0.3
    p = ChannelParams(qpsk, sigma2, np.pi / 4, "mac")
    n = 10**6
    y = sample_mac(np.full(n, 1), np.full(n, 2), p, np.random.default_rng(1))
    point = qpsk.points[1] + qpsk.points[2] * np.exp(1j * np.pi / 4)
    sd = np.sqrt(sigma2)
    assert abs(y.mean() - point) < 4 * sd / np.sqrt(n)
    # variance of each quadrature component is sigma2 / 2; sample-variance sd ~ sqrt(2/n) * var
    for comp in (y.real, y.imag):
        assert comp.var() == pytest.approx(sigma2 / 2, abs=5 * np.sqrt(2 / n) * sigma2 / 2)


def test_sample_degraded_lands_in_group(qpsk):
    p = ChannelParams(qpsk, 1e-24, np.pi / 4, "caf")
    rc = received_constellation(qpsk, np.pi / 4)
    y = sample_degraded(np.full(50, 2), p, np.random.default_rng(2))
    d = np.abs(y[:, None] - rc.groups[2][None, :]).min(axis=1)
    assert np.all(d < 1e-10)


def test_sample_degraded_theta0_zero_label(qpsk):
    p = ChannelParams(qpsk, 1e-24, 0.0, "caf")
    y = sample_degraded(np.zeros(200, dtype=int), p, np.random.default_rng(3))
    assert np.allclose(np.sort_complex(np.unique(np.round(y, 9))), np.sort_complex(2 * qpsk.points))


def test_sample_degraded_group_histogram_uniform(qpsk):
    p = ChannelParams(qpsk, 1e-24, np.pi / 4, "caf")
    rc = received_constellation(qpsk, np.pi / 4)
    n = 10**6
    y = sample_degraded(np.full(n, 1), p, np.random.default_rng(4))
    idx = np.abs(y[:, None] - rc.groups[1][None, :]).argmin(axis=1)
    counts = np.bincount(idx, minlength=4)
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.parametrize("theta", [0.0, np.pi / 4])
@pytest.mark.parametrize("z", ["00", "01", "10", "11"])
def test_pdf_degraded_normalized(qpsk, theta, z):
    p = ChannelParams(qpsk, 0.2, theta, "caf")
    assert grid_integral(lambda y: pdf_degraded(y, z, p), half_width=5.0) == pytest.approx(1.0, abs=1e-6)


def test_pdf_degraded_peak(qpsk):
    sigma2 = 1e-3
    p = ChannelParams(qpsk, sigma2, np.pi / 4, "caf")
    point = received_constellation(qpsk, np.pi / 4).groups[3][0]
    assert pdf_degraded(point, "11", p) == pytest.approx(1 / (4 * np.pi * sigma2), rel=1e-6)


def test_pdf_degraded_matches_direct_sum():
    c = make_constellation("8psk")
    p = ChannelParams(c, 0.15, np.pi / 8, "caf")
    rng = np.random.default_rng(5)
    ys = rng.normal(size=40) + 1j * rng.normal(size=40)
    for z in range(8):
        oracle = np.zeros(ys.size)
        for xa in range(8):
            mu = c.points[xa] + c.points[xa ^ z] * np.exp(1j * np.pi / 8)
            oracle += direct_gaussian(ys, mu, 0.15) / 8
        assert np.allclose(pdf_degraded(ys, z, p), oracle, rtol=1e-12)


def test_pdf_single_properties(qpsk):
    p = ChannelParams(qpsk, 0.4, 0.0, "single")
    m = qpsk.points[2]
    assert pdf_single(m, "10", p) == pytest.approx(1 / (np.pi * 0.4))
    assert grid_integral(lambda y: pdf_single(y, "10", p)) == pytest.approx(1.0, abs=1e-8)
    r = np.linspace(0, 3, 30)
    vals = pdf_single(m + r * np.exp(0.4j), "10", p)
    assert np.all(np.diff(vals) < 0)


def test_pdf_output_mixture_identity_and_normalization(qpsk):
    p = ChannelParams(qpsk, 0.25, np.pi / 4, "mac")
    rng = np.random.default_rng(6)
    ys = 2 * (rng.normal(size=100) + 1j * rng.normal(size=100))
    mix = sum(pdf_degraded(ys, z, p) for z in range(4)) / 4
    assert np.allclose(pdf_output(ys, p), mix, rtol=1e-12)
    assert grid_integral(lambda y: pdf_output(y, p), half_width=5.0) == pytest.approx(1.0, abs=1e-6)
    p2 = ChannelParams(qpsk, 0.25, np.pi / 4 + 2 * np.pi, "mac")
    assert np.allclose(pdf_output(ys, p2), pdf_output(ys, p), rtol=1e-12)


def test_high_psnr_no_underflow():
    c = make_constellation("8psk")
    p = ChannelParams.from_psnr(c, 40.0, np.pi / 8, "caf")
    from cafbicm.channel import log_pdf_degraded_all

    logp = log_pdf_degraded_all(np.array([3.0 + 3.0j]), p)
    assert np.all(np.isfinite(logp))


def test_sampler_matches_pdf_goodness_of_fit(qpsk):
    """2D histogram of degraded-channel samples against the exact pdf (chi-square, 1e6 draws)."""
    p = ChannelParams(qpsk, 0.3, np.pi / 4, "caf")
    n = 10**6
    y = sample_degraded(np.full(n, 2), p, np.random.default_rng(7))
    edges = np.linspace(-3.5, 3.5, 15)
    counts, _, _ = np.histogram2d(y.real, y.imag, bins=[edges, edges])
    # expected cell probabilities by fine midpoint integration of the pdf
    fine = 20
    sub = np.linspace(0, 1, fine, endpoint=False) + 0.5 / fine
    w = edges[1] - edges[0]
    xs = (edges[:-1, None] + sub[None, :] * w).ravel()
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    dens = pdf_degraded(xx + 1j * yy, 2, p) * (w / fine) ** 2
    cell = dens.reshape(14, fine, 14, fine).sum(axis=(1, 3))
    expected = cell * n
    mask = expected > 20
    chi2 = ((counts[mask] - expected[mask]) ** 2 / expected[mask]).sum()
    dof = mask.sum() - 1
    assert stats.chi2.sf(chi2, dof) > 1e-3


def test_channel_params_validation(qpsk):
    with pytest.raises(ValueError):
        ChannelParams(qpsk, 0.0)
    with pytest.raises(ValueError):
        ChannelParams(qpsk, 1.0, scheme="bogus")
