"""Symmetric information rates (uniform inputs) in bits per channel use.

Two backends evaluate the differential-entropy integrals:

* ``"mc"``: Monte Carlo over (transmit pair, noise) with exact log-mixture densities.
* ``"quad"``: Gauss-Hermite product quadrature centred on every mixture component.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .channel import (
    ChannelParams,
    complex_noise,
    log_pdf_degraded_all,
    log_pdf_output,
    log_pdf_single_all,
    psnr_to_sigma2,
)
from .modulation import Constellation

LOG2E = 1.0 / math.log(2.0)
DEFAULT_SAMPLES = 10**6
DEFAULT_ORDER = 32
_CHUNK = 50_000


@dataclass(frozen=True)
class SirEstimate:
    value: float
    stderr: float
    method: str


# -- per-point integrands -------------------------------------------------------------
# Each integrand takes (y, index of the transmitted symbol / pair, params) and returns the
# information density in nats whose mean over the input law and noise is the rate.


def _caf_density(y, pair_z, p):
    logp = log_pdf_degraded_all(y, p)
    cond = np.take_along_axis(logp, pair_z[..., None], axis=-1)[..., 0]
    return cond - log_pdf_output(y, p)


def _sd_density(y, _pair, p):
    # h(W) is handled in closed form; only -log p_Y(y) is integrated.
    return -log_pdf_output(y, p)


def _single_density(y, x, p):
    logp = log_pdf_single_all(y, p)
    cond = np.take_along_axis(logp, x[..., None], axis=-1)[..., 0]
    return cond - log_pdf_output(y, p)


def _noise_entropy_bits(sigma2: float) -> float:
    return math.log2(math.pi * math.e * sigma2)


# -- Monte Carlo backend ---------------------------------------------------------------


def _mc_mean(draw: Callable[[np.random.Generator, int], np.ndarray], samples: int,
             rng: np.random.Generator) -> tuple[float, float]:
    sums, sqs = [], []
    done = 0
    while done < samples:
        n = min(_CHUNK, samples - done)
        v = draw(rng, n)
        sums.append(float(np.sum(v)))
        sqs.append(float(np.sum(v * v)))
        done += n
    mean = math.fsum(sums) / samples
    var = max(math.fsum(sqs) / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def _mc_relay(p: ChannelParams, density, samples: int, rng) -> tuple[float, float]:
    size = p.constellation.size
    pts = p.constellation.points
    rot = np.exp(1j * p.theta)

    def draw(g, n):
        xa = g.integers(0, size, n)
        xb = g.integers(0, size, n)
        y = pts[xa] + pts[xb] * rot + complex_noise(g, p.sigma2, n)
        return density(y, xa ^ xb, p)

    return _mc_mean(draw, samples, rng)


def _mc_single(p: ChannelParams, samples: int, rng) -> tuple[float, float]:
    size = p.constellation.size
    pts = p.constellation.points

    def draw(g, n):
        x = g.integers(0, size, n)
        y = pts[x] + complex_noise(g, p.sigma2, n)
        return _single_density(y, x, p)

    return _mc_mean(draw, samples, rng)


# -- quadrature backend ----------------------------------------------------------------


def _gh_offsets(order: int, sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite.hermgauss(order)
    offsets = math.sqrt(sigma2) * (t[:, None] + 1j * t[None, :])
    weights = (w[:, None] * w[None, :]) / math.pi
    return offsets.ravel(), weights.ravel()


def _quad_mean(means: np.ndarray, labels: np.ndarray, p: ChannelParams, density,
               order: int) -> float:
    """Average of ``density`` over equiprobable Gaussian components centred at ``means``."""
    offsets, weights = _gh_offsets(order, p.sigma2)
    total = 0.0
    for mu, lab in zip(means, labels):
        y = mu + offsets
        v = density(y, np.full(y.shape, lab), p)
        total += float(np.dot(weights, v))
    return total / len(means)


def _quad(p: ChannelParams, density, order: int, relay: bool) -> tuple[float, float]:
    if relay:
        size = p.constellation.size
        means = p.superposed_means.ravel()  # row index is z
        labels = np.repeat(np.arange(size), size)
    else:
        means = p.constellation.points
        labels = np.arange(p.constellation.size)
    fine = _quad_mean(means, labels, p, density, order)
    coarse = _quad_mean(means, labels, p, density, max(order // 2, 2))
    return fine, abs(fine - coarse)


# -- public API ------------------------------------------------------------------------


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sir_caf(p: ChannelParams, method: str = "mc", samples: int = DEFAULT_SAMPLES, rng=None,
            order: int = DEFAULT_ORDER) -> SirEstimate:
    """``I(Y;Z)`` of the degraded XOR channel, in bits per channel use."""
    if method == "quad":
        mean, err = _quad(p, _caf_density, order, relay=True)
    elif method == "mc":
        mean, err = _mc_relay(p, _caf_density, samples, _rng(rng))
    else:
        raise ValueError(f"unknown backend {method!r}")
    return SirEstimate(mean * LOG2E, err * LOG2E, method)


def sir_sd(p: ChannelParams, method: str = "mc", samples: int = DEFAULT_SAMPLES, rng=None,
           order: int = DEFAULT_ORDER) -> SirEstimate:
    """Per-user joint rate ``I(Y; X_A, X_B) / 2`` of the MAC phase, in bits per channel use."""
    if method == "quad":
        mean, err = _quad(p, _sd_density, order, relay=True)
    elif method == "mc":
        mean, err = _mc_relay(p, _sd_density, samples, _rng(rng))
    else:
        raise ValueError(f"unknown backend {method!r}")
    h_y = mean * LOG2E
    return SirEstimate(0.5 * (h_y - _noise_entropy_bits(p.sigma2)), 0.5 * err * LOG2E, method)


def sir_single(p: ChannelParams, method: str = "mc", samples: int = DEFAULT_SAMPLES, rng=None,
               order: int = DEFAULT_ORDER) -> SirEstimate:
    """``I(Y; X)`` of the single-user complex AWGN channel with uniform labels."""
    if p.scheme != "single":
        p = ChannelParams(p.constellation, p.sigma2, p.theta, "single")
    if method == "quad":
        mean, err = _quad(p, _single_density, order, relay=False)
    elif method == "mc":
        mean, err = _mc_single(p, samples, _rng(rng))
    else:
        raise ValueError(f"unknown backend {method!r}")
    return SirEstimate(mean * LOG2E, err * LOG2E, method)


SIR_FUNCTIONS = {"caf": sir_caf, "sd": sir_sd, "single": sir_single}
_SCHEME_FOR = {"caf": "caf", "sd": "mac", "single": "single"}


def channel_for(which: str, c: Constellation, psnr_db: float, theta: float = 0.0) -> ChannelParams:
    return ChannelParams(c, psnr_to_sigma2(psnr_db, c), theta, _SCHEME_FOR[which])


@dataclass(frozen=True)
class SweepPoint:
    scheme: str
    modulation: str
    theta: float
    psnr_db: float
    estimate: SirEstimate


def _sweep_point(which, c, theta, psnr, method, samples, ss, order):
    p = channel_for(which, c, psnr, theta)
    est = SIR_FUNCTIONS[which](p, method=method, samples=samples, rng=np.random.default_rng(ss), order=order)
    return SweepPoint(which, c.name, float(theta), float(psnr), est)


def sweep(which: str, c: Constellation, thetas: Iterable[float], psnrs: Iterable[float],
          method: str = "mc", samples: int = DEFAULT_SAMPLES, seed=None,
          order: int = DEFAULT_ORDER, workers: int = 1) -> list[SweepPoint]:
    """Evaluate one SIR over the Cartesian product of ``thetas`` and ``psnrs``.

    Every grid point gets its own RNG stream spawned from ``seed``, so the results do
    not depend on evaluation order or on ``workers``.
    """
    if which not in SIR_FUNCTIONS:
        raise ValueError(f"unknown scheme {which!r}")
    grid = [(t, s) for t in thetas for s in psnrs]
    if not grid:
        raise ValueError("empty sweep grid")
    streams = np.random.SeedSequence(seed).spawn(len(grid))
    jobs = [(which, c, t, s, method, samples, ss, order) for (t, s), ss in zip(grid, streams)]
    if workers <= 1:
        return [_sweep_point(*job) for job in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_sweep_point, *zip(*jobs)))


def psnr_at_rate(which: str, c: Constellation, rate: float, theta: float = 0.0,
                 lo: float = -15.0, hi: float = 40.0, order: int = DEFAULT_ORDER,
                 xtol: float = 1e-4) -> float:
    """PSNR (dB) at which the quadrature SIR of ``which`` equals ``rate``."""
    fn = SIR_FUNCTIONS[which]

    def gap(psnr):
        return fn(channel_for(which, c, psnr, theta), method="quad", order=order).value - rate

    return brentq(gap, lo, hi, xtol=xtol)
