"""Complex AWGN channels: single-user, two-way relay MAC phase, and the degraded XOR channel.

All densities are evaluated in the log domain first (log-sum-exp over mixture
components) so that high-PSNR mixtures do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .modulation import BitLabel, Constellation, label_to_int

SCHEMES = ("single", "mac", "caf")


def psnr_to_sigma2(psnr_db: float, c: Constellation | None = None) -> float:
    """Noise variance for a peak SNR in dB; peak power is 1 for the built-in PSK sets."""
    peak = 1.0 if c is None else c.peak_power
    return peak * 10.0 ** (-psnr_db / 10.0)


def sigma2_to_psnr(sigma2: float, c: Constellation | None = None) -> float:
    peak = 1.0 if c is None else c.peak_power
    return 10.0 * np.log10(peak / sigma2)


def log_gaussian_pdf(w, mu, sigma2: float):
    """Log of the circular complex Gaussian density ``F_c(w; mu, sigma2)``."""
    d = np.asarray(w) - np.asarray(mu)
    return -np.log(np.pi * sigma2) - (d.real**2 + d.imag**2) / sigma2


def gaussian_pdf(w, mu, sigma2: float):
    return np.exp(log_gaussian_pdf(w, mu, sigma2))


def complex_noise(rng: np.random.Generator, sigma2: float, size=None):
    """Circular complex Gaussian noise; real and imaginary parts each have variance sigma2/2."""
    scale = np.sqrt(sigma2 / 2.0)
    return rng.normal(0.0, scale, size) + 1j * rng.normal(0.0, scale, size)


@dataclass(frozen=True)
class ChannelParams:
    constellation: Constellation
    sigma2: float
    theta: float = 0.0
    scheme: str = "caf"

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        object.__setattr__(self, "theta", float(np.mod(self.theta, 2 * np.pi)))

    @classmethod
    def from_psnr(cls, constellation: Constellation, psnr_db: float, theta: float = 0.0,
                  scheme: str = "caf") -> "ChannelParams":
        return cls(constellation, psnr_to_sigma2(psnr_db, constellation), theta, scheme)

    @property
    def k(self) -> int:
        return self.constellation.k

    @property
    def psnr_db(self) -> float:
        return sigma2_to_psnr(self.sigma2, self.constellation)

    @cached_property
    def superposed_means(self) -> np.ndarray:
        """``(2**K, 2**K)`` array; entry ``[z, a]`` is ``M(a) + M(z^a) e^{i theta}``."""
        size = self.constellation.size
        a = np.arange(size)
        b = a[None, :] ^ a[:, None]
        pts = self.constellation.points
        return pts[a][None, :] + pts[b] * np.exp(1j * self.theta)


def sample_single(x, p: ChannelParams, rng: np.random.Generator):
    """``y = M(x) + w`` for integer label(s) ``x``."""
    x = np.asarray(x)
    return p.constellation.points[x] + complex_noise(rng, p.sigma2, x.shape)


def sample_mac(x_a, x_b, p: ChannelParams, rng: np.random.Generator):
    """Relay observation ``M(x_A) + M(x_B) e^{i theta} + w`` for integer label arrays."""
    x_a = np.asarray(x_a)
    x_b = np.asarray(x_b)
    pts = p.constellation.points
    noiseless = pts[x_a] + pts[x_b] * np.exp(1j * p.theta)
    return noiseless + complex_noise(rng, p.sigma2, noiseless.shape)


def sample_degraded(z, p: ChannelParams, rng: np.random.Generator):
    """Degraded-channel output for XOR label(s) ``z``; ``x_A`` is drawn uniformly."""
    z = np.asarray(z)
    x_a = rng.integers(0, p.constellation.size, size=z.shape)
    return sample_mac(x_a, z ^ x_a, p, rng)


def log_pdf_degraded_all(y, p: ChannelParams) -> np.ndarray:
    """``log p_{Y|Z}(y|z)`` for every ``z``; shape ``y.shape + (2**K,)``."""
    y = np.asarray(y, dtype=complex)
    means = p.superposed_means
    comp = log_gaussian_pdf(y[..., None, None], means, p.sigma2)
    return logsumexp(comp, axis=-1) - np.log(p.constellation.size)


def pdf_degraded(y, z: BitLabel, p: ChannelParams):
    """Gaussian-mixture density of the degraded channel given the XOR label ``z``."""
    zi = label_to_int(z, p.k)
    y = np.asarray(y, dtype=complex)
    comp = log_gaussian_pdf(y[..., None], p.superposed_means[zi], p.sigma2)
    return np.exp(logsumexp(comp, axis=-1) - np.log(p.constellation.size))


def log_pdf_single_all(y, p: ChannelParams) -> np.ndarray:
    """``log p_{Y|X}(y|x)`` for every label ``x``; shape ``y.shape + (2**K,)``."""
    y = np.asarray(y, dtype=complex)
    return log_gaussian_pdf(y[..., None], p.constellation.points, p.sigma2)


def pdf_single(y, x: BitLabel, p: ChannelParams):
    xi = label_to_int(x, p.k)
    return gaussian_pdf(y, p.constellation.points[xi], p.sigma2)


def log_pdf_output(y, p: ChannelParams):
    """Log of the relay output density: uniform mixture over all ``2**(2K)`` transmit pairs.

    For the single-user scheme this is the uniform mixture over the ``2**K`` points.
    """
    if p.scheme == "single":
        comp = log_pdf_single_all(y, p)
        return logsumexp(comp, axis=-1) - np.log(p.constellation.size)
    comp = log_pdf_degraded_all(y, p)
    return logsumexp(comp, axis=-1) - np.log(p.constellation.size)


def pdf_output(y, p: ChannelParams):
    return np.exp(log_pdf_output(y, p))
