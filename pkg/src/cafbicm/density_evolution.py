"""Density evolution for regular LDPC-BICM ensembles on asymmetric channels.

The message densities conditioned on the transmitted code bit (0 or 1) are tracked
separately, so the all-zero codeword assumption is never used.  Each conditional
density is represented by a population of ``N`` samples (population dynamics).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams, complex_noise, psnr_to_sigma2
from .demap import LLR_MAX
from .modulation import label_bits

log = logging.getLogger(__name__)

TANH_GUARD = 1e-15

# scale presets: population size and iteration cap
PRESETS = {"desk": {"population": 10_000, "iters": 500}, "full": {"population": 100_000, "iters": 2000}}


class InvalidBracketError(ValueError):
    """The PSNR bracket handed to the threshold search does not straddle the threshold."""


@dataclass
class Population:
    """Samples of the message densities conditioned on code bit 0 and code bit 1."""

    samples0: np.ndarray
    samples1: np.ndarray
    generation: int = 0

    def __post_init__(self):
        if self.samples0.shape != self.samples1.shape:
            raise ValueError("both classes must hold the same number of samples")

    @property
    def size(self) -> int:
        return self.samples0.shape[0]

    def samples(self, u: int) -> np.ndarray:
        return self.samples1 if u else self.samples0

    @classmethod
    def zeros(cls, n: int) -> "Population":
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass(frozen=True)
class DeParams:
    dv: int
    dc: int
    channel: ChannelParams
    population: int = PRESETS["full"]["population"]
    iters: int = PRESETS["full"]["iters"]
    eps: float | None = None  # defaults to 10 / population

    def __post_init__(self):
        if self.dv < 2 or self.dc <= self.dv:
            raise ValueError(f"need dv >= 2 and dc > dv, got ({self.dv}, {self.dc})")
        if self.population < 1000:
            raise ValueError("population must be at least 1000")
        if self.iters < 1:
            raise ValueError("iters must be positive")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def eps_stop(self) -> float:
        return self.eps if self.eps is not None else 10.0 / self.population

    @property
    def rate(self) -> float:
        return self.channel.k * (1.0 - self.dv / self.dc)

    def at_psnr(self, psnr_db: float) -> "DeParams":
        ch = self.channel
        return replace(self, channel=replace(ch, sigma2=psnr_to_sigma2(psnr_db, ch.constellation)))


class _ChannelLlrSampler:
    """Draws channel LLRs of a uniformly chosen bit position given that bit's value."""

    def __init__(self, p: ChannelParams):
        self.p = p
        self.k = p.k
        self.size = 1 << p.k
        if p.scheme == "single":
            self.means = p.constellation.points[:, None]  # (2^K, 1)
        else:
            self.means = p.superposed_means  # (2^K, 2^K), row = z
        self._ncomp = self.means.shape[1]
        flat = self.means.ravel()
        self._re = flat.real
        self._im = flat.imag
        # indicator of "bit s of the component's label is 1", one column per position
        comp_labels = np.repeat(label_bits(self.k), self._ncomp, axis=0)
        self._ones = comp_labels.astype(float)
        self._zeros = 1.0 - self._ones

    def sample_y(self, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = labels.shape[0]
        comp = rng.integers(0, self._ncomp, n)
        return self.means[labels, comp] + complex_noise(rng, self.p.sigma2, n)

    def llr_all(self, y: np.ndarray) -> np.ndarray:
        """Clamped LLRs of every bit position, shape (n, K)."""
        e = (y.real[:, None] - self._re) ** 2
        e += (y.imag[:, None] - self._im) ** 2
        e *= -1.0 / self.p.sigma2
        e -= e.max(axis=1, keepdims=True)
        np.exp(e, out=e)
        # both sums are taken directly: "total - ones" can round below zero and give NaN
        ones = e @ self._ones
        zeros = e @ self._zeros
        with np.errstate(divide="ignore"):
            llr = np.log(ones) - np.log(zeros)
        return np.clip(llr, -LLR_MAX, LLR_MAX)

    def draw(self, u: int, n: int, rng: np.random.Generator) -> np.ndarray:
        s = rng.integers(0, self.k, n)
        labels = rng.integers(0, self.size, n)
        # force bit s (0-based, MSB first) of the label to u
        shift = self.k - 1 - s
        labels = (labels & ~(1 << shift)) | (u << shift)
        y = self.sample_y(labels, rng)
        return np.take_along_axis(self.llr_all(y), s[:, None], axis=1)[:, 0]


def sample_channel_llr(u: int, p: ChannelParams, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """``n`` channel LLRs of a uniformly drawn bit position, given the bit equals ``u``.

    The remaining label bits are uniform; for the relay schemes the label is the XOR
    word ``z`` and ``x_A`` is drawn uniformly inside the channel.
    """
    return _ChannelLlrSampler(p).draw(int(u), n, rng)


def variable_update(pop: Population, channel: ChannelParams | _ChannelLlrSampler, dv: int,
                    rng: np.random.Generator) -> Population:
    """Variable-node rule: fresh channel LLR plus ``dv - 1`` incoming check messages of the same class."""
    sampler = channel if isinstance(channel, _ChannelLlrSampler) else _ChannelLlrSampler(channel)
    n = pop.size
    out = []
    for u in (0, 1):
        msg = sampler.draw(u, n, rng)
        if dv > 1:
            src = pop.samples(u)
            msg = msg + src[rng.integers(0, n, (n, dv - 1))].sum(axis=1)
        out.append(np.clip(msg, -LLR_MAX, LLR_MAX))
    return Population(out[0], out[1], pop.generation + 1)


def boxplus(tanh_half: np.ndarray, axis: int = -1) -> np.ndarray:
    """Check-node combination from ``tanh(m/2)`` values: ``2 atanh(prod)``, guarded and clamped."""
    prod = np.prod(tanh_half, axis=axis)
    prod = np.clip(prod, -1.0 + TANH_GUARD, 1.0 - TANH_GUARD)
    return np.clip(2.0 * np.arctanh(prod), -LLR_MAX, LLR_MAX)


def check_update(pop: Population, dc: int, rng: np.random.Generator) -> Population:
    """Check-node rule for both classes.

    For output class ``u`` the ``dc - 1`` incoming bits are uniform subject to their XOR
    being ``u``; each incoming message is drawn from the population of its own bit.
    With ``ln L1/L0`` messages the tanh product picks up a factor ``(-1)**dc``.
    """
    n = pop.size
    pool = np.tanh(np.concatenate([pop.samples0, pop.samples1]) / 2.0)
    sign = -1.0 if dc % 2 else 1.0
    out = []
    for u in (0, 1):
        bits = rng.integers(0, 2, (n, dc - 1), dtype=np.int64)
        parity = np.bitwise_xor.reduce(bits[:, :-1], axis=1) if dc > 2 else np.zeros(n, dtype=np.int64)
        bits[:, -1] = parity ^ u
        idx = rng.integers(0, n, (n, dc - 1)) + bits * n
        out.append(boxplus(pool[idx], axis=1) * sign)
    return Population(out[0], out[1], pop.generation)


def error_probability(pop: Population) -> float:
    """Bit error rate of a hard decision on the messages (ties count as half an error)."""
    s0, s1 = pop.samples0, pop.samples1
    wrong = np.mean(s0 > 0) + np.mean(s1 < 0)
    ties = np.mean(s0 == 0) + np.mean(s1 == 0)
    return float(0.5 * wrong + 0.25 * ties)


@dataclass
class DeResult:
    trajectory: list[float]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.trajectory)

    @property
    def final_error(self) -> float:
        return self.trajectory[-1]


def de_run(params: DeParams, rng: np.random.Generator) -> DeResult:
    """Run population dynamics until the error probability drops below ``eps_stop`` or ``iters`` is hit."""
    sampler = _ChannelLlrSampler(params.channel)
    eps = params.eps_stop
    q = Population.zeros(params.population)
    traj = []
    for _ in range(params.iters):
        p = variable_update(q, sampler, params.dv, rng)
        err = error_probability(p)
        traj.append(err)
        if err < eps:
            return DeResult(traj, True)
        q = check_update(p, params.dc, rng)
    return DeResult(traj, False)


@dataclass
class ThresholdResult:
    threshold_psnr_db: float
    bracket_lo: float
    bracket_hi: float
    history: list[tuple[float, bool, int]] = field(default_factory=list)


def find_threshold(params: DeParams, psnr_lo: float, psnr_hi: float, resolution_db: float = 0.02,
                   rng=None, check_bracket: bool = True) -> ThresholdResult:
    """Bisect the PSNR at which density evolution starts to succeed.

    Args:
        params: ensemble and channel; the channel's noise level is overridden per probe.
        psnr_lo: PSNR (dB) at which decoding must fail.
        psnr_hi: PSNR (dB) at which decoding must succeed.
        resolution_db: stop once the bracket is no wider than this.

    Returns:
        The midpoint of the final bracket together with the bracket and probe history.

    Raises:
        InvalidBracketError: if DE fails at ``psnr_hi`` or succeeds at ``psnr_lo``.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if psnr_lo >= psnr_hi:
        raise InvalidBracketError(f"psnr_lo={psnr_lo} must be below psnr_hi={psnr_hi}")
    history = []

    def probe(psnr):
        res = de_run(params.at_psnr(psnr), rng)
        history.append((psnr, res.converged, res.iterations))
        log.debug("psnr=%.4f converged=%s iters=%d err=%.3g", psnr, res.converged,
                  res.iterations, res.final_error)
        return res.converged

    lo, hi = psnr_lo, psnr_hi
    if check_bracket:
        if not probe(hi):
            raise InvalidBracketError(f"density evolution fails at the upper end {hi} dB")
        if probe(lo):
            raise InvalidBracketError(f"density evolution succeeds at the lower end {lo} dB")
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, history)


def shannon_limit_psnr(params: DeParams) -> float:
    """PSNR at which the symmetric information rate of the channel equals the design rate."""
    from .sir import psnr_at_rate

    which = "single" if params.channel.scheme == "single" else "caf"
    return psnr_at_rate(which, params.channel.constellation, params.rate, params.channel.theta)


def find_threshold_auto(params: DeParams, resolution_db: float = 0.02, rng=None,
                        width_db: float = 4.0, max_widen: int = 5) -> ThresholdResult:
    """Threshold search with the bracket anchored at the information-rate limit.

    BP cannot succeed below the SIR limit, so that PSNR is the lower end; the upper
    end starts ``width_db`` above it and is pushed up until density evolution succeeds.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    lo = shannon_limit_psnr(params)
    hi = lo + width_db
    for _ in range(max_widen):
        if de_run(params.at_psnr(hi), rng).converged:
            break
        lo, hi = hi, hi + width_db
    else:
        raise InvalidBracketError(f"density evolution still fails at {hi} dB")
    return find_threshold(params, lo, hi, resolution_db, rng=rng, check_bracket=False)
