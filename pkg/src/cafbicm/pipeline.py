"""Monte Carlo link simulation of the LDPC-BICM compute-and-forward relay.

Both terminals encode with the same code and interleave with the same permutation;
the relay demaps bit LLRs of the XOR word and BP-decodes ``x_A xor x_B`` directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelParams, psnr_to_sigma2, sample_mac
from .demap import llr_all
from .ldpc import BPDecoder, CodeSpec, ParityCheckMatrix, random_codewords, sample_regular_code
from .modulation import make_constellation


@dataclass(frozen=True)
class Interleaver:
    """Bit permutation: ``apply(x)[i] == x[perm[i]]``."""

    perm: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("interleaver is not a permutation")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @property
    def size(self) -> int:
        return self.perm.size

    def apply(self, x):
        return np.asarray(x)[..., self.perm]

    def inverse(self, y):
        y = np.asarray(y)
        out = np.empty_like(y)
        out[..., self.perm] = y
        return out


def sample_interleaver(n_bits: int, rng: np.random.Generator) -> Interleaver:
    if n_bits < 1:
        raise ValueError("n_bits must be positive")
    return Interleaver(rng.permutation(n_bits))


class TrialResult(NamedTuple):
    frame_error: bool
    bit_errors: int
    iterations: int


def _pack_symbols(bits: np.ndarray, k: int) -> np.ndarray:
    # consecutive K bits form one symbol; the first bit of a group is bit s=1 (MSB)
    groups = bits.reshape(-1, k).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def run_caf_trial(h: ParityCheckMatrix, pi: Interleaver, p: ChannelParams, rng: np.random.Generator,
                  max_iters: int = 200, relay_interleaver: Interleaver | None = None,
                  decoder: BPDecoder | None = None) -> TrialResult:
    """One frame of the MAC phase: both terminals transmit, the relay decodes the XOR codeword.

    ``relay_interleaver`` defaults to ``pi``; passing a different permutation models a
    relay that is out of step with the terminals.
    """
    k = p.k
    if h.n % k:
        raise ValueError(f"code length {h.n} is not a multiple of K={k}")
    relay_pi = pi if relay_interleaver is None else relay_interleaver
    demap_params = p if p.scheme == "caf" else ChannelParams(p.constellation, p.sigma2, p.theta, "caf")

    x_a, x_b = random_codewords(h, 2, rng)
    target = x_a ^ x_b
    s_a = _pack_symbols(pi.apply(x_a), k)
    s_b = _pack_symbols(pi.apply(x_b), k)
    y = sample_mac(s_a, s_b, p, rng)
    llrs = relay_pi.inverse(llr_all(y, demap_params).reshape(-1))
    dec = decoder if decoder is not None else BPDecoder(h)
    res = dec.decode(llrs, max_iters)
    errors = int(np.count_nonzero(res.bits != target))
    return TrialResult(errors > 0, errors, res.iterations)


@dataclass(frozen=True)
class SimConfig:
    dv: int
    dc: int
    n_bits: int
    modulation: str = "qpsk"
    psnr_db: float = 10.0
    theta: float = math.pi / 4
    labeling: str = "gray"
    max_iters: int = 200
    fixed_code: bool = False

    def channel(self) -> ChannelParams:
        c = make_constellation(self.modulation, self.labeling)
        return ChannelParams(c, psnr_to_sigma2(self.psnr_db, c), self.theta, "caf")

    def code_spec(self) -> CodeSpec:
        return CodeSpec(self.dv, self.dc, self.n_bits, make_constellation(self.modulation).k)


@dataclass(frozen=True)
class FerEstimate:
    psnr_db: float
    trials: int
    frame_errors: int
    bit_errors: int
    n_bits: int

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.n_bits)

    @property
    def stderr(self) -> float:
        """Binomial standard error of the FER; the rule-of-three bound 3/trials when no errors occur."""
        if self.frame_errors == 0:
            return 3.0 / self.trials
        f = self.fer
        return math.sqrt(f * (1.0 - f) / self.trials)


def _run_trials(config: SimConfig, seeds, fixed) -> list[TrialResult]:
    p = config.channel()
    spec = config.code_spec()
    out = []
    decoder = None
    if fixed is not None:
        h, pi = fixed
        decoder = BPDecoder(h)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if fixed is None:
            h = sample_regular_code(spec, rng)
            pi = sample_interleaver(spec.n_bits, rng)
            dec = BPDecoder(h)
        else:
            dec = decoder
        out.append(run_caf_trial(h, pi, p, rng, config.max_iters, decoder=dec))
    return out


def estimate_fer(config: SimConfig, trials: int, seed=None, workers: int = 1) -> FerEstimate:
    """Frame and bit error rates of the XOR codeword over ``trials`` independent frames.

    Trial ``i`` uses its own RNG stream spawned from ``seed``, so results are identical
    for any ``workers`` count.  By default every trial draws a fresh code and
    interleaver; with ``config.fixed_code`` one pair is drawn up front and reused.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    root = np.random.SeedSequence(seed)
    code_seq, trial_seq = root.spawn(2)
    streams = trial_seq.spawn(trials)
    fixed = None
    if config.fixed_code:
        g = np.random.default_rng(code_seq)
        spec = config.code_spec()
        fixed = (sample_regular_code(spec, g), sample_interleaver(spec.n_bits, g))

    if workers <= 1:
        results = _run_trials(config, streams, fixed)
    else:
        chunks = [streams[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_trials, [config] * workers, chunks, [fixed] * workers))
        results = [r for part in parts for r in part]

    return FerEstimate(
        psnr_db=config.psnr_db,
        trials=trials,
        frame_errors=sum(r.frame_error for r in results),
        bit_errors=sum(r.bit_errors for r in results),
        n_bits=config.n_bits,
    )
