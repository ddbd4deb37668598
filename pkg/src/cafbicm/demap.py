"""Bit-level BICM demapping.

The LLR convention is ``ln L[y|1] / L[y|0]`` throughout: a positive value favours bit 1.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .channel import ChannelParams, log_pdf_degraded_all, log_pdf_single_all
from .modulation import label_bits

LLR_MAX = 50.0


def _log_symbol_likelihoods(y, p: ChannelParams) -> np.ndarray:
    if p.scheme == "single":
        return log_pdf_single_all(y, p)
    return log_pdf_degraded_all(y, p)


def _bit_masks(k: int) -> np.ndarray:
    # masks[s, u, v] is True when bit s+1 of label v equals u
    bits = label_bits(k).T  # (K, 2**K)
    return np.stack([bits == 0, bits == 1], axis=1)


def log_bit_likelihoods(y, p: ChannelParams) -> np.ndarray:
    """``log L_s[y|u]`` for all bit positions and both bit values; shape ``y.shape + (K, 2)``.

    For ``p.scheme == "single"`` the symbol density is ``p_{Y|X}``; otherwise it is the
    degraded XOR-channel density ``p_{Y|Z}``.
    """
    logp = _log_symbol_likelihoods(y, p)
    masks = _bit_masks(p.k)
    stacked = np.where(masks, logp[..., None, None, :], -np.inf)
    return logsumexp(stacked, axis=-1) - (p.k - 1) * np.log(2.0)


def _clamp(llr):
    return np.clip(llr, -LLR_MAX, LLR_MAX)


def llr_all(y, p: ChannelParams) -> np.ndarray:
    """Clamped LLRs of every bit position; shape ``y.shape + (K,)``, column ``s-1`` holds bit ``s``."""
    lb = log_bit_likelihoods(y, p)
    return _clamp(lb[..., 1] - lb[..., 0])


def llr_bit(y, s, p: ChannelParams):
    """LLR of bit position ``s`` (1-based; scalar or array broadcast against ``y``)."""
    out = llr_all(y, p)
    s = np.broadcast_to(np.asarray(s) - 1, np.shape(y))
    return np.take_along_axis(out, s[..., None], axis=-1)[..., 0]


def _check_bit_index(s: int, k: int):
    if not 1 <= s <= k:
        raise IndexError(f"bit index s={s} outside 1..{k}")


def _likelihood(y, s: int, u: int, p: ChannelParams):
    _check_bit_index(s, p.k)
    return np.exp(log_bit_likelihoods(y, p)[..., s - 1, u])


def likelihood_single(y, s: int, u: int, p: ChannelParams):
    """``L~_s[y|u]``: average of ``p_{Y|X}(y|x)`` over labels whose bit ``s`` is ``u``."""
    if p.scheme != "single":
        raise ValueError("likelihood_single requires a single-user channel")
    return _likelihood(y, s, u, p)


def likelihood_caf(y, s: int, u: int, p: ChannelParams):
    """``L_s[y|u]``: average of ``p_{Y|Z}(y|z)`` over XOR labels whose bit ``s`` is ``u``."""
    if p.scheme == "single":
        raise ValueError("likelihood_caf requires a relay (caf/mac) channel")
    return _likelihood(y, s, u, p)


def llr_single(y, s: int, p: ChannelParams):
    if p.scheme != "single":
        raise ValueError("llr_single requires a single-user channel")
    _check_bit_index(s, p.k)
    return llr_all(y, p)[..., s - 1]


def llr_caf(y, s: int, p: ChannelParams):
    if p.scheme == "single":
        raise ValueError("llr_caf requires a relay (caf/mac) channel")
    _check_bit_index(s, p.k)
    return llr_all(y, p)[..., s - 1]
