"""Successive-cancellation decoding over LLRs, plus the genie-aided variant.

The decoder runs the standard depth-first schedule iteratively with one LLR
and one partial-sum buffer per tree depth (O(N) working memory) and is
vectorized over a leading batch axis: decisions are data, not control flow,
so a whole batch moves through the schedule together.

Input LLRs are aligned to codeword positions (0-based, punctured = 0); the
decoder internally applies the same bit-reversal as the encoder so decisions
come out in natural input order.  An LLR of exactly 0 decides bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import PolarCodeSpec, bit_reversal_permutation

__all__ = ["DecodeResult", "check_llr", "var_llr", "sc_decode", "genie_sc_decode"]


def check_llr(a, b, min_sum: bool = False) -> np.ndarray:
    """Check-node LLR combination; exact tanh rule unless ``min_sum``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if min_sum:
        return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    # log((1 + e^{a+b}) / (e^a + e^b)), stable at any magnitude
    return np.logaddexp(0.0, a + b) - np.logaddexp(a, b)


def var_llr(a, b, u_hat) -> np.ndarray:
    """Variable-node update: b + (1 - 2*u_hat) * a."""
    return np.asarray(b, dtype=float) + (1.0 - 2.0 * np.asarray(u_hat)) * np.asarray(a, dtype=float)


@dataclass
class DecodeResult:
    """Decided input block and its information bits (batch leading axes)."""

    u: np.ndarray
    info_bits: np.ndarray


def _sc_engine(llrs: np.ndarray, spec: PolarCodeSpec, min_sum: bool,
               true_u: np.ndarray | None):
    """Shared SC schedule.

    With ``true_u`` given, runs genie-aided: records whether each fresh
    decision differs from the truth, then continues from the true bit.
    Returns (decisions, flags, leaf_llrs) with flags None in plain mode.
    """
    N = spec.N
    n = spec.n
    B = llrs.shape[0]
    L: list[np.ndarray | None] = [None] * (n + 1)
    L[0] = llrs[:, bit_reversal_permutation(n)]
    bits: list[np.ndarray | None] = [None] * (n + 1)
    frozen = spec.frozen_mask
    dec = np.zeros((B, N), dtype=np.uint8)
    flags = np.zeros((B, N), dtype=bool) if true_u is not None else None
    leaf = np.zeros((B, N))

    for j in range(N):
        if j == 0:
            d0 = 1
        else:
            d0 = n - (j & -j).bit_length() + 1
            a = L[d0 - 1][:, : N >> d0]
            b = L[d0 - 1][:, N >> d0 : N >> (d0 - 1)]
            L[d0] = var_llr(a, b, bits[d0])
            d0 += 1
        for d in range(d0, n + 1):
            a = L[d - 1][:, : N >> d]
            b = L[d - 1][:, N >> d : N >> (d - 1)]
            L[d] = check_llr(a, b, min_sum)
        leaf[:, j] = L[n][:, 0]
        if frozen[j]:
            fresh = np.zeros(B, dtype=np.uint8)
        else:
            fresh = (L[n][:, 0] < 0).astype(np.uint8)
        if true_u is not None:
            flags[:, j] = fresh != true_u[:, j]
            chosen = true_u[:, j].astype(np.uint8)
        else:
            chosen = fresh
        dec[:, j] = chosen
        cur = chosen[:, None].copy()
        d = n
        while d > 0 and (j >> (n - d)) & 1:
            cur = np.concatenate([bits[d] ^ cur, cur], axis=1)
            d -= 1
        if d > 0:
            bits[d] = cur
    return dec, flags, leaf


def _as_batch(llrs, N: int):
    llrs = np.asarray(llrs, dtype=float)
    if llrs.shape[-1] != N:
        raise ValueError(f"LLR length {llrs.shape[-1]} does not match N = {N}")
    squeeze = llrs.ndim == 1
    return (llrs[None, :] if squeeze else llrs.reshape(-1, N)), squeeze, llrs.shape[:-1]


def sc_decode(llrs, spec: PolarCodeSpec, min_sum: bool = False) -> DecodeResult:
    """Decode codeword-aligned LLRs; accepts (N,) or any (..., N) batch."""
    batch, squeeze, lead = _as_batch(llrs, spec.N)
    dec, _, _ = _sc_engine(batch, spec, min_sum, None)
    info = dec[:, spec.info_zero_based]
    if squeeze:
        return DecodeResult(u=dec[0], info_bits=info[0])
    return DecodeResult(u=dec.reshape(lead + (spec.N,)),
                        info_bits=info.reshape(lead + (spec.k,)))


def genie_sc_decode(llrs, spec: PolarCodeSpec, true_u, min_sum: bool = False,
                    return_leaf_llrs: bool = False):
    """Per-position first-decision error flags under genie-aided decoding.

    With ``return_leaf_llrs`` the per-position decision LLRs come back too
    (the channel each input sees, with every earlier decision correct).
    """
    batch, squeeze, lead = _as_batch(llrs, spec.N)
    tu = np.asarray(true_u, dtype=np.uint8)
    if tu.shape[-1] != spec.N:
        raise ValueError(f"true_u length {tu.shape[-1]} does not match N = {spec.N}")
    tu = tu[None, :] if tu.ndim == 1 else tu.reshape(-1, spec.N)
    if tu.shape[0] != batch.shape[0]:
        raise ValueError("true_u batch does not match llrs batch")
    _, flags, leaf = _sc_engine(batch, spec, min_sum, tu)
    flags_out = flags[0] if squeeze else flags.reshape(lead + (spec.N,))
    if not return_leaf_llrs:
        return flags_out
    leaf_out = leaf[0] if squeeze else leaf.reshape(lead + (spec.N,))
    return flags_out, leaf_out
