"""Rate matching: column-permuted matrix reading with circular repetition.

The codeword is written row-wise into a 2^q x 2^p matrix (row-major), the
columns are permuted by the reverse of the base puncturing order, and the
transmitted bits are read column-wise from a start column, wrapping circularly
so any length L is reachable: L < N punctures (the first-punctured columns are
the last read), L > N repeats.

For QAM the touched columns are partitioned into the modulation's reliability
classes, earlier classes larger when the split is uneven; the bits of each
class feed that class's bit-position pair in the transmitted symbols.  Partial
class substreams are padded with zero bits known to the receiver, which never
enter the decoder's LLR accumulator.

Incremental-redundancy retransmissions move the start column and rotate the
class assignment with it; Chase retransmissions reuse transmission 1 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelSpec, ModulationSpec, demodulate, modulate, transmit
from .polar import PolarCodeSpec
from .puncturing import PuncturingSequence

__all__ = [
    "RateMatcher",
    "TxPlan",
    "TxMap",
    "arrange",
    "rate_match",
    "de_rate_match",
    "assign_bicm_columns",
    "build_tx_map",
    "transmit_codeword_llrs",
]


@dataclass(frozen=True)
class TxPlan:
    """One transmission: L bits, attempt r of at most t, Chase or IR."""

    L: int
    t: int
    r: int
    mode: str  # "cc" | "ir"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.t < 1 or not 1 <= self.r <= self.t:
            raise ValueError(f"need 1 <= r <= t, got r={self.r}, t={self.t}")
        if self.mode not in ("cc", "ir"):
            raise ValueError(f"unknown HARQ mode {self.mode!r}")


@dataclass(frozen=True)
class RateMatcher:
    """Immutable rate-matching structure for one code and modulation."""

    spec: PolarCodeSpec
    sequence: PuncturingSequence
    modulation: ModulationSpec
    shift_cc_bicm: bool = False   # also rotate class assignment under Chase

    def __post_init__(self):
        p, _ = self.spec.split
        if self.sequence.base_len != (1 << p):
            raise ValueError(
                f"sequence base length {self.sequence.base_len} does not match 2^p = {1 << p}")

    @property
    def read_columns(self) -> tuple[int, ...]:
        """Physical column of each reading slot: reverse puncturing order."""
        return tuple(reversed(self.sequence.order))

    def start_column(self, plan: TxPlan) -> int:
        """0-based reading slot where transmission r starts."""
        if plan.mode == "cc" or plan.r == 1:
            return 0
        p, _ = self.spec.split
        return ((plan.r - 1) * (1 << p)) // plan.t

    def bicm_shift(self, plan: TxPlan) -> int:
        """Slots by which the class assignment rotates for this transmission."""
        p, _ = self.spec.split
        if plan.mode == "ir":
            return 0  # the shift is already carried by the start column
        if self.shift_cc_bicm:
            return ((plan.r - 1) * (1 << p)) // plan.t
        return 0

    def post_interleave(self, emit_idx: np.ndarray, plan: TxPlan) -> np.ndarray:
        """Hook for an extra interleaver on the output stream; identity here.

        Subclasses may reorder the emitted positions (the receiver side
        inverts automatically because all index maps flow through this).
        """
        return emit_idx

    def emit_indices(self, plan: TxPlan) -> np.ndarray:
        _, q = self.spec.split
        base = _emit_indices(self.read_columns, q, plan.L, self.start_column(plan))
        return self.post_interleave(base, plan)


def arrange(codeword, rm: RateMatcher) -> np.ndarray:
    """Row-major 2^q x 2^p matrix view of the codeword (first row = x_1..x_2^p)."""
    p, q = rm.spec.split
    cw = np.asarray(codeword)
    if cw.shape[-1] != rm.spec.N:
        raise ValueError(f"codeword length {cw.shape[-1]} does not match N = {rm.spec.N}")
    return cw.reshape(cw.shape[:-1] + (1 << q, 1 << p))


@lru_cache(maxsize=512)
def _emit_indices(read_cols: tuple[int, ...], q: int, L: int, start_col: int) -> np.ndarray:
    """Flat codeword index of each transmitted bit (length L, circular)."""
    P = len(read_cols)
    k = np.arange(L, dtype=np.int64)
    slot = (start_col + k // (1 << q)) % P
    row = k % (1 << q)
    cols = np.asarray(read_cols, dtype=np.int64)
    idx = row * P + cols[slot]
    idx.setflags(write=False)
    return idx


def rate_match(codeword, rm: RateMatcher, plan: TxPlan) -> np.ndarray:
    """Select the L transmitted bits of one transmission."""
    cw = np.asarray(codeword)
    if cw.shape[-1] != rm.spec.N:
        raise ValueError(f"codeword length {cw.shape[-1]} does not match N = {rm.spec.N}")
    return cw[..., rm.emit_indices(plan)]


def de_rate_match(llrs, rm: RateMatcher, plan: TxPlan, accumulator) -> np.ndarray:
    """Add received LLRs into their codeword positions inside ``accumulator``.

    Repeated bits and retransmissions accumulate; positions never transmitted
    stay exactly 0.  The accumulator is modified in place and returned.
    """
    llrs = np.asarray(llrs, dtype=float)
    acc = accumulator
    if llrs.shape[-1] != plan.L:
        raise ValueError(f"LLR length {llrs.shape[-1]} does not match L = {plan.L}")
    if acc.shape[:-1] != llrs.shape[:-1] or acc.shape[-1] != rm.spec.N:
        raise ValueError("accumulator shape does not match LLR batch and N")
    idx = rm.emit_indices(plan)
    flat_acc = acc.reshape(-1, rm.spec.N)
    flat_llr = llrs.reshape(-1, plan.L)
    np.add.at(flat_acc, (np.arange(flat_acc.shape[0])[:, None], idx[None, :]), flat_llr)
    return acc


def _balanced_groups(n_items: int, n_groups: int) -> np.ndarray:
    """Class of each item: consecutive groups, as equal as possible, earlier larger."""
    out = np.empty(n_items, dtype=np.int64)
    start = 0
    for g, part in enumerate(np.array_split(np.arange(n_items), n_groups)):
        out[start : start + len(part)] = g
        start += len(part)
    return out


def assign_bicm_columns(rm: RateMatcher, plan: TxPlan) -> np.ndarray:
    """Reliability class of each touched column slot, in reading order."""
    _, q = rm.spec.split
    n_touched = -(-plan.L // (1 << q))
    n_classes = rm.modulation.n_subchannel_types
    if n_classes == 1:
        return np.zeros(n_touched, dtype=np.int64)
    classes = _balanced_groups(n_touched, n_classes)
    shift = rm.bicm_shift(plan)
    if shift:
        classes = np.roll(classes, shift)
    return classes


@dataclass(frozen=True)
class TxMap:
    """Precomputed index maps for one (rate matcher, plan) pair.

    ``emit_idx``: codeword position of each stream bit.
    ``stream_to_symbit``: flat symbol-bit slot of each stream bit; slots not
    hit are padding (zero bits, skipped at the receiver).
    """

    emit_idx: np.ndarray
    stream_to_symbit: np.ndarray
    n_symbols: int


@lru_cache(maxsize=512)
def _tx_map_cached(rm: RateMatcher, plan: TxPlan) -> TxMap:
    _, q = rm.spec.split
    idx = rm.emit_indices(plan)
    mod = rm.modulation
    B = mod.bits_per_symbol
    if not mod.is_qam:
        s2s = np.arange(plan.L, dtype=np.int64)
        return TxMap(emit_idx=idx, stream_to_symbit=s2s, n_symbols=plan.L)
    classes = assign_bicm_columns(rm, plan)
    k = np.arange(plan.L, dtype=np.int64)
    cls_of_bit = classes[k // (1 << q)]
    bpc = B // mod.n_subchannel_types
    counts = np.bincount(cls_of_bit, minlength=mod.n_subchannel_types)
    n_sym = int(max(-(-c // bpc) for c in counts)) if plan.L else 0
    s2s = np.empty(plan.L, dtype=np.int64)
    for c in range(mod.n_subchannel_types):
        pos = np.nonzero(cls_of_bit == c)[0]
        j = np.arange(len(pos), dtype=np.int64)
        s2s[pos] = (j // bpc) * B + c * bpc + (j % bpc)
    s2s.setflags(write=False)
    idx.setflags(write=False)
    return TxMap(emit_idx=idx, stream_to_symbit=s2s, n_symbols=n_sym)


def build_tx_map(rm: RateMatcher, plan: TxPlan) -> TxMap:
    return _tx_map_cached(rm, plan)


def transmit_codeword_llrs(
    codeword,
    rm: RateMatcher,
    plan: TxPlan,
    chan: ChannelSpec,
    rng,
    accumulator: np.ndarray | None = None,
    max_log: bool = False,
) -> np.ndarray:
    """Run one full transmission and fold its LLRs into the accumulator.

    rate-match -> class packing -> modulate -> channel -> per-bit LLRs ->
    unpack -> accumulate.  Returns the accumulator (created zeroed if None).
    """
    cw = np.asarray(codeword)
    if chan.kind == "bec" and rm.modulation.is_qam:
        raise ValueError("erasure channel supports BPSK only")
    tm = build_tx_map(rm, plan)
    mod = rm.modulation
    stream = cw[..., tm.emit_idx]
    sym_bits = np.zeros(cw.shape[:-1] + (tm.n_symbols * mod.bits_per_symbol,), dtype=np.uint8)
    sym_bits[..., tm.stream_to_symbit] = stream
    syms = modulate(sym_bits, mod)
    y, amp = transmit(syms, chan, mod, rng)
    llr_sym = demodulate(y, amp, chan, mod, max_log=max_log)
    llr_stream = llr_sym[..., tm.stream_to_symbit]
    if accumulator is None:
        accumulator = np.zeros(cw.shape[:-1] + (rm.spec.N,), dtype=float)
    return de_rate_match(llr_stream, rm, plan, accumulator)
