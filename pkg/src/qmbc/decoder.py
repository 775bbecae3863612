"""Set-message iterative decoding, binary peeling and exact ML erasure decoding."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .channel import ChannelOutput
from .code import TannerGraph
from .gf import MAX_TABLE_S, FieldParams, SizeLimitError, channel_mask, swap_constants

OUTCOMES = {kernels.SUCCESS: "success", kernels.STALLED: "stalled",
            kernels.ITERATION_LIMIT: "iteration-limit"}

DEFAULT_MAX_ITERS = 100


@dataclass
class DecodeResult:
    final_sets: np.ndarray
    iterations: int
    outcome: str
    trace: list = field(default_factory=list, repr=False)

    @property
    def resolved(self) -> np.ndarray:
        f = self.final_sets
        return (f & (f - np.uint64(1))) == 0

    @property
    def num_unresolved(self) -> int:
        return int(np.count_nonzero(~self.resolved))


@lru_cache(maxsize=8)
def _field_arrays(field: FieldParams):
    if field.s > MAX_TABLE_S:
        raise SizeLimitError(f"set decoding supports q <= 64, got q={field.q}")
    mul = np.ascontiguousarray(field.mul_table, dtype=np.int64)
    inv = np.ascontiguousarray(field.inv_table, dtype=np.int64)
    full = np.uint64(channel_mask(field.s, field.s))
    return mul, inv, swap_constants(field.s), full


def _received_sets(received, n: int) -> np.ndarray:
    sets = received.sets if isinstance(received, ChannelOutput) else received
    sets = np.ascontiguousarray(sets, dtype=np.uint64)
    if sets.shape != (n,):
        raise ValueError(f"received vector has length {len(sets)}, graph has {n} variables")
    return sets


def decode(graph: TannerGraph, received: ChannelOutput | np.ndarray,
           max_iters: int = DEFAULT_MAX_ITERS, trace: bool = False,
           backend: str | None = None) -> DecodeResult:
    """Flooding set-message decoder.

    Check-to-variable messages are sumsets of the other incoming messages
    scaled by label ratios; variable-to-check messages intersect the channel
    set with the other incoming check messages.  Stops at success, at a fixed
    point ("stalled"), or after ``max_iters`` iterations.

    With ``trace=True`` the result carries ``(iteration, ctv, vtc)`` snapshots
    of every per-edge message after each iteration.
    """
    channel = _received_sets(received, graph.n)
    mul, inv, swaps, full = _field_arrays(graph.field)
    flood = kernels.get("flood", backend)
    vtc = channel[graph.edge_var].copy()
    ctv = np.full(graph.num_edges, full, dtype=np.uint64)
    final = np.empty(graph.n, dtype=np.uint64)
    args = (vtc, ctv, final, channel, graph.edge_label, graph.check_edges,
            graph.var_edges, mul, inv, swaps, full)
    if not trace:
        iters, status = flood(*args, max_iters)
        return DecodeResult(final, int(iters), OUTCOMES[int(status)])
    snapshots = []
    total = 0
    status = kernels.ITERATION_LIMIT
    while total < max_iters:
        iters, status = flood(*args, 1)
        if iters == 0:
            break
        total += 1
        snapshots.append((total, ctv.copy(), vtc.copy()))
        if status != kernels.ITERATION_LIMIT:
            break
    if total == 0:
        status = kernels.SUCCESS
    return DecodeResult(final, total, OUTCOMES[int(status)], snapshots)


def trace_rows(result: DecodeResult):
    """Flatten a trace into ``(iteration, edge, direction, mask)`` rows."""
    for it, ctv, vtc in result.trace:
        for e, mval in enumerate(ctv):
            yield it, e, "ctv", int(mval)
        for e, mval in enumerate(vtc):
            yield it, e, "vtc", int(mval)


def peel_binary(graph: TannerGraph, erased, backend: str | None = None) -> np.ndarray:
    """Binary erasure peeling on the topology of ``graph``.

    Returns a boolean mask of the variables left erased, which is the largest
    stopping set inside ``erased``.
    """
    erased = np.asarray(erased)
    if erased.dtype != bool:
        mask = np.zeros(graph.n, dtype=bool)
        mask[erased.astype(np.int64)] = True
        erased = mask
    if erased.shape != (graph.n,):
        raise ValueError("erasure mask length does not match the graph")
    peel = kernels.get("peel", backend)
    return peel(np.ascontiguousarray(erased), graph.check_edges, graph.edge_var,
                graph.var_edges, graph.edge_check)


def is_stopping_set(graph: TannerGraph, members) -> bool:
    """Every check adjacent to ``members`` sees it at least twice."""
    sel = np.zeros(graph.n, dtype=bool)
    sel[np.asarray(list(members), dtype=np.int64)] = True
    hits = np.bincount(graph.edge_check[sel[graph.edge_var]], minlength=graph.m)
    return not np.any(hits == 1)


class MLOutcome(enum.Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"


def expanded_matrix(h: np.ndarray, types: np.ndarray, field: FieldParams) -> np.ndarray:
    """GF(2) image of the erased unknowns.

    Column ``(i, b)`` is the bit expansion of ``H[:, i] * alpha**b`` for every
    erased position ``i`` and ``b < types[i]``; rows are ``s`` bits per check.
    """
    h = np.asarray(h, dtype=np.int64)
    types = np.asarray(types, dtype=np.int64)
    cols = [(i, b) for i in np.flatnonzero(types) for b in range(types[i])]
    if not cols:
        return np.zeros((h.shape[0] * field.s, 0), dtype=np.uint8)
    idx = np.array([c[0] for c in cols])
    coef = np.array([1 << c[1] for c in cols])
    vals = field.mul_table[h[:, idx], coef[None, :]].astype(np.int64)
    bits = (vals[:, None, :] >> np.arange(field.s)[None, :, None]) & 1
    return bits.reshape(h.shape[0] * field.s, len(cols)).astype(np.uint8)


def ml_unique(h: np.ndarray, types, field: FieldParams, backend: str | None = None) -> bool:
    """True when the only consistent null-space vector of ``H_E`` is zero."""
    mat = expanded_matrix(h, types, field)
    if mat.shape[1] == 0:
        return True
    if mat.shape[1] > mat.shape[0]:
        return False
    rank = kernels.get("gf2_rank", backend)(np.ascontiguousarray(mat))
    return int(rank) == mat.shape[1]


def ml_decode(graph: TannerGraph, received: ChannelOutput | Sequence[int],
              backend: str | None = None) -> MLOutcome:
    """ML erasure decoding outcome; ``received`` is a ChannelOutput or a type vector."""
    types = received.types if isinstance(received, ChannelOutput) else np.asarray(received)
    if len(types) != graph.n:
        raise ValueError("received vector length does not match the graph")
    ok = ml_unique(graph.dense(), types, graph.field, backend)
    return MLOutcome.UNIQUE if ok else MLOutcome.AMBIGUOUS


def check_locally_resolvable(labels: Sequence[int], types: Sequence[int], field: FieldParams) -> bool:
    """Brute force: is ``sum h_i x_i = 0`` with ``x_i`` in ``M_0^{type_i}`` only solved by zero?"""
    if len(labels) != len(types):
        raise ValueError("labels and types differ in length")
    ranges = [range(1 << int(j)) for j in types]
    mul = field.mul_table
    for xs in itertools.product(*ranges):
        if not any(xs):
            continue
        acc = 0
        for h, x in zip(labels, xs):
            acc ^= int(mul[h, x])
        if acc == 0:
            return False
    return True
