"""The q-ary multi-bit channel (QMBC).

A symbol ``x`` suffers a partial erasure of type ``j`` with probability
``eps[j]``; the receiver then learns only the top ``s - j`` bits, i.e. the
block of ``2^j`` consecutive integers containing ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gf import FieldParams, channel_mask, field_for


@dataclass(frozen=True)
class QmbcParams:
    """Channel parameters; ``epsilon[j-1]`` is the type-``j`` probability."""

    field: FieldParams
    epsilon: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon)
        if len(eps) != self.field.s:
            raise ValueError(f"expected {self.field.s} erasure probabilities, got {len(eps)}")
        if any(e < 0 for e in eps) or sum(eps) > 1 + 1e-12:
            raise ValueError(f"invalid erasure probabilities {eps}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def make(cls, s: int, epsilon: Sequence[float]) -> "QmbcParams":
        return cls(field_for(s), tuple(epsilon))

    @property
    def s(self) -> int:
        return self.field.s

    @property
    def eps0(self) -> float:
        return max(0.0, 1.0 - sum(self.epsilon))

    @property
    def full(self) -> np.ndarray:
        """Probabilities of types ``0..s``."""
        return np.array((self.eps0,) + self.epsilon)


@dataclass(frozen=True)
class ChannelOutput:
    """Per-symbol erasure type and observed set (as a ``uint64`` mask)."""

    types: np.ndarray
    sets: np.ndarray

    def __len__(self) -> int:
        return len(self.types)


def sample_types(params: QmbcParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Erasure types for ``n`` symbols; symbol ``i`` consumes the ``i``-th uniform draw."""
    u = rng.random(n)
    cdf = np.cumsum(params.full)
    return np.minimum(np.searchsorted(cdf, u, side="right"), params.s).astype(np.int64)


def observed_sets(codeword: np.ndarray, types: np.ndarray, s: int) -> np.ndarray:
    codeword = np.asarray(codeword, dtype=np.int64)
    types = np.asarray(types, dtype=np.int64)
    block = np.array([channel_mask(j, s) for j in range(s + 1)], dtype=np.uint64)
    low = (np.int64(1) << types) - 1
    start = codeword & ~low
    return block[types] << start.astype(np.uint64)


def transmit(codeword: Sequence[int], params: QmbcParams, rng: np.random.Generator | int) -> ChannelOutput:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    codeword = np.asarray(codeword, dtype=np.int64)
    types = sample_types(params, len(codeword), rng)
    return ChannelOutput(types, observed_sets(codeword, types, params.s))


def capacity(params: QmbcParams) -> float:
    """Capacity in q-ary symbols per channel use."""
    s = params.s
    return 1.0 - sum(j * e for j, e in enumerate(params.epsilon, start=1)) / s


def mutual_information_numeric(params: QmbcParams, p: Sequence[float]) -> float:
    """I(X;Y) in bits for input distribution ``p``, by enumerating output sets."""
    p = np.asarray(p, dtype=float)
    q = params.field.q
    if p.shape != (q,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("input distribution must be a probability vector of length q")
    eps = params.full

    def plogp(v):
        v = np.asarray(v, dtype=float)
        v = v[v > 0]
        return float(np.sum(v * np.log2(v)))

    h_y = 0.0
    for j, e in enumerate(eps):
        if e == 0:
            continue
        blocks = p.reshape(q >> j, 1 << j).sum(axis=1)
        h_y -= plogp(e * blocks)
    h_y_given_x = -plogp(eps)
    return h_y - h_y_given_x
