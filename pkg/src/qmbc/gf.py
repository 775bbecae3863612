"""Arithmetic in GF(2^s) and the algebra of additive subgroups.

Field elements are plain integers in ``[0, q)`` whose bit ``i`` is the
coefficient of ``alpha**i`` in the polynomial basis.  Sets of field elements
are ``q``-bit masks: bit ``x`` set means element ``x`` belongs to the set.
Masks are Python ints at this level; the kernels use ``uint64``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator

import numpy as np

# x+1, x^2+x+1, x^3+x+1, x^4+x+1, x^5+x^2+1, x^6+x+1, x^7+x+1, x^8+x^4+x^3+x^2+1
DEFAULT_POLYS = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101,
                 6: 0b1000011, 7: 0b10000011, 8: 0b100011101}

MAX_FIELD_S = 8
# Subgroup tables, decoder masks and DE are limited to single-word masks.
MAX_TABLE_S = 6


class SizeLimitError(ValueError):
    pass


def _poly_mulmod(a: int, b: int, poly: int, s: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> s & 1:
            a ^= poly
    return r


@dataclass(frozen=True)
class FieldParams:
    """GF(2^s) under a polynomial basis with ``alpha`` the class of ``x``.

    The multiplicative order of ``alpha`` is checked at construction, so a
    reducible or non-primitive polynomial is rejected.
    """

    s: int
    primitive_poly: int = 0
    exp: np.ndarray = field(init=False, repr=False, compare=False)
    log: np.ndarray = field(init=False, repr=False, compare=False)
    mul_table: np.ndarray = field(init=False, repr=False, compare=False)
    inv_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.s <= MAX_FIELD_S:
            raise SizeLimitError(f"extension degree s={self.s} outside [1, {MAX_FIELD_S}]")
        poly = self.primitive_poly or DEFAULT_POLYS[self.s]
        if poly >> self.s != 1:
            raise ValueError(f"polynomial {poly:#b} does not have degree {self.s}")
        object.__setattr__(self, "primitive_poly", poly)
        q = 1 << self.s
        alpha = 2 if self.s > 1 else 1
        exp = np.zeros(2 * q, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for k in range(q - 1):
            if log[x] != -1:
                raise ValueError(f"alpha has order {k} < q-1 under polynomial {poly:#b}")
            exp[k] = x
            log[x] = k
            x = _poly_mulmod(x, alpha, poly, self.s)
        if x != 1:
            raise ValueError(f"polynomial {poly:#b} is not primitive")
        exp[q - 1:2 * q - 2] = exp[:q - 1]
        mul = np.zeros((q, q), dtype=np.uint8 if q <= 256 else np.int64)
        for a in range(1, q):
            la = log[a]
            mul[a, 1:] = exp[la + log[1:]]
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
        for name, value in (("exp", exp), ("log", log), ("mul_table", mul), ("inv_table", inv)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def q(self) -> int:
        return 1 << self.s

    @property
    def alpha(self) -> int:
        return int(self.exp[1])

    def _check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element of GF({self.q})")
        return a

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[self._check(a), self._check(b)])

    def inv(self, a: int) -> int:
        if self._check(a) == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        if self._check(b) == 0:
            raise ZeroDivisionError(f"division by zero in GF({self.q})")
        return self.mul(a, self.inv_table[b])

    def power(self, k: int) -> int:
        """``alpha**k``."""
        return int(self.exp[k % (self.q - 1)])


@lru_cache(maxsize=None)
def field_for(s: int, primitive_poly: int = 0) -> FieldParams:
    return FieldParams(s, primitive_poly)


# ---------------------------------------------------------------------------
# bitmask sets

_WIDTH = 1 << MAX_FIELD_S
# _SWAP[k] selects the positions x < 256 with bit k of x clear.
_SWAP = tuple(sum(1 << x for x in range(_WIDTH) if not x >> k & 1) for k in range(MAX_FIELD_S))


def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for x in elements:
        m |= 1 << int(x)
    return m


def elements(mask: int) -> list[int]:
    out = []
    x = 0
    while mask:
        if mask & 1:
            out.append(x)
        mask >>= 1
        x += 1
    return out


def _iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def translate(mask: int, g: int) -> int:
    """Return ``{x ^ g : x in mask}`` by block swaps, one per set bit of ``g``."""
    for k in _iter_bits(g):
        b = 1 << k
        mask = ((mask & _SWAP[k]) << b) | ((mask >> b) & _SWAP[k])
    return mask


def sumset(a: int, b: int) -> int:
    """``{x + y : x in a, y in b}`` with addition in GF(2^s)."""
    if a == 0 or b == 0:
        raise ValueError("sumset of an empty set")
    if a.bit_count() > b.bit_count():
        a, b = b, a
    out = 0
    for x in _iter_bits(a):
        out |= translate(b, x)
    return out


def scale_set(field: FieldParams, g: int, a: int) -> int:
    """``{g * x : x in a}``."""
    if g == 0:
        raise ValueError("scaling by the zero element")
    row = field.mul_table[g]
    out = 0
    for x in _iter_bits(a):
        out |= 1 << int(row[x])
    return out


def rref_basis(vectors: Iterable[int]) -> tuple[int, ...]:
    """Reduced row-echelon GF(2) basis, pivots at the highest set bit, descending."""
    pivots: dict[int, int] = {}
    for v in vectors:
        v = int(v)
        for p in sorted(pivots, reverse=True):
            if v >> p & 1:
                v ^= pivots[p]
        if v:
            p = v.bit_length() - 1
            for k in pivots:
                if pivots[k] >> p & 1:
                    pivots[k] ^= v
            pivots[p] = v
    return tuple(pivots[p] for p in sorted(pivots, reverse=True))


def span_mask(basis: Iterable[int]) -> int:
    m = 1
    for v in basis:
        m |= translate(m, v)
    return m


def is_subgroup(mask: int) -> bool:
    if not mask & 1:
        return False
    return all(translate(mask, x) == mask for x in _iter_bits(mask))


@dataclass(frozen=True)
class Subgroup:
    """Additive subgroup, identified by its canonical RREF basis."""

    mask: int
    basis: tuple[int, ...]

    @classmethod
    def from_mask(cls, mask: int) -> "Subgroup":
        if not is_subgroup(mask):
            raise ValueError(f"mask {mask:#x} is not an additive subgroup")
        basis = rref_basis(_iter_bits(mask))
        return cls(mask, basis)

    @classmethod
    def spanned_by(cls, generators: Iterable[int]) -> "Subgroup":
        basis = rref_basis(generators)
        return cls(span_mask(basis), basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return 1 << len(self.basis)

    def elements(self) -> list[int]:
        return elements(self.mask)

    def reduce(self, g: int) -> int:
        """Minimum element of the coset ``self + g``."""
        for v in self.basis:
            if g >> (v.bit_length() - 1) & 1:
                g ^= v
        return g


@dataclass(frozen=True)
class Coset:
    subgroup: Subgroup
    representative: int

    @property
    def mask(self) -> int:
        return translate(self.subgroup.mask, self.representative)


def coset_decompose(mask: int) -> Coset | None:
    """Split ``mask`` as ``H + g`` with ``g`` minimal; ``None`` if it is not a coset."""
    if mask == 0:
        raise ValueError("empty set")
    size = mask.bit_count()
    if size & (size - 1):
        return None
    g = (mask & -mask).bit_length() - 1
    h = translate(mask, g)
    if not is_subgroup(h):
        return None
    sub = Subgroup.from_mask(h)
    return Coset(sub, sub.reduce(g))


def channel_mask(j: int, s: int) -> int:
    """Mask of the channel subgroup ``M_0^j``: the integers ``[0, 2^j)``."""
    if not 0 <= j <= s:
        raise ValueError(f"erasure type {j} outside [0, {s}]")
    return (1 << (1 << j)) - 1


def channel_subgroup(j: int, field: FieldParams) -> Subgroup:
    channel_mask(j, field.s)
    return Subgroup(channel_mask(j, field.s), tuple(1 << i for i in reversed(range(j))))


def gaussian_binomial(s: int, j: int) -> int:
    num = den = 1
    for i in range(1, j + 1):
        num *= (1 << s) - (1 << (i - 1))
        den *= (1 << j) - (1 << (i - 1))
    return num // den


def subgroup_count(s: int) -> int:
    return sum(gaussian_binomial(s, j) for j in range(s + 1))


# ---------------------------------------------------------------------------
# vectorised mask helpers shared by the table builder and the numpy kernels

def swap_constants(s: int) -> np.ndarray:
    q = 1 << s
    return np.array([sum(1 << x for x in range(q) if not x >> k & 1) for k in range(s)],
                    dtype=np.uint64)


def translate_np(masks: np.ndarray, g: int, swaps: np.ndarray) -> np.ndarray:
    out = masks
    for k in _iter_bits(int(g)):
        b = np.uint64(1 << k)
        out = ((out & swaps[k]) << b) | ((out >> b) & swaps[k])
    return out


class SubgroupTable:
    """All additive subgroups H_1..H_T of GF(2^s), ``H_1 = {0}``.

    Indices are zero-based: ``subgroups[0]`` is ``{0}``.  The ordering is by
    dimension, then by mask value.  ``scale``, ``span`` and ``meet`` map
    indices to indices and are built lazily on first access.
    """

    def __init__(self, field: FieldParams, max_s: int = MAX_TABLE_S):
        if field.s > max_s:
            raise SizeLimitError(f"subgroup table for s={field.s} exceeds limit s<={max_s}")
        self.field = field
        found = {1}
        frontier = [1]
        allmask = (1 << field.q) - 1
        for _ in range(field.s):
            nxt = set()
            for m in frontier:
                rest = allmask & ~m
                while rest:
                    low = rest & -rest
                    x = low.bit_length() - 1
                    grown = m | translate(m, x)
                    nxt.add(grown)
                    rest &= ~grown
            found |= nxt
            frontier = sorted(nxt)
        ordered = sorted(found, key=lambda m: (m.bit_count(), m))
        self.subgroups: list[Subgroup] = [Subgroup(m, rref_basis(_iter_bits(m))) for m in ordered]
        self.index: dict[int, int] = {m: i for i, m in enumerate(ordered)}
        self.by_basis: dict[tuple[int, ...], int] = {h.basis: i for i, h in enumerate(self.subgroups)}
        self.masks = np.array(ordered, dtype=np.uint64)
        self.dims = np.array([h.dim for h in self.subgroups], dtype=np.int64)
        self._order = np.argsort(self.masks)
        self._sorted = self.masks[self._order]

    @property
    def T(self) -> int:
        return len(self.subgroups)

    def __len__(self) -> int:
        return len(self.subgroups)

    def lookup(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        pos = np.searchsorted(self._sorted, masks)
        pos = np.minimum(pos, self.T - 1)
        if not np.all(self._sorted[pos] == masks):
            raise KeyError("mask is not a subgroup")
        return self._order[pos]

    @cached_property
    def channel_index(self) -> np.ndarray:
        return np.array([self.index[channel_mask(j, self.field.s)] for j in range(self.field.s + 1)],
                        dtype=np.int64)

    @cached_property
    def meet(self) -> np.ndarray:
        return self.lookup(self.masks[:, None] & self.masks[None, :])

    @cached_property
    def span(self) -> np.ndarray:
        swaps = swap_constants(self.field.s)
        out = np.empty((self.T, self.T), dtype=np.int64)
        for t2, h in enumerate(self.subgroups):
            m = self.masks.copy()
            for v in h.basis:
                m = m | translate_np(m, v, swaps)
            out[:, t2] = self.lookup(m)
        return out

    @cached_property
    def scale(self) -> np.ndarray:
        """``scale[g, t]`` = index of ``g * H_t``; row 0 is -1."""
        q = self.field.q
        out = np.full((q, self.T), -1, dtype=np.int64)
        one = np.uint64(1)
        for g in range(1, q):
            row = self.field.mul_table[g]
            m = np.zeros(self.T, dtype=np.uint64)
            for x in range(q):
                bit = (self.masks >> np.uint64(x)) & one
                m |= bit << np.uint64(row[x])
            out[g] = self.lookup(m)
        return out


def enumerate_subgroups(field: FieldParams, max_s: int = MAX_TABLE_S) -> SubgroupTable:
    return _cached_table(field.s, field.primitive_poly, max_s)


@lru_cache(maxsize=None)
def _cached_table(s: int, poly: int, max_s: int) -> SubgroupTable:
    return SubgroupTable(field_for(s, poly), max_s)
