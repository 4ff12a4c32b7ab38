"""Hamming-weight-k subspace indexing.

Basis states are the weight-``k`` bitmasks over ``n`` bits, ordered colex
(which for bitmasks with bit 0 least significant is plain ascending integer
order). Ranks use the combinatorial number system: the set bits
``c_1 < c_2 < ... < c_k`` rank to ``sum_i C(c_i, i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ResourceCapError
from .graph import iter_bits, popcount

MAX_DIM = 2_000_000


def _binomial_table(n: int) -> np.ndarray:
    table = np.zeros((n + 1, n + 2), dtype=np.int64)
    for a in range(n + 1):
        for b in range(a + 1):
            table[a, b] = comb(a, b)
    return table


def _next_same_weight(x: int) -> int:
    # Gosper's hack
    low = x & -x
    ripple = x + low
    return ripple | (((x ^ ripple) >> 2) // low)


@dataclass(frozen=True, eq=False)
class WeightKBasis:
    n: int
    k: int
    masks: np.ndarray = field(repr=False)
    binom: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.masks)

    @property
    def degree(self) -> int:
        """Johnson-graph degree k(n - k)."""
        return self.k * (self.n - self.k)

    def rank(self, mask: int) -> int:
        if popcount(mask) != self.k or mask >> self.n:
            raise ValueError(f"{mask:#b} is not a weight-{self.k} string on {self.n} bits")
        return sum(int(self.binom[c, i + 1]) for i, c in enumerate(iter_bits(mask)))

    def unrank(self, r: int) -> int:
        if not 0 <= r < self.dim:
            raise IndexError(f"rank {r} outside 0..{self.dim - 1}")
        mask = 0
        c = self.n - 1
        for i in range(self.k, 0, -1):
            while self.binom[c, i] > r:
                c -= 1
            r -= int(self.binom[c, i])
            mask |= 1 << c
            c -= 1
        return mask

    def rank_array(self, masks: np.ndarray) -> np.ndarray:
        """Vectorised ``rank`` for an integer array of weight-k masks."""
        masks = np.asarray(masks, dtype=np.int64)
        out = np.zeros(masks.shape, dtype=np.int64)
        seen = np.zeros(masks.shape, dtype=np.int64)
        for c in range(self.n):
            bit = (masks >> c) & 1
            seen += bit
            out += bit * self.binom[c, seen]
        return out

    def bits(self) -> np.ndarray:
        """``(dim, n)`` 0/1 matrix of the basis bitstrings."""
        return ((self.masks[:, None] >> np.arange(self.n)[None, :]) & 1).astype(np.int8)

    def neighbor_table(self) -> np.ndarray:
        """``(dim, k(n-k))`` int32 array of Johnson-neighbour ranks per basis state.

        Column order is (set bit ascending, unset bit ascending), matching
        :func:`johnson_neighbors`.
        """
        bits = self.bits().astype(bool)
        set_pos = np.nonzero(bits)[1].reshape(self.dim, self.k)
        unset_pos = np.nonzero(~bits)[1].reshape(self.dim, self.n - self.k)
        one = np.int64(1)
        swapped = (
            self.masks[:, None, None]
            ^ (one << set_pos)[:, :, None]
            ^ (one << unset_pos)[:, None, :]
        ).reshape(self.dim, self.degree)
        return self.rank_array(swapped).astype(np.int32)


def build_basis(n: int, k: int, max_dim: int = MAX_DIM) -> WeightKBasis:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n > 62:
        raise ResourceCapError("bitmask basis supports n <= 62")
    dim = comb(n, k)
    if dim > max_dim:
        raise ResourceCapError(f"C({n},{k}) = {dim} exceeds the dimension budget {max_dim}")
    masks = np.empty(dim, dtype=np.int64)
    x = (1 << k) - 1
    for r in range(dim):
        masks[r] = x
        if k:
            x = _next_same_weight(x)
    return WeightKBasis(n, k, masks, _binomial_table(n))


def johnson_neighbors(basis: WeightKBasis, mask: int) -> list[int]:
    """Masks reachable from ``mask`` by moving one set bit to one unset position."""
    if popcount(mask) != basis.k or mask >> basis.n:
        raise ValueError(f"{mask:#b} does not have weight {basis.k} on {basis.n} bits")
    unset = ~mask & ((1 << basis.n) - 1)
    return [mask ^ (1 << i) ^ (1 << j) for i in iter_bits(mask) for j in iter_bits(unset)]
