"""Random graphs, exact clique search, and instance classification.

Vertices are 0-based internally and 1-based in every serialized form. A vertex
subset is an ``int`` bitmask with bit ``i`` standing for vertex ``i + 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import ResourceCapError, SamplingCapError

#: Identifies the graph generator; bump if the bit layout ever changes.
RNG_NAME = "philox4x64-lsb-v1"

MAX_CLASSIFY_N = 24
_MASK64 = (1 << 64) - 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def subset_mask(vertices: Iterable[int]) -> int:
    """Bitmask of a collection of 1-based vertex labels."""
    mask = 0
    for v in vertices:
        if v < 1:
            raise ValueError(f"vertex labels are 1-based, got {v}")
        mask |= 1 << (v - 1)
    return mask


def mask_vertices(mask: int) -> tuple[int, ...]:
    """1-based vertex labels contained in ``mask``, ascending."""
    return tuple(b + 1 for b in iter_bits(mask))


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``n`` vertices.

    ``rows[i]`` is the bitmask of neighbours of vertex ``i`` (0-based).
    ``seed`` is the generator seed, 0 for handcrafted graphs.
    """

    n: int
    rows: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        if len(self.rows) != self.n:
            raise ValueError("one adjacency row per vertex required")
        full = (1 << self.n) - 1
        for i, row in enumerate(self.rows):
            if row & ~full or (row >> i) & 1:
                raise ValueError(f"row {i} has bits outside the vertex set or a self-loop")
            for j in iter_bits(row):
                if not (self.rows[j] >> i) & 1:
                    raise ValueError(f"adjacency not symmetric at ({i}, {j})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], seed: int = 0) -> "Graph":
        """Build from 1-based vertex pairs."""
        rows = [0] * n
        for i, j in edges:
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ValueError(f"bad edge ({i}, {j}) for n={n}")
            rows[i - 1] |= 1 << (j - 1)
            rows[j - 1] |= 1 << (i - 1)
        return cls(n, tuple(rows), seed)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_edges(n, itertools.combinations(range(1, n + 1), 2))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, (0,) * n)

    def has_edge(self, i: int, j: int) -> bool:
        """0-based adjacency query."""
        return bool((self.rows[i] >> j) & 1)

    def edges(self) -> list[tuple[int, int]]:
        """1-based edges ``(i, j)`` with ``i < j`` in lexicographic order."""
        return [
            (i + 1, j + 1)
            for i in range(self.n)
            for j in iter_bits(self.rows[i] >> (i + 1) << (i + 1))
        ]

    @property
    def n_edges(self) -> int:
        return sum(popcount(r) for r in self.rows) // 2

    def adjacency_matrix(self) -> np.ndarray:
        bits = np.arange(self.n)
        rows = np.array(self.rows, dtype=np.int64)
        return ((rows[:, None] >> bits[None, :]) & 1).astype(bool)

    def to_text(self) -> str:
        lines = [f"n={self.n} seed={self.seed}"]
        lines += [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = text.splitlines()
        if not lines:
            raise ValueError("empty graph file")
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        try:
            n, seed = int(header["n"]), int(header["seed"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"bad graph header {lines[0]!r}") from exc
        edges = []
        for line in lines[1:]:
            if not line.strip():
                continue
            i, j = (int(t) for t in line.split())
            if not i < j:
                raise ValueError(f"edge line {line!r} must have i < j")
            edges.append((i, j))
        if edges != sorted(set(edges)):
            raise ValueError("edges must be unique and in ascending order")
        return cls.from_edges(n, edges, seed)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii", newline="\n")

    @classmethod
    def read(cls, path) -> "Graph":
        return cls.from_text(Path(path).read_text(encoding="ascii"))


def generate_random_graph(n: int, seed: int) -> Graph:
    """G(n, 1/2) graph drawn deterministically from ``seed``.

    The Philox-4x64 stream keyed by ``seed`` is consumed as raw 64-bit words,
    least significant bit first; one bit per vertex pair in row-major
    ``i < j`` order decides that edge.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < seed <= _MASK64:
        raise ValueError("random graph seeds must be in [1, 2**64 - 1]; 0 is reserved")
    n_pairs = n * (n - 1) // 2
    rows = [0] * n
    if n_pairs:
        bitgen = np.random.Philox(key=seed)
        words = np.asarray(bitgen.random_raw((n_pairs + 63) // 64), dtype=np.uint64)
        bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n_pairs]
        iu, ju = np.triu_indices(n, 1)
        for i, j in zip(iu[bits == 1].tolist(), ju[bits == 1].tolist()):
            rows[i] |= 1 << j
            rows[j] |= 1 << i
    return Graph(n, tuple(rows), seed)


def is_clique(g: Graph, mask: int) -> bool:
    if mask >> g.n:
        raise ValueError("subset has bits beyond the vertex count")
    for i in iter_bits(mask):
        others = mask & ~(1 << i)
        if others & ~g.rows[i]:
            return False
    return True


@dataclass(frozen=True)
class InstanceClassification:
    max_clique_size: int
    cliques_at_max: tuple[int, ...] = field(default=())

    @property
    def is_unique(self) -> bool:
        return len(self.cliques_at_max) == 1

    @property
    def clique_vertices(self) -> list[tuple[int, ...]]:
        return [mask_vertices(m) for m in self.cliques_at_max]


def _color_bound(g_rows: tuple[int, ...], cand: int) -> list[tuple[int, int]]:
    """Greedy sequential colouring of ``cand``; returns (vertex, colour) by colour."""
    order = []
    color = 0
    uncolored = cand
    while uncolored:
        color += 1
        avail = uncolored
        while avail:
            v = (avail & -avail).bit_length() - 1
            avail &= ~g_rows[v] & ~(1 << v)
            uncolored &= ~(1 << v)
            order.append((v, color))
    return order


def _max_cliques(g: Graph) -> tuple[int, list[int]]:
    best = [0]
    found: list[int] = []

    def expand(clique: int, size: int, cand: int) -> None:
        if not cand:
            if size > best[0]:
                best[0] = size
                found.clear()
            if size == best[0]:
                found.append(clique)
            return
        for v, color in reversed(_color_bound(g.rows, cand)):
            # ties are kept so every maximum clique is enumerated
            if size + color < best[0]:
                return
            expand(clique | (1 << v), size + 1, cand & g.rows[v])
            cand &= ~(1 << v)

    expand(0, 0, (1 << g.n) - 1)
    return best[0], sorted(found)


def classify(g: Graph, max_n: int = MAX_CLASSIFY_N) -> InstanceClassification:
    """Exact maximum clique size and every clique of that size.

    Branch and bound over bitmask candidate sets with a greedy colouring bound.
    """
    if g.n > max_n:
        raise ResourceCapError(f"exact clique search limited to n <= {max_n}, got n={g.n}")
    k, cliques = _max_cliques(g)
    return InstanceClassification(k, tuple(cliques))


class Sample(NamedTuple):
    graph: Graph
    classification: InstanceClassification
    seeds_consumed: tuple[int, ...]


def derived_seed_stream(base_seed: int, *key: int) -> Iterator[int]:
    """Consecutive non-zero 64-bit seeds starting at a point derived from ``key``."""
    ss = np.random.SeedSequence([base_seed, *key])
    start = int(ss.generate_state(1, np.uint64)[0])
    for offset in itertools.count():
        seed = (start + offset) & _MASK64
        if seed:
            yield seed


def sample_until(
    n: int,
    k_filter: int | None = None,
    unique_required: bool = False,
    seed_stream: Iterable[int] | int = 1,
    max_attempts: int = 100_000,
) -> Sample:
    """Draw graphs from ``seed_stream`` until one passes the filters.

    An ``int`` stream means consecutive seeds starting there.
    """
    seeds = itertools.count(seed_stream) if isinstance(seed_stream, int) else iter(seed_stream)
    consumed = []
    for seed in itertools.islice(seeds, max_attempts):
        consumed.append(seed)
        g = generate_random_graph(n, seed)
        c = classify(g)
        if k_filter is not None and c.max_clique_size != k_filter:
            continue
        if unique_required and not c.is_unique:
            continue
        return Sample(g, c, tuple(consumed))
    raise SamplingCapError(
        f"no graph with n={n}, k={k_filter}, unique={unique_required} "
        f"after {len(consumed)} attempts",
        attempts=len(consumed),
        seeds=consumed,
    )
