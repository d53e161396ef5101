"""Core representations: 3-uniform hypergraphs, graphs on a vertex subset, tight paths.

Vertices are dense integers ``0..n-1``.  Vertex sets and neighbourhoods are
stored as Python ``int`` bitmasks, which keeps set algebra cheap at the
sizes this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

Triple = tuple[int, int, int]


def bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class Hypergraph3:
    """A 3-uniform hypergraph on ``range(n)``.

    The pair index ``N_H(u, v)`` is built eagerly; instances are treated as
    immutable after construction.
    """

    __slots__ = ("n", "edges", "_pair", "_deg", "_np_cache")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        self.n = n
        norm = set()
        for e in edges:
            t = tuple(sorted(int(x) for x in e))
            if len(t) != 3 or len(set(t)) != 3:
                raise ValueError(f"not a 3-set of distinct vertices: {tuple(e)}")
            if t[0] < 0 or t[2] >= n:
                raise ValueError(f"vertex out of range in {t} (n={n})")
            norm.add(t)
        self.edges: frozenset[Triple] = frozenset(norm)
        pair: dict[tuple[int, int], int] = {}
        deg = [0] * n
        for a, b, c in self.edges:
            pair[(a, b)] = pair.get((a, b), 0) | (1 << c)
            pair[(a, c)] = pair.get((a, c), 0) | (1 << b)
            pair[(b, c)] = pair.get((b, c), 0) | (1 << a)
            deg[a] += 1
            deg[b] += 1
            deg[c] += 1
        self._pair = pair
        self._deg = deg
        self._np_cache = None

    def __repr__(self) -> str:
        return f"Hypergraph3(n={self.n}, m={len(self.edges)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Hypergraph3) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @classmethod
    def complete(cls, n: int) -> "Hypergraph3":
        return cls(n, combinations(range(n), 3))

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range for n={self.n}")

    def has_edge(self, a: int, b: int, c: int) -> bool:
        if a == b or a == c or b == c:
            return False
        key = (a, b) if a < b else (b, a)
        return bool((self._pair.get(key, 0) >> c) & 1)

    def pair_mask(self, u: int, v: int) -> int:
        """Bitmask of ``N_H(u, v)``."""
        if u == v:
            return 0
        return self._pair.get((u, v) if u < v else (v, u), 0)

    def neighbors(self, u: int, v: int) -> frozenset[int]:
        return frozenset(bits(self.pair_mask(u, v)))

    def degree(self, v: int) -> int:
        self._check(v)
        return self._deg[v]

    def pair_degree(self, u: int, v: int) -> int:
        self._check(u)
        self._check(v)
        if u == v:
            raise ValueError("pair degree needs two distinct vertices")
        return popcount(self.pair_mask(u, v))

    def shadow(self) -> set[tuple[int, int]]:
        """Pairs contained in at least one edge."""
        return set(self._pair)

    def link_graph(self, v: int) -> "Graph":
        self._check(v)
        adj = [0] * self.n
        for (a, b), third in self._pair.items():
            if (third >> v) & 1:
                adj[a] |= 1 << b
                adj[b] |= 1 << a
        return Graph(self.n, (1 << self.n) - 1, adj)

    def pair_tensor(self) -> np.ndarray:
        """Dense boolean ``N[u, v, w]`` = ``uvw`` is an edge.  Cached; O(n^3) memory."""
        if self._np_cache is None:
            t = np.zeros((self.n, self.n, self.n), dtype=bool)
            if self.edges:
                e = np.array(sorted(self.edges), dtype=np.intp)
                for p in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
                    t[e[:, p[0]], e[:, p[1]], e[:, p[2]]] = True
            t.setflags(write=False)
            self._np_cache = t
        return self._np_cache

    def induced(self, keep: int) -> "Hypergraph3":
        """Sub-hypergraph on the vertices in bitmask ``keep`` (labels unchanged)."""
        return Hypergraph3(
            self.n, (e for e in self.edges if all((keep >> x) & 1 for x in e))
        )


class Graph:
    """Simple graph on a subset ``vertex_set`` of ``range(n)``; adjacency as bitmasks."""

    __slots__ = ("n", "vertex_set", "adj", "_m")

    def __init__(self, n: int, vertex_set: int, adj: Sequence[int]):
        self.n = n
        self.vertex_set = vertex_set
        self.adj = list(adj)
        if len(self.adj) != n:
            raise ValueError("adjacency list must have one entry per ambient vertex")
        self._m = sum(popcount(a) for a in self.adj) // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], vertices: Iterable[int] | None = None) -> "Graph":
        adj = [0] * n
        vs = 0
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge {(a, b)} out of range for n={n}")
            adj[a] |= 1 << b
            adj[b] |= 1 << a
            vs |= (1 << a) | (1 << b)
        if vertices is not None:
            vs |= mask_of(vertices)
        return cls(n, vs, adj)

    @classmethod
    def complete(cls, n: int, vertices: Iterable[int] | None = None) -> "Graph":
        vs = (1 << n) - 1 if vertices is None else mask_of(vertices)
        adj = [(vs & ~(1 << v)) if (vs >> v) & 1 else 0 for v in range(n)]
        return cls(n, vs, adj)

    @classmethod
    def from_matrix(cls, a: np.ndarray, vertex_set: int | None = None) -> "Graph":
        n = a.shape[0]
        adj = [mask_of(np.flatnonzero(row).tolist()) for row in np.asarray(a, dtype=bool)]
        if vertex_set is None:
            vertex_set = mask_of(v for v in range(n) if adj[v])
        return cls(n, vertex_set, adj)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, |V|={self.order}, e={self._m})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.vertex_set == other.vertex_set
            and self.adj == other.adj
        )

    @property
    def order(self) -> int:
        return popcount(self.vertex_set)

    @property
    def num_edges(self) -> int:
        return self._m

    def vertices(self) -> list[int]:
        return list(bits(self.vertex_set))

    def has_edge(self, a: int, b: int) -> bool:
        return bool((self.adj[a] >> b) & 1)

    def degree(self, v: int) -> int:
        return popcount(self.adj[v])

    def edges(self) -> Iterator[tuple[int, int]]:
        for a in bits(self.vertex_set):
            for b in bits(self.adj[a] >> (a + 1) << (a + 1)):
                yield a, b

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges())

    def induced(self, keep: int) -> "Graph":
        keep &= self.vertex_set
        adj = [(self.adj[v] & keep) if (keep >> v) & 1 else 0 for v in range(self.n)]
        return Graph(self.n, keep, adj)

    def edges_within(self, a: int) -> int:
        """``e_G(A)`` for a vertex bitmask ``a``."""
        return sum(popcount(self.adj[v] & a) for v in bits(a & self.vertex_set)) // 2

    def edges_between(self, a: int, b: int) -> int:
        """``e_G(A, B)`` for disjoint bitmasks."""
        return sum(popcount(self.adj[v] & b) for v in bits(a & self.vertex_set))

    def intersect(self, other: "Graph") -> "Graph":
        adj = [x & y for x, y in zip(self.adj, other.adj)]
        return Graph(self.n, self.vertex_set & other.vertex_set, adj)

    def to_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for x, y in self.edges():
            a[x, y] = a[y, x] = True
        return a


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""
    window: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_tight(H: Hypergraph3, seq: Sequence[int], as_cycle: bool = False) -> Verdict:
    """Check that ``seq`` is a tight path (or cycle) of ``H``; report the first bad window."""
    k = len(seq)
    if any(not 0 <= v < H.n for v in seq):
        return Verdict(False, "vertex out of range")
    if len(set(seq)) != k:
        seen = set()
        for v in seq:
            if v in seen:
                return Verdict(False, f"repeated vertex {v}", (v,))
            seen.add(v)
    if as_cycle:
        if k < 4:
            return Verdict(False, "a tight cycle needs at least 4 vertices")
        windows = ((seq[i], seq[(i + 1) % k], seq[(i + 2) % k]) for i in range(k))
    else:
        if k < 3:
            return Verdict(False, "a tight path needs at least 3 vertices")
        windows = ((seq[i], seq[i + 1], seq[i + 2]) for i in range(k - 2))
    for w in windows:
        if not H.has_edge(*w):
            return Verdict(False, f"window {w} is not an edge", w)
    return Verdict(True)


class InvalidTightPath(ValueError):
    pass


@dataclass(frozen=True)
class TightPath:
    """A tight path or cycle; ``length`` counts hyperedges."""

    seq: tuple[int, ...]
    is_cycle: bool = False

    @classmethod
    def build(cls, H: Hypergraph3, seq: Sequence[int], is_cycle: bool = False) -> "TightPath":
        v = validate_tight(H, seq, is_cycle)
        if not v:
            raise InvalidTightPath(v.reason)
        return cls(tuple(seq), is_cycle)

    def __len__(self) -> int:
        return len(self.seq)

    @property
    def length(self) -> int:
        if self.is_cycle:
            return len(self.seq)
        return max(len(self.seq) - 2, 0)

    @property
    def start_pair(self) -> tuple[int, int]:
        return self.seq[0], self.seq[1]

    @property
    def end_pair(self) -> tuple[int, int]:
        """Ordered ending pair, read in the direction of travel."""
        return self.seq[-2], self.seq[-1]

    def vertex_mask(self) -> int:
        return mask_of(self.seq)


def degree(H: Hypergraph3, v: int) -> int:
    return H.degree(v)


def pair_degree(H: Hypergraph3, u: int, v: int) -> int:
    return H.pair_degree(u, v)


def link_graph(H: Hypergraph3, v: int) -> Graph:
    return H.link_graph(v)
