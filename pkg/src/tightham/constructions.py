"""Extremal families from the 5/9 lower-bound examples, random instances, degree statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .hypergraph import Hypergraph3, popcount

KINDS = ("i", "ii", "iii")


def x_size(kind: str, n: int) -> int:
    if kind == "i":
        return math.ceil((n + 1) / 3)
    if kind == "ii":
        return math.ceil(2 * n / 3)
    if kind == "iii":
        return n // 3 - 1
    raise ValueError(f"unknown extremal kind {kind!r}")


@dataclass(frozen=True)
class ExtremalParams:
    kind: str
    n: int

    @property
    def X_size(self) -> int:
        return x_size(self.kind, self.n)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown extremal kind {self.kind!r}")
        if self.n < 7:
            raise ValueError("extremal examples need n >= 7")
        if not 0 < self.X_size < self.n:
            raise ValueError(f"part size {self.X_size} degenerate for n={self.n}")


def extremal_example(kind: str, n: int) -> Hypergraph3:
    """Partition ``X = {0..|X|-1}``, ``Y`` the rest.

    Kinds ``i``/``ii`` keep every triple with ``|e & X| != 2``; kind ``iii``
    keeps every triple meeting ``X``.
    """
    params = ExtremalParams(kind, n)
    k = params.X_size
    if kind == "iii":
        keep = lambda e: e[0] < k
    else:
        keep = lambda e: sum(v < k for v in e) != 2
    return Hypergraph3(n, (e for e in combinations(range(n), 3) if keep(e)))


def random_hypergraph(n: int, p: float, seed: int) -> Hypergraph3:
    """Binomial random 3-graph.

    Triples are visited in lexicographic order and each consumes one draw
    from ``numpy.random.Generator(PCG64(seed))``; the stream is stable across
    numpy releases (PCG64 and ``random()`` are part of numpy's stream-compat policy).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    triples = list(combinations(range(n), 3))
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.random(len(triples))
    return Hypergraph3(n, (t for t, u in zip(triples, draws) if u < p))


def min_degrees(H: Hypergraph3) -> tuple[int, int]:
    """``(delta(H), delta_2(H))`` over all vertices and all unordered pairs."""
    if H.n < 2:
        raise ValueError("need at least two vertices")
    delta = min(H.degree(v) for v in range(H.n))
    delta2 = min(popcount(H.pair_mask(u, v)) for u, v in combinations(range(H.n), 2))
    return delta, delta2
