"""Connectable pairs and explicit connecting paths.

A pair ``xy`` is ``zeta``-connectable when it is an edge of at least
``zeta * n`` of the robust link subgraphs ``R_v``.  Two disjoint connectable
ordered pairs ``(x, y)`` and ``(z, w)`` are joined by a tight path with
``3(ell+1)`` edges of the shape

    x y u1 r1 r2 u2 ... r_{ell-1} u_h a b v1 s1 s2 v2 ... s_{ell-1} v_h z w

with ``h = (ell+1)/2``, where ``y r1 ... a`` is a graph path in every
``R_{u_k}``, ``b s1 ... z`` is a graph path in every ``R_{v_k}``, the
``u_k`` lie in ``U_xy`` and ``ab`` is an edge of every ``R_{u_k}`` and
``R_{v_k}``.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .hypergraph import Graph, Hypergraph3, TightPath, bits, mask_of, popcount, validate_tight
from .robust import RobustCandidate, extract_robust_subgraph


class ConnectError(RuntimeError):
    """Base class for connection failures; ``kind`` is a short machine-readable tag."""

    kind = "connect-failed"


class NotConnectable(ConnectError):
    kind = "not-connectable"


class ExhaustedBudget(ConnectError):
    kind = "exhausted-budget"


class AvoidSetTooLarge(ConnectError):
    kind = "avoid-set-too-large"


def _extract(args):
    L, alpha = args
    return extract_robust_subgraph(L, alpha)


def worker_count() -> int:
    """Worker processes for embarrassingly parallel stages (``TIGHTHAM_THREADS``, default 1)."""
    try:
        return max(1, int(os.environ.get("TIGHTHAM_THREADS", "1")))
    except ValueError:
        return 1


class RobustFamily:
    """The robust subgraphs ``R_v`` of all link graphs plus the pair index ``U_xy``."""

    def __init__(self, n: int, graphs: Sequence[Graph], candidates: Sequence[RobustCandidate] | None = None):
        if len(graphs) != n:
            raise ValueError("need one robust graph per vertex")
        for v, g in enumerate(graphs):
            if g.n != n:
                raise ValueError(f"graph of vertex {v} lives on {g.n} vertices, expected {n}")
            if g.adj[v]:
                raise ValueError(f"R_{v} has edges at {v}; link graphs never do")
        self.n = n
        self.graphs = list(graphs)
        self.candidates = list(candidates) if candidates is not None else None
        stack = np.zeros((n, n, n), dtype=bool)
        for v, g in enumerate(self.graphs):
            if g.num_edges:
                stack[v] = g.to_matrix()
        stack.setflags(write=False)
        self.stack = stack
        self.pair_count = stack.sum(axis=0, dtype=np.int64)  # |U_xy|

    @classmethod
    def from_hypergraph(cls, H: Hypergraph3, alpha: float, workers: int | None = None) -> "RobustFamily":
        links = [(H.link_graph(v), alpha) for v in range(H.n)]
        workers = worker_count() if workers is None else workers
        if workers > 1 and H.n >= 30:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                cands = list(ex.map(_extract, links, chunksize=4))
        else:
            cands = [_extract(a) for a in links]
        return cls(H.n, [c.R for c in cands], cands)

    def U(self, x: int, y: int) -> int:
        """Bitmask of ``U_xy``."""
        return mask_of(np.flatnonzero(self.stack[:, x, y]).tolist())

    @property
    def U_pair_index(self) -> dict[tuple[int, int], frozenset[int]]:
        out = {}
        for x, y in zip(*np.nonzero(np.triu(self.pair_count))):
            out[(int(x), int(y))] = frozenset(np.flatnonzero(self.stack[:, x, y]).tolist())
        return out

    def is_connectable(self, x: int, y: int, zeta: float) -> bool:
        return x != y and self.pair_count[x, y] >= zeta * self.n

    def connectable_matrix(self, zeta: float) -> np.ndarray:
        c = self.pair_count >= zeta * self.n
        np.fill_diagonal(c, False)
        return c


def connectable_pairs(fam: RobustFamily, zeta: float) -> set[tuple[int, int]]:
    if not 0 <= zeta <= 1:
        raise ValueError("zeta must lie in [0, 1]")
    c = np.triu(fam.connectable_matrix(zeta), 1)
    return {(int(x), int(y)) for x, y in zip(*np.nonzero(c))}


def count_bad_triples(fam: RobustFamily, zeta: float) -> int:
    """Ordered triples ``(x, y, z)`` with ``xy`` in ``R_z`` but ``xy`` not connectable."""
    bad = ~fam.connectable_matrix(zeta)
    np.fill_diagonal(bad, False)
    return int(fam.pair_count[bad].sum())


@dataclass
class ConnectRequest:
    start: tuple[int, int]
    end: tuple[int, int]
    zeta: float
    avoid: frozenset[int] = field(default_factory=frozenset)
    ell: int = 3

    def check(self, fam: RobustFamily) -> None:
        x, y = self.start
        z, w = self.end
        if len({x, y, z, w}) != 4:
            raise NotConnectable("start and end pairs must be four distinct vertices")
        if self.ell < 3 or self.ell % 2 == 0:
            raise ValueError("ell must be odd and at least 3")
        for p in (self.start, self.end):
            if not fam.is_connectable(*p, self.zeta):
                raise NotConnectable(f"pair {p} is not {self.zeta:g}-connectable")


def connector_size(ell: int) -> int:
    """Internal vertices of one connecting path."""
    return 3 * ell + 1


def _graph_path(
    adj: Sequence[int],
    src: int,
    dst: int,
    edges: int,
    allowed: int,
    rng: random.Random,
    budget: list[int],
) -> list[int] | None:
    """Random-order DFS for a ``src``-``dst`` path with ``edges`` edges, internal vertices in ``allowed``."""
    allowed &= ~((1 << src) | (1 << dst))

    def rec(cur: int, left: int, used: int) -> list[int] | None:
        budget[0] -= 1
        if budget[0] < 0:
            return None
        if left == 1:
            return [dst] if (adj[cur] >> dst) & 1 else None
        cand = adj[cur] & allowed & ~used
        if left == 2:
            cand &= adj[dst]
        opts = list(bits(cand))
        rng.shuffle(opts)
        for nxt in opts:
            tail = rec(nxt, left - 1, used | (1 << nxt))
            if tail is not None:
                return [nxt] + tail
            if budget[0] < 0:
                return None
        return None

    tail = rec(src, edges, 0)
    return None if tail is None else [src] + tail


def _common_adj(fam: RobustFamily, owners: Iterable[int]) -> list[int]:
    owners = list(owners)
    adj = list(fam.graphs[owners[0]].adj)
    for u in owners[1:]:
        other = fam.graphs[u].adj
        adj = [p & q for p, q in zip(adj, other)]
    return adj


def find_connecting_path(
    H: Hypergraph3,
    fam: RobustFamily,
    req: ConnectRequest,
    budget: int = 200_000,
    seed: int = 0,
    pair_trials: int = 4,
) -> TightPath:
    """Search for a connecting path following the template in the module docstring.

    ``budget`` bounds the total number of DFS steps.  Raises
    :class:`NotConnectable`, :class:`AvoidSetTooLarge` or :class:`ExhaustedBudget`.
    """
    req.check(fam)
    n = fam.n
    ell = req.ell
    h = (ell + 1) // 2
    x, y = req.start
    z, w = req.end
    ends = mask_of((x, y, z, w))
    allowed = ((1 << n) - 1) & ~mask_of(req.avoid) & ~ends
    need = connector_size(ell)
    if popcount(allowed) < need:
        raise AvoidSetTooLarge(f"only {popcount(allowed)} usable vertices, {need} needed")
    rng = random.Random(seed)
    left = [budget]
    t = max(1, math.ceil(req.zeta * n))

    ux = [u for u in bits(fam.U(x, y) & allowed)]
    vz = [v for v in bits(fam.U(z, w) & allowed)]
    if len(ux) < h or len(vz) < h:
        raise NotConnectable("too few usable vertices in U_xy or U_zw outside the avoid set")

    while left[0] > 0:
        us = rng.sample(ux, min(t, len(ux)))
        vs = rng.sample(vz, min(t, len(vz)))
        k = min(len(us), len(vs))
        # I_ab counts over the paired index lists
        iab = (fam.stack[us[:k]] & fam.stack[vs[:k]]).sum(axis=0)
        am = np.zeros(n, dtype=bool)
        am[list(bits(allowed))] = True
        iab = np.where(am[:, None] & am[None, :], iab, 0)
        np.fill_diagonal(iab, 0)
        flat = np.flatnonzero(iab.ravel())
        if flat.size == 0:
            left[0] -= n
            continue
        order = flat[np.lexsort((flat, -iab.ravel()[flat]))]
        us_mask, vs_mask = mask_of(us), mask_of(vs)
        progressed = False
        for idx in order.tolist():
            if left[0] <= 0:
                break
            a, b = divmod(idx, n)
            left[0] -= 1
            ab_owners = mask_of(np.flatnonzero(fam.stack[:, a, b]).tolist())
            u_pool = list(bits(us_mask & ab_owners & ~((1 << a) | (1 << b))))
            v_pool = list(bits(vs_mask & ab_owners & ~((1 << a) | (1 << b))))
            if len(u_pool) < h or len(v_pool) < h:
                continue
            progressed = True
            for _ in range(pair_trials):
                if left[0] <= 0:
                    break
                uk = rng.sample(u_pool, h)
                used = mask_of(uk) | (1 << a) | (1 << b)
                free = allowed & ~used
                rpath = _graph_path(_common_adj(fam, uk), y, a, ell, free, rng, left)
                if rpath is None:
                    continue
                used |= mask_of(rpath[1:-1])
                vk_pool = [v for v in v_pool if not (used >> v) & 1]
                if len(vk_pool) < h:
                    continue
                vk = rng.sample(vk_pool, h)
                used |= mask_of(vk)
                spath = _graph_path(_common_adj(fam, vk), b, z, ell, allowed & ~used, rng, left)
                if spath is None:
                    continue
                seq = _assemble(x, y, z, w, uk, rpath, vk, spath)
                verdict = validate_tight(H, seq)
                if not verdict:
                    raise AssertionError(f"internal error: template produced invalid path ({verdict.reason})")
                return TightPath(tuple(seq))
        if not progressed:
            left[0] -= n
    raise ExhaustedBudget(f"no connecting path within {budget} search steps")


def _assemble(x, y, z, w, uk, rpath, vk, spath) -> list[int]:
    # rpath = y r1 .. r_{ell-1} a ; u_k precedes the edge pair r_{2k-1} r_{2k}
    seq = [x, y]
    inner = rpath[1:]  # r1 .. a
    for k, u in enumerate(uk):
        seq.append(u)
        seq.extend(inner[2 * k : 2 * k + 2])
    # last block ended with r_{ell-1} a? inner has ell entries; blocks consume 2 each -> last block is [a]
    seq.append(spath[0])  # b
    inner = spath[1:]  # s1 .. z
    for k, v in enumerate(vk):
        seq.append(v)
        seq.extend(inner[2 * k : 2 * k + 2])
    seq.append(w)
    return seq
