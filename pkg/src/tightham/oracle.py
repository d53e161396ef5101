"""Exact exponential-time ground truth.

Everything here is deliberately independent of the absorption machinery:
Hamiltonicity by DP over (visited set, last pair), path/walk counting,
3-set packing by branch and bound, and longest graph paths.
"""

from __future__ import annotations

import sys
from typing import NamedTuple, Sequence

import numpy as np

from .hypergraph import Graph, Hypergraph3, TightPath, bits, popcount


class BudgetExceeded(RuntimeError):
    """A configured state/size budget ran out before the search finished."""

    def __init__(self, msg: str, explored: int = 0):
        super().__init__(msg)
        self.explored = explored


class CapExceeded(ValueError):
    pass


# ---------------------------------------------------------------- Hamiltonicity


def find_tight_ham_cycle(H: Hypergraph3, max_states: int = 20_000_000) -> TightPath | None:
    """Return a tight Hamiltonian cycle or ``None`` if none exists.

    The cycle is anchored at a minimum-degree vertex ``s`` (every Hamiltonian
    cycle passes through it); for each successor ``t`` a DFS over states
    ``(visited, a, b)`` runs with memoisation of dead states.  Raises
    :class:`BudgetExceeded` once more than ``max_states`` states were expanded.
    """
    n = H.n
    if n < 4:
        return None
    if any(H.degree(v) == 0 for v in range(n)):
        return None
    full = (1 << n) - 1
    s = min(range(n), key=lambda v: (H.degree(v), v))
    pm = H.pair_mask
    expanded = 0
    limit = sys.getrecursionlimit()
    if limit < n + 100:
        sys.setrecursionlimit(n + 100)

    for t in range(n):
        if t == s or not pm(s, t):
            continue
        dead: set[int] = set()
        path = [s, t]

        def dfs(mask: int, a: int, b: int) -> bool:
            nonlocal expanded
            if mask == full:
                return H.has_edge(a, b, s) and H.has_edge(b, s, t)
            key = (mask * n + a) * n + b
            if key in dead:
                return False
            expanded += 1
            if expanded > max_states:
                raise BudgetExceeded(f"explored more than {max_states} DP states", expanded)
            cand = pm(a, b) & ~mask
            while cand:
                low = cand & -cand
                c = low.bit_length() - 1
                cand ^= low
                path.append(c)
                if dfs(mask | low, b, c):
                    return True
                path.pop()
            dead.add(key)
            return False

        if dfs((1 << s) | (1 << t), s, t):
            return TightPath(tuple(path), True)
    return None


# ---------------------------------------------------------------- counting


def count_tight_paths(
    H: Hypergraph3,
    start: tuple[int, int],
    end: tuple[int, int],
    length: int,
    cap: int = 14,
) -> int:
    """Number of tight ``start``-``end`` paths with ``length`` hyperedges (``length + 2`` distinct vertices)."""
    if length > cap:
        raise CapExceeded(f"length {length} exceeds cap {cap}")
    if length < 1:
        raise ValueError("length must be at least 1")
    last = length + 1
    fixed = {0: start[0], 1: start[1]}
    for pos, v in ((length, end[0]), (last, end[1])):
        if fixed.get(pos, v) != v:
            return 0
        fixed[pos] = v
    fixed_vertices = set(fixed.values())
    if len(fixed_vertices) != len(fixed):
        return 0
    forbidden = 0
    for v in fixed_vertices:
        forbidden |= 1 << v
    pm = H.pair_mask

    def dfs(pos: int, a: int, b: int, used: int) -> int:
        cand = pm(a, b) & ~used
        if pos in fixed:
            v = fixed[pos]
            if not (cand >> v) & 1:
                return 0
            return 1 if pos == last else dfs(pos + 1, b, v, used | (1 << v))
        cand &= ~forbidden
        total = 0
        while cand:
            low = cand & -cand
            cand ^= low
            total += dfs(pos + 1, b, low.bit_length() - 1, used | low)
        return total

    return dfs(2, start[0], start[1], (1 << start[0]) | (1 << start[1]))


def _adjacency(G: Graph) -> np.ndarray:
    return G.to_matrix().astype(np.int64)


def count_walks(G: Graph, x: int, y: int, length: int) -> int:
    """``(A^length)[x][y]`` by repeated vector-matrix products in exact arithmetic."""
    if not ((G.vertex_set >> x) & 1 and (G.vertex_set >> y) & 1):
        raise ValueError("x and y must be vertices of G")
    if length < 0:
        raise ValueError("length must be non-negative")
    A = _adjacency(G)
    maxdeg = int(A.sum(axis=1).max()) if G.n else 0
    # int64 is exact while every entry stays below maxdeg**length < 2**62
    exact64 = maxdeg <= 1 or length * np.log2(max(maxdeg, 2)) < 62
    vec = np.zeros(G.n, dtype=np.int64 if exact64 else object)
    vec[x] = 1
    if not exact64:
        A = A.astype(object)
    for _ in range(length):
        vec = vec @ A
    return int(vec[y])


def count_paths(G: Graph, x: int, y: int, length: int, cap: int = 7) -> int:
    """Number of simple ``x``-``y`` paths with exactly ``length`` edges."""
    if length > cap:
        raise CapExceeded(f"length {length} exceeds cap {cap}")
    if length < 1:
        return 0
    if x == y:
        return 0
    adj = G.adj
    if length == 1:
        return int(G.has_edge(x, y))
    ny = adj[y]
    ybit = 1 << y

    def dfs(cur: int, depth: int, used: int) -> int:
        # depth = edges placed so far; close with two more edges via a popcount
        if depth == length - 2:
            return popcount(adj[cur] & ny & ~used)
        cand = adj[cur] & ~used & ~ybit
        total = 0
        while cand:
            low = cand & -cand
            cand ^= low
            total += dfs(low.bit_length() - 1, depth + 1, used | low)
        return total

    return dfs(x, 0, (1 << x) | ybit)


# ---------------------------------------------------------------- matching


class MatchingResult(NamedTuple):
    size: int
    exact: bool


def max_matching_size(H: Hypergraph3, cap: int = 21, node_budget: int = 2_000_000) -> MatchingResult:
    """Maximum number of pairwise disjoint edges, by branch and bound.

    Exact whenever the search completes; above ``n > cap`` the search runs
    under ``node_budget`` and reports the greedy/best-found value with
    ``exact=False`` if it is cut short.
    """
    emasks = [(1 << a) | (1 << b) | (1 << c) for a, b, c in sorted(H.edges)]
    by_vertex: list[list[int]] = [[] for _ in range(H.n)]
    for em in emasks:
        for v in bits(em):
            by_vertex[v].append(em)
    covered = 0
    for em in emasks:
        covered |= em

    # greedy lower bound
    best = 0
    used = 0
    for em in emasks:
        if not em & used:
            used |= em
            best += 1
    budget = None if H.n <= cap else node_budget
    nodes = 0

    class _Stop(Exception):
        pass

    def live_mask(avail: int) -> int:
        m = 0
        for em in emasks:
            if em & avail == em:
                m |= em
        return m

    def rec(avail: int, size: int) -> None:
        nonlocal best, nodes
        nodes += 1
        if budget is not None and nodes > budget:
            raise _Stop
        live = live_mask(avail)
        if size + popcount(live) // 3 <= best:
            return
        if not live:
            best = max(best, size)
            return
        v = (live & -live).bit_length() - 1
        for em in by_vertex[v]:
            if em & avail == em:
                rec(avail & ~em, size + 1)
        rec(avail & ~(1 << v), size)

    try:
        rec(covered, 0)
    except _Stop:
        return MatchingResult(best, False)
    return MatchingResult(best, True)


# ---------------------------------------------------------------- long graph paths


def longest_path(G: Graph, cap: int = 20) -> int:
    """Edge length of a longest simple path (Held-Karp style DP over (visited, last))."""
    verts = G.vertices()
    k = len(verts)
    if k > cap:
        raise CapExceeded(f"{k} vertices exceed exact cap {cap}")
    if k == 0:
        return 0
    pos = {v: i for i, v in enumerate(verts)}
    nbr = np.zeros(k, dtype=np.int64)
    for v in verts:
        m = 0
        for w in bits(G.adj[v]):
            m |= 1 << pos[w]
        nbr[pos[v]] = m
    size = 1 << k
    # dp[mask] has bit j set iff some path with vertex set `mask` ends at j
    dp = np.zeros(size, dtype=np.int64)
    for j in range(k):
        dp[1 << j] = 1 << j
    masks = np.arange(size, dtype=np.int64)
    pc = np.zeros(size, dtype=np.int64)
    for j in range(k):
        pc += (masks >> j) & 1
    best = 1
    for layer in range(1, k):
        cur = masks[(pc == layer)]
        cur = cur[dp[cur] != 0]
        if cur.size == 0:
            break
        best = layer
        ends = dp[cur]
        for j in range(k):
            ok = ((ends & nbr[j]) != 0) & (((cur >> j) & 1) == 0)
            if ok.any():
                tgt = cur[ok] | (1 << j)
                dp[tgt] |= 1 << j
    else:
        if np.any(dp[masks[pc == k]] != 0):
            best = k
    return best - 1


def fs_bound(lam: float, n_vertices: int) -> float:
    """Edge bound for graphs without a path of length ``lam * |V|`` (``lam > 1/2``)."""
    if not 0.5 < lam <= 1:
        raise ValueError("lambda must lie in (1/2, 1]")
    return (lam * lam + (1 - lam) ** 2) * n_vertices * n_vertices / 2
