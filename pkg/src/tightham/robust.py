"""Robust subgraphs of link graphs.

``extract_robust_subgraph`` turns the maximal-partition argument into a
terminating refinement procedure: the largest part is split while a split
keeps the size condition (every part at least ``mu*n/2``) and the crossing
budget (at most ``2(t-1) mu^2 n^2`` edges between parts); afterwards
low-degree vertices are peeled from the largest part.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal

import numpy as np

from .hypergraph import Graph, bits, mask_of, popcount
from .oracle import count_paths


@dataclass
class RobustCandidate:
    base: Graph
    U: int
    R: Graph
    partition: list[int]
    peeled: list[int]
    mu: float
    eta: float
    crossing: int
    trace: list[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.U == 0

    @property
    def size(self) -> int:
        return popcount(self.U)


def _sort_parts(parts: list[int]) -> list[int]:
    return sorted(parts, key=lambda p: (-popcount(p), (p & -p).bit_length()))


def _crossing_total(L: Graph, parts: list[int]) -> int:
    # sum_{i<j} e(V_i, V_j) = e(L) - sum_i e(V_i)
    return L.num_edges - sum(L.edges_within(p) for p in parts)


def peel_order(L: Graph, part: int, threshold: float) -> list[int]:
    """Maximal ordered list of vertices each having fewer than ``threshold``
    neighbours among the not-yet-peeled vertices of ``part``; smallest id first."""
    remaining = part
    out: list[int] = []
    while True:
        for w in bits(remaining):
            if popcount(L.adj[w] & remaining) < threshold:
                out.append(w)
                remaining &= ~(1 << w)
                break
        else:
            return out


def _components(L: Graph, part: int) -> list[int]:
    comps = []
    left = part
    while left:
        seed = left & -left
        comp = seed
        frontier = seed
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= L.adj[v]
            nxt &= part & ~comp
            comp |= nxt
            frontier = nxt
        comps.append(comp)
        left &= ~comp
    return comps


def _spectral_cuts(L: Graph, part: int, min_side: float) -> list[int]:
    """Sweep cuts along the Fiedler vector of ``L[part]``; best few by crossing count."""
    vs = list(bits(part))
    k = len(vs)
    if k < 4 or k > 600:
        return []
    A = L.induced(part).to_matrix()[np.ix_(vs, vs)].astype(float)
    lap = np.diag(A.sum(axis=1)) - A
    _, vecs = np.linalg.eigh(lap)
    order = np.argsort(vecs[:, 1], kind="stable")
    cuts = []
    x = 0
    for i in range(k - 1):
        x |= 1 << vs[order[i]]
        if min_side <= i + 1 <= k - min_side:
            cuts.append((L.edges_between(x, part & ~x), x))
    cuts.sort(key=lambda c: c[0])
    return [c[1] for c in cuts[:3]]


def extract_robust_subgraph(L: Graph, alpha: float) -> RobustCandidate:
    if L.order < 1:
        raise ValueError("graph has no vertices")
    if not 0 < alpha <= 4 / 9:
        raise ValueError("alpha must lie in (0, 4/9]")
    n = L.order
    mu = alpha / 72
    min_part = mu * n / 2
    wsize = math.ceil(mu * n / 2)
    parts = [L.vertex_set]
    trace: list[str] = []

    def admissible(new_parts: list[int]) -> bool:
        if any(popcount(p) < min_part for p in new_parts):
            return False
        t = len(new_parts)
        return _crossing_total(L, new_parts) <= 2 * (t - 1) * mu * mu * n * n

    while True:
        parts = _sort_parts(parts)
        v1, rest = parts[0], parts[1:]
        w = peel_order(L, v1, mu * n)
        moves: list[tuple[str, int]] = []
        if len(w) >= wsize:
            moves.append(("peel", mask_of(w[:wsize])))
        comps = _components(L, v1)
        if len(comps) > 1:
            moves.extend(("component", c) for c in _sort_parts(comps))
        moves.extend(("sweep", x) for x in _spectral_cuts(L, v1, min_part))
        for kind, x in moves:
            cand = [x, v1 & ~x] + rest
            if admissible(cand):
                trace.append(f"split {kind}: {popcount(x)} | {popcount(v1 & ~x)}")
                parts = cand
                break
        else:
            break

    parts = _sort_parts(parts)
    v1 = parts[0]
    w = peel_order(L, v1, mu * n)
    U = v1 & ~mask_of(w)
    R = L.induced(U)
    crossing = L.edges_between(U, L.vertex_set & ~U)
    trace.append(f"final: t={len(parts)} |V1|={popcount(v1)} |W|={len(w)} |U|={popcount(U)}")
    return RobustCandidate(
        base=L,
        U=U,
        R=R,
        partition=parts,
        peeled=w,
        mu=mu,
        eta=popcount(v1) / n,
        crossing=crossing,
        trace=trace,
    )


# ---------------------------------------------------------------- inseparability


@dataclass(frozen=True)
class InseparabilityVerdict:
    status: Literal["proved", "refuted", "sampled-ok"]
    cut: tuple[frozenset, frozenset] | None = None
    cut_edges: int | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "refuted"


def _cut_values(G: Graph, vs: list[int]) -> np.ndarray:
    """``e(X, V\\X)`` for every subset ``X`` of ``vs`` containing ``vs[0]``; index = local mask >> 1."""
    k = len(vs)
    pos = {v: i for i, v in enumerate(vs)}
    nbr = [sum(1 << pos[w] for w in bits(G.adj[v] & G.vertex_set)) for v in vs]
    deg = np.array([popcount(m) for m in nbr], dtype=np.int64)
    size = 1 << k
    inner = np.zeros(size, dtype=np.int64)  # e(X)
    degsum = np.zeros(size, dtype=np.int64)
    for j in range(k):
        lo, hi = 1 << j, 1 << (j + 1)
        base = np.arange(lo, dtype=np.int64)
        inner[lo:hi] = inner[:lo] + np.bitwise_count(base & nbr[j]).astype(np.int64)
        degsum[lo:hi] = degsum[:lo] + deg[j]
    cut = degsum - 2 * inner
    return cut[1::2]  # masks with bit 0 set


def check_inseparable(G: Graph, mu: float, mode: str | tuple = "exhaustive", seed: int = 0) -> InseparabilityVerdict:
    """``mode`` is ``"exhaustive"`` or ``("sampled", k)``."""
    vs = G.vertices()
    k = len(vs)
    if k == 0:
        return InseparabilityVerdict("refuted", reason="empty graph")
    thr_deg = mu * k
    for v in vs:
        if popcount(G.adj[v] & G.vertex_set) < thr_deg:
            return InseparabilityVerdict(
                "refuted", reason=f"vertex {v} has degree below {thr_deg:g}"
            )
    side = mu * k
    need = mu * mu * k * k

    def refute(x: int, val: int) -> InseparabilityVerdict:
        X = frozenset(bits(x))
        return InseparabilityVerdict(
            "refuted", (X, frozenset(vs) - X), val, f"cut with {val} < {need:g} crossing edges"
        )

    if mode == "exhaustive":
        if k > 22:
            raise ValueError("exhaustive inseparability check is capped at 22 vertices")
        cuts = _cut_values(G, vs)
        local = (np.arange(cuts.size, dtype=np.int64) << 1) | 1
        xs = np.bitwise_count(local).astype(np.int64)
        valid = (xs >= side) & (k - xs >= side)
        bad = np.flatnonzero(valid & (cuts < need))
        if bad.size:
            i = int(bad[np.argmin(cuts[bad])])
            lm = int(local[i])
            x = mask_of(vs[j] for j in range(k) if (lm >> j) & 1)
            return refute(x, int(cuts[i]))
        return InseparabilityVerdict("proved")

    _, samples = mode
    rng = random.Random(seed)
    lo = max(1, math.ceil(side))
    hi = k - lo
    if lo > hi:
        return InseparabilityVerdict("sampled-ok", reason="no admissible bipartition")
    full = G.vertex_set
    candidates: list[int] = []
    for _ in range(samples):
        s = rng.randint(lo, hi)
        candidates.append(mask_of(rng.sample(vs, s)))
    # greedy cuts grown from each vertex, adding the vertex that raises the cut least
    for v in vs:
        x = 1 << v
        for size in range(2, hi + 1):
            rest = full & ~x
            best = min(
                bits(rest),
                key=lambda w: (popcount(G.adj[w] & rest) - popcount(G.adj[w] & x), w),
            )
            x |= 1 << best
            if size >= lo:
                candidates.append(x)
    for x in candidates:
        val = G.edges_between(x, full & ~x)
        if val < need:
            return refute(x, val)
    return InseparabilityVerdict("sampled-ok")


# ---------------------------------------------------------------- robustness


@dataclass
class RobustnessReport:
    beta_observed: float
    ell: int
    robust: bool
    pairs_checked: int
    partial: bool = False
    inseparable_verdict: str | None = None
    crossing_edges: int | None = None
    intersection_pairs_checked: int = 0


def check_robust(G: Graph, beta: float, ell: int, pair_budget: int | None = None, seed: int = 0) -> RobustnessReport:
    """Minimum over vertex pairs of ``#paths of length ell / |V|^(ell-1)``.

    Path counts are symmetric, so unordered pairs suffice.  With more pairs
    than ``pair_budget`` a seeded sample is used and the report is flagged
    partial.
    """
    if ell < 3 or ell % 2 == 0:
        raise ValueError("ell must be odd and at least 3")
    vs = G.vertices()
    k = len(vs)
    pairs = list(combinations(vs, 2))
    partial = False
    if pair_budget is not None and len(pairs) > pair_budget:
        pairs = random.Random(seed).sample(pairs, pair_budget)
        partial = True
    if not pairs:
        return RobustnessReport(0.0, ell, False, 0, partial)
    norm = k ** (ell - 1)
    best = min(count_paths(G, x, y, ell, cap=max(ell, 7)) for x, y in pairs)
    obs = best / norm
    return RobustnessReport(obs, ell, obs >= beta, len(pairs), partial)


# ---------------------------------------------------------------- intersections


def intersection_hypotheses(c: RobustCandidate | Graph, alpha: float, n: int) -> bool:
    g = c.R if isinstance(c, RobustCandidate) else c
    u = g.order
    return u >= (2 / 3 + alpha / 2) * n and g.num_edges >= (5 / 9 + alpha / 2) * n * n / 2 - (n - u) ** 2 / 2


def intersection_check(
    R1: RobustCandidate | Graph, R2: RobustCandidate | Graph, alpha: float, n: int
) -> tuple[int, str]:
    """Exact ``|E(R1) & E(R2)|`` and a verdict ``pass``/``fail``/``hypotheses unmet``."""
    g1 = R1.R if isinstance(R1, RobustCandidate) else R1
    g2 = R2.R if isinstance(R2, RobustCandidate) else R2
    if g1.n != n or g2.n != n:
        raise ValueError("candidates live on different ambient vertex sets")
    common = sum(popcount(a & b) for a, b in zip(g1.adj, g2.adj)) // 2
    if not (intersection_hypotheses(g1, alpha, n) and intersection_hypotheses(g2, alpha, n)):
        return common, "hypotheses unmet"
    return common, "pass" if common >= alpha * n * n / 2 else "fail"
