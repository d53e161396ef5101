"""The almost spanning path ``Q``.

A candidate is a tight path ``Q`` assembled from ``M``-vertex pieces whose
end-pairs are connectable.  Two builders are provided:

* ``desk``: grow pieces greedily by tight extension, separate consecutive
  pieces by single vertices and, when growth stalls, restart elsewhere and
  join through the reservoir;
* ``faithful``: repeatedly pick a society of blocks that is useful for many
  uncovered vertices, thread a common graph path ``W`` with interleaved
  vertices into a path ``T``, split ``T`` into new pieces, and reconnect.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .connect import ConnectError, RobustFamily
from .hypergraph import Graph, Hypergraph3, TightPath, Verdict, bits, mask_of, popcount, validate_tight
from .reservoir import Reservoir, ReservoirError, connect_through_reservoir


class LongPathError(RuntimeError):
    def __init__(self, msg: str, best: "Candidate | None" = None):
        super().__init__(msg)
        self.best = best


# ---------------------------------------------------------------- candidates


@dataclass
class Candidate:
    pieces: list[tuple[int, ...]]
    Q: TightPath | None
    reservoir_usage: int = 0

    @property
    def seq(self) -> tuple[int, ...]:
        return () if self.Q is None else self.Q.seq

    @property
    def vertex_mask(self) -> int:
        return mask_of(self.seq)

    @staticmethod
    def empty() -> "Candidate":
        return Candidate([], None, 0)


def piece_positions(seq: Sequence[int], pieces: Sequence[Sequence[int]]) -> list[int] | None:
    pos = {v: i for i, v in enumerate(seq)}
    out = []
    for p in pieces:
        if not p or p[0] not in pos:
            return None
        i = pos[p[0]]
        if tuple(seq[i : i + len(p)]) != tuple(p):
            return None
        out.append(i)
    return out


def check_candidate(
    H: Hypergraph3, cand: Candidate, reservoir: int, alpha: float, ell: int
) -> Verdict:
    """Conditions (a)-(d) for a candidate, evaluated from scratch."""
    seq = cand.seq
    if not cand.pieces:
        if seq:
            return Verdict(False, "path without pieces")
        return Verdict(True)
    v = validate_tight(H, seq)
    if not v:
        return Verdict(False, f"Q is not a tight path: {v.reason}")
    starts = piece_positions(seq, cand.pieces)
    if starts is None:
        return Verdict(False, "(a) some piece is not a subpath of Q")
    spans = sorted((s, s + len(p)) for s, p in zip(starts, cand.pieces))
    for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
        if s1 < e0:
            return Verdict(False, "(a) pieces overlap")
        gap = seq[e0:s1]
        if len(gap) != 1 and any(not (reservoir >> g) & 1 for g in gap):
            return Verdict(False, f"(b) gap {gap} is neither one vertex nor reservoir-only")
    if spans[0][0] != 0 or spans[-1][1] != len(seq):
        return Verdict(False, "(c) Q must start and end with a piece")
    used = popcount(mask_of(seq) & reservoir)
    if used > 19 / alpha * ell * len(cand.pieces):
        return Verdict(False, f"(d) {used} reservoir vertices exceed 19 ell |C| / alpha")
    if used != cand.reservoir_usage:
        return Verdict(False, "recorded reservoir usage is stale")
    return Verdict(True)


def check_piece(H: Hypergraph3, piece: Sequence[int], M: int, connectable: np.ndarray) -> Verdict:
    if len(piece) != M:
        return Verdict(False, f"piece has {len(piece)} vertices, expected {M}")
    v = validate_tight(H, piece)
    if not v:
        return v
    if not connectable[piece[0], piece[1]] or not connectable[piece[-2], piece[-1]]:
        return Verdict(False, "piece end-pair not connectable")
    return Verdict(True)


# ---------------------------------------------------------------- societies


@dataclass
class SocietyContext:
    n: int
    M: int
    m: int
    blocks: list[int]
    U: int
    U_bad: int
    filtered: list[Graph]
    eta: np.ndarray
    alpha: float

    def __post_init__(self):
        seen = 0
        for b in self.blocks:
            if popcount(b) != self.M:
                raise ValueError("every block must have exactly M vertices")
            if b & seen:
                raise ValueError("blocks must be disjoint")
            seen |= b
        self.U_bad &= self.U


def filter_connectable_links(fam: RobustFamily, zeta2: float, alpha: float) -> tuple[list[Graph], set[int]]:
    """Drop the non-connectable edges from every ``R_u``; report the vertices that lose too much."""
    C = fam.connectable_matrix(zeta2)
    crow = [mask_of(np.flatnonzero(C[v]).tolist()) for v in range(fam.n)]
    out = []
    bad = set()
    n = fam.n
    for u, g in enumerate(fam.graphs):
        adj = [a & crow[v] for v, a in enumerate(g.adj)]
        fg = Graph(n, g.vertex_set, adj)
        out.append(fg)
        if fg.num_edges <= g.num_edges - alpha * n * n / 8:
            bad.add(u)
    return out, bad


def make_context(
    fam: RobustFamily, filtered: list[Graph], U_bad: set[int], U: int, pieces: Sequence[Sequence[int]], M: int, m: int, alpha: float
) -> SocietyContext:
    """Blocks are the piece vertex sets followed by fresh ``M``-blocks of ``U`` in vertex-id order."""
    blocks = [mask_of(p) for p in pieces]
    fresh = list(bits(U))
    for i in range(len(fresh) // M):
        blocks.append(mask_of(fresh[i * M : (i + 1) * M]))
    eta = np.array([g.order / fam.n for g in fam.graphs])
    return SocietyContext(fam.n, M, m, blocks, U, mask_of(U_bad), filtered, eta, alpha)


def useful_threshold(alpha: float, eta: float, tau: float, s: int) -> float:
    return (5 / 9 + alpha / 9 - (1 - eta) * (1 + eta - 2 * tau)) * s * s / 2


def useful_for(S_union: int, u: int, ctx: SocietyContext, alpha: float) -> bool:
    if (ctx.U_bad >> u) & 1:
        raise ValueError(f"vertex {u} is in U_bad")
    s = popcount(S_union)
    if s != ctx.M * ctx.m:
        raise ValueError(f"society has {s} vertices, expected M*m = {ctx.M * ctx.m}")
    g = ctx.filtered[u]
    inside = S_union & g.vertex_set
    tau = popcount(inside) / s
    lhs = g.edges_within(inside)
    return lhs >= useful_threshold(alpha, float(ctx.eta[u]), tau, s)


def find_useful_society(
    ctx: SocietyContext, sample_budget: int, seed: int, fraction: float | None = None, prefer: Sequence[int] = ()
) -> tuple[list[int], int] | None:
    """Sample ``m``-sets of blocks; return the first useful for enough uncovered vertices.

    ``prefer`` lists block indices tried first (as one society) when there are enough of them.
    """
    nu = len(ctx.blocks)
    if nu < ctx.m:
        raise ValueError(f"only {nu} blocks, a society needs {ctx.m}")
    rng = random.Random(seed)
    frac = ctx.alpha / 18 if fraction is None else fraction
    good_pool = ctx.U & ~ctx.U_bad
    need = frac * popcount(good_pool)
    tried = set()
    for k in range(sample_budget):
        if k == 0 and len(prefer) >= ctx.m:
            soc = tuple(sorted(prefer[: ctx.m]))
        else:
            soc = tuple(sorted(rng.sample(range(nu), ctx.m)))
        if soc in tried:
            continue
        tried.add(soc)
        S = 0
        for i in soc:
            S |= ctx.blocks[i]
        cand = good_pool & ~S
        users = mask_of(u for u in bits(cand) if useful_for(S, u, ctx, ctx.alpha))
        if users and popcount(users) >= need:
            return list(soc), users
    return None


def _path_search(adj: Sequence[int], verts: int, length: int, rng: random.Random, budget: int) -> list[int] | None:
    """Simple path with ``length`` vertices in the graph ``adj`` restricted to ``verts``."""
    left = [budget]
    starts = list(bits(verts))
    rng.shuffle(starts)
    # fewest-onward-options first (Warnsdorff) with random tie-breaks
    def rec(path: list[int], used: int) -> list[int] | None:
        if len(path) == length:
            return path
        left[0] -= 1
        if left[0] < 0:
            return None
        cand = adj[path[-1]] & verts & ~used
        opts = list(bits(cand))
        rng.shuffle(opts)
        opts.sort(key=lambda w: popcount(adj[w] & verts & ~used))
        for w in opts:
            got = rec(path + [w], used | (1 << w))
            if got is not None:
                return got
            if left[0] < 0:
                return None
        return None

    for s in starts:
        got = rec([s], 1 << s)
        if got is not None:
            return got
        if left[0] < 0:
            return None
    return None


def common_connectable_path(
    U2: int, S_union: int, ctx: SocietyContext, needed_len: int, budget: int = 50_000, seed: int = 0
) -> list[int] | None:
    """A path on ``needed_len`` vertices of ``S_union`` lying in every filtered graph of ``U2``."""
    if not U2:
        raise ValueError("U2 must be nonempty")
    us = list(bits(U2))
    adj = [a & S_union for a in ctx.filtered[us[0]].adj]
    for u in us[1:]:
        adj = [p & q for p, q in zip(adj, ctx.filtered[u].adj)]
    verts = mask_of(v for v in bits(S_union) if adj[v])
    if popcount(verts) < needed_len:
        return None
    W = _path_search(adj, verts, needed_len, random.Random(seed), budget)
    if W is not None:
        for u in us:
            g = ctx.filtered[u]
            assert all(g.has_edge(p, q) for p, q in zip(W, W[1:]))
    return W


def select_interleaving(
    U_prime: int, S_union: int, ctx: SocietyContext, needed_len: int, need_u: int, seed: int = 0, budget: int = 50_000
) -> tuple[list[int], list[int]] | None:
    """Find ``W`` and a set ``U''`` of at least ``need_u`` vertices whose filtered graphs all contain ``W``."""
    rng = random.Random(seed)
    us = sorted(bits(U_prime), key=lambda u: (-ctx.filtered[u].edges_within(S_union), u))
    if len(us) < need_u or need_u < 1:
        return None
    for k in sorted({len(us), max(need_u, (len(us) + need_u) // 2), need_u}, reverse=True):
        group = mask_of(us[:k])
        W = common_connectable_path(group, S_union, ctx, needed_len, budget, rng.randrange(1 << 30))
        if W is None:
            continue
        sharing = [u for u in us if all(ctx.filtered[u].has_edge(p, q) for p, q in zip(W, W[1:]))]
        if len(sharing) >= need_u:
            return W, sharing[:need_u]
    return None


def interleave(W: Sequence[int], U2: Sequence[int]) -> list[int]:
    """``T``: 1-based positions divisible by 3 carry the vertices of ``U2``."""
    total = len(W) + len(U2)
    T, wi, ui = [], 0, 0
    for pos in range(1, total + 1):
        if pos % 3 == 0:
            T.append(U2[ui])
            ui += 1
        else:
            T.append(W[wi])
            wi += 1
    return T


def split_pieces(T: Sequence[int], M: int) -> tuple[list[tuple[int, ...]], list[int]]:
    k = (len(T) + 1) // (M + 1)
    pieces = [tuple(T[i * (M + 1) : i * (M + 1) + M]) for i in range(k)]
    seps = [T[i * (M + 1) + M] for i in range(k - 1)]
    return pieces, seps


# ---------------------------------------------------------------- augmentation


@dataclass
class LongPathConfig:
    alpha: float = 0.2
    ell: int = 3
    zeta2: float = 0.15
    M: int = 8
    m: int = 3
    mode: str = "desk"
    leftover_cap: float = 6.0
    q_reservoir_cap: float | None = None
    reservoir_cap: float | None = None
    reserve_free: int = 0  # desk joins must leave this many reservoir vertices free
    min_gain: int = 1
    new_pieces: int | None = None
    society_budget: int = 200
    search_budget: int = 50_000
    connect_budget: int = 200_000
    rounds: int = 50
    seed: int = 0


@dataclass
class AugmentReport:
    ok: bool
    reason: str = ""
    removed: int = 0
    added: int = 0
    connections: int = 0


def _runs(cand: Candidate, drop: set[int]) -> list[tuple[list[tuple[int, ...]], list[int]]]:
    """Split ``Q`` into maximal stretches of kept pieces (with their gaps) after dropping ``drop``."""
    seq = list(cand.seq)
    starts = piece_positions(seq, cand.pieces)
    order = sorted(range(len(cand.pieces)), key=lambda i: starts[i])
    runs: list[tuple[list[tuple[int, ...]], list[int]]] = []
    cur_p: list[tuple[int, ...]] = []
    cur_s: list[int] = []
    prev_end = None
    for i in order:
        s = starts[i]
        p = cand.pieces[i]
        if i in drop:
            if cur_p:
                runs.append((cur_p, cur_s))
            cur_p, cur_s, prev_end = [], [], None
            continue
        if cur_p:
            cur_s.extend(seq[prev_end:s])
        cur_p.append(p)
        cur_s.extend(p)
        prev_end = s + len(p)
    if cur_p:
        runs.append((cur_p, cur_s))
    return runs


def _join(
    H: Hypergraph3, fam: RobustFamily, res: Reservoir, segments: list[list[int]], cfg: LongPathConfig, rng: random.Random
) -> tuple[list[int], int]:
    seq = list(segments[0])
    joins = 0
    for seg in segments[1:]:
        p = connect_through_reservoir(
            H, fam, res, (seq[-2], seq[-1]), (seg[0], seg[1]), cfg.zeta2,
            cap=cfg.reservoir_cap, seed=rng.randrange(1 << 30), budget=cfg.connect_budget,
        )
        seq.extend(p.seq[2:-2])
        seq.extend(seg)
        joins += 1
    return seq, joins


def augment_candidate(
    cand: Candidate,
    ctx: SocietyContext,
    H: Hypergraph3,
    fam: RobustFamily,
    res: Reservoir,
    cfg: LongPathConfig,
    society: tuple[list[int], int] | None = None,
) -> tuple[Candidate, AugmentReport]:
    """One augmentation step; on any failure the input candidate is returned unchanged."""
    rng = random.Random(cfg.seed)
    if society is None:
        try:
            society = find_useful_society(ctx, cfg.society_budget, rng.randrange(1 << 30))
        except ValueError as e:
            return cand, AugmentReport(False, str(e))
    if society is None:
        return cand, AugmentReport(False, "no useful society within budget")
    soc, users = society
    S = 0
    for i in soc:
        S |= ctx.blocks[i]
    drop = {i for i, p in enumerate(cand.pieces) if mask_of(p) in {ctx.blocks[j] for j in soc}}
    if cfg.mode == "faithful":
        k = ctx.m + 6
    else:
        k = cfg.new_pieces if cfg.new_pieces is not None else len(drop) + cfg.min_gain
    M = ctx.M
    total = (M + 1) * k - 1
    need_u = total // 3
    need_w = total - need_u
    got = select_interleaving(users, S, ctx, need_w, need_u, rng.randrange(1 << 30), cfg.search_budget)
    if got is None:
        return cand, AugmentReport(False, f"no common path on {need_w} vertices shared by {need_u} useful vertices")
    W, U2 = got
    T = interleave(W, U2)
    verdict = validate_tight(H, T)
    if not verdict:
        raise AssertionError(f"internal error: interleaved path invalid ({verdict.reason})")
    new_pieces, _ = split_pieces(T, M)
    C = fam.connectable_matrix(cfg.zeta2)
    for p in new_pieces:
        pv = check_piece(H, p, M, C)
        if not pv:
            raise AssertionError(f"internal error: new piece invalid ({pv.reason})")
    runs = _runs(cand, drop)
    # vertices of kept runs must not meet T
    tmask = mask_of(T)
    for _, s in runs:
        if mask_of(s) & tmask:
            return cand, AugmentReport(False, "T meets a kept stretch of Q")
    snapshot = res.used
    try:
        seq, joins = _join(H, fam, res, [s for _, s in runs] + [T], cfg, rng)
    except (ConnectError, ReservoirError) as e:
        res.used = snapshot
        return cand, AugmentReport(False, f"reconnection failed: {e}")
    pieces = [p for ps, _ in runs for p in ps] + new_pieces
    usage = popcount(mask_of(seq) & res.members)
    new = Candidate(pieces, TightPath(tuple(seq)), usage)
    v = check_candidate(H, new, res.members, cfg.alpha, cfg.ell)
    if not v or len(pieces) < len(cand.pieces) + (6 if cfg.mode == "faithful" else cfg.min_gain):
        res.used = snapshot
        return cand, AugmentReport(False, f"augmented candidate rejected: {v.reason or 'insufficient gain'}")
    return new, AugmentReport(True, "", len(drop), len(new_pieces), joins)


# ---------------------------------------------------------------- builders


@dataclass
class LongPathReport:
    mode: str
    pieces: int = 0
    covered: int = 0
    uncovered: int = 0
    reservoir_usage: int = 0
    joins: int = 0
    rounds: int = 0
    candidates_checked: int = 0
    notes: list[str] = field(default_factory=list)


def _grow_pieces(
    H: Hypergraph3, start: tuple[int, int], free: int, M: int, C: np.ndarray, rng: random.Random, budget: int
) -> list[int]:
    """Greedy tight extension from ``start`` laid out as pieces separated by single vertices.

    Returns the longest prefix ending with a complete piece found within ``budget``.
    """
    pm = H.pair_mask
    step = M + 1
    best: list[int] = []
    left = [budget]

    def piece_end(i: int) -> bool:
        return i % step == M - 1

    def piece_start(i: int) -> bool:
        return i % step == 1

    def rec(seq: list[int], used: int) -> bool:
        nonlocal best
        i = len(seq) - 1
        if piece_end(i):
            if len(seq) > len(best):
                best = list(seq)
            if popcount(free & ~used) < M + 1:
                return True
        left[0] -= 1
        if left[0] < 0:
            return True
        cand = pm(seq[-2], seq[-1]) & free & ~used
        opts = list(bits(cand))
        rng.shuffle(opts)
        opts.sort(key=lambda w: popcount(pm(seq[-1], w) & free & ~used))
        for w in opts:
            j = i + 1
            if piece_end(j) and not C[seq[-1], w]:
                continue
            if piece_start(j) and not C[seq[-1], w]:
                continue
            seq.append(w)
            if rec(seq, used | (1 << w)):
                return True
            seq.pop()
        return False

    rec(list(start), mask_of(start))
    return best


def _desk(H: Hypergraph3, fam: RobustFamily, res: Reservoir, avail: int, cfg: LongPathConfig, observe) -> tuple[Candidate, LongPathReport]:
    rng = random.Random(cfg.seed)
    M = cfg.M
    C = fam.connectable_matrix(cfg.zeta2)
    rep = LongPathReport("desk")
    free = avail & ~res.members
    cand = Candidate.empty()
    seq: list[int] = []
    pieces: list[tuple[int, ...]] = []
    q_cap = cfg.q_reservoir_cap
    for _ in range(cfg.rounds):
        rep.rounds += 1
        remaining = free & ~mask_of(seq)
        if popcount(remaining) < M:
            break
        starts = [(a, b) for a in bits(remaining) for b in bits(remaining) if a != b and C[a, b]]
        if not starts:
            break
        rng.shuffle(starts)
        starts.sort(key=lambda p: popcount(H.pair_mask(*p) & remaining))
        grown = []
        for st in starts[:20]:
            g = _grow_pieces(H, st, remaining, M, C, rng, cfg.search_budget)
            if len(g) > len(grown):
                grown = g
            if popcount(remaining) - len(grown) < M + 1:
                break
        if not grown:
            rep.notes.append("no piece could be started")
            break
        new_pieces, _ = split_pieces(grown, M)
        if seq:
            if q_cap is not None and popcount(mask_of(seq) & res.members) + 3 * cfg.ell + 1 > q_cap:
                rep.notes.append("reservoir cap reached for joins inside Q")
                break
            if res.free_count - (3 * cfg.ell + 1) < cfg.reserve_free:
                rep.notes.append("join would eat reservoir vertices kept for closing")
                break
            snapshot = res.used
            try:
                joined, _ = _join(H, fam, res, [seq, grown], cfg, rng)
            except (ConnectError, ReservoirError) as e:
                res.used = snapshot
                rep.notes.append(f"join failed: {e}")
                break
            rep.joins += 1
            seq = joined
        else:
            seq = list(grown)
        pieces = pieces + new_pieces
        cand = Candidate(list(pieces), TightPath(tuple(seq)), popcount(mask_of(seq) & res.members))
        observe(cand)
    return cand, rep


def _faithful(H: Hypergraph3, fam: RobustFamily, res: Reservoir, avail: int, cfg: LongPathConfig, observe) -> tuple[Candidate, LongPathReport]:
    rng = random.Random(cfg.seed)
    rep = LongPathReport("faithful")
    filtered, bad = filter_connectable_links(fam, cfg.zeta2, cfg.alpha)
    cand = Candidate.empty()
    for _ in range(cfg.rounds):
        rep.rounds += 1
        U = avail & ~res.members & ~cand.vertex_mask
        if popcount(U) <= cfg.leftover_cap:
            break
        try:
            ctx = make_context(fam, filtered, bad, U, cand.pieces, cfg.M, cfg.m, cfg.alpha)
        except ValueError as e:
            rep.notes.append(str(e))
            break
        if len(ctx.blocks) < ctx.m:
            rep.notes.append(f"only {len(ctx.blocks)} blocks for societies of size {ctx.m}")
            break
        step_cfg = LongPathConfig(**{**cfg.__dict__, "seed": rng.randrange(1 << 30)})
        new, ar = augment_candidate(cand, ctx, H, fam, res, step_cfg)
        if not ar.ok:
            rep.notes.append(ar.reason)
            break
        rep.joins += ar.connections
        cand = new
        observe(cand)
    return cand, rep


def build_long_path(
    H_hat: Hypergraph3,
    fam: RobustFamily,
    res: Reservoir,
    cfg: LongPathConfig,
    avail: int | None = None,
    observe: Callable[[Candidate], None] | None = None,
) -> tuple[Candidate, LongPathReport]:
    """Build ``Q`` inside ``avail`` (default: all vertices covered by ``H_hat``'s vertex range).

    Raises :class:`LongPathError` when a postcondition fails; the best
    candidate found is attached to the exception.
    """
    n = H_hat.n
    if avail is None:
        avail = (1 << n) - 1
    seen: list[Candidate] = []

    def obs(c: Candidate) -> None:
        v = check_candidate(H_hat, c, res.members, cfg.alpha, cfg.ell)
        if not v:
            raise AssertionError(f"internal error: candidate invalid ({v.reason})")
        seen.append(c)
        if observe is not None:
            observe(c)

    if cfg.mode == "faithful":
        cand, rep = _faithful(H_hat, fam, res, avail, cfg, obs)
    elif cfg.mode == "desk":
        cand, rep = _desk(H_hat, fam, res, avail, cfg, obs)
    else:
        raise ValueError(f"unknown mode {cfg.mode!r}")
    rep.candidates_checked = len(seen)
    rep.pieces = len(cand.pieces)
    rep.covered = len(cand.seq)
    rep.reservoir_usage = cand.reservoir_usage
    rep.uncovered = popcount(avail & ~res.members & ~cand.vertex_mask)
    if rep.uncovered > cfg.leftover_cap:
        raise LongPathError(f"{rep.uncovered} vertices left uncovered, cap {cfg.leftover_cap:g}", cand)
    if cfg.q_reservoir_cap is not None and cand.reservoir_usage > cfg.q_reservoir_cap:
        raise LongPathError(f"Q uses {cand.reservoir_usage} reservoir vertices, cap {cfg.q_reservoir_cap:g}", cand)
    if cand.pieces:
        C = fam.connectable_matrix(cfg.zeta2)
        s = cand.seq
        if not (C[s[0], s[1]] and C[s[-2], s[-1]]):
            raise LongPathError("end-pairs of Q are not connectable", cand)
    return cand, rep
