"""Absorbers and the absorbing path.

A ``v``-absorber is a 9-tuple ``(a, b, c, d, z, x, y, y2, x2)`` of distinct
vertices such that ``abzcd`` and ``x y y2 x2`` are tight paths, ``z`` also
fits between ``y`` and ``y2`` (``zxy``, ``zyy2``, ``zy2x2`` are edges), the
outer pairs ``ab``, ``cd``, ``xy``, ``y2x2`` are connectable, and ``v`` can
replace ``z`` (``vab``, ``vbc``, ``vcd`` are edges).  Swapping
``abzcd -> abvcd`` and ``xyy2x2 -> xyzy2x2`` inserts ``v`` into any tight path
containing both subpaths while leaving its end-pairs alone.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .connect import ConnectError, ConnectRequest, RobustFamily, find_connecting_path
from .hypergraph import Hypergraph3, TightPath, Verdict, bits, mask_of, popcount, validate_tight


class AbsorbError(RuntimeError):
    pass


class FamilyError(AbsorbError):
    def __init__(self, msg: str, uncovered: Sequence[int] = ()):
        super().__init__(msg)
        self.uncovered = list(uncovered)


class PathAssemblyError(AbsorbError):
    def __init__(self, msg: str, stuck: tuple | None = None):
        super().__init__(msg)
        self.stuck = stuck


# ---------------------------------------------------------------- central edges

CENTRAL_BOUND = Fraction(28, 5)


def f_value(H: Hypergraph3, e: Sequence[int]) -> Fraction:
    x, y, z = e
    if not H.has_edge(x, y, z):
        raise ValueError(f"{tuple(e)} is not an edge")
    n = H.n
    return Fraction(n, H.pair_degree(x, y)) + Fraction(n, H.pair_degree(x, z)) + Fraction(n, H.pair_degree(y, z))


def central_edges(H: Hypergraph3) -> set[tuple[int, int, int]]:
    return {e for e in H.edges if f_value(H, e) <= CENTRAL_BOUND}


def _orient_central(H: Hypergraph3, e: tuple[int, int, int]) -> tuple[int, int, int]:
    """Return ``(y, y2, z)`` with ``d(y,y2) >= d(y,z) >= d(y2,z)``; ties go to smaller ids."""
    d = H.pair_degree
    best = None
    for z in e:
        y, y2 = (v for v in e if v != z)
        for a, b in ((y, y2), (y2, y)):
            key = (d(a, b), d(a, z), d(b, z))
            if key[0] >= key[1] >= key[2]:
                cand = (a, b, z)
                if best is None or cand < best:
                    best = cand
    assert best is not None  # some ordering of three numbers is sorted
    return best


def find_central_quintuples(H: Hypergraph3, limit: int) -> list[tuple[int, int, int, int, int]]:
    """Quintuples ``(x, y, y2, x2, z)`` with ``xyz, yy2z, x2y2z, xyy2, yy2x2`` edges and ``d(y,z) > 5n/12``."""
    n = H.n
    out: list[tuple[int, int, int, int, int]] = []
    if not H.edges or limit <= 0:
        return out
    if min(H.degree(v) for v in range(n)) < Fraction(6, 11) * n * n / 2:
        warnings.warn("minimum degree below 6/11 * n^2/2; the quintuple count guarantee does not apply")
    pm = H.pair_mask
    for e in sorted(central_edges(H)):
        y, y2, z = _orient_central(H, e)
        if 12 * H.pair_degree(y, z) <= 5 * n:
            continue
        xs = pm(y, z) & pm(y, y2) & ~(1 << y2)
        x2s = pm(y2, z) & pm(y, y2) & ~(1 << y)
        for x in bits(xs):
            for x2 in bits(x2s & ~(1 << x)):
                out.append((x, y, y2, x2, z))
                if len(out) >= limit:
                    return out
    return out


# ---------------------------------------------------------------- absorbable vertices


@dataclass
class AbsorbableIndex:
    """Per-vertex quadruple counts and lazily drawn witnesses."""

    H: Hypergraph3
    connectable: np.ndarray
    counts: np.ndarray
    zeta_star: float
    _pairs: dict = field(default_factory=dict, repr=False)

    def absorbable(self, frac: float) -> set[int]:
        thr = frac * self.H.n**4
        return {int(z) for z in np.flatnonzero(self.counts >= thr) if self.counts[z] > 0}

    def _sides(self, z: int):
        if z not in self._pairs:
            T = self.H.pair_tensor()
            C = self.connectable
            Tz = T[z]
            A = Tz[:, None, :] & T & C[:, None, :]
            B = Tz[None, :, :] & T & C[None, :, :]
            ok = Tz & A.any(-1) & B.any(-1)
            ys, y2s = np.nonzero(ok)
            self._pairs[z] = [(int(y), int(y2), np.flatnonzero(A[y, y2]), np.flatnonzero(B[y, y2])) for y, y2 in zip(ys, y2s)]
        return self._pairs[z]

    def witnesses(self, z: int, rng: random.Random, forbid: int = 0) -> Iterator[tuple[int, int, int, int]]:
        """Random quadruples ``(x, y, y2, x2)`` for ``z`` avoiding ``forbid``."""
        pairs = list(self._sides(z))
        rng.shuffle(pairs)
        for y, y2, xs, x2s in pairs:
            if (forbid >> y) & 1 or (forbid >> y2) & 1:
                continue
            xs = [int(v) for v in xs if not (forbid >> int(v)) & 1]
            x2s = [int(v) for v in x2s if not (forbid >> int(v)) & 1]
            if not xs or not x2s:
                continue
            x = rng.choice(xs)
            rest = [v for v in x2s if v != x]
            if not rest:
                continue
            yield x, y, y2, rng.choice(rest)


def absorbable_index(H: Hypergraph3, fam: RobustFamily, zeta_star: float) -> AbsorbableIndex:
    n = H.n
    C = fam.connectable_matrix(zeta_star)
    counts = np.zeros(n, dtype=np.int64)
    if H.edges:
        T = H.pair_tensor()
        for z in range(n):
            Tz = T[z]
            A = Tz[:, None, :] & T & C[:, None, :]
            B = Tz[None, :, :] & T & C[None, :, :]
            sa = A.sum(-1, dtype=np.int64)
            sb = B.sum(-1, dtype=np.int64)
            both = (A & B).sum(-1, dtype=np.int64)
            counts[z] = int(((sa * sb - both) * Tz).sum())
    return AbsorbableIndex(H, C, counts, zeta_star)


def absorbable_vertices(H: Hypergraph3, fam: RobustFamily, zeta_star: float, frac: float = 1e-3) -> set[int]:
    if not 0 < frac <= 1:
        raise ValueError("frac must lie in (0, 1]")
    return absorbable_index(H, fam, zeta_star).absorbable(frac)


# ---------------------------------------------------------------- absorber tuples


@dataclass(frozen=True)
class AbsorberTuple:
    a: int
    b: int
    c: int
    d: int
    z: int
    x: int
    y: int
    y2: int
    x2: int

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.a, self.b, self.c, self.d, self.z, self.x, self.y, self.y2, self.x2)

    @property
    def first(self) -> tuple[int, int, int, int, int]:
        return (self.a, self.b, self.z, self.c, self.d)

    @property
    def second(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.y2, self.x2)

    def mask(self) -> int:
        return mask_of(self.vertices)

    def absorbs(self, H: Hypergraph3, v: int) -> bool:
        return (
            v not in self.vertices
            and H.has_edge(v, self.a, self.b)
            and H.has_edge(v, self.b, self.c)
            and H.has_edge(v, self.c, self.d)
        )


def recheck_absorber(
    H: Hypergraph3, fam: RobustFamily, t: AbsorberTuple, zeta_star: float, v: int | None = None
) -> Verdict:
    """Independent check of the absorber conditions straight from the edge set."""
    E = H.edges
    vs = t.vertices
    if len(set(vs)) != 9:
        return Verdict(False, "repeated vertex")
    if v is not None and v in vs:
        return Verdict(False, "absorbed vertex lies in the tuple")
    a, b, c, d, z, x, y, y2, x2 = vs
    need = [(z, a, b), (z, b, c), (z, c, d), (z, x, y), (z, y, y2), (z, y2, x2), (x, y, y2), (y, y2, x2)]
    if v is not None:
        need += [(v, a, b), (v, b, c), (v, c, d)]
    for tr in need:
        if tuple(sorted(tr)) not in E:
            return Verdict(False, f"missing edge {tr}", tr)
    thr = zeta_star * fam.n
    for p, q in ((a, b), (c, d), (x, y), (y2, x2)):
        if int(fam.stack[:, p, q].sum()) < thr:
            return Verdict(False, f"pair {(p, q)} is not connectable", (p, q))
    return Verdict(True)


def find_v_absorbers(
    H: Hypergraph3,
    fam: RobustFamily,
    v: int,
    zeta_star: float,
    limit: int,
    *,
    avoid: int = 0,
    index: AbsorbableIndex | None = None,
    frac: float = 1e-3,
    seed: int = 0,
    per_z: int = 2,
) -> list[AbsorberTuple]:
    """Up to ``limit`` verified ``v``-absorbers with no vertex in ``avoid``."""
    if not 0 <= v < H.n:
        raise IndexError(f"vertex {v} out of range")
    if limit <= 0 or H.degree(v) == 0:
        return []
    index = index or absorbable_index(H, fam, zeta_star)
    C = index.connectable
    rng = random.Random(seed * 1_000_003 + v)
    zs = sorted(index.absorbable(frac) - {v})
    zs = [z for z in zs if not (avoid >> z) & 1]
    rng.shuffle(zs)
    Rv = fam.graphs[v].adj
    out: list[AbsorberTuple] = []
    seen = set()
    for z in zs:
        Rz = fam.graphs[z].adj
        free = ((1 << H.n) - 1) & ~avoid & ~((1 << v) | (1 << z))
        common = [(p & q & free) if (free >> i) & 1 else 0 for i, (p, q) in enumerate(zip(Rv, Rz))]
        found = 0
        starts = [a for a in range(H.n) if common[a]]
        rng.shuffle(starts)
        for a in starts:
            if found >= per_z or len(out) >= limit:
                break
            bs = [b for b in bits(common[a]) if C[a, b]]
            rng.shuffle(bs)
            for b in bs:
                cs = list(bits(common[b] & ~(1 << a)))
                rng.shuffle(cs)
                hit = None
                for c in cs:
                    ds = [d for d in bits(common[c] & ~((1 << a) | (1 << b))) if C[c, d]]
                    if ds:
                        hit = (c, rng.choice(ds))
                        break
                if hit is None:
                    continue
                c, d = hit
                forbid = avoid | mask_of((v, z, a, b, c, d))
                quad = next(index.witnesses(z, rng, forbid), None)
                if quad is None:
                    continue
                t = AbsorberTuple(a, b, c, d, z, *quad)
                if t in seen:
                    continue
                if not (recheck_absorber(H, fam, t, zeta_star, v)):
                    continue
                seen.add(t)
                out.append(t)
                found += 1
                break
        if len(out) >= limit:
            break
    return out


# ---------------------------------------------------------------- families


@dataclass
class AbsorbConfig:
    zeta_star: float = 0.25
    ell: int = 3
    frac: float = 1e-3
    family_size: int = 2
    cover_min: int = 0
    sample_per_vertex: int = 2
    selection_prob: float | None = None  # None: about 2 * family_size expected picks
    bridge_max: int | None = None
    seed: int = 0
    connect_budget: int = 200_000
    restarts: int = 30


@dataclass
class AbsorberFamily:
    tuples: list[AbsorberTuple]
    per_vertex_index: dict[int, list[int]]
    theta_star: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def vertex_mask(self) -> int:
        m = 0
        for t in self.tuples:
            m |= t.mask()
        return m

    def coverage(self, v: int) -> int:
        return len(self.per_vertex_index.get(v, ()))


def build_vertex_index(H: Hypergraph3, tuples: Sequence[AbsorberTuple]) -> dict[int, list[int]]:
    inside = mask_of(v for t in tuples for v in t.vertices)
    index: dict[int, list[int]] = {}
    for v in range(H.n):
        if (inside >> v) & 1:
            continue
        index[v] = [i for i, t in enumerate(tuples) if t.absorbs(H, v)]
    return index


def check_family(H: Hypergraph3, fam: RobustFamily, family: AbsorberFamily, zeta_star: float, reservoir: int = 0) -> Verdict:
    seen = 0
    for t in family.tuples:
        m = t.mask()
        if m & seen:
            return Verdict(False, f"tuple {t.vertices} overlaps another tuple")
        if m & reservoir:
            return Verdict(False, f"tuple {t.vertices} meets the reservoir")
        seen |= m
        r = recheck_absorber(H, fam, t, zeta_star)
        if not r:
            return r
    if build_vertex_index(H, family.tuples) != family.per_vertex_index:
        return Verdict(False, "per-vertex index is stale")
    return Verdict(True)


def choose_absorber_family(H: Hypergraph3, fam: RobustFamily, res, config: AbsorbConfig) -> AbsorberFamily:
    """Sample candidate tuples, keep a random subset, delete overlapping and
    invalid ones, then top up greedily to ``family_size`` and enforce the
    coverage floor ``cover_min`` on vertices outside the family."""
    n = H.n
    rmask = res.members if res is not None else 0
    rng = random.Random(config.seed)
    index = absorbable_index(H, fam, config.zeta_star)
    order = list(range(n))
    rng.shuffle(order)
    pool: list[AbsorberTuple] = []
    seen = set()
    for v in order:
        for t in find_v_absorbers(
            H, fam, v, config.zeta_star, config.sample_per_vertex,
            avoid=rmask, index=index, frac=config.frac, seed=rng.randrange(1 << 30),
        ):
            if t not in seen:
                seen.add(t)
                pool.append(t)
    diag = {"pool": len(pool)}
    # random selection followed by the deletion steps
    q = config.selection_prob
    if q is None:
        q = min(1.0, 2 * config.family_size / max(len(pool), 1))
    chosen = [t for t in pool if rng.random() < q]
    chosen = [t for t in chosen if len(set(t.vertices)) == 9]
    hits: dict[int, int] = {}
    for t in chosen:
        for v in t.vertices:
            hits[v] = hits.get(v, 0) + 1
    chosen = [t for t in chosen if all(hits[v] == 1 for v in t.vertices)]
    chosen = [t for t in chosen if recheck_absorber(H, fam, t, config.zeta_star)]
    diag["after_deletion"] = len(chosen)
    rng.shuffle(chosen)
    family = chosen[: config.family_size]
    used = mask_of(v for t in family for v in t.vertices)
    # greedy top-up, preferring tuples that absorb currently thin vertices;
    # restarts from a shuffled pool when the first pass gets boxed in
    base = list(family)
    for restart in range(config.restarts + 1):
        family = list(base)
        used = mask_of(v for t in family for v in t.vertices)
        order = list(pool)
        if restart:
            rng.shuffle(order)
        while len(family) < config.family_size:
            cov = build_vertex_index(H, family)
            thin = {v for v, ts in cov.items() if len(ts) < max(config.cover_min, 1)}
            best, best_gain = None, -1
            for t in order:
                if t.mask() & used:
                    continue
                gain = sum(1 for v in thin if t.absorbs(H, v))
                if gain > best_gain:
                    best, best_gain = t, gain
            if best is None:
                break
            family.append(best)
            used |= best.mask()
        if len(family) >= config.family_size:
            break
    diag["size"] = len(family)
    if len(family) < config.family_size:
        raise FamilyError(f"only {len(family)} disjoint absorbers found, {config.family_size} requested")
    idx = build_vertex_index(H, family)
    uncovered = sorted(v for v, ts in idx.items() if len(ts) < config.cover_min)
    if uncovered:
        raise FamilyError(f"{len(uncovered)} vertices have fewer than {config.cover_min} absorbers", uncovered)
    theta = res.theta_star if res is not None else 0.0
    return AbsorberFamily(family, idx, theta, diag)


# ---------------------------------------------------------------- absorbing path


@dataclass
class AbsorbingPath:
    path: TightPath | None
    family: AbsorberFamily
    subpath_index: list[tuple[int, int]]
    connectors: int = 0

    @property
    def empty(self) -> bool:
        return self.path is None

    @property
    def seq(self) -> tuple[int, ...]:
        return () if self.path is None else self.path.seq

    def check_subpaths(self) -> bool:
        s = self.seq
        for t, (p, q) in zip(self.family.tuples, self.subpath_index):
            if s[p : p + 5] != t.first or s[q : q + 4] != t.second:
                return False
        return True


def _bridge(H: Hypergraph3, end: tuple[int, int], start: tuple[int, int], free: int, max_inner: int) -> list[int] | None:
    """Shortest tight bridge ``c d [inner] x y`` with at most ``max_inner`` inner vertices from ``free``."""
    c, d = end
    x, y = start
    pm = H.pair_mask
    for k in range(max_inner + 1):
        def rec(p: int, q: int, left: int, used: int) -> list[int] | None:
            if left == 0:
                return [] if H.has_edge(p, q, x) and H.has_edge(q, x, y) else None
            cand = pm(p, q) & free & ~used
            if left == 1:
                cand &= pm(x, y)
            for r in bits(cand):
                tail = rec(q, r, left - 1, used | (1 << r))
                if tail is not None:
                    return [r] + tail
            return None

        inner = rec(c, d, k, 0)
        if inner is not None:
            return inner
    return None


def build_absorbing_path(H: Hypergraph3, fam: RobustFamily, res, family: AbsorberFamily, config: AbsorbConfig) -> AbsorbingPath:
    """Chain the subpaths ``abzcd`` and ``xyy2x2`` of every tuple into one tight path.

    Members are joined by connecting paths that avoid the reservoir and all
    vertices used so far.  With ``config.bridge_max`` set, a direct join or a
    short tight bridge is tried first.
    """
    members: list[tuple[int, ...]] = []
    for t in family.tuples:
        members += [t.first, t.second]
    if not members:
        return AbsorbingPath(None, family, [])
    n = H.n
    rmask = res.members if res is not None else 0
    used = mask_of(v for m in members for v in m)
    seq = list(members[0])
    rng = random.Random(config.seed)
    pending = list(range(1, len(members)))
    connectors = 0
    while pending:
        end = (seq[-2], seq[-1])
        joined = False
        for j in pending:
            mem = members[j]
            start = (mem[0], mem[1])
            free = ((1 << n) - 1) & ~used & ~rmask
            inner = None
            if config.bridge_max is not None:
                inner = _bridge(H, end, start, free, config.bridge_max)
            if inner is None:
                avoid = frozenset(bits(used | rmask)) - set(end) - set(start)
                try:
                    p = find_connecting_path(
                        H, fam, ConnectRequest(end, start, config.zeta_star, avoid, config.ell),
                        budget=config.connect_budget, seed=rng.randrange(1 << 30),
                    )
                except ConnectError:
                    continue
                inner = list(p.seq[2:-2])
                connectors += 1
            seq.extend(inner)
            seq.extend(mem)
            used |= mask_of(inner)
            pending.remove(j)
            joined = True
            break
        if not joined:
            raise PathAssemblyError(f"cannot continue from ending pair {end}", end)
    verdict = validate_tight(H, seq)
    if not verdict:
        raise AssertionError(f"internal error: absorbing path invalid ({verdict.reason})")
    pos = {v: i for i, v in enumerate(seq)}
    index = [(pos[t.a], pos[t.x]) for t in family.tuples]
    bound = 2 + (3 * config.ell + 6) * len(members)
    if len(seq) > bound:
        raise AssertionError(f"absorbing path has {len(seq)} vertices, bound {bound}")
    P = AbsorbingPath(TightPath(tuple(seq)), family, index, connectors)
    assert P.check_subpaths()
    return P


# ---------------------------------------------------------------- absorption


def _assign(X: Sequence[int], options: dict[int, list[int]]) -> dict[int, int] | None:
    """Match every vertex of ``X`` to its own tuple (greedy, then augmenting paths)."""
    owner: dict[int, int] = {}
    match: dict[int, int] = {}
    for v in X:
        for t in options.get(v, ()):
            if t not in owner:
                owner[t] = v
                match[v] = t
                break

    def augment(v: int, seen: set[int]) -> bool:
        for t in options.get(v, ()):
            if t in seen:
                continue
            seen.add(t)
            if t not in owner or augment(owner[t], seen):
                owner[t] = v
                match[v] = t
                return True
        return False

    for v in X:
        if v not in match and not augment(v, set()):
            return None
    return match


def absorption_plan(P: AbsorbingPath, X: Iterable[int]) -> dict[int, int] | None:
    X = sorted(set(X))
    return _assign(X, {v: P.family.per_vertex_index.get(v, []) for v in X})


def absorb_vertices(P: AbsorbingPath, X: Iterable[int], H: Hypergraph3 | None = None, cap: float | None = None) -> TightPath:
    """Insert every vertex of ``X`` into ``P`` using one distinct absorber each."""
    X = sorted(set(X))
    if P.path is None:
        raise AbsorbError("absorbing path is empty")
    if not X:
        return P.path
    on_path = set(P.path.seq)
    clash = [v for v in X if v in on_path]
    if clash:
        raise AbsorbError(f"vertices {clash} already lie on the absorbing path")
    if cap is not None and len(X) > cap:
        raise AbsorbError(f"{len(X)} vertices exceed the absorption cap {cap:g}")
    if len(X) > len(P.family.tuples):
        raise AbsorbError(f"{len(X)} vertices but only {len(P.family.tuples)} absorbers")
    plan = absorption_plan(P, X)
    if plan is None:
        stuck = [v for v in X if not P.family.per_vertex_index.get(v)]
        raise AbsorbError(f"no absorber assignment exists (vertices without absorbers: {stuck})")
    seq = list(P.path.seq)
    inserts = []
    for v, ti in plan.items():
        t = P.family.tuples[ti]
        p, q = P.subpath_index[ti]
        assert seq[p + 2] == t.z and tuple(seq[q : q + 4]) == t.second
        seq[p + 2] = v
        inserts.append((q + 2, t.z))
    for at, z in sorted(inserts, reverse=True):
        seq.insert(at, z)
    if H is not None:
        verdict = validate_tight(H, seq)
        if not verdict:
            raise AssertionError(f"internal error: absorption broke the path ({verdict.reason})")
    return TightPath(tuple(seq))
