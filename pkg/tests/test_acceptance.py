"""Acceptance criteria 1-10, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

from __future__ import annotations

import itertools
import math
import random
import time

import numpy as np
import pytest

from tightham.absorb import (
    AbsorbConfig,
    AbsorberFamily,
    absorb_vertices,
    absorbable_index,
    absorption_plan,
    build_absorbing_path,
    build_vertex_index,
    find_v_absorbers,
    recheck_absorber,
)
from tightham.connect import ConnectError, ConnectRequest, RobustFamily, find_connecting_path
from tightham.constructions import extremal_example, min_degrees, random_hypergraph
from tightham.hypergraph import Graph, Hypergraph3, mask_of, validate_tight
from tightham.longpath import check_candidate
from tightham.oracle import (
    count_paths,
    count_walks,
    find_tight_ham_cycle,
    fs_bound,
    longest_path,
    max_matching_size,
)
from tightham.pipeline import PipelineConfig, certify_cycle, run_pipeline
from tightham.reservoir import ReservoirError, connect_through_reservoir, sample_reservoir
from tightham.robust import intersection_check, intersection_hypotheses

ALPHA = 0.2


def verdict(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {num} ({name}): {detail}")
    assert ok, detail


def random_graph(rng: random.Random, k: int, p: float) -> Graph:
    edges = [e for e in itertools.combinations(range(k), 2) if rng.random() < p]
    return Graph.from_edges(k, edges, vertices=range(k))


# 1 --------------------------------------------------------------------------


def test_extremal_examples_have_no_tight_hamilton_cycle():
    t0 = time.perf_counter()
    bad = []
    for kind in ("i", "ii", "iii"):
        for n in range(7, 14):
            H = extremal_example(kind, n)
            if find_tight_ham_cycle(H) is not None:
                bad.append((kind, n, "cycle"))
            if kind == "iii":
                mm = max_matching_size(H)
                if not (mm.exact and mm.size < n // 3):
                    bad.append((kind, n, f"matching {mm}"))
    dt = time.perf_counter() - t0
    verdict(1, "extremal non-Hamiltonicity", not bad and dt < 120, f"21 instances, failures={bad}, {dt:.1f}s")


# 2 --------------------------------------------------------------------------


def test_complete_hypergraphs_have_validated_cycles():
    t0 = time.perf_counter()
    bad = []
    for n in range(4, 15):
        H = Hypergraph3.complete(n)
        cyc = find_tight_ham_cycle(H)
        if cyc is None or len(cyc.seq) != n or not validate_tight(H, cyc.seq, as_cycle=True):
            bad.append(n)
    dt = time.perf_counter() - t0
    verdict(2, "complete-hypergraph sanity", not bad and dt < 60, f"n=4..14, failures={bad}, {dt:.1f}s")


# 3 --------------------------------------------------------------------------


def _enumerated(kind: str, n: int) -> tuple[int, int, int]:
    """Edge count, min degree and min pair degree from a from-scratch triple scan."""
    k = {"i": math.ceil((n + 1) / 3), "ii": math.ceil(2 * n / 3), "iii": n // 3 - 1}[kind]
    X = set(range(k))
    if kind == "iii":
        E = [set(t) for t in itertools.combinations(range(n), 3) if set(t) & X]
    else:
        E = [set(t) for t in itertools.combinations(range(n), 3) if len(set(t) & X) != 2]
    deg = min(sum(v in e for e in E) for v in range(n))
    pdeg = min(sum({u, v} <= e for e in E) for u, v in itertools.combinations(range(n), 2))
    return len(E), deg, pdeg


def test_degree_formulas_at_nine():
    got = {k: extremal_example(k, 9) for k in ("i", "ii", "iii")}
    counts = {k: H.m for k, H in got.items()}
    ok = counts == {"i": 54, "ii": 39, "iii": 49} and min_degrees(got["i"]) == (13, 2)
    for k, H in got.items():
        m, d, d2 = _enumerated(k, 9)
        ok &= (H.m, *min_degrees(H)) == (m, d, d2)
    verdict(3, "degree formulas", ok, f"edges={counts}, min_degrees(i,9)={min_degrees(got['i'])}")


# 4 --------------------------------------------------------------------------


def _naive_paths(G: Graph, x: int, y: int, length: int) -> int:
    others = [v for v in G.vertices() if v not in (x, y)]
    total = 0
    for mid in itertools.permutations(others, length - 1):
        walk = (x, *mid, y)
        total += all(G.has_edge(a, b) for a, b in zip(walk, walk[1:]))
    return total


def test_path_and_walk_counts_match_naive_oracles():
    rng = random.Random(4)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        k = rng.randint(2, 8)
        G = random_graph(rng, k, rng.random())
        x, y = rng.sample(range(k), 2)
        length = rng.randint(1, 4)
        mismatches += count_paths(G, x, y, length) != _naive_paths(G, x, y, length)
    walk_bad = 0
    for _ in range(200):
        k = rng.randint(1, 12)
        G = random_graph(rng, k, rng.random())
        x, y = rng.randrange(k), rng.randrange(k)
        length = rng.randint(0, 6)
        A = G.to_matrix().astype(object)
        ref = np.linalg.matrix_power(A, length)[x, y] if length else int(x == y)
        walk_bad += count_walks(G, x, y, length) != ref
    dt = time.perf_counter() - t0
    verdict(4, "oracle equivalence", mismatches == 0 and walk_bad == 0 and dt < 120,
            f"path mismatches={mismatches}/200, walk mismatches={walk_bad}/200, {dt:.1f}s")


# 5 --------------------------------------------------------------------------


def _fs_scan(extra: int) -> tuple[int, list, float]:
    """Graphs whose longest path has fewer than ``lam*|V|`` edges (``extra=0``) or vertices (``extra=1``)."""
    rng = random.Random(5)
    t0 = time.perf_counter()
    counter, applicable = [], 0
    for _ in range(500):
        k = rng.randint(2, 12)
        G = random_graph(rng, k, rng.random())
        lp = longest_path(G)
        for lam in (0.55, 2 / 3, 0.8, 1.0):
            if lp + extra < lam * k:
                applicable += 1
                if G.num_edges > fs_bound(lam, k) + 1e-9:
                    counter.append((k, round(lam, 3), G.num_edges, lp))
    return applicable, counter, time.perf_counter() - t0


@pytest.mark.xfail(strict=True, reason="K4 with lambda=0.8 has 6 > 5.44 edges and no path of 3.2 edges")
def test_faudree_schelp_bound_edge_length_reading():
    applicable, counter, dt = _fs_scan(0)
    verdict(5, "Faudree-Schelp bound, path length in edges", not counter and dt < 300,
            f"{applicable} applicable (graph, lambda) cases, counterexamples={sorted(set(counter))}, {dt:.1f}s")


def test_faudree_schelp_bound_vertex_count_reading():
    applicable, counter, dt = _fs_scan(1)
    verdict(5, "Faudree-Schelp bound, path length in vertices", not counter and dt < 300,
            f"{applicable} applicable (graph, lambda) cases, counterexamples={counter[:3]}, {dt:.1f}s")


# 6 --------------------------------------------------------------------------


def _absorber_path(seed: int):
    H = random_hypergraph(36, 0.92, seed)
    fam = RobustFamily.from_hypergraph(H, ALPHA)
    index = absorbable_index(H, fam, 0.25)
    rng = random.Random(seed)
    order = list(range(H.n))
    rng.shuffle(order)
    tuples, used = [], 0
    for v in order:
        if len(tuples) == 3:
            break
        if (used >> v) & 1:
            continue
        found = find_v_absorbers(H, fam, v, 0.25, 1, avoid=used | (1 << v), index=index, seed=seed)
        if found:
            tuples.append(found[0])
            used |= found[0].mask()
    family = AbsorberFamily(tuples, build_vertex_index(H, tuples))
    P = build_absorbing_path(H, fam, None, family, AbsorbConfig(bridge_max=3, seed=seed))
    return H, fam, P


def test_absorption_swaps_are_sound():
    t0 = time.perf_counter()
    swaps, bad, seed = 0, [], 0
    while swaps < 1000:
        H, fam, P = _absorber_path(seed)
        rng = random.Random(1000 + seed)
        for t in P.family.tuples:
            if not recheck_absorber(H, fam, t, 0.25):
                bad.append(("tuple", seed, t))
        outside = [v for v in range(H.n) if v not in set(P.seq) and P.family.per_vertex_index.get(v)]
        for _ in range(60):
            X = rng.sample(outside, rng.randint(1, min(len(P.family.tuples), len(outside))))
            if absorption_plan(P, X) is None:
                continue
            out = absorb_vertices(P, X)
            ok = (
                validate_tight(H, out.seq)
                and out.seq[:2] == P.seq[:2]
                and out.seq[-2:] == P.seq[-2:]
                and set(out.seq) == set(P.seq) | set(X)
            )
            if not ok:
                bad.append((seed, X))
            swaps += len(X)
        seed += 1
    dt = time.perf_counter() - t0
    verdict(6, "absorption soundness", not bad and dt < 60, f"{swaps} swaps over {seed} instances, failures={len(bad)}, {dt:.1f}s")


# 7 --------------------------------------------------------------------------


def test_connections_are_sound():
    t0 = time.perf_counter()
    ell = 3
    ok_count, bad, attempts = 0, [], 0
    for seed in range(4):
        H = random_hypergraph(60, 0.9, 70 + seed)
        fam = RobustFamily.from_hypergraph(H, ALPHA)
        C = fam.connectable_matrix(0.25)
        pairs = [(a, b) for a in range(60) for b in range(60) if C[a, b]]
        rng = random.Random(seed)
        while ok_count < 200 * (seed + 1):
            attempts += 1
            s, e = rng.sample(pairs, 2)
            if set(s) & set(e):
                continue
            rest = [v for v in range(60) if v not in s + e]
            avoid = frozenset(rng.sample(rest, rng.randint(0, 25)))
            try:
                P = find_connecting_path(H, fam, ConnectRequest(s, e, 0.25, avoid, ell), seed=rng.randrange(1 << 30))
            except ConnectError:
                continue
            seq = P.seq
            inner = set(seq[2:-2])
            if not (validate_tight(H, seq) and len(seq) - 2 == 3 * (ell + 1) and tuple(seq[:2]) == s
                    and tuple(seq[-2:]) == e and not inner & avoid and len(set(seq)) == len(seq)):
                bad.append(("direct", seed, s, e))
            ok_count += 1
    # reservoir-routed connections on a fresh instance per batch
    seed = 0
    while ok_count < 1000:
        H = random_hypergraph(60, 0.9, 90 + seed)
        fam = RobustFamily.from_hypergraph(H, ALPHA)
        res = sample_reservoir(H, 0.66, seed, min_size=21)
        C = fam.connectable_matrix(0.15)
        outside = [v for v in range(60) if not (res.members >> v) & 1]
        pairs = [(a, b) for a in outside for b in outside if C[a, b]]
        rng = random.Random(seed)
        for _ in range(40):
            res.used = 0
            s, e = rng.sample(pairs, 2)
            if set(s) & set(e):
                continue
            free_before = res.free
            try:
                P = connect_through_reservoir(H, fam, res, s, e, 0.15, seed=rng.randrange(1 << 30))
            except (ConnectError, ReservoirError):
                continue
            inner = mask_of(P.seq[2:-2])
            if not (validate_tight(H, P.seq) and len(P.seq) == 3 * ell + 5 and inner & ~free_before == 0
                    and res.used == inner and tuple(P.seq[:2]) == s and tuple(P.seq[-2:]) == e):
                bad.append(("reservoir", seed, s, e))
            ok_count += 1
        seed += 1
    dt = time.perf_counter() - t0
    verdict(7, "connection soundness", not bad and dt < 300,
            f"{ok_count} successful connections, violations={len(bad)}, {dt:.1f}s")


# 8 --------------------------------------------------------------------------


def test_robust_intersection_property():
    t0 = time.perf_counter()
    n = 60
    checked, violations, unmet, seed = 0, [], 0, 0
    while checked < 200:
        H = random_hypergraph(n, 0.9, 800 + seed)
        fam = RobustFamily.from_hypergraph(H, ALPHA)
        rng = random.Random(seed)
        for _ in range(100):
            u, v = rng.sample(range(n), 2)
            if not (intersection_hypotheses(fam.graphs[u], ALPHA, n) and intersection_hypotheses(fam.graphs[v], ALPHA, n)):
                unmet += 1
                continue
            common, status = intersection_check(fam.graphs[u], fam.graphs[v], ALPHA, n)
            # independent recount over all C(n,2) pairs
            direct = sum(fam.graphs[u].has_edge(a, b) and fam.graphs[v].has_edge(a, b)
                         for a, b in itertools.combinations(range(n), 2))
            if direct != common or direct < ALPHA * n * n / 2 or status != "pass":
                violations.append((seed, u, v, direct))
            checked += 1
        seed += 1
    dt = time.perf_counter() - t0
    verdict(8, "intersection property", not violations and dt < 300,
            f"{checked} pairs checked ({unmet} skipped, hypotheses unmet), violations={violations[:3]}, {dt:.1f}s")


# 9 and 10 -------------------------------------------------------------------


@pytest.fixture(scope="module")
def pipeline_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in range(20):
        H = random_hypergraph(60, 0.85, seed)
        runs.append((H, run_pipeline(H, PipelineConfig(seed=seed))))
    K = Hypergraph3.complete(60)
    k_run = (K, run_pipeline(K, PipelineConfig(seed=7)))
    return runs, k_run, time.perf_counter() - t0


def test_pipeline_soundness_and_yield(pipeline_runs):
    runs, (K, kres), dt = pipeline_runs
    unsound = []
    wins = 0
    for H, res in runs + [(K, kres)]:
        if res.ok:
            cert = certify_cycle(H.n, H.edges, res.cycle.seq)
            if not (cert["accepted"] and res.certificate.get("accepted") and validate_tight(H, res.cycle.seq, as_cycle=True)):
                unsound.append(res.cycle.seq)
    wins = sum(r.ok for _, r in runs)
    ok = not unsound and kres.ok and wins / len(runs) >= 0.5 and dt < 1200
    verdict(9, "pipeline soundness and yield", ok,
            f"yield {wins}/{len(runs)} on random(60,0.85), K60 {'cycle' if kres.ok else kres.stage}, unsound={len(unsound)}, {dt:.1f}s")


def test_candidates_pass_standalone_checker(pipeline_runs):
    runs, _, _ = pipeline_runs
    seen, bad = 0, []
    for H, res in runs[:10]:
        for cand in res.candidates:
            seen += 1
            v = check_candidate(H, cand, res.reservoir_mask, ALPHA, 3)
            if not v:
                bad.append(v.reason)
    verdict(10, "candidate invariants", seen > 0 and not bad, f"{seen} candidates from 10 runs, violations={bad[:3]}")
