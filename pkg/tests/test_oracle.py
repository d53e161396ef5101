from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import graphs, hypergraphs
from tightham.constructions import extremal_example, random_hypergraph
from tightham.hypergraph import Graph, Hypergraph3, validate_tight
from tightham.oracle import (
    BudgetExceeded,
    CapExceeded,
    count_paths,
    count_tight_paths,
    count_walks,
    find_tight_ham_cycle,
    fs_bound,
    longest_path,
    max_matching_size,
)


def _brute_ham(H: Hypergraph3) -> bool:
    if H.n < 4:
        return False
    for rest in permutations(range(1, H.n)):
        if validate_tight(H, (0, *rest), as_cycle=True):
            return True
    return False


@pytest.mark.parametrize("n", range(4, 13))
def test_complete_has_cycle(n):
    cyc = find_tight_ham_cycle(Hypergraph3.complete(n))
    assert cyc is not None and sorted(cyc.seq) == list(range(n)) and cyc.is_cycle


@pytest.mark.parametrize("kind", ["i", "iii"])
def test_extremal_nine_has_no_cycle(kind):
    assert find_tight_ham_cycle(extremal_example(kind, 9)) is None


def test_small_n_never_cycle():
    assert find_tight_ham_cycle(Hypergraph3.complete(3)) is None


@settings(max_examples=40)
@given(hypergraphs(min_n=4, max_n=7))
def test_dp_agrees_with_brute_force(H):
    cyc = find_tight_ham_cycle(H)
    assert (cyc is not None) == _brute_ham(H)
    if cyc is not None:
        assert validate_tight(H, cyc.seq, as_cycle=True)


def test_dense_random_cycles_and_matching_implication():
    for s in range(6):
        H = random_hypergraph(10, 0.6, s)
        cyc = find_tight_ham_cycle(H)
        if cyc is not None:
            assert validate_tight(H, cyc.seq, as_cycle=True)
            assert max_matching_size(H).size >= H.n // 3


def test_budget_is_distinct_from_no():
    with pytest.raises(BudgetExceeded):
        find_tight_ham_cycle(random_hypergraph(14, 0.3, 1), max_states=10)


def test_count_tight_paths_examples():
    K = Hypergraph3.complete(5)
    assert count_tight_paths(K, (0, 1), (3, 4), 3) == 1
    H = Hypergraph3(5, [(0, 1, 2)])
    assert count_tight_paths(H, (3, 4), (1, 2), 2) == 0
    with pytest.raises(CapExceeded):
        count_tight_paths(K, (0, 1), (3, 4), 20)


def test_count_tight_paths_against_enumeration():
    H = random_hypergraph(8, 0.6, 2)
    for length in (2, 3, 4):
        for start in [(0, 1), (2, 5)]:
            for end in [(6, 7), (3, 4)]:
                others = [v for v in range(8) if v not in start + end]
                naive = sum(
                    bool(validate_tight(H, start + mid + end)) for mid in permutations(others, length - 2)
                )
                assert count_tight_paths(H, start, end, length) == naive
    # one edge: the pairs must overlap in the middle vertex
    assert count_tight_paths(Hypergraph3(4, [(0, 1, 2)]), (0, 1), (1, 2), 1) == 1
    assert count_tight_paths(Hypergraph3(4, [(0, 1, 2)]), (0, 1), (2, 1), 1) == 0


def test_walk_and_path_examples():
    P = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert count_walks(P, 0, 2, 2) == 1 and count_paths(P, 0, 2, 2) == 1
    K4 = Graph.complete(4)
    assert count_walks(K4, 0, 1, 3) == 7
    assert count_paths(K4, 0, 1, 3) == 2
    assert count_paths(K4, 0, 1, 1) == 1
    star = Graph.from_edges(6, [(0, i) for i in range(1, 6)])
    assert count_paths(star, 1, 2, 3) == 0
    with pytest.raises(CapExceeded):
        count_paths(K4, 0, 1, 9)


def test_walk_counts_exceed_64_bits():
    K = Graph.complete(60)
    A = np.ones((60, 60), dtype=object) - np.eye(60, dtype=object)
    assert count_walks(K, 0, 1, 12) == np.linalg.matrix_power(A, 12)[0, 1] > 2**64


@given(graphs(min_n=2, max_n=8), st.data())
def test_walks_dominate_paths(G, data):
    x, y = data.draw(st.permutations(G.vertices()))[:2]
    length = data.draw(st.integers(1, 4))
    assert count_walks(G, x, y, length) >= count_paths(G, x, y, length)


def test_matching_examples():
    assert max_matching_size(Hypergraph3.complete(9)).size == 3
    assert max_matching_size(extremal_example("iii", 9)).size == 2
    assert max_matching_size(Hypergraph3(6)).size == 0


@settings(max_examples=30)
@given(hypergraphs(min_n=3, max_n=8))
def test_matching_against_brute_force(H):
    E = sorted(H.edges)
    best = 0
    for k in range(1, H.n // 3 + 1):
        if any(len(set().union(*c)) == 3 * k for c in combinations(E, k)):
            best = k
    assert max_matching_size(H).size == best


def test_longest_path_examples():
    assert longest_path(Graph.complete(7)) == 6
    C5 = Graph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    assert longest_path(C5) == 4
    assert longest_path(Graph.from_edges(4, [(0, 1), (2, 3)])) == 1
    with pytest.raises(CapExceeded):
        longest_path(Graph.complete(25))


@settings(max_examples=30)
@given(graphs(min_n=1, max_n=7))
def test_longest_path_brute_force(G):
    vs = G.vertices()
    best = 0
    for k in range(2, len(vs) + 1):
        for p in permutations(vs, k):
            if all(G.has_edge(a, b) for a, b in zip(p, p[1:])):
                best = k - 1
                break
    assert longest_path(G) == best


def test_fs_bound_examples():
    assert fs_bound(1, 10) == 50
    assert fs_bound(2 / 3, 12) == pytest.approx(40)
    assert fs_bound(0.8, 10) == pytest.approx(34)
    with pytest.raises(ValueError):
        fs_bound(0.5, 10)
