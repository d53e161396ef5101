from itertools import combinations

from hypothesis import settings, strategies as st

from tightham.hypergraph import Graph, Hypergraph3

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def hypergraphs(draw, min_n=0, max_n=9):
    n = draw(st.integers(min_n, max_n))
    triples = list(combinations(range(n), 3))
    keep = draw(st.lists(st.booleans(), min_size=len(triples), max_size=len(triples)))
    return Hypergraph3(n, [t for t, k in zip(triples, keep) if k])


@st.composite
def graphs(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    pairs = list(combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [p for p, k in zip(pairs, keep) if k], vertices=range(n))
