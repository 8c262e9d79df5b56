"""Hypothesis strategies for small structures."""

import itertools

from hypothesis import strategies as st

from eppakit.structure import Language, Structure, make_graph

REL_FUN = Language([("R", 2), ("U", 1)], ["F"])
REL_ONLY = Language([("R", 2), ("U", 1)])


@st.composite
def graphs(draw, max_vertices=5, min_vertices=0):
    n = draw(st.integers(min_vertices, max_vertices))
    verts = list(range(n))
    pairs = list(itertools.combinations(verts, 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return make_graph(verts, edges)


@st.composite
def structures(draw, language=REL_FUN, max_vertices=4, min_vertices=0, fun_density=True):
    n = draw(st.integers(min_vertices, max_vertices))
    verts = list(range(n))
    rel = {}
    for r, a in language.relations:
        tuples = list(itertools.product(verts, repeat=a))
        rel[r] = draw(st.lists(st.sampled_from(tuples), unique=True)) if tuples else []
    fun = {}
    for f in language.functions:
        vals = {}
        for v in verts:
            vals[v] = set(draw(st.lists(st.sampled_from(verts), unique=True, max_size=2))) if verts else set()
        fun[f] = vals
    return Structure(language, verts, rel, fun)


@st.composite
def partial_injections(draw, n):
    dom = draw(st.lists(st.integers(0, n - 1), unique=True))
    img = draw(st.permutations(list(range(n))))
    return {d: img[i] for i, d in enumerate(dom)}
