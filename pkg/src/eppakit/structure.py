"""Finite structures over a language with a permutation group on its symbols.

A language has relation symbols of arity >= 1 and unary function symbols.  A
function sends a vertex to a *set* of vertices.  The group acts on symbols and
is stored extensionally; every element is a tuple ``g`` with ``g[i]`` the index
of the image of symbol ``i``.  Relations come first in the symbol order.

Morphisms are pairs (symbol permutation, vertex map).  A structure's vertex
order is part of its value and is the order used by
:func:`order_preserving_extension` and by the witness constructions.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from types import MappingProxyType
from typing import Any, NamedTuple

import numpy as np

from .caps import Caps, resolve
from .errors import ClosureViolation, InputError, ResourceLimit

Perm = tuple  # tuple[int, ...]


class Language:
    """Relation symbols with arities, unary function symbols, and a symbol group."""

    __slots__ = ("relations", "functions", "symbols", "_index", "group", "_gset", "_hash")

    def __init__(self, relations: Iterable[tuple[str, int]] = (),
                 functions: Iterable[str] = (), group: Iterable[Any] | None = None):
        self.relations = tuple((str(r), int(a)) for r, a in relations)
        self.functions = tuple(str(f) for f in functions)
        self.symbols = tuple(r for r, _ in self.relations) + self.functions
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError("symbol names must be distinct")
        for r, a in self.relations:
            if a < 1:
                raise InputError(f"relation {r} has arity {a}; arities must be >= 1")
        self._index = {s: i for i, s in enumerate(self.symbols)}
        n = len(self.symbols)
        ident = tuple(range(n))
        elems = {ident}
        for g in (group or ()):
            elems.add(self._coerce_perm(g))
        self.group = tuple(sorted(elems))
        self._gset = frozenset(self.group)
        self._validate_group()
        self._hash = hash((self.relations, self.functions, self.group))

    # -- symbols -------------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InputError(f"unknown symbol {name!r}") from None

    def is_function(self, name: str) -> bool:
        return self.index(name) >= len(self.relations)

    def arity(self, name: str) -> int:
        i = self.index(name)
        return self.relations[i][1] if i < len(self.relations) else 1

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.relations)

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.relations), default=0)

    # -- group ---------------------------------------------------------------

    @property
    def identity(self) -> Perm:
        return tuple(range(self.size))

    def _coerce_perm(self, g) -> Perm:
        n = self.size
        if isinstance(g, Mapping):
            img = list(range(n))
            for a, b in g.items():
                img[self.index(a)] = self.index(b)
            g = tuple(img)
        else:
            g = tuple(g)
            if g and all(isinstance(x, str) for x in g):
                g = tuple(self.index(x) for x in g)
        if len(g) != n or sorted(g) != list(range(n)):
            raise InputError(f"{g!r} is not a permutation of the {n} symbols")
        return g

    def _validate_group(self) -> None:
        nrel = len(self.relations)
        for g in self.group:
            for i, j in enumerate(g):
                if (i < nrel) != (j < nrel):
                    raise InputError(
                        f"group element maps {self.symbols[i]} to {self.symbols[j]} of another kind")
                if i < nrel and self.relations[i][1] != self.relations[j][1]:
                    raise InputError(
                        f"group element maps {self.symbols[i]} to {self.symbols[j]} of another arity")
        for g in self.group:
            if self.inverse(g) not in self._gset:
                raise InputError(f"group is not closed under inverse: {self.perm_str(g)}")
            for h in self.group:
                if self.compose(g, h) not in self._gset:
                    raise InputError("group is not closed under composition")

    def perm(self, g) -> Perm:
        """Coerce ``g`` to a group element, checking membership."""
        p = self._coerce_perm(g)
        if p not in self._gset:
            raise InputError(f"{self.perm_str(p)} is not in the group")
        return p

    def in_group(self, g: Perm) -> bool:
        return tuple(g) in self._gset

    @staticmethod
    def compose(g: Perm, h: Perm) -> Perm:
        """``g`` after ``h``."""
        return tuple(g[i] for i in h)

    @staticmethod
    def inverse(g: Perm) -> Perm:
        inv = [0] * len(g)
        for i, j in enumerate(g):
            inv[j] = i
        return tuple(inv)

    def act(self, g: Perm, name: str) -> str:
        return self.symbols[g[self.index(name)]]

    def perm_str(self, g: Perm) -> str:
        """Cycle notation over symbol names; ``()`` for the identity."""
        seen = set()
        cycles = []
        for i in range(len(g)):
            if i in seen or g[i] == i:
                continue
            cyc = []
            j = i
            while j not in seen:
                seen.add(j)
                cyc.append(self.symbols[j])
                j = g[j]
            cycles.append("(" + " ".join(cyc) + ")")
        return "".join(cycles) or "()"

    # -- derived languages ---------------------------------------------------

    def with_relation(self, name: str, arity: int) -> "Language":
        """Add a relation symbol fixed by every group element."""
        if name in self._index:
            raise InputError(f"symbol {name!r} already in the language")
        nrel = len(self.relations)
        new_rel = self.relations + ((name, arity),)

        def shift(i):
            return i if i < nrel else i + 1

        group = []
        for g in self.group:
            img = [0] * (self.size + 1)
            for i, j in enumerate(g):
                img[shift(i)] = shift(j)
            img[nrel] = nrel
            group.append(tuple(img))
        return Language(new_rel, self.functions, group)

    def extend_perm(self, g: Perm, bigger: "Language") -> Perm:
        """Transport ``g`` to a language containing this one; new symbols are fixed."""
        img = list(range(bigger.size))
        for i, j in enumerate(g):
            img[bigger.index(self.symbols[i])] = bigger.index(self.symbols[j])
        return bigger.perm(tuple(img))

    def restrict_perm(self, g: Perm, smaller: "Language") -> Perm:
        """Restrict ``g`` to the symbols of a sub-language closed under ``g``."""
        img = []
        for s in smaller.symbols:
            img.append(smaller.index(self.act(g, s)))
        return tuple(img)

    def reduct(self, keep: Iterable[str]) -> "Language":
        keep = set(keep)
        rel = [(r, a) for r, a in self.relations if r in keep]
        fun = [f for f in self.functions if f in keep]
        small = Language(rel, fun)
        group = []
        for g in self.group:
            for s in small.symbols:
                if self.act(g, s) not in keep:
                    raise InputError("kept symbols are not closed under the group")
            group.append(self.restrict_perm(g, small))
        return Language(rel, fun, group)

    def relational_reduct(self) -> "Language":
        return self.reduct(self.relation_names)

    # -- value semantics -----------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Language) and self.relations == other.relations
                and self.functions == other.functions and self.group == other.group)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        parts = [f"{r}/{a}" for r, a in self.relations] + [f"{f}!1" for f in self.functions]
        return f"Language({', '.join(parts)}; |group|={len(self.group)})"


def graph_language() -> Language:
    return Language([("E", 2)])


_EMPTY = frozenset()


class Structure:
    """A finite structure; immutable once built.

    ``relations`` maps a relation name to an iterable of tuples and
    ``functions`` maps a function name to ``{vertex: iterable of vertices}``.
    Missing entries are empty.
    """

    __slots__ = ("language", "vertices", "relations", "functions", "_pos", "_hash", "_cache")

    def __init__(self, language: Language, vertices: Iterable,
                 relations: Mapping[str, Iterable[Sequence]] | None = None,
                 functions: Mapping[str, Mapping[Any, Iterable]] | None = None):
        self.language = language
        self.vertices = tuple(vertices)
        self._pos = {v: i for i, v in enumerate(self.vertices)}
        if len(self._pos) != len(self.vertices):
            raise InputError("vertex ids must be distinct")
        relations = relations or {}
        functions = functions or {}
        for name in itertools.chain(relations, functions):
            language.index(name)
        rel = {}
        for r, a in language.relations:
            tuples = frozenset(map(tuple, relations.get(r, ())))
            if set(map(len, tuples)) - {a}:
                t = next(t for t in tuples if len(t) != a)
                raise InputError(f"tuple {t!r} has length {len(t)} but {r} has arity {a}")
            if not self._pos.keys() >= set(itertools.chain.from_iterable(tuples)):
                t, v = next((t, v) for t in tuples for v in t if v not in self._pos)
                raise InputError(f"tuple {t!r} of {r} uses undeclared vertex {v!r}")
            rel[r] = tuples
        fun = {}
        for f in language.functions:
            values = {}
            for v, img in functions.get(f, {}).items():
                if v not in self._pos:
                    raise InputError(f"function {f} defined on undeclared vertex {v!r}")
                img = frozenset(img)
                for w in img:
                    if w not in self._pos:
                        raise InputError(f"function {f} maps {v!r} to undeclared vertex {w!r}")
                if img:
                    values[v] = img
            fun[f] = MappingProxyType(values)
        for name in relations:
            if language.is_function(name):
                raise InputError(f"{name} is a function symbol, not a relation")
        for name in functions:
            if not language.is_function(name):
                raise InputError(f"{name} is a relation symbol, not a function")
        self.relations = MappingProxyType(rel)
        self.functions = MappingProxyType(fun)
        self._hash = None
        self._cache = {}

    # -- access --------------------------------------------------------------

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self._pos

    def pos(self, v) -> int:
        try:
            return self._pos[v]
        except KeyError:
            raise InputError(f"unknown vertex {v!r}") from None

    def rel(self, name: str) -> frozenset:
        return self.relations[name]

    def func(self, name: str, v) -> frozenset:
        return self.functions[name].get(v, _EMPTY)

    def successors(self, v) -> frozenset:
        """Union of all function values at ``v``."""
        out = set()
        for f in self.language.functions:
            out |= self.functions[f].get(v, _EMPTY)
        return frozenset(out)

    def sort(self, vs: Iterable) -> list:
        return sorted(vs, key=self._pos.__getitem__)

    def cached(self, key, compute):
        """Memoise derived data on this immutable value."""
        try:
            return self._cache[key]
        except KeyError:
            val = self._cache[key] = compute()
            return val

    def tuples_at(self):
        """Map vertex -> list of (relation name, tuple) containing it."""
        def compute():
            idx = {v: [] for v in self.vertices}
            for r in self.language.relation_names:
                for t in self.relations[r]:
                    for v in set(t):
                        idx[v].append((r, t))
            return idx
        return self.cached("tuples_at", compute)

    def position_tuples(self, name: str):
        """Tuples of ``name`` as an ``(count, arity)`` array of vertex positions."""
        def compute():
            k = self.language.arity(name)
            pos = self._pos
            flat = [pos[v] for t in self.relations[name] for v in t]
            return np.array(flat, dtype=np.int64).reshape(len(self.relations[name]), k)
        return self.cached(("position_tuples", name), compute)

    def tuple_codes(self, name: str):
        """Sorted integer codes of the tuples of ``name``, or ``None`` when they overflow."""
        def compute():
            return _encode(self.position_tuples(name), len(self))
        return self.cached(("tuple_codes", name), compute)

    # -- value semantics -----------------------------------------------------

    def _key(self):
        try:
            return self._cache["key"]
        except KeyError:
            pass
        key = self._cache["key"] = self._make_key()
        return key

    def _make_key(self):
        return (self.language, self.vertices,
                tuple(self.relations[r] for r in self.language.relation_names),
                tuple(frozenset(self.functions[f].items()) for f in self.language.functions))

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Structure) and hash(self) == hash(other) and self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        nrel = sum(len(t) for t in self.relations.values())
        return f"Structure(|V|={len(self.vertices)}, tuples={nrel}, {self.language!r})"

    def same_content(self, other: "Structure") -> bool:
        """Equality ignoring vertex order."""
        return (self.language == other.language and set(self.vertices) == set(other.vertices)
                and dict(self.relations) == dict(other.relations)
                and all(dict(self.functions[f]) == dict(other.functions[f])
                        for f in self.language.functions))


def make_graph(vertices: Iterable, edges: Iterable[tuple], language: Language | None = None,
               name: str = "E") -> Structure:
    """Undirected loopless graph as a structure with a symmetric relation."""
    language = language or graph_language()
    tuples = set()
    for a, b in edges:
        if a == b:
            raise InputError("graphs are loopless")
        tuples.add((a, b))
        tuples.add((b, a))
    return Structure(language, vertices, {name: tuples})


# ---------------------------------------------------------------------------
# morphisms


class Morphism:
    """A symbol permutation together with a (possibly partial) injective-or-not vertex map."""

    __slots__ = ("perm", "mapping", "_hash")

    def __init__(self, perm: Sequence[int], mapping: Mapping):
        self.perm = tuple(perm)
        self.mapping = MappingProxyType(dict(mapping))
        self._hash = None

    @classmethod
    def identity(cls, language: Language, vertices: Iterable) -> "Morphism":
        return cls(language.identity, {v: v for v in vertices})

    def __call__(self, v):
        return self.mapping[v]

    def __contains__(self, v):
        return v in self.mapping

    def __len__(self):
        return len(self.mapping)

    @property
    def domain(self) -> frozenset:
        return frozenset(self.mapping)

    @property
    def image(self) -> frozenset:
        return frozenset(self.mapping.values())

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)

    def compose(self, other: "Morphism") -> "Morphism":
        """``self`` after ``other``; defined where ``other``'s value lies in our domain."""
        m = {v: self.mapping[w] for v, w in other.mapping.items() if w in self.mapping}
        return Morphism(Language.compose(self.perm, other.perm), m)

    def inverse(self) -> "Morphism":
        if not self.is_injective():
            raise InputError("cannot invert a non-injective map")
        return Morphism(Language.inverse(self.perm), {w: v for v, w in self.mapping.items()})

    def restrict(self, vs: Iterable) -> "Morphism":
        vs = set(vs)
        return Morphism(self.perm, {v: w for v, w in self.mapping.items() if v in vs})

    def __eq__(self, other):
        return isinstance(other, Morphism) and self.perm == other.perm and self.mapping == other.mapping

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.perm, frozenset(self.mapping.items())))
        return self._hash

    def __repr__(self):
        items = ", ".join(f"{k!r}->{v!r}" for k, v in list(self.mapping.items())[:8])
        more = "" if len(self.mapping) <= 8 else ", ..."
        return f"Morphism(perm={self.perm}, {{{items}{more}}})"


class MorphismCheck(NamedTuple):
    ok: bool
    violation: str | None = None

    def __bool__(self):
        return self.ok


KINDS = ("homomorphism", "monomorphism", "embedding", "isomorphism", "automorphism",
         "homomorphism-embedding", "partial-automorphism")


def _fail(msg):
    return MorphismCheck(False, msg)


def _tuples_within(tuples, arity: int, dom):
    """Tuples of ``tuples`` with every entry in ``dom``, scanning whichever side is smaller."""
    if len(dom) ** arity < len(tuples):
        return [t for t in itertools.product(dom, repeat=arity) if t in tuples]
    return [t for t in tuples if all(v in dom for v in t)]


def _check_homomorphism(m: Morphism, S: Structure, T: Structure, dom) -> MorphismCheck:
    L = S.language
    g = m.perm
    for r in L.relation_names:
        target = T.rel(L.act(g, r))
        for t in _tuples_within(S.rel(r), L.arity(r), dom):
            img = tuple(m.mapping[v] for v in t)
            if img not in target:
                return _fail(f"{r}{t!r} holds but {L.act(g, r)}{img!r} does not")
    for f in L.functions:
        gf = L.act(g, f)
        for v in dom:
            vals = S.func(f, v)
            if not vals:
                continue
            have = T.func(gf, m.mapping[v])
            for w in vals:
                if w in dom and m.mapping[w] not in have:
                    return _fail(f"{m.mapping[w]!r} = image of {w!r} in {f}({v!r}) is missing "
                                 f"from {gf}({m.mapping[v]!r})")
    return MorphismCheck(True)


def _check_embedding_on(m: Morphism, S: Structure, T: Structure, dom) -> MorphismCheck:
    """Injective, relations reflected and preserved, functions equal on ``dom``."""
    L = S.language
    g = m.perm
    img = {m.mapping[v] for v in dom}
    if len(img) != len(dom):
        return _fail("vertex map is not injective")
    ok = _check_homomorphism(m, S, T, dom)
    if not ok:
        return ok
    back = {m.mapping[v]: v for v in dom}
    for r in L.relation_names:
        gr = L.act(g, r)
        src = S.rel(r)
        for t in _tuples_within(T.rel(gr), L.arity(r), back):
            pre = tuple(back[w] for w in t)
            if pre not in src:
                return _fail(f"{gr}{t!r} holds but {r}{pre!r} does not")
    for f in L.functions:
        gf = L.act(g, f)
        for v in dom:
            want = {m.mapping[w] for w in S.func(f, v) if w in dom}
            if len(want) != len(S.func(f, v)):
                return _fail(f"{f}({v!r}) leaves the domain")
            if want != set(T.func(gf, m.mapping[v])):
                return _fail(f"{gf}({m.mapping[v]!r}) differs from the image of {f}({v!r})")
    return MorphismCheck(True)


def _encode(rows, n: int):
    k = rows.shape[1]
    if k and n ** k >= 2 ** 62:
        return None
    codes = np.zeros(len(rows), dtype=np.int64)
    for i in range(k):
        codes = codes * n + rows[:, i]
    codes.sort()
    return codes


def _check_bijection(m: Morphism, S: Structure, T: Structure) -> MorphismCheck:
    """Isomorphism test for a bijection: every symbol's content maps onto its image's."""
    L = S.language
    f = m.mapping
    where = np.fromiter((T.pos(f[v]) for v in S.vertices), dtype=np.int64, count=len(S))
    for r in L.relation_names:
        gr = L.act(m.perm, r)
        target_codes = T.tuple_codes(gr)
        if target_codes is not None and len(S.rel(r)) == len(T.rel(gr)):
            img_codes = _encode(where[S.position_tuples(r)], len(T))
            if np.array_equal(img_codes, target_codes):
                continue
        img = {tuple(f[v] for v in t) for t in S.rel(r)}
        target = T.rel(gr)
        if img != target:
            extra = next(iter(img - target), None)
            if extra is not None:
                return _fail(f"{gr}{extra!r} is the image of a tuple of {r} but does not hold")
            missing = next(iter(target - img))
            return _fail(f"{gr}{missing!r} holds but its preimage is not in {r}")
    for fn in L.functions:
        gf = L.act(m.perm, fn)
        vals = T.functions[gf]
        src = S.functions[fn]
        if len(src) != len(vals):
            return _fail(f"{fn} and {gf} are defined on different numbers of vertices")
        for v, img in src.items():
            if {f[w] for w in img} != vals.get(f[v], _EMPTY):
                return _fail(f"{gf}({f[v]!r}) differs from the image of {fn}({v!r})")
    return MorphismCheck(True)


def check_morphism(m: Morphism, S: Structure, T: Structure, kind: str = "homomorphism",
                   caps: Caps | None = None) -> MorphismCheck:
    """Check the conditions of ``kind`` for ``m`` as a map from ``S`` to ``T``.

    Returns a truthy :class:`MorphismCheck` or one naming the first violation.
    For ``partial-automorphism`` the map is a partial map of ``S`` to itself
    (``T`` must equal ``S``).
    """
    if kind not in KINDS:
        raise InputError(f"unknown morphism kind {kind!r}")
    L = S.language
    if T.language != L:
        return _fail("source and target languages differ")
    if len(m.perm) != L.size or not L.in_group(m.perm):
        return _fail("symbol permutation is not in the group")
    for v, w in m.mapping.items():
        if v not in S:
            return _fail(f"{v!r} is not a vertex of the source")
        if w not in T:
            return _fail(f"{w!r} is not a vertex of the target")
    if kind == "partial-automorphism":
        if not S == T:
            return _fail("partial automorphisms map a structure to itself")
        dom = m.domain
        if closure(S, dom) != dom:
            return _fail("domain is not closed")
        if closure(S, m.image) != m.image:
            return _fail("range is not closed")
        return _check_embedding_on(m, S, T, dom)
    if len(m.mapping) != len(S):
        return _fail("vertex map is not total")
    dom = S.vertices
    if kind in ("isomorphism", "automorphism") and len(S) == len(T) and m.is_injective():
        if kind == "automorphism" and not S == T:
            return _fail("automorphisms map a structure to itself")
        return _check_bijection(m, S, T)
    if kind == "homomorphism":
        return _check_homomorphism(m, S, T, set(dom))
    if kind == "monomorphism":
        if not m.is_injective():
            return _fail("vertex map is not injective")
        return _check_homomorphism(m, S, T, set(dom))
    if kind == "homomorphism-embedding":
        ok = _check_homomorphism(m, S, T, set(dom))
        if not ok:
            return ok
        for irr in irreducible_substructures(S, caps=caps):
            ok = _check_embedding_on(m, S, T, irr)
            if not ok:
                return _fail(f"on irreducible {sorted(irr, key=S.pos)!r}: {ok.violation}")
        return MorphismCheck(True)
    ok = _check_embedding_on(m, S, T, set(dom))
    if not ok or kind == "embedding":
        return ok
    if len(T) != len(S):
        return _fail("vertex map is not surjective")
    if kind == "automorphism" and not S == T:
        return _fail("automorphisms map a structure to itself")
    return MorphismCheck(True)


def image_structure(m: Morphism, S: Structure, order: Iterable | None = None) -> Structure:
    """The image ``m(S)``: vertices ``m(S)``, ``g(R)`` holding on images of ``R``-tuples."""
    L = S.language
    verts = list(dict.fromkeys(m.mapping[v] for v in S.vertices)) if order is None else list(order)
    rel = {}
    for r in L.relation_names:
        rel[L.act(m.perm, r)] = {tuple(m.mapping[v] for v in t) for t in S.rel(r)}
    fun = {}
    for f in L.functions:
        vals = {}
        for v, img in S.functions[f].items():
            vals.setdefault(m.mapping[v], set()).update(m.mapping[w] for w in img)
        fun[L.act(m.perm, f)] = vals
    return Structure(L, verts, rel, fun)


def apply_relabelling(g, S: Structure) -> Structure:
    """Act by ``(g, id)``: the new content of a symbol ``s`` is the old content of ``g^-1(s)``."""
    g = S.language.perm(g)
    return image_structure(Morphism(g, {v: v for v in S.vertices}), S, S.vertices)


def relabelling_orbit(S: Structure) -> list[Structure]:
    """Distinct structures ``g S`` for ``g`` in the group, in group order."""
    seen = []
    found = set()
    for g in S.language.group:
        T = apply_relabelling(g, S)
        if T not in found:
            found.add(T)
            seen.append(T)
    return seen


def relabel_vertices(S: Structure, names: Mapping) -> Structure:
    """Rename vertices by a bijection; order is preserved."""
    m = Morphism(S.language.identity, names)
    if not m.is_injective() or len(m) != len(S):
        raise InputError("renaming must be a bijection on the vertices")
    return image_structure(m, S, [names[v] for v in S.vertices])


def reduct(S: Structure, language: Language) -> Structure:
    """Forget the symbols not in ``language``."""
    rel = {r: S.rel(r) for r in language.relation_names}
    fun = {f: S.functions[f] for f in language.functions}
    return Structure(language, S.vertices, rel, fun)


def expand(S: Structure, language: Language, relations=None, functions=None) -> Structure:
    """Same vertices in a bigger language, with extra content for the new symbols."""
    rel = {r: S.rel(r) for r in S.language.relation_names}
    rel.update(relations or {})
    fun = {f: dict(S.functions[f]) for f in S.language.functions}
    fun.update(functions or {})
    return Structure(language, S.vertices, rel, fun)


# ---------------------------------------------------------------------------
# closures and substructures


def closure(S: Structure, X: Iterable) -> frozenset:
    """Least superset of ``X`` closed under all function values."""
    out = set()
    stack = []
    for v in X:
        if v not in S:
            raise InputError(f"unknown vertex {v!r}")
        if v not in out:
            out.add(v)
            stack.append(v)
    if not S.language.functions:
        return frozenset(out)
    while stack:
        v = stack.pop()
        for w in S.successors(v):
            if w not in out:
                out.add(w)
                stack.append(w)
    return frozenset(out)


def vertex_closures(S: Structure) -> dict:
    """``v -> Cl(v)`` for every vertex, memoised on the structure."""
    return S.cached("vertex_closures", lambda: {v: closure(S, (v,)) for v in S.vertices})


def is_closed(S: Structure, X: Iterable) -> bool:
    X = set(X)
    return all(S.successors(v) <= X for v in X)


def induced_substructure(S: Structure, X: Iterable) -> Structure:
    X = set(X)
    for v in X:
        if v not in S:
            raise InputError(f"unknown vertex {v!r}")
    for v in X:
        if not S.successors(v) <= X:
            raise ClosureViolation(f"set is not closed: function values of {v!r} leave it")
    verts = [v for v in S.vertices if v in X]
    rel = {}
    for r in S.language.relation_names:
        rel[r] = _tuples_within(S.rel(r), S.language.arity(r), X)
    fun = {f: {v: img for v, img in S.functions[f].items() if v in X} for f in S.language.functions}
    return Structure(S.language, verts, rel, fun)


def disjoint_union(S: Structure, T: Structure, tags=(0, 1)) -> tuple[Structure, Morphism, Morphism]:
    """Disjoint union with vertices ``(tag, v)``, plus both inclusions."""
    if S.language != T.language:
        raise InputError("languages differ")
    a, b = tags
    ms = Morphism(S.language.identity, {v: (a, v) for v in S.vertices})
    mt = Morphism(S.language.identity, {v: (b, v) for v in T.vertices})
    verts = [(a, v) for v in S.vertices] + [(b, v) for v in T.vertices]
    rel = {}
    fun = {}
    for r in S.language.relation_names:
        rel[r] = [tuple(ms(v) for v in t) for t in S.rel(r)] + [tuple(mt(v) for v in t) for t in T.rel(r)]
    for f in S.language.functions:
        d = {ms(v): {ms(w) for w in img} for v, img in S.functions[f].items()}
        d.update({mt(v): {mt(w) for w in img} for v, img in T.functions[f].items()})
        fun[f] = d
    return Structure(S.language, verts, rel, fun), ms, mt


def free_amalgamation(B1: Structure, B2: Structure, A: Structure, alpha1: Morphism,
                      alpha2: Morphism) -> tuple[Structure, Morphism, Morphism]:
    """Pushout of ``B1 <- A -> B2`` with nothing added between the two new parts.

    Vertices of the result are ``(1, b)`` for ``b`` in ``B1`` and ``(2, b)`` for
    ``b`` in ``B2`` outside the image of ``A``.  Function values at glued
    vertices are the union of the two sides.  The maps must be injective,
    use the identity symbol permutation, and be embeddings of relations.
    """
    L = A.language
    if not (B1.language == L == B2.language):
        raise InputError("languages differ")
    rel_only = L.relational_reduct() if L.functions else L
    for alpha, B in ((alpha1, B1), (alpha2, B2)):
        if alpha.perm != L.identity:
            raise InputError("amalgamation maps must use the identity symbol permutation")
        if len(alpha) != len(A):
            raise InputError("amalgamation maps must be total on A")
        probe = Morphism(rel_only.identity, alpha.mapping)
        ok = check_morphism(probe, reduct(A, rel_only), reduct(B, rel_only), "embedding")
        if not ok:
            raise InputError(f"not an embedding: {ok.violation}")
    glued = {alpha2(a): (1, alpha1(a)) for a in A.vertices}
    b1 = Morphism(L.identity, {v: (1, v) for v in B1.vertices})
    b2 = Morphism(L.identity, {v: glued.get(v, (2, v)) for v in B2.vertices})
    verts = [(1, v) for v in B1.vertices] + [(2, v) for v in B2.vertices if v not in glued]
    rel = {}
    fun = {}
    for r in L.relation_names:
        rel[r] = {tuple(b1(v) for v in t) for t in B1.rel(r)} | {tuple(b2(v) for v in t) for t in B2.rel(r)}
    for f in L.functions:
        d = {}
        for B, b in ((B1, b1), (B2, b2)):
            for v, img in B.functions[f].items():
                d.setdefault(b(v), set()).update(b(w) for w in img)
        fun[f] = d
    return Structure(L, verts, rel, fun), b1, b2


# ---------------------------------------------------------------------------
# irreducibility


def _preimage_closures(S: Structure, X) -> dict:
    """``u -> {w in X : u in Cl(w)}`` within the closed set ``X``."""
    cl = vertex_closures(S)
    P = {u: set() for u in X}
    for w in X:
        for u in cl[w]:
            P[u].add(w)
    return P


def is_irreducible(S: Structure, X: Iterable | None = None) -> bool:
    """Whether ``S`` (or its closed subset ``X``) is not a free amalgam of proper substructures.

    ``S`` is reducible exactly when two vertices ``u, v`` exist whose sets of
    "vertices whose closure contains it" are disjoint and no relation tuple meets
    both of them; those complements are then the two parts of a split.
    """
    X = frozenset(S.vertices) if X is None else frozenset(X)
    if len(X) <= 1:
        return True
    P = _preimage_closures(S, X)
    touch = {u: set() for u in X}   # u -> vertices sharing a relation tuple with u
    tuples_at = S.tuples_at()
    for u in X:
        for _, t in tuples_at[u]:
            if all(v in X for v in t):
                touch[u].update(t)
    order = sorted(X, key=S.pos)
    for i, u in enumerate(order):
        Pu = P[u]
        near_u = set()
        for w in Pu:
            near_u |= touch[w]
        for v in order[i + 1:]:
            Pv = P[v]
            if Pu & Pv or near_u & Pv:
                continue
            return False
    return True


def is_irreducible_exhaustive(S: Structure, max_size: int = 12) -> bool:
    """Independent check: try every pair of proper closed subsets covering ``S``."""
    n = len(S)
    if n > max_size:
        raise ResourceLimit(f"exhaustive irreducibility check limited to {max_size} vertices")
    verts = S.vertices
    closed = []
    for mask in range(1 << n):
        X = frozenset(verts[i] for i in range(n) if mask >> i & 1)
        if len(X) < n and is_closed(S, X):
            closed.append(X)
    full = frozenset(verts)
    all_tuples = [t for r in S.language.relation_names for t in S.rel(r)]
    for U1 in closed:
        for U2 in closed:
            if U1 | U2 != full:
                continue
            only1 = U1 - U2
            only2 = U2 - U1
            if any(any(v in only1 for v in t) and any(v in only2 for v in t) for t in all_tuples):
                continue
            return False
    return True


def gaifman_adjacency(S: Structure) -> dict:
    """Neighbours through shared relation tuples or function values (undirected)."""
    def compute():
        adj = {v: set() for v in S.vertices}
        for r in S.language.relation_names:
            for t in S.rel(r):
                for a in t:
                    for b in t:
                        if a != b:
                            adj[a].add(b)
        for f in S.language.functions:
            for v, img in S.functions[f].items():
                for w in img:
                    if w != v:
                        adj[v].add(w)
                        adj[w].add(v)
        return adj
    return S.cached("gaifman", compute)


def closed_connected_subsets(S: Structure, max_size: int | None = None, caps: Caps | None = None):
    """Every nonempty closed set that is connected in the Gaifman graph.

    Each set is grown from the closure of one vertex by adding closures of
    neighbours; sets are yielded once each, smallest seeds first.
    """
    caps = resolve(caps)
    cl = vertex_closures(S)
    adj = gaifman_adjacency(S)
    seen = set()
    budget = caps.max_subsets
    stack = []
    for v in S.vertices:
        c = cl[v]
        if max_size is not None and len(c) > max_size:
            continue
        if c not in seen:
            seen.add(c)
            stack.append(c)
    while stack:
        X = stack.pop()
        budget -= 1
        if budget < 0:
            raise ResourceLimit("closed subset enumeration exceeded max_subsets")
        yield X
        frontier = set()
        for v in X:
            frontier |= adj[v]
        frontier -= X
        for w in frontier:
            Y = X | cl[w]
            if max_size is not None and len(Y) > max_size:
                continue
            if Y not in seen:
                seen.add(Y)
                stack.append(Y)


def irreducible_substructures(S: Structure, max_size: int | None = None,
                              caps: Caps | None = None) -> list[frozenset]:
    """Nonempty closed irreducible vertex sets, sorted by (size, positions)."""
    key = ("irreducible", max_size)

    def compute():
        caps_ = resolve(caps)
        out = []
        if not S.language.functions:
            import networkx as nx
            G = nx.Graph()
            G.add_nodes_from(S.vertices)
            adj = gaifman_adjacency(S)
            G.add_edges_from((a, b) for a in adj for b in adj[a])
            for count, clique in enumerate(nx.enumerate_all_cliques(G)):
                if max_size is not None and len(clique) > max_size:
                    break
                if count > caps_.max_subsets:
                    raise ResourceLimit("clique enumeration exceeded max_subsets")
                out.append(frozenset(clique))
        else:
            for X in closed_connected_subsets(S, max_size, caps_):
                if is_irreducible(S, X):
                    out.append(X)
        out.sort(key=lambda X: (len(X), sorted(S.pos(v) for v in X)))
        return out
    return S.cached(key, compute)


def closed_subsets(S: Structure, caps: Caps | None = None) -> list[frozenset]:
    """All closed subsets (including the empty set) ordered by (size, positions)."""
    caps = resolve(caps)
    n = len(S)
    if n > caps.max_subset_universe:
        raise ResourceLimit(f"closed subset enumeration limited to {caps.max_subset_universe} vertices")
    cl = vertex_closures(S)
    verts = S.vertices
    out = []
    for size in range(n + 1):
        for combo in itertools.combinations(range(n), size):
            X = frozenset(verts[i] for i in combo)
            if all(cl[v] <= X for v in X):
                out.append(X)
    return out


# ---------------------------------------------------------------------------
# order-preserving extension


def order_preserving_extension(p: Mapping, carrier: Sequence) -> dict:
    """Complete a partial injection of ``carrier`` to a permutation.

    The unmapped points and the unused images are each listed in carrier
    order and matched up pairwise.  The result is coherent: extending a
    composite equals composing the extensions.
    """
    carrier = list(carrier)
    cset = set(carrier)
    if len(set(p.values())) != len(p):
        raise InputError("partial map is not injective")
    for a, b in p.items():
        if a not in cset or b not in cset:
            raise InputError(f"{a!r} -> {b!r} leaves the carrier")
    used = set(p.values())
    free_src = [x for x in carrier if x not in p]
    free_dst = [y for y in carrier if y not in used]
    out = dict(p)
    out.update(zip(free_src, free_dst))
    return out


def is_coherent_triple(f: Mapping, g: Mapping, h: Mapping) -> bool:
    """Dom f = Dom h, Range f = Dom g, Range g = Range h and h = g o f."""
    if set(f) != set(h) or set(f.values()) != set(g) or set(g.values()) != set(h.values()):
        return False
    return all(h[x] == g[f[x]] for x in f)
