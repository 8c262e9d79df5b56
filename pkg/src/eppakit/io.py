"""Text formats for structures and morphisms.

Structure document::

    # comments run to the end of the line
    language: E/2 U/1 f!1
    group: (E) ; ...            # cycle notation on symbol names, elements split by ';'
    vertices: a b c
    rel E: (a,b) (b,a)
    rel U: (c)
    fun f: a -> {b} b -> {a,c}

Morphism document::

    perm: (R S)                 # omitted means the identity
    map: a -> b
    map: b -> c

Vertex ids are tokens of letters, digits and ``_ . : +``; tokens that look
like integers are read as integers.
"""

from __future__ import annotations

import re

from .errors import InputError
from .structure import Language, Morphism, Structure

TOKEN = r"[A-Za-z0-9_.:+]+"
_TOKEN_RE = re.compile(TOKEN + r"\Z")
_INT_RE = re.compile(r"-?(0|[1-9][0-9]*)\Z")
_SYMBOL_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(/(\d+)|!1)\Z")
_TUPLE_RE = re.compile(r"\(([^()]*)\)")
_FUN_RE = re.compile(r"(" + TOKEN + r")\s*->\s*\{([^{}]*)\}")
_ARROW_RE = re.compile(r"(" + TOKEN + r")\s*->\s*(" + TOKEN + r")\Z")


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def vertex_id(tok: str):
    return int(tok) if _INT_RE.match(tok) else tok


def token(v) -> str:
    s = str(v)
    if not _TOKEN_RE.match(s) or (isinstance(v, str) and _INT_RE.match(s)):
        raise InputError(f"vertex {v!r} has no token form; pass explicit names")
    return s


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _split_header(line: str, no: int) -> tuple[str, str]:
    if ":" not in line:
        raise ParseError("expected 'keyword: ...'", no)
    head, rest = line.split(":", 1)
    return head.strip(), rest.strip()


def parse_cycles(text: str, language: Language, no: int | None = None) -> tuple:
    """Cycle notation over symbol names, e.g. ``(R S)(U V)``; ``()`` is the identity."""
    text = text.strip()
    img = list(range(language.size))
    if not re.fullmatch(r"(\([^()]*\)\s*)*", text):
        raise ParseError(f"bad cycle notation {text!r}", no)
    seen = set()
    for body in re.findall(r"\(([^()]*)\)", text):
        names = body.split()
        for s in names:
            if s not in language.symbols:
                raise ParseError(f"unknown symbol {s!r} in permutation", no)
            if s in seen:
                raise ParseError(f"symbol {s!r} appears twice in permutation", no)
            seen.add(s)
        for a, b in zip(names, names[1:] + names[:1]):
            img[language.index(a)] = language.index(b)
    return tuple(img)


def parse_structure(text: str) -> Structure:
    language = None
    group_text = None
    group_line = None
    vertices = None
    rel = {}
    fun = {}
    pending = []
    for no, line in _lines(text):
        head, rest = _split_header(line, no)
        if head == "language":
            if language is not None:
                raise ParseError("language declared twice", no)
            rels, funs = [], []
            for item in rest.split():
                m = _SYMBOL_RE.match(item)
                if not m:
                    raise ParseError(f"bad symbol declaration {item!r}; use name/arity or name!1", no)
                if m.group(3) is not None:
                    rels.append((m.group(1), int(m.group(3))))
                else:
                    funs.append(m.group(1))
            try:
                language = Language(rels, funs)
            except InputError as exc:
                raise ParseError(str(exc), no) from None
        elif head == "group":
            group_text, group_line = rest, no
        elif head == "vertices":
            if vertices is not None:
                raise ParseError("vertices declared twice", no)
            toks = rest.split()
            for t in toks:
                if not _TOKEN_RE.match(t):
                    raise ParseError(f"bad vertex id {t!r}", no)
            vertices = [vertex_id(t) for t in toks]
        elif head.startswith("rel ") or head.startswith("fun "):
            pending.append((no, head[:3], head[4:].strip(), rest))
        else:
            raise ParseError(f"unknown keyword {head!r}", no)
    if language is None:
        raise ParseError("missing 'language:' line")
    if vertices is None:
        raise ParseError("missing 'vertices:' line")
    vset = set(vertices)
    if len(vset) != len(vertices):
        raise ParseError("duplicate vertex ids")
    for no, kind, name, rest in pending:
        if name not in language.symbols:
            raise ParseError(f"unknown symbol {name!r}", no)
        if kind == "rel":
            if language.is_function(name):
                raise ParseError(f"{name} is a function; use 'fun {name}:'", no)
            arity = language.arity(name)
            leftover = _TUPLE_RE.sub("", rest).strip()
            if leftover:
                raise ParseError(f"unexpected text {leftover!r}", no)
            tuples = rel.setdefault(name, [])
            for body in _TUPLE_RE.findall(rest):
                toks = [t.strip() for t in body.split(",")]
                if len(toks) != arity:
                    raise ParseError(f"tuple ({body}) has {len(toks)} entries but {name} has arity {arity}", no)
                t = tuple(vertex_id(x) for x in toks)
                for v in t:
                    if v not in vset:
                        raise ParseError(f"undeclared vertex {v!r}", no)
                tuples.append(t)
        else:
            if not language.is_function(name):
                raise ParseError(f"{name} is a relation; use 'rel {name}:'", no)
            leftover = _FUN_RE.sub("", rest).strip()
            if leftover:
                raise ParseError(f"unexpected text {leftover!r}", no)
            vals = fun.setdefault(name, {})
            for src, body in _FUN_RE.findall(rest):
                v = vertex_id(src)
                img = [vertex_id(x.strip()) for x in body.split(",") if x.strip()]
                for w in [v] + img:
                    if w not in vset:
                        raise ParseError(f"undeclared vertex {w!r}", no)
                vals.setdefault(v, set()).update(img)
    if group_text:
        elems = [e for e in group_text.split(";") if e.strip()]
        perms = [parse_cycles(e, language, group_line) for e in elems]
        try:
            language = Language(language.relations, language.functions, perms)
        except InputError as exc:
            raise ParseError(str(exc), group_line) from None
    try:
        return Structure(language, vertices, rel, fun)
    except InputError as exc:
        raise ParseError(str(exc)) from None


def serialize_structure(S: Structure, names: dict | None = None) -> str:
    """Canonical document: symbols as declared, tuples and sets in vertex order."""
    name = (lambda v: names[v]) if names is not None else token
    L = S.language
    out = []
    decl = [f"{r}/{a}" for r, a in L.relations] + [f"{f}!1" for f in L.functions]
    out.append("language: " + " ".join(decl))
    others = [g for g in L.group if g != L.identity]
    if others:
        out.append("group: " + " ; ".join(L.perm_str(g) for g in others))
    out.append("vertices: " + " ".join(name(v) for v in S.vertices))
    for r in L.relation_names:
        ts = sorted(S.rel(r), key=lambda t: tuple(S.pos(v) for v in t))
        body = " ".join("(" + ",".join(name(v) for v in t) + ")" for t in ts)
        out.append(f"rel {r}: {body}".rstrip())
    for f in L.functions:
        items = sorted(S.functions[f].items(), key=lambda kv: S.pos(kv[0]))
        body = " ".join(
            name(v) + " -> {" + ",".join(name(w) for w in S.sort(img)) + "}" for v, img in items)
        out.append(f"fun {f}: {body}".rstrip())
    return "\n".join(out) + "\n"


def parse_morphism(text: str, language: Language, injective: bool = True) -> Morphism:
    """Morphism document; ``injective=False`` admits projections, which may merge vertices."""
    perm = language.identity
    mapping = {}
    in_map = False
    for no, line in _lines(text):
        if in_map and ":" not in line:
            m = _ARROW_RE.match(line)
            if not m:
                raise ParseError("expected 'u -> v'", no)
            _add(mapping, m, no)
            continue
        head, rest = _split_header(line, no)
        if head == "perm":
            perm = parse_cycles(rest, language, no)
            if not language.in_group(perm):
                raise ParseError(f"permutation {rest} is not in the group", no)
            in_map = False
        elif head == "map":
            if rest:
                m = _ARROW_RE.match(rest)
                if not m:
                    raise ParseError("expected 'map: u -> v'", no)
                _add(mapping, m, no)
            else:
                in_map = True
        else:
            raise ParseError(f"unknown keyword {head!r}", no)
    if injective and len(set(mapping.values())) != len(mapping):
        raise ParseError("map is not injective")
    return Morphism(perm, mapping)


def _add(mapping, m, no):
    u, v = vertex_id(m.group(1)), vertex_id(m.group(2))
    if u in mapping:
        raise ParseError(f"{u!r} mapped twice", no)
    mapping[u] = v


def serialize_morphism(m: Morphism, language: Language, src_names: dict | None = None,
                       dst_names: dict | None = None) -> str:
    src = (lambda v: src_names[v]) if src_names is not None else token
    dst = (lambda v: dst_names[v]) if dst_names is not None else token
    out = []
    if m.perm != language.identity:
        out.append("perm: " + language.perm_str(m.perm))
    for u, v in m.mapping.items():
        out.append(f"map: {src(u)} -> {dst(v)}")
    return "\n".join(out) + ("\n" if out else "")


def default_names(S: Structure) -> dict | None:
    """``None`` when every vertex has a token form, else ``v0, v1, ...`` in vertex order."""
    try:
        for v in S.vertices:
            token(v)
        return None
    except InputError:
        return {v: f"v{i}" for i, v in enumerate(S.vertices)}


def read_structure(path: str) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


def read_morphism(path: str, language: Language, injective: bool = True) -> Morphism:
    with open(path, encoding="utf-8") as fh:
        return parse_morphism(fh.read(), language, injective)
