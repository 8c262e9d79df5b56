"""Command-line entry points: build, extend, verify, report.

Exit codes: 0 built or passed, 1 verified failure (with counterexample),
2 input error, 3 resource limit.  Resource caps come from ``EPPAKIT_*``
environment variables.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .caps import caps_from_env
from .errors import InputError, ResourceLimit
from .io import (default_names, parse_structure, read_morphism, read_structure,
                 serialize_morphism, serialize_structure)
from .metric import (build_metric_witness, check_free_amalgamation_membership,
                     from_structure, is_metric, unit_cliques)
from .search import extend_to_automorphism
from .structure import Morphism, Structure
from .verify import (VerifyReport, audit_witness_size, verify_coherence, verify_eppa_witness,
                     verify_faithfulness, verify_unwind_property)
from .witness.base import SearchWitness, Witness
from .witness.faithful import FaithfulWitness
from .witness.functions import FunctionWitness
from .witness.graph import GraphWitness
from .witness.pipeline import build_pipeline_witness
from .witness.relational import RelationalWitness
from .witness.unwind import UnwoundWitness

METHODS = ("graph", "relational", "functions", "faithful", "unwind", "pipeline", "metric")
CHECKS = ("eppa", "coherence", "faithful", "unwind", "size", "metric", "forbhe")


@dataclasses.dataclass
class Built:
    witness: object            # anything with structure, psi and extend
    base: Structure            # structure the projection lands in
    projection: Morphism


def _is_graph(A: Structure) -> bool:
    L = A.language
    if len(L.relations) != 1 or L.relations[0][1] != 2 or L.functions or len(L.group) != 1:
        return False
    E = A.rel(L.relations[0][0])
    return all(a != b and (b, a) in E for a, b in E)


def default_witness(A: Structure, caps) -> Witness:
    if _is_graph(A):
        return GraphWitness(A, caps)
    if not A.language.functions:
        return RelationalWitness(A, caps)
    return FunctionWitness(A, caps=caps)


def _base_witness(args, A: Structure, caps) -> Witness:
    if not args.base:
        return default_witness(A, caps)
    B0 = read_structure(args.base)
    if args.base_embedding:
        psi0 = read_morphism(args.base_embedding, B0.language)
    else:
        missing = [a for a in A.vertices if a not in B0]
        if missing:
            raise InputError("--base-embedding is required when A's vertex ids are not in the base")
        psi0 = Morphism(A.language.identity, {a: a for a in A.vertices})
    return SearchWitness(A, B0, psi0, caps)


def _projection(W, B: Structure) -> Morphism:
    return Morphism(B.language.identity, {v: W.project(v) for v in B.vertices})


def build(args, caps) -> Built:
    A = read_structure(args.input)
    method = args.method
    if method in ("graph", "relational", "functions"):
        W = {"graph": GraphWitness, "relational": RelationalWitness}.get(method)
        W = W(A, caps) if W else FunctionWitness(A, caps=caps)
        base = W.B0.structure if method == "functions" else A
        return Built(W, base, _projection(W, W.structure))
    if method == "metric":
        G = from_structure(A)
        base = _base_witness(args, A, caps) if args.base else None
        W = build_metric_witness(G, _need_n(args), base, args.mode, caps)
        return Built(W, W.pipeline.B0.structure, W.pipeline.to_base())
    B0 = _base_witness(args, A, caps)
    if method == "faithful":
        W = FaithfulWitness(A, B0, _layer_mode(args.mode), caps)
        return Built(W, B0.structure, _projection(W, W.structure))
    if method == "unwind":
        W = UnwoundWitness(A, B0, args.edge, _layer_mode(args.mode), caps)
        return Built(W, B0.structure, _projection(W, W.structure))
    P = build_pipeline_witness(A, B0, _need_n(args), args.mode, caps=caps)
    return Built(P, B0.structure, P.to_base())


def _layer_mode(mode: str) -> str:
    return "full" if mode == "auto" else mode


def _need_n(args) -> int:
    if args.n is None:
        raise InputError(f"--n is required for --method {args.method}")
    return args.n


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_build(args, caps) -> int:
    built = build(args, caps)
    B = built.witness.structure
    names = default_names(B)
    _write(args.out, serialize_structure(B, names))
    if args.emit_embedding:
        _write(args.emit_embedding, serialize_morphism(built.witness.psi, B.language, None, names))
    if args.emit_projection:
        bnames = default_names(built.base)
        _write(args.emit_projection, serialize_morphism(built.projection, B.language, names, bnames))
    if args.emit_base:
        _write(args.emit_base, serialize_structure(built.base, default_names(built.base)))
    print(f"built {args.method} witness: {len(B)} vertices -> {args.out}")
    return 0


def _named(S: Structure):
    """Map between file ids and the structure's own vertices."""
    names = default_names(S)
    if names is None:
        return {v: v for v in S.vertices}
    return names


def _load_witness(args, caps):
    """The witness file, psi, and an extender over file ids (constructive when --method is given)."""
    B = read_structure(args.witness)
    psi = read_morphism(args.embedding, B.language) if args.embedding else None
    if not args.method:
        def search(phi):
            theta = extend_to_automorphism(B, phi, caps)
            if theta is None:
                raise InputError("partial automorphism does not extend")
            return theta
        return B, psi, search, None
    built = build(args, caps)
    W = built.witness
    names = _named(W.structure)
    rebuilt = serialize_structure(W.structure, default_names(W.structure))
    with open(args.witness, encoding="utf-8") as fh:
        if parse_structure(fh.read()) != parse_structure(rebuilt):
            raise InputError("witness file does not match the rebuilt witness")
    back = {n: v for v, n in names.items()}

    def constructive(phi):
        inner = Morphism(phi.perm, {back[u]: back[v] for u, v in phi.mapping.items()})
        theta = W.extend(inner)
        return Morphism(theta.perm, {names[u]: names[v] for u, v in theta.mapping.items()})

    if psi is None:
        psi = Morphism(W.psi.perm, {a: names[v] for a, v in W.psi.mapping.items()})
    return B, psi, constructive, built


def cmd_extend(args, caps) -> int:
    B, psi, extender, _ = _load_witness(args, caps)
    if psi is None:
        raise InputError("--embedding is required")
    phi_A = read_morphism(args.pa, B.language)
    phi = Morphism(phi_A.perm, {psi(a): psi(b) for a, b in phi_A.mapping.items()})
    theta = extender(phi)
    _write(args.out, serialize_morphism(theta, B.language))
    print(f"extended a partial map of {len(phi)} vertices -> {args.out}")
    return 0


def _finish(report: VerifyReport, args, caps) -> int:
    doc = report.to_json()
    doc["seed"] = args.seed
    doc["cap"] = args.cap
    doc["caps"] = dataclasses.asdict(caps)
    if args.json:
        _write(args.json, json.dumps(doc, indent=2, default=repr) + "\n")
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {report.check}")
    if not report.passed:
        print(json.dumps(report.counterexample, default=repr))
    return 0 if report.passed else 1


def cmd_verify(args, caps) -> int:
    check = args.check
    if check == "forbhe":
        B = read_structure(args.witness)
        forbidden = [read_structure(p) for p in args.forbidden or ()]
        ok = check_free_amalgamation_membership(forbidden, B, caps)
        ce = None
        if not ok:
            from .search import embeddings
            for p, F in zip(args.forbidden, forbidden):
                found = embeddings(F, B, limit=1, caps=caps)
                if found:
                    ce = {"forbidden": p, "embedding": {repr(k): repr(v) for k, v in found[0].mapping.items()}}
                    break
        return _finish(VerifyReport("forbhe", ok, {"B_vertices": len(B)}, ce), args, caps)
    if check == "unwind":
        B = read_structure(args.witness)
        B0 = read_structure(args.base)
        f = read_morphism(args.projection, B.language, injective=False)
        rep = verify_unwind_property(B, B0, f, args.edge, args.cap, args.seed, args.samples, caps)
        return _finish(rep, args, caps)
    if check == "metric":
        B = read_structure(args.witness)
        G = from_structure(B)
        n = _need_n(args)
        cliques = unit_cliques(G, n)
        metric = is_metric(G)
        ce = None
        if not metric:
            ce = {"reason": "not a metric space"}
        elif cliques:
            ce = {"reason": f"{n} points at mutual distance 1", "clique": [repr(v) for v in cliques[0]]}
        rep = VerifyReport("metric", ce is None, {"B_vertices": len(B), "n": n}, ce)
        if rep.passed and args.input and args.embedding:
            A = read_structure(args.input)
            rep = verify_eppa_witness(A, B, read_morphism(args.embedding, B.language), None, caps)
            rep.check = "metric"
        return _finish(rep, args, caps)
    A = read_structure(args.input)
    if check == "size":
        B = read_structure(args.witness)
        kind = args.method
        if kind in ("graph", "relational"):
            rep = audit_witness_size(kind, A, B)
        else:
            B0 = read_structure(args.base) if args.base else None
            rep = audit_witness_size(kind, A, B, B0, args.edge, caps)
        return _finish(rep, args, caps)
    B, psi, extender, built = _load_witness(args, caps)
    if psi is None:
        raise InputError("--embedding is required")
    if check == "eppa":
        rep = verify_eppa_witness(A, B, psi, extender if args.method else None, caps)
    elif check == "coherence":
        if not args.method:
            raise InputError("coherence needs the constructive extender: pass --method and its inputs")
        rep = verify_coherence(A, B, psi, extender, caps)
    else:
        rep = verify_faithfulness(A, B, psi, caps)
    return _finish(rep, args, caps)


def cmd_report(args, caps) -> int:
    with open(args.report, encoding="utf-8") as fh:
        doc = json.load(fh)
    status = "PASS" if doc.get("passed") else "FAIL"
    print(f"{status} {doc.get('check')} (eppakit {doc.get('version')}, seed {doc.get('seed')})")
    for key in ("instance", "stats"):
        for k, v in (doc.get(key) or {}).items():
            print(f"  {k}: {v}")
    if doc.get("counterexample"):
        print("  counterexample:")
        print("    " + json.dumps(doc["counterexample"], indent=2).replace("\n", "\n    "))
    return 0 if doc.get("passed") else 1


def _witness_args(p, required_method=False):
    p.add_argument("--method", choices=METHODS, required=required_method)
    p.add_argument("--input", help="structure A")
    p.add_argument("--base", help="base structure B0")
    p.add_argument("--base-embedding", help="embedding of A into the base")
    p.add_argument("--n", type=int, help="size bound for pipeline and metric witnesses")
    p.add_argument("--edge", default="E", help="symmetric edge relation for unwinding")
    p.add_argument("--mode", choices=("auto", "full", "reachable"), default="auto")


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eppakit", description="Build and check extension witnesses.")
    ap.add_argument("--version", action="version", version=f"eppakit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a witness")
    _witness_args(b, required_method=True)
    b.add_argument("--out", required=True)
    b.add_argument("--emit-embedding")
    b.add_argument("--emit-projection")
    b.add_argument("--emit-base")

    e = sub.add_parser("extend", help="extend a partial automorphism of A")
    _witness_args(e)
    e.add_argument("--witness", required=True)
    e.add_argument("--embedding", required=True)
    e.add_argument("--pa", required=True)
    e.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="run a check and write a JSON report")
    _witness_args(v)
    v.add_argument("--check", choices=CHECKS, required=True)
    v.add_argument("--witness", required=True)
    v.add_argument("--embedding")
    v.add_argument("--projection")
    v.add_argument("--forbidden", nargs="*")
    v.add_argument("--json")
    v.add_argument("--cap", type=int, default=12)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=10_000)

    r = sub.add_parser("report", help="pretty-print a JSON report")
    r.add_argument("report")
    return ap


COMMANDS = {"build": cmd_build, "extend": cmd_extend, "verify": cmd_verify, "report": cmd_report}


def run_command(argv) -> int:
    args = parser().parse_args(argv)
    caps = caps_from_env()
    try:
        return COMMANDS[args.command](args, caps)
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    code = run_command(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
