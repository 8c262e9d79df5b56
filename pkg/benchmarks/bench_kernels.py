"""Compare the compiled and pure-Python search kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case extends every partial automorphism of psi(A) inside a witness
with both kernels; the solutions must agree.
"""

import argparse
import time

from eppakit import kernels
from eppakit.search import enumerate_partial_automorphisms, search_maps
from eppakit.structure import make_graph
from eppakit.witness.faithful import build_faithful_witness
from eppakit.witness.graph import build_graph_witness


def cases():
    P4 = make_graph([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)])
    C5 = make_graph(range(5), [(i, (i + 1) % 5) for i in range(5)])
    P3 = make_graph([1, 2, 3], [(1, 2), (2, 3)])
    S4 = make_graph([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4)])
    yield "graph witness of P4 (32 vertices)", build_graph_witness(P4)
    yield "graph witness of the star K1,3 (32 vertices)", build_graph_witness(S4)
    yield "graph witness of C5 (80 vertices)", build_graph_witness(C5)
    yield "faithful witness of P3 (48 vertices)", build_faithful_witness(P3, build_graph_witness(P3))


def run(B, pas, engine):
    out = []
    for phi in pas:
        out.append(search_maps(B, B, phi.perm, mode="iso", partial=phi.mapping, engine=engine))
    return out


def run_all(B, engine):
    """Every automorphism: one long search, dominated by the kernel itself."""
    return search_maps(B, B, B.language.identity, mode="iso", limit=10**7, engine=engine)


def timed(fn, repeat):
    best = None
    for _ in range(repeat):
        t = time.perf_counter()
        res = fn()
        dt = time.perf_counter() - t
        best = dt if best is None else min(best, dt)
    return best, res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = kernels.compiled_extend_search() is not None
    print(f"compiled kernel available: {compiled}")
    print(f"{'case':60s} {'maps':>6s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    engines = ["python-kernel"] + (["kernel"] if compiled else [])
    for name, W in cases():
        B = W.structure
        pas = enumerate_partial_automorphisms(W.copy_of_base())
        rows = [(f"{name}: extend psi(A) maps", len(pas), lambda e: run(B, pas, e))]
        if len(B) <= 32:
            rows.append((f"{name}: all automorphisms", None, lambda e: run_all(B, e)))
        for label, count, job in rows:
            best = {}
            results = {}
            for engine in engines:
                best[engine], results[engine] = timed(lambda: job(engine), args.repeat)
            if compiled and results["kernel"] != results["python-kernel"]:
                raise SystemExit(f"{label}: kernels disagree")
            if count is None:
                count = len(results["python-kernel"])
            py = best["python-kernel"]
            c = best.get("kernel")
            speed = f"{py / c:8.1f}" if c else "       -"
            cs = f"{c:11.4f}" if c else "          -"
            print(f"{label:60s} {count:6d} {py:10.4f} {cs} {speed}")


if __name__ == "__main__":
    main()
