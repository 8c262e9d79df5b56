import json
import subprocess
import sys

import pytest

from eppakit.cli import run_command
from eppakit.io import parse_morphism, read_structure

K2 = "language: E/2\nvertices: 1 2\nrel E: (1,2) (2,1)\n"
P3 = "language: E/2\nvertices: 1 2 3\nrel E: (1,2) (2,1) (2,3) (3,2)\n"
C4 = "language: E/2\nvertices: 1 2 3 4\nrel E: (1,2) (2,1) (2,3) (3,2) (3,4) (4,3) (4,1) (1,4)\n"
K3 = "language: E/2\nvertices: 1 2 3\nrel E: (1,2) (2,1) (2,3) (3,2) (1,3) (3,1)\n"
IDENTITY_P3 = "map: 1 -> 1\nmap: 2 -> 2\nmap: 3 -> 3\n"


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    write.dir = tmp_path
    return write


def _build(files, method, src, *extra):
    a = files("A.struct", src)
    out = str(files.dir / "B.struct")
    psi = str(files.dir / "psi.map")
    proj = str(files.dir / "pi.map")
    code = run_command(["build", "--method", method, "--input", a, "--out", out,
                        "--emit-embedding", psi, "--emit-projection", proj, *extra])
    return code, a, out, psi, proj


def test_build_graph_witness_of_k2(files, capsys):
    code, _, out, psi, _ = _build(files, "graph", K2)
    assert code == 0
    B = read_structure(out)
    assert len(B) == 4
    assert len(parse_morphism(open(psi).read(), B.language)) == 2
    assert "4 vertices" in capsys.readouterr().out


def test_verify_eppa_on_built_witness(files):
    _, a, out, psi, _ = _build(files, "graph", K2)
    report = str(files.dir / "r.json")
    code = run_command(["verify", "--check", "eppa", "--input", a, "--witness", out,
                        "--embedding", psi, "--json", report])
    assert code == 0
    doc = json.load(open(report))
    assert doc["passed"] and doc["version"] and doc["seed"] == 0 and "max_vertices" in doc["caps"]


def test_verify_eppa_fails_on_path_against_itself(files, capsys):
    a = files("A.struct", P3)
    m = files("id.map", IDENTITY_P3)
    report = str(files.dir / "r.json")
    code = run_command(["verify", "--check", "eppa", "--input", a, "--witness", a,
                        "--embedding", m, "--json", report])
    assert code == 1
    doc = json.load(open(report))
    assert not doc["passed"] and doc["counterexample"]["partial_automorphism"]["map"]
    assert "FAIL eppa" in capsys.readouterr().out
    assert run_command(["report", report]) == 1


def test_coherence_with_the_constructive_extender(files):
    _, a, out, psi, _ = _build(files, "graph", P3)
    code = run_command(["verify", "--check", "coherence", "--method", "graph", "--input", a,
                        "--witness", out, "--embedding", psi])
    assert code == 0
    code = run_command(["verify", "--check", "eppa", "--method", "graph", "--input", a,
                        "--witness", out, "--embedding", psi])
    assert code == 0


def test_coherence_needs_a_method(files):
    _, a, out, psi, _ = _build(files, "graph", P3)
    assert run_command(["verify", "--check", "coherence", "--input", a, "--witness", out,
                        "--embedding", psi]) == 2


def test_extend_a_partial_map(files):
    _, a, out, psi, _ = _build(files, "graph", K2)
    pa = files("phi.map", "map: 1 -> 2\nmap: 2 -> 1\n")
    theta = str(files.dir / "theta.map")
    assert run_command(["extend", "--witness", out, "--embedding", psi, "--pa", pa,
                        "--out", theta]) == 0
    B = read_structure(out)
    t = parse_morphism(open(theta).read(), B.language)
    p = parse_morphism(open(psi).read(), B.language)
    assert t(p(1)) == p(2) and len(t) == len(B)
    theta2 = str(files.dir / "theta2.map")
    assert run_command(["extend", "--method", "graph", "--input", a, "--witness", out,
                        "--embedding", psi, "--pa", pa, "--out", theta2]) == 0


def test_faithful_build_and_check(files):
    code, a, out, psi, _ = _build(files, "faithful", P3)
    assert code == 0 and len(read_structure(out)) == 48
    assert run_command(["verify", "--check", "faithful", "--input", a, "--witness", out,
                        "--embedding", psi]) == 0


def test_plain_witness_is_not_faithful(files):
    _, a, out, psi, _ = _build(files, "graph", P3)
    assert run_command(["verify", "--check", "faithful", "--input", a, "--witness", out,
                        "--embedding", psi]) == 1


def test_unwind_build_and_check(files):
    base = files("C4.struct", C4)
    code, a, out, psi, proj = _build(files, "unwind", K2, "--base", base)
    assert code == 0 and len(read_structure(out)) == 1024
    assert run_command(["verify", "--check", "unwind", "--witness", out, "--base", base,
                        "--projection", proj, "--samples", "200"]) == 0
    ident = files("id.map", "map: 1 -> 1\nmap: 2 -> 2\nmap: 3 -> 3\nmap: 4 -> 4\n")
    assert run_command(["verify", "--check", "unwind", "--witness", base, "--base", base,
                        "--projection", ident]) == 1


def test_size_audit(files):
    _, a, out, _, _ = _build(files, "graph", P3)
    assert run_command(["verify", "--check", "size", "--method", "graph", "--input", a,
                        "--witness", out]) == 0
    assert run_command(["verify", "--check", "size", "--method", "graph", "--input", a,
                        "--witness", a]) == 1


def test_relational_and_function_builds(files):
    code, *_ = _build(files, "relational", "language: U/1\nvertices: 1\nrel U: (1)\n")
    assert code == 0
    code, a, out, psi, _ = _build(files, "functions", "language: F!1\nvertices: 1 2\nfun F: 1 -> {2}\n")
    assert code == 0
    assert run_command(["verify", "--check", "eppa", "--input", a, "--witness", out,
                        "--embedding", psi]) == 0


def test_pipeline_build(files):
    code, a, out, psi, proj = _build(files, "pipeline", K2, "--n", "2")
    assert code == 0
    assert run_command(["verify", "--check", "eppa", "--input", a, "--witness", out,
                        "--embedding", psi]) == 0
    assert run_command(["build", "--method", "pipeline", "--input", a,
                        "--out", str(files.dir / "x.struct")]) == 2


def test_metric_build_and_check(files):
    A = "language: d1/2 d2/2\nvertices: 1 2 3\nrel d1: (1,2) (2,1)\nrel d2: (2,3) (3,2) (1,3) (3,1)\n"
    code, a, out, psi, _ = _build(files, "metric", A, "--n", "3")
    assert code == 0
    assert run_command(["verify", "--check", "metric", "--n", "3", "--input", a, "--witness", out,
                        "--embedding", psi]) == 0
    tri = files("T.struct", "language: d1/2 d2/2\nvertices: 1 2 3\n"
                            "rel d1: (1,2) (2,1) (2,3) (3,2) (1,3) (3,1)\n")
    assert run_command(["verify", "--check", "metric", "--n", "3", "--witness", tri]) == 1


def test_forbidden_substructures(files):
    tri = files("K3.struct", K3)
    _, _, out, _, _ = _build(files, "faithful", P3)
    assert run_command(["verify", "--check", "forbhe", "--witness", out, "--forbidden", tri]) == 0
    assert run_command(["verify", "--check", "forbhe", "--witness", tri, "--forbidden", tri]) == 1


def test_input_errors_exit_two(files, capsys):
    bad = files("bad.struct", "language: E/2\nvertices: 1\nrel E: (1)\n")
    assert run_command(["build", "--method", "graph", "--input", bad,
                        "--out", str(files.dir / "o")]) == 2
    assert "line 3" in capsys.readouterr().err
    assert run_command(["build", "--method", "graph", "--input", str(files.dir / "missing"),
                        "--out", str(files.dir / "o")]) == 2


def test_resource_limits_exit_three(files, monkeypatch):
    monkeypatch.setenv("EPPAKIT_MAX_VERTICES", "10")
    code, *_ = _build(files, "graph", "language: E/2\nvertices: 1 2 3 4 5\n")
    assert code == 3


def test_witness_file_must_match_the_rebuilt_witness(files):
    _, a, out, psi, _ = _build(files, "graph", K2)
    other = files("other.struct", K3)
    assert run_command(["verify", "--check", "eppa", "--method", "graph", "--input", a,
                        "--witness", other, "--embedding", psi]) == 2


def test_console_entry_point(files):
    a = files("A.struct", K2)
    out = str(files.dir / "B.struct")
    proc = subprocess.run([sys.executable, "-m", "eppakit.cli", "build", "--method", "graph",
                           "--input", a, "--out", out], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(read_structure(out)) == 4
