import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qstokes import load_example
from qstokes.cli import main
from qstokes.corpus import CORPUS, EXTRAS, example_metadata, example_path
from qstokes.errors import SpecParseError
from qstokes.io import dumps_system, loads_system, read_targets, write_targets
from qstokes.reconstruction import alien_targets
from qstokes.series import TruncatedLaurentSeries as T
from qstokes.system import QSystem, validate


def test_corpus_loads_and_matches_metadata():
    for name in CORPUS + EXTRAS:
        A = load_example(name)
        meta = example_metadata(name)
        rep = validate(A)
        for key, val in meta["expected"].items():
            assert rep[key] == val, (name, key)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8), st.integers(-3, 3))
def test_serialization_round_trip_is_bitwise(vals, deg):
    one = np.ones((1, 1))
    A = QSystem.from_blocks(2.0 + 0.1j, (0, 3), [np.array([[vals[0] + 1j * vals[1] or 1.0]]), one],
                            {(0, 1): T.from_dict({deg: [[vals[2] + 1j * vals[3]]], deg + 1: [[vals[4]]]})})
    B = loads_system(dumps_system(A))
    assert B.q == A.q
    assert np.array_equal(B.diag[0], A.diag[0])
    for k in A.offdiag:
        a, b = A.offdiag[k].to_dict(), B.offdiag[k].to_dict()
        assert a.keys() == b.keys()
        assert all(np.array_equal(a[n], b[n]) for n in a)


def test_parse_errors_carry_location():
    with pytest.raises(SpecParseError) as info:
        loads_system('{"q": [2, 0],\n "blocks": [}')
    assert info.value.line == 2
    text = '{\n  "q": [2, 0],\n  "blocks": [{"slope": 0.5, "matrix": [[1]]}]\n}'
    with pytest.raises(SpecParseError) as info:
        loads_system(text)
    assert info.value.line == 3 and info.value.column is not None
    with pytest.raises(SpecParseError):
        loads_system('{"q": [2, 0], "blocks": [{"slope": 0, "matrix": [[1]]}], "offdiag": {"0-1": {}}}')


def test_targets_file_round_trip(tmp_path, estar):
    T0 = alien_targets(estar)
    path = tmp_path / "t.json"
    write_targets(T0, path)
    T1 = read_targets(path, estar.structure)
    assert T1.entries.keys() == T0.entries.keys()
    for k in T0.entries:
        assert np.array_equal(T1.entries[k][1].value, T0.entries[k][1].value)


def run(args, capsys):
    code = main([str(a) for a in args])
    return code, capsys.readouterr()


def test_cli_validate(capsys):
    code, out = run(["validate", example_path("estar")], capsys)
    assert code == 0
    assert out.out.splitlines()[0] == "valid, polynomial, normalized"


def test_cli_formal_gauge(tmp_path, capsys):
    out = tmp_path / "fg.json"
    code, _ = run(["formal-gauge", example_path("estar"), "-N", "10", "--out", out], capsys)
    assert code == 0
    blk = json.loads(out.read_text())["blocks"]["0,1"]
    for n in range(11):
        re_, im = blk[str(n)][0][0]
        assert re_ == -(2.0 ** (n * (n - 1) // 2)) and im == 0


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"q": [2, 0], "blocks": [')
    code, out = run(["validate", bad], capsys)
    assert code == 2 and "SpecParseError" in out.err and "line" in out.err
    code, out = run(["sum", example_path("estar"), "--direction", "1"], capsys)
    assert code == 1 and "ResonantDirection" in out.err
    code, _ = run(["validate", tmp_path / "missing.json"], capsys)
    assert code == 2


def test_cli_reports_are_deterministic(tmp_path, capsys):
    paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
    for p in paths:
        code, _ = run(["alien", example_path("estar"), "--all-resonant", "--seed", "3", "--json-report", p], capsys)
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rep = json.loads(paths[0].read_text())
    d = rep["derivations"][0]
    assert d["quadrature_tolerance"] == 1e-6 and d["diagnostics"]["relative_error"] < 1e-6


def test_cli_stokes_and_sum(tmp_path, capsys):
    code, out = run(["stokes", example_path("estar"), "--c", "1.3j", "--d", "-1", "--out", tmp_path / "s.json"], capsys)
    assert code == 0
    val = json.loads((tmp_path / "s.json").read_text())["value"]
    assert val[0][1][0] == pytest.approx(-0.35440655083675, rel=1e-11)
    code, _ = run(["sum", example_path("estar"), "--direction=-1", "--out", tmp_path / "f.json"], capsys)
    assert code == 0


def test_cli_targets_and_reconstruct(tmp_path, capsys):
    A = load_example("three_slope")
    tpath, gpath, rpath = tmp_path / "t.json", tmp_path / "g.json", tmp_path / "r.json"
    assert run(["targets", example_path("three_slope"), "--out", tpath], capsys)[0] == 0
    gpath.write_text(dumps_system(A.graded()))
    code, out = run(["reconstruct", gpath, tpath, "--out", rpath, "--json-report", tmp_path / "rep.json"], capsys)
    assert code == 0
    R = loads_system(rpath.read_text())
    assert np.allclose(R.level_coefficients(2), A.level_coefficients(2), rtol=1e-8)
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert [lv["level"] for lv in rep["levels"]] == [1, 2]


def test_cli_residue_scan(tmp_path, capsys):
    out = tmp_path / "scan.json"
    code, res = run(["residue-scan", example_path("estar"), "--radial", "1", "--angular", "4", "--out", out], capsys)
    assert code == 0
    rows = json.loads(out.read_text())["rows"]
    assert len(rows) == 4 and all(r["status"] == "ok" for r in rows)
    assert res.out.splitlines()[0] == "re\tim\tnorm\tstatus"


def test_cli_normalize(tmp_path, capsys):
    src = tmp_path / "a.json"
    A = QSystem.from_blocks(2.0, (0,), [8 * np.ones((1, 1))])
    src.write_text(dumps_system(A))
    code, _ = run(["normalize", src, "--out", tmp_path / "n.json"], capsys)
    assert code == 0
    assert loads_system((tmp_path / "n.json").read_text()).is_normalized


def test_cli_check_invariants(capsys):
    code, out = run(["check", "invariants"], capsys)
    assert code == 0 and "passed" in out.out.splitlines()[-1]
    code, out = run(["check", "nonexistent"], capsys)
    assert code == 2
