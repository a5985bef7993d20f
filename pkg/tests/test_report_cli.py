"""Report documents and the command line driver."""
import json
import subprocess
import sys
from fractions import Fraction

import jsonschema
import numpy as np
import pytest

from hhscert import cli, report


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    out = {}
    for fam, n, extra in [("grid", 4, []), ("f2xdxd", 3, []), ("parallel_lines", 3, [])]:
        path = d / f"{fam}-{n}-{'-'.join(extra) or 'N1'}.json"
        code, _ = cli.run(["--out", str(d / "build.json"), "zoo", "build", fam, "--n", str(n), "-o", str(path)] + extra)
        assert code == 0
        out[(fam, n, tuple(extra))] = str(path)
    out["dir"] = d
    return out


def run(args, tmp_path):
    out = tmp_path / "r.json"
    code, rep = cli.run(["--out", str(out)] + args)
    assert json.loads(out.read_text()) == rep
    return code, rep


def schema_check(rep):
    sch = report.schema()
    jsonschema.validate(rep, sch)
    assert report.validate(rep) == []


# ----------------------------------------------------------------- report layer

def test_normalise_exact_numbers():
    doc = report.normalise({"a": Fraction(3, 2), "b": Fraction(4, 2), "c": np.int64(5),
                            "d": np.array([1, 2]), "e": {2, 1}, "f": (np.bool_(True),)})
    assert doc == {"a": "3/2", "b": 2, "c": 5, "d": [1, 2], "e": [1, 2], "f": [True]}
    with pytest.raises(TypeError):
        report.normalise({"x": 0.5})


def test_make_report_codes():
    assert report.make_report("x", {}, "partial", {})["exit_code"] == 2
    with pytest.raises(ValueError):
        report.make_report("x", {}, "maybe", {})
    err = report.error_report("x", {}, "boom")
    assert err["exit_code"] == 3 and err["status"] == "malformed"
    schema_check(err)


def test_compact_format_round_trips():
    rep = report.make_report("x", {"k": [1, 2]}, "pass", {"v": "1/3"})
    assert json.loads(report.dumps(rep, compact=True)) == json.loads(report.dumps(rep))
    assert "\n" not in report.dumps(rep, compact=True).rstrip("\n")


# ----------------------------------------------------------------- commands and exit codes

def test_audit_fresh_model(files, tmp_path):
    code, rep = run(["audit", files[("grid", 4, ())]], tmp_path)
    assert code == 0 and rep["status"] == "pass"
    schema_check(rep)


def test_certify_undersized_names_hypothesis(files, tmp_path):
    code, rep = run(["certify", "--model", files[("f2xdxd", 3, ())], "--word", "s t s"], tmp_path)
    assert code == 1
    assert rep["result"]["failing_hypotheses"] == ["II"]
    schema_check(rep)


def test_hqc_axes_union_fails(files, tmp_path):
    code, rep = run(["hqc", files[("grid", 4, ())], "--subset", "axes"], tmp_path)
    assert code == 1
    k = rep["result"]["kappa"]
    jsonschema.validate(k, {**report.schema()["$defs"]["gauge"], "$defs": report.schema()["$defs"]})
    w = k["witness"]
    assert abs(w["point"][0]) == abs(w["point"][1]) == 4 and w["coordinate_defect"] == 0


def test_hqc_vertex_list_and_orbit(files, tmp_path):
    g = files[("grid", 4, ())]
    code, rep = run(["hqc", g, "--vertices", json.dumps([[x, 0] for x in range(-4, 5)])], tmp_path)
    assert code == 0 and rep["result"]["size"] == 9
    code, rep = run(["hqc", g, "--orbit", "u", "--radius", "4"], tmp_path)
    assert code == 0 and rep["result"]["size"] == 9


def test_hqc_paths_partial_on_tiny_budget(files, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.BUDGET_ENV, "3")
    code, rep = run(["hqc", files[("grid", 4, ())], "--subset", "axes", "--paths"], tmp_path)
    assert code in (1, 2)
    assert rep["result"]["Lambda"]["complete"] is False
    assert code == 2


def test_fill_and_dichotomy(files, tmp_path):
    pl = files[("parallel_lines", 3, ())]
    assert run(["fill-squares", pl], tmp_path)[0] == 0
    g = files[("grid", 4, ())]
    assert run(["fill-squares", g, "--A", "x_axis", "--B", "y_axis"], tmp_path)[0] == 1
    code, rep = run(["dichotomy", g, "--subset", "axes", "--theta", "0", "1"], tmp_path)
    assert code == 0 and rep["result"]["theta_checks"] == {"0": True, "1": True}


def test_no_drift_and_combined(files, tmp_path):
    f = files[("f2xdxd", 3, ())]
    code, rep = run(["no-drift", f], tmp_path)
    assert code == 1 and rep["result"]["witness"]["U"] == "W1"
    code, rep = run(["combined", f], tmp_path)
    assert code == 0 and rep["result"]["drift_counterexample"]["AB_realisation_fails"]


def test_hull_command(files, tmp_path):
    code, rep = run(["hull", files[("grid", 4, ())], "--vertices", "[[-1, -1], [1, 1]]"], tmp_path)
    assert code == 0 and rep["result"]["hull_size"] == 9 and rep["result"]["contains_input"]


def test_inject_verify(files, tmp_path):
    code, rep = run(["inject-verify", files[("f2xdxd", 3, ())], "--syllables", "2", "--exp", "1"], tmp_path)
    assert code == 1 and rep["result"]["failing_hypotheses"] == ["II"]


@pytest.mark.parametrize("argv", [
    ["audit", "/nonexistent/model.json"],
    ["frobnicate"],
    ["certify", "--word", "s"],
    ["hqc", "MODEL", "--vertices", "[[99, 99]]"],
    ["hqc", "MODEL", "--subset", "diagonal"],
    ["certify", "MODEL", "--word", "s q"],
])
def test_malformed_inputs(files, tmp_path, argv):
    argv = [files[("grid", 4, ())] if a == "MODEL" else a for a in argv]
    if argv[0] == "certify" and len(argv) > 3:
        argv[1] = files[("f2xdxd", 3, ())]
    code, rep = run(argv, tmp_path)
    assert code == 3 and rep["status"] == "malformed" and rep["result"]["error"]
    schema_check(rep)


def test_bad_zoo_parameters(tmp_path):
    code, rep = run(["zoo", "build", "f2xdxd", "--n", "3", "--N", "4"], tmp_path)
    assert code == 3 and "n" in rep["result"]["error"]


def test_bad_model_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "something-else"}')
    assert run(["audit", str(p)], tmp_path)[0] == 3
    p.write_text("not json")
    assert run(["audit", str(p)], tmp_path)[0] == 3


def test_tables_only_model_file(files, tmp_path):
    path = tmp_path / "t.json"
    assert cli.run(["--out", str(tmp_path / "b.json"), "zoo", "build", "grid", "--n", "2", "-o", str(path), "--tables"])[0] == 0
    doc = json.loads(path.read_text())
    del doc["recipe"]
    path.write_text(json.dumps(doc))
    assert run(["audit", str(path)], tmp_path)[0] == 0


def test_reports_byte_identical(files, tmp_path):
    argv = ["hqc", files[("f2xdxd", 3, ())], "--subset", "AB"]
    texts = []
    for i in range(3):
        out = tmp_path / f"r{i}.json"
        cli.run(["--out", str(out)] + argv)
        texts.append(out.read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "hhscert.cli", "audit", files[("grid", 4, ())], "--format", "compact"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "pass"
    assert proc.stdout.count("\n") == 1


def test_geometry_only_certify(tmp_path):
    path = tmp_path / "g.json"
    code, rep = run(["zoo", "build", "f2xdxd", "--N", "200", "--geometry-only", "-o", str(path)], tmp_path)
    assert code == 0 and rep["result"]["M"] == 200
    code, rep = run(["certify", "--model", str(path), "--word", "s t^2 s^-1 t"], tmp_path)
    assert code == 0 and rep["result"]["status"] == "CERTIFIED"
    assert run(["inject-verify", str(path), "--syllables", "2", "--exp", "1"], tmp_path)[0] == 0
    # window commands need the tabulation
    assert run(["hqc", str(path), "--subset", "A"], tmp_path)[0] == 3
    assert run(["zoo", "build", "grid", "--geometry-only"], tmp_path)[0] == 3
