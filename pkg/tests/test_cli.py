import csv
import json
import os

import pytest

from qml.cli import main

ONE = {"re": 1, "im": 0}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def j2(tmp_path):
    return write(tmp_path / "j2.json", {"d": 3, "components": [],
                                        "presets": {"kind": "j_theta_power", "theta": [ONE] * 3, "power": 2}})


@pytest.fixture
def principal(tmp_path):
    gen = {"coefficients": [{"re": 1, "im": 0, "alpha": [1, 0, 0]}, {"re": -1, "im": 0, "alpha": [0, 1, 0]}]}
    return write(tmp_path / "p.json", {"d": 3, "components": [{"name": "I", "assumed": "unknown", "generators": [gen]}]})


def load(out):
    with open(os.path.join(out, "report.json")) as fh:
        return json.load(fh)


def test_trace_formula_run(tmp_path, j2):
    out = str(tmp_path / "o")
    assert main(["trace-formula", "--spec", j2, "-D", "40", "--out", out]) == 0
    doc = load(out)
    assert doc["schema"] == "qml-report/1"
    assert doc["artifact_version"]
    (rep,) = doc["experiments"][0]["reports"]
    assert rep["predicted"]["re"] == pytest.approx(3)
    assert rep["passed"]


def test_nonnormal_demo_run(tmp_path, principal):
    out = str(tmp_path / "o")
    assert main(["nonnormal-demo", "--spec", principal, "-D", "25", "--out", out]) == 0
    assert load(out)["experiments"][0]["reports"][0]["verdict"] == "divergence evidence"


def test_failure_exit_status(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["asym-orth", "--theta-i", "1,1", "--theta-j", "1,-1", "--out", out]) == 1
    assert "asym-orth" in capsys.readouterr().err
    assert load(out)["failed_claims"] == ["asym-orth"]


def test_tolerance_override(tmp_path, j2):
    out = str(tmp_path / "o")
    assert main(["zero-blocks", "--spec", j2, "-D", "8", "--out", out, "--tol", "zero-blocks=1e-30"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["suite", "--config", "CFG_UNKNOWN"],
        ["dims", "--spec", "MISSING"],
        ["trace-formula", "--spec", "PRINCIPAL"],
        ["trace-formula", "--spec", "J2", "-D", "5"],
        ["dims", "--spec", "J2", "--tol", "nope=1"],
        ["dims", "--spec", "J2", "-D", "2"],
    ],
)
def test_input_errors_exit_2_without_files(tmp_path, j2, principal, argv, capsys):
    cfg = write(tmp_path / "cfg.json", {"D": 10, "experiments": ["dims", "not-an-experiment"]})
    subst = {"CFG_UNKNOWN": cfg, "MISSING": str(tmp_path / "missing.json"), "PRINCIPAL": principal, "J2": j2}
    argv = [subst.get(a, a) for a in argv]
    out = tmp_path / "o"
    assert main(argv + ["--out", str(out)]) == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_bad_thread_setting(tmp_path, j2, monkeypatch):
    monkeypatch.setenv("QML_THREADS", "zero")
    assert main(["dims", "--spec", j2, "--out", str(tmp_path / "o")]) == 2


def test_profiles_csv_format(tmp_path, principal):
    out = tmp_path / "o"
    assert main(["commutator", "--spec", principal, "-D", "8", "--out", str(out)]) == 0
    (path,) = list((out / "profiles").iterdir())
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["degree", "index", "singular_value", "trusted"]
    assert {r[3] for r in rows[1:]} == {"0", "1"}
    # 17 significant digits round-trip doubles exactly
    for r in rows[1:]:
        assert float(r[2]) == float(repr(float(r[2])))
        assert len(r[2].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 17


def _strip(doc):
    doc.pop("timestamp")
    return json.dumps(doc, sort_keys=True)


def test_suite_deterministic_and_concurrent(tmp_path, j2, monkeypatch):
    cfg = write(tmp_path / "cfg.json", {
        "D": 12, "seed": 7,
        "experiments": ["dims", "zero-blocks", {"name": "module-map", "samples": 8},
                        {"name": "commutator", "i": 0, "j": 1}, {"name": "spectrum-probe", "tail_starts": [3, 6]}],
    })
    outs = []
    for threads, name in (("1", "a"), ("3", "b")):
        monkeypatch.setenv("QML_THREADS", threads)
        out = tmp_path / name
        assert main(["suite", "--spec", j2, "--config", cfg, "--out", str(out)]) == 0
        outs.append(out)
    a, b = (_strip(load(str(o))) for o in outs)
    assert a == b
    assert sorted(os.listdir(outs[0] / "profiles")) == sorted(os.listdir(outs[1] / "profiles"))
    for name in os.listdir(outs[0] / "profiles"):
        assert (outs[0] / "profiles" / name).read_bytes() == (outs[1] / "profiles" / name).read_bytes()
    # report bytes are identical apart from the timestamp line
    la = (outs[0] / "report.json").read_text().splitlines()
    lb = (outs[1] / "report.json").read_text().splitlines()
    assert [x for x in la if '"timestamp"' not in x] == [x for x in lb if '"timestamp"' not in x]
