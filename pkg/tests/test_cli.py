import json
import time

import pytest

from pvsverify import cli
from pvsverify.cli import Dossier, RunConfig, UsageError, explain, main, run
from pvsverify.fields import PrimeField
from pvsverify.pencils import MatrixPencil
from pvsverify.strata import TheoremViolation
from pvsverify.weights import CaseId


def small(checks, cases=(CaseId.CASE3,), **kw):
    return RunConfig(cases=cases, checks=checks, **kw)


def test_defaults():
    cfg = RunConfig()
    assert cfg.cases == tuple(CaseId) and cfg.primes == (2, 3)
    assert cfg.sample_count == 100_000 and cfg.seed == 20240601
    assert cfg.checks == cli.ALL_CHECKS


def test_bad_config():
    with pytest.raises(UsageError):
        RunConfig(checks=("nope",))
    with pytest.raises(UsageError):
        RunConfig(primes=(4,))
    with pytest.raises(UsageError):
        RunConfig(sample_count=-1)


def test_case3_certificates_only():
    d = run(small(("certificates",)))
    entries = d.results["certificates"]
    assert [e["id"] for e in entries] == ["case3-L1-certificate", "case3-L2-certificate", "case3-L3-certificate"]
    assert [e["threshold"] for e in entries] == ["4", "4", "2"]
    assert d.verdict == {"status": "AllHold", "violations": []}


def test_identity_only_run_is_fast():
    start = time.perf_counter()
    d = run(RunConfig(sample_count=0, checks=("identities",)))
    assert time.perf_counter() - start < 1.0
    assert list(d.results) == ["identities"] and d.all_hold


def test_dossier_round_trip():
    d = run(small(("weights", "identities", "certificates", "h-lemmas"), cases=(CaseId.CASE4,)))
    text = d.emit()
    back = Dossier.parse(text)
    assert back == d and back.emit() == text
    with pytest.raises(UsageError):
        Dossier.from_json({"schema": "other"})


def test_rationals_are_strings():
    d = run(small(("certificates",)))
    cert = d.results["certificates"][1]["certificates"][0]
    assert all(isinstance(v, str) for v in cert["coefficients"])


def test_explain_examples():
    d = Dossier.parse(run(RunConfig(checks=("weights", "certificates"), sample_count=0)).emit())
    text = explain("case4-L8-certificate", d)
    assert "3d_{1,43} + 2d_{2,21}" in text and "(1/3, 2/3, 2, 10/3, 5/3)" in text
    text = explain("case1-weights", d)
    assert "diff: (empty)" in text
    with pytest.raises(UsageError):
        explain("case9-nothing", d)


def test_explain_claim_entry():
    d = run(RunConfig(cases=(CaseId.CASE4,), primes=(3,), sample_count=500, checks=("claims",)))
    text = explain("claim-8-p3", d)
    assert "x_{2,21} or x_{2,31} or x_{2,32}" in text and "tested 500" in text


def test_parallel_matches_serial():
    cfg = RunConfig(cases=(CaseId.CASE3, CaseId.CASE4), primes=(2,), sample_count=300,
                    checks=("strata", "claims", "certificates"))
    a = run(cfg)
    b = run(RunConfig(**{**cfg.__dict__, "jobs": 2}))
    assert a.results == b.results and a.verdict == b.verdict


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["--cases", "3", "--checks", "certificates", "--out", str(out), "--quiet"]) == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["schema"] == "pvs-dossier/1" and data["verdict"]["status"] == "AllHold"
    assert main(["--explain", "case3-L2-certificate", "--dossier", str(out)]) == 0
    assert "threshold: 4" in capsys.readouterr().out
    assert main(["--explain", "missing", "--dossier", str(out)]) == 2
    assert main(["--checks", "bogus"]) == 2
    assert main(["--primes", "6"]) == 2
    assert main(["--cases", "9"]) == 2
    assert main(["--explain", "x"]) == 2


def test_manifest_flag(capsys):
    assert main(["--manifest"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 19 and rows[0]["anchor"]


def test_violation_exit_code(monkeypatch, capsys):
    def broken(case, cfg):
        return [{"id": f"{case.label}-weights", "kind": "weights", "ok": False}]

    monkeypatch.setattr(cli, "task_weights", broken)
    assert main(["--cases", "1", "--checks", "weights", "--quiet"]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == {"status": "Violations", "violations": ["case1-weights"]}


def test_internal_error_exit_code(monkeypatch, capsys):
    def boom(case, cfg):
        raise RuntimeError("inconsistent")

    monkeypatch.setattr(cli, "task_weights", boom)
    assert main(["--cases", "1", "--checks", "weights", "--quiet"]) == 2
    data = json.loads(capsys.readouterr().out)
    assert data["errors"][0]["task"] == "case1-weights"
    assert "inconsistent" in data["errors"][0]["error"]


def test_theorem_violation_serializes_pencil(monkeypatch, capsys):
    bad = MatrixPencil.from_coords(CaseId.CASE1, PrimeField(2), [1, 0, 0, 1, 0, 1, 1, 1])

    def violated(case, p, cfg):
        raise TheoremViolation("no strictly positive combination of weights", bad)

    monkeypatch.setattr(cli, "task_stability", violated)
    assert main(["--cases", "1", "--primes", "2", "--checks", "stability", "--quiet"]) == 2
    err = json.loads(capsys.readouterr().out)["errors"][0]
    assert MatrixPencil.from_json(err["pencil"]) == bad
