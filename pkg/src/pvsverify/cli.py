"""Batch runner: executes the verification suite and writes a JSON dossier.

Exit status: 0 when every check holds, 1 when any check reports a
violation, 2 on usage errors or internal failures.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import certify, strata
from .geometry import InputError, rat_str
from .weights import CaseId, derived_weight_table, rho_d0, total_weight, transcribed_weight_table, weight_discrepancies

SCHEMA = "pvs-dossier/1"
ALL_CHECKS = ("weights", "identities", "stability", "strata", "claims", "h-lemmas", "certificates")
DEFAULT_SEED = 20240601
DEFAULT_SAMPLES = 100_000
H_TRIALS = 1000


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    cases: tuple[CaseId, ...] = tuple(CaseId)
    primes: tuple[int, ...] = (2, 3)
    sample_count: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    checks: tuple[str, ...] = ALL_CHECKS
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        for c in self.checks:
            if c not in ALL_CHECKS:
                raise UsageError(f"unknown check {c!r}; choose from {', '.join(ALL_CHECKS)}")
        for p in self.primes:
            try:
                strata.SampleConfig(p)
            except InputError as exc:
                raise UsageError(str(exc)) from exc
        if self.sample_count < 0:
            raise UsageError("--samples must be >= 0")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")

    def to_json(self) -> dict:
        # the output path and worker count do not affect results, so they are not echoed
        return {
            "cases": [c.value for c in self.cases],
            "primes": list(self.primes),
            "sample_count": self.sample_count,
            "seed": self.seed,
            "checks": list(self.checks),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        return cls(tuple(CaseId.parse(c) for c in data["cases"]), tuple(data["primes"]),
                   data["sample_count"], data["seed"], tuple(data["checks"]))


# ---------------------------------------------------------------------------
# tasks: each returns a list of result entries, every entry carries "id" and "ok"


def _sample_cfg(case: CaseId, p: int, cfg: RunConfig, free: int | None = None) -> strata.SampleConfig:
    mode = strata.default_mode(case, p, free)
    return strata.SampleConfig(p, mode, cfg.sample_count, cfg.seed)


def task_weights(case: CaseId, cfg: RunConfig) -> list[dict]:
    disc = weight_discrepancies(case)
    table = transcribed_weight_table(case)
    zero = all(v == 0 for v in total_weight(case).flat())
    return [{
        "id": f"{case.label}-weights",
        "kind": "weights",
        "case": case.value,
        "discrepancies": [d.to_json() for d in disc],
        "derived_fill": sorted(c.index for c in table.derived_fill),
        "table": derived_weight_table(case).to_json()["entries"],
        "rho_d0": rho_d0(case).to_json(),
        "total_weight_zero": zero,
        "ok": not disc and zero,
    }]


def task_identities(case: CaseId, cfg: RunConfig) -> list[dict]:
    checks = certify.check_identities(case)
    entries = [dict(c.to_json(), kind="identity", ok=c.holds) for c in checks]
    summary = {
        "id": f"{case.label}-identities",
        "kind": "identities",
        "case": case.value,
        "count": len(checks),
        "failed": [c.label for c in checks if not c.holds],
        "ok": all(c.holds for c in checks),
    }
    if case in (CaseId.CASE3, CaseId.CASE4):
        c0 = certify.c_I(certify.full_index_set(case))
        summary["c_0"] = c0.to_json()
    return [summary] + entries


def _claim_entry(rep: strata.ClaimReport, ident: str, kind: str) -> dict:
    return dict(rep.to_json(), id=ident, kind=kind, ok=rep.ok)


def task_stability(case: CaseId, p: int, cfg: RunConfig) -> list[dict]:
    rep = strata.verify_stability(case, _sample_cfg(case, p, cfg))
    return [_claim_entry(rep, f"{case.label}-stability-p{p}", "stability")]


def task_partition(case: CaseId, p: int, cfg: RunConfig) -> list[dict]:
    rep = strata.verify_partition(case, _sample_cfg(case, p, cfg))
    return [_claim_entry(rep, f"{case.label}-partition-p{p}", "partition")]


def task_patterns(case: CaseId, cfg: RunConfig) -> list[dict]:
    overlaps = strata.pattern_overlaps(case)
    escaping = strata.uncovered_patterns(case)
    return [{
        "id": f"{case.label}-patterns",
        "kind": "patterns",
        "case": case.value,
        "tracked": [c.index for c in strata.tracked_coordinates(case)],
        "overlaps": [list(o) for o in overlaps],
        "uncovered_excluded": strata.degenerate_reasons(case),
        "escaping": escaping,
        "ok": not overlaps and not escaping,
    }]


def task_claim(claim_id: str, p: int, cfg: RunConfig) -> list[dict]:
    sc = strata.SampleConfig(p, strata.RANDOM, cfg.sample_count, cfg.seed)
    rep = strata.verify_claim(claim_id, sc)
    spec = strata.get_claim(claim_id)
    entry = _claim_entry(rep, f"{claim_id}-p{p}", "claim")
    entry["statement"] = spec.statement
    return [entry]


def task_h_lemmas(case: CaseId, cfg: RunConfig) -> list[dict]:
    rep = certify.verify_h_lemmas(case, H_TRIALS, cfg.seed)
    return [{
        "id": f"{case.label}-h-lemmas",
        "kind": "h-lemmas",
        "case": case.value,
        "trials": H_TRIALS,
        "seed": cfg.seed,
        "checks": rep,
        "ok": all(v["violation_count"] == 0 for v in rep.values()),
    }]


def task_certificates(case: CaseId, cfg: RunConfig) -> list[dict]:
    out = []
    for item in certify.ITEMS[case]:
        try:
            sc = certify.certify_item(item)
            out.append(dict(sc.to_json(), kind="certificate"))
        except certify.CertificateError as exc:
            out.append({"id": f"{case.label}-{item.name}-certificate", "kind": "certificate",
                        "error": str(exc), "ok": False})
    if case is CaseId.CASE4:
        rep = certify.subset_bound_check()
        out.append(dict(rep, id="case4-subset-bound", kind="subset-bound"))
    return out


def plan(cfg: RunConfig) -> list[tuple[str, str, Callable, tuple]]:
    """(check, task id, function, args) in the fixed order of the dossier."""
    tasks = []
    cases = [c for c in CaseId if c in cfg.cases]
    for check in ALL_CHECKS:
        if check not in cfg.checks:
            continue
        if check == "weights":
            tasks += [(check, f"{c.label}-weights", task_weights, (c, cfg)) for c in cases]
        elif check == "identities":
            tasks += [(check, f"{c.label}-identities", task_identities, (c, cfg)) for c in cases]
        elif check == "stability":
            tasks += [(check, f"{c.label}-stability-p{p}", task_stability, (c, p, cfg))
                      for c in cases if c in (CaseId.CASE1, CaseId.CASE2) for p in cfg.primes]
        elif check == "strata":
            for c in cases:
                if c in (CaseId.CASE3, CaseId.CASE4):
                    tasks.append((check, f"{c.label}-patterns", task_patterns, (c, cfg)))
                    tasks += [(check, f"{c.label}-partition-p{p}", task_partition, (c, p, cfg)) for p in cfg.primes]
        elif check == "claims":
            if CaseId.CASE4 in cases:
                tasks += [(check, f"{cl.id}-p{p}", task_claim, (cl.id, p, cfg))
                          for cl in strata.CLAIMS for p in cfg.primes]
        elif check == "h-lemmas":
            tasks += [(check, f"{c.label}-h-lemmas", task_h_lemmas, (c, cfg))
                      for c in cases if c in (CaseId.CASE3, CaseId.CASE4)]
        elif check == "certificates":
            tasks += [(check, f"{c.label}-certificates", task_certificates, (c, cfg))
                      for c in cases if c in (CaseId.CASE3, CaseId.CASE4)]
    return tasks


def _run_task(fn: Callable, args: tuple) -> tuple[list[dict], float, dict | None]:
    start = time.perf_counter()
    try:
        entries = fn(*args)
        error = None
    except Exception as exc:  # reported in the dossier, exit status 2
        entries, error = [], {"error": f"{type(exc).__name__}: {exc}"}
        pencil = getattr(exc, "pencil", None)
        if pencil is not None:
            error["pencil"] = pencil.to_json()
    return entries, time.perf_counter() - start, error


# ---------------------------------------------------------------------------
# dossier


@dataclass
class Dossier:
    config: dict
    results: dict[str, list[dict]]
    verdict: dict
    timing: dict[str, float] = field(default_factory=dict)
    errors: list[dict] = field(default_factory=list)
    schema: str = SCHEMA

    def to_json(self) -> dict:
        return {
            "schema": self.schema,
            "config": self.config,
            "results": self.results,
            "verdict": self.verdict,
            "errors": self.errors,
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dossier":
        if data.get("schema") != SCHEMA:
            raise UsageError(f"not a {SCHEMA} dossier")
        return cls(data["config"], data["results"], data["verdict"], data.get("timing", {}),
                   data.get("errors", []), data["schema"])

    def emit(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Dossier":
        return cls.from_json(json.loads(text))

    def entries(self) -> list[dict]:
        return [e for group in self.results.values() for e in group]

    def find(self, ident: str) -> dict:
        for e in self.entries():
            if e.get("id") == ident:
                return e
        raise UsageError(f"no check with id {ident!r} in this dossier")

    @property
    def all_hold(self) -> bool:
        return self.verdict["status"] == "AllHold"


def run(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> Dossier:
    tasks = plan(cfg)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_task, fn, args) for _, _, fn, args in tasks]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = []
        for _, tid, fn, args in tasks:
            outcomes.append(_run_task(fn, args))
            if progress:
                progress(f"{tid}: {'error' if outcomes[-1][2] else 'done'} ({outcomes[-1][1]:.1f}s)")
    results: dict[str, list[dict]] = {c: [] for c in ALL_CHECKS if c in cfg.checks}
    timing, errors = {}, []
    for (check, tid, _, _), (entries, seconds, error) in zip(tasks, outcomes):
        results[check].extend(entries)
        timing[tid] = round(seconds, 3)
        if error:
            errors.append({"task": tid, **error})
    failed = [e["id"] for group in results.values() for e in group if not e.get("ok", True)]
    failed += [e["task"] for e in errors]
    verdict = {"status": "AllHold" if not failed else "Violations", "violations": failed}
    return Dossier(cfg.to_json(), results, verdict, timing, errors)


# ---------------------------------------------------------------------------
# explain


def _fmt_vector(data: dict) -> str:
    blocks = ["(" + ", ".join(b) + ")" if len(b) > 1 else b[0] for b in data["d"]]
    text = "(" + ", ".join(blocks) + ")"
    if data.get("lambda") is not None:
        text += f" [lambda {data['lambda']}]"
    return text


def explain(ident: str, dossier: Dossier) -> str:
    e = dossier.find(ident)
    kind = e.get("kind")
    lines = [f"{ident}  [{'holds' if e.get('ok', True) else 'VIOLATED'}]"]
    if kind == "weights":
        lines.append(f"case {e['case']}: derived weights against the transcribed table")
        if e["discrepancies"]:
            for d in e["discrepancies"]:
                lines.append(f"  {d}")
        else:
            lines.append("  diff: (empty) every transcribed entry matches its derivation")
        if e["derived_fill"]:
            lines.append(f"  filled by derivation: {', '.join(e['derived_fill'])}")
        lines.append(f"  d_0 (-2 rho): {_fmt_vector(e['rho_d0'])}")
        lines.append(f"  sum of all weights is zero: {e['total_weight_zero']}")
    elif kind == "identity":
        lines.append(f"anchor: {e['anchor']}")
        lines.append(f"  computed {e['combo']} = {_fmt_vector(e['value'])}")
        if e.get("literal"):
            lines.append(f"  as displayed ({e['literal']}) holds: {e['literal_holds']}; {e['note']}")
    elif kind == "identities":
        lines.append(f"{e['count']} identities, failed: {e['failed'] or 'none'}")
        if "c_0" in e:
            lines.append(f"  c_0 = {_fmt_vector(e['c_0'])}")
    elif kind == "certificate":
        if "error" in e:
            lines.append(f"  {e['error']}")
            return "\n".join(lines)
        lines.append(f"anchor: {e['anchor']}")
        lines.append(f"form: {e['form']}; vertices covered: {e['vertices_covered']}; "
                     f"threshold: {e['threshold']}")
        for cert in e["certificates"]:
            where = f" at (a, b) = ({', '.join(cert['vertex'])})" if cert["vertex"] else ""
            lines.append(f"  base{where}: {_fmt_vector(cert['base'])}")
            for dr, n in zip(cert["directions"], cert["coefficients"]):
                lines.append(f"    - {n} x [{dr['label']}] = {n} x {_fmt_vector(dr['vector'])}")
            res = cert["residual"]
            lines.append(f"    residual: ({', '.join(res['d'])}) [lambda {res['lambda']}]")
            lines.append(f"    ray: {', '.join(cert['ray'])}; valid: {cert['valid']}")
        for d in e["dominations"]:
            lines.append(f"  {d['dominated']} - {d['dominant']} = {_fmt_vector(d['difference'])} >= 0: {d['holds']}")
    elif kind in ("claim", "partition", "stability"):
        if "statement" in e:
            lines.append(f"statement: {e['statement']}")
        lines.append(f"case {e['case']} over F_{e['prime']}, mode {e['mode']}, seed {e['seed']}")
        lines.append(f"  tested {e['tested']} of {e['drawn']} drawn; violations {e['violation_count']}")
        for name, n in e["stratum_counts"].items():
            lines.append(f"  {name}: {n}")
        for v in e["violations"]:
            lines.append(f"  counterexample: {json.dumps(v)}")
    elif kind == "patterns":
        lines.append(f"overlapping strata: {e['overlaps'] or 'none'}")
        lines.append(f"uncovered patterns excluded: {e['uncovered_excluded']}")
        lines.append(f"escaping patterns: {e['escaping'] or 'none'}")
    elif kind == "h-lemmas":
        for name, rep in e["checks"].items():
            lines.append(f"  {name}: tested {rep['tested']}, violations {rep['violation_count']}")
    else:
        lines.append(json.dumps({k: v for k, v in e.items() if k != "id"}, indent=2))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# command line


def _split(text: str) -> list[str]:
    return [t for t in text.replace(" ", "").split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvsverify", description=__doc__.splitlines()[0])
    ap.add_argument("--cases", default="1,2,3,4", help="comma list of cases, e.g. 3,4 or Case4_E7")
    ap.add_argument("--primes", default="2,3", help="comma list of small primes")
    ap.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="samples per randomized check")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--checks", default=",".join(ALL_CHECKS), help="comma list from: " + ", ".join(ALL_CHECKS))
    ap.add_argument("--out", help="write the dossier here instead of stdout")
    ap.add_argument("--manifest", action="store_true", help="print the per-stratum item table and exit")
    ap.add_argument("--explain", metavar="ID", help="describe one check of an existing dossier")
    ap.add_argument("--dossier", help="dossier to read for --explain")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes")
    ap.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    try:
        cases = tuple(CaseId.parse(c) for c in _split(args.cases))
        primes = tuple(int(p) for p in _split(args.primes))
    except (InputError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if not cases:
        raise UsageError("--cases is empty")
    return RunConfig(cases, primes, args.samples, args.seed, tuple(_split(args.checks)), args.out, args.jobs)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.manifest:
            text = json.dumps(certify.manifest(), indent=2) + "\n"
            _write(text, args.out)
            return 0
        if args.explain:
            if not args.dossier:
                raise UsageError("--explain needs --dossier")
            with open(args.dossier, encoding="utf-8") as fh:
                dossier = Dossier.parse(fh.read())
            print(explain(args.explain, dossier))
            return 0
        cfg = config_from_args(args)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"pvsverify: {exc}", file=sys.stderr)
        return 2
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    dossier = run(cfg, progress)
    _write(dossier.emit(), cfg.out)
    status = dossier.verdict["status"]
    print(f"verdict: {status}", file=sys.stderr)
    if dossier.errors:
        for err in dossier.errors:
            print(f"error in {err['task']}: {err['error']}", file=sys.stderr)
        return 2
    return 0 if dossier.all_hold else 1


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


__all__ = ["RunConfig", "Dossier", "run", "explain", "main", "rat_str"]
