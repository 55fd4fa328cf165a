"""Command-line entry point: validate, run, report.

    h2match validate --config desk.json
    h2match run --config desk.json [--labels 'S-*'] [--force]
                [--solver embedded|external] [--emit-lp DIR] [--seed N]
    h2match report --config desk.json

Exit codes: 0 success, 1 validation failure, 2 at least one solve
failed, 3 I/O trouble. A failed label never aborts its siblings; the
summary at the end lists what broke.

Runs execute in dependency order (baseline first, then designs, then
each design's out-of-sample dispatches) and are idempotent: a label
whose report.json already carries the current config hash is skipped
unless --force. Run directories and report files appear atomically
(written to a temp path, then renamed), so an interrupted invocation
never leaves a half-written run that a later one would trust. Labels
run serially; solves saturate a core each, and serial execution keeps
the console readable and the outputs order-independent.

Every artifact embeds ``config=<hash> seed=<n>`` as a header comment or
field. Changing the config file changes the hash, which invalidates
prior runs for skipping purposes.
"""

from __future__ import annotations

import argparse
import dataclasses
import fnmatch
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional

from h2match import analysis, plots
from h2match.caseio import ConfigError, Experiment, RunSpec, load_config
from h2match.domain import TmrPolicy, validate_case
from h2match.lp import SolveError
from h2match.runs import (RunPlan, RunResult, load_design, persist_run,
                          run_design, run_oos, write_manifest)

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVE = 2
EXIT_IO = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2match",
        description="Plan and evaluate grid-connected hydrogen supply "
                    "under clean-energy time-matching.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("validate", "check a config and its data"),
                       ("run", "solve the configured runs"),
                       ("report", "write comparison tables and figures")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="config JSON path")
        if name == "run":
            cmd.add_argument("--labels", default="*",
                             help="glob over run labels (default: all)")
            cmd.add_argument("--force", action="store_true",
                             help="re-run labels that look complete")
            cmd.add_argument("--solver", choices=("embedded", "external"),
                             help="override the config's solver")
            cmd.add_argument("--emit-lp", metavar="DIR",
                             help="also write each program as an LP file")
            cmd.add_argument("--seed", type=int,
                             help="override the config's recorded seed")
    return parser


def _load(config_path: str) -> Experiment:
    path = Path(config_path)
    if not path.is_file():
        raise OSError(f"config file not found: {path}")
    return load_config(path)


def _validate(exp: Experiment) -> list[str]:
    """Violations across every label's effective case."""
    problems = []
    for spec in exp.runs:
        case = exp.case_for(spec)
        if spec.mode == "baseline":
            case = case.without_h2()
        for violation in validate_case(case):
            problems.append(f"{spec.label}: {violation}")
    return problems


def cmd_validate(exp: Experiment) -> int:
    problems = _validate(exp)
    for p in problems:
        print(p)
    if problems:
        print(f"{len(problems)} violation(s)")
        return EXIT_VALIDATION
    print(f"config ok: {len(exp.runs)} run(s), "
          f"{len(exp.case.scenarios)} design year(s), "
          f"{len(exp.oos_scenarios)} out-of-sample year(s)")
    return EXIT_OK


def _is_complete(run_dir: Path, provenance: str) -> bool:
    """A run counts as done if its report carries the current config hash."""
    report = run_dir / "report.json"
    if not report.is_file():
        return False
    try:
        record = json.loads(report.read_text())
    except (OSError, json.JSONDecodeError):
        return False
    return (record.get("status") == "optimal"
            and record.get("provenance") == provenance)


def _persist_atomic(result: RunResult, out_dir: Path, report, comment: str,
                    ) -> Path:
    """persist_run into a temp dir, then swap into place."""
    final = out_dir / result.plan.label
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
        staged = persist_run(result, tmp, report=report, comment=comment)
        if final.exists():
            shutil.rmtree(final)
        os.replace(staged, final)
    return final


def _design_order(specs) -> list:
    return sorted(specs, key=lambda s: 0 if s.mode == "baseline" else 1)


class _RunLoop:
    """State for one `run` invocation: results, failures, manifest rows."""

    def __init__(self, exp: Experiment, solver: Optional[str],
                 emit_lp: Optional[str], force: bool):
        self.exp = exp
        self.solver = solver or exp.solver
        self.emit_lp = Path(emit_lp) if emit_lp else None
        self.force = force
        self.out = exp.output_dir
        self.failures: list[tuple[str, str]] = []
        self.records: list[dict] = []
        self.baseline_report: Optional[analysis.CaseReport] = None
        self.baseline_spec = next(
            (s for s in exp.runs if s.mode == "baseline"), None)

    def _record(self, label: str, mode: str, status: str,
                objective=None) -> None:
        row = {"label": label, "mode": mode, "status": status}
        if objective is not None:
            row["objective"] = objective
        self.records.append(row)

    def _fail(self, label: str, mode: str, exc: Exception) -> None:
        kind = "io" if isinstance(exc, OSError) else "solve"
        self.failures.append((kind, f"{label}: {exc}"))
        self._record(label, mode, f"failed ({exc})")
        print(f"FAIL {label}: {exc}")

    def _metrics(self, result: RunResult) -> dict:
        report = analysis.case_report(result)
        if result.plan.mode != "baseline" and self.baseline_spec is not None:
            self._stored_baseline(self.baseline_spec)
        if self.baseline_report is not None \
                and result.case.h2 is not None:
            tonnes = analysis.annual_h2_tonnes(result)
            if tonnes > 0:
                report.consequential_tco2_per_tonne = \
                    analysis.consequential_emissions(
                        report, self.baseline_report, tonnes)
        if result.plan.mode == "baseline" and self.baseline_report is None:
            self.baseline_report = report
        return report.as_dict()

    def _stored_baseline(self, spec: RunSpec) -> None:
        """Pick up a previously persisted baseline report for comparisons."""
        if self.baseline_report is not None:
            return
        report = self.out / spec.label / "report.json"
        try:
            metrics = json.loads(report.read_text())["metrics"]
            self.baseline_report = analysis.report_from_dict(metrics)
        except (OSError, KeyError, json.JSONDecodeError):
            pass

    def design(self, spec: RunSpec) -> None:
        run_dir = self.out / spec.label
        if not self.force and _is_complete(run_dir, self.exp.provenance()):
            print(f"skip {spec.label} (complete)")
            record = json.loads((run_dir / "report.json").read_text())
            self._record(spec.label, spec.mode, "optimal",
                         record.get("objective"))
        else:
            plan = RunPlan(label=spec.label, case=self.exp.case_for(spec),
                           mode=spec.mode,
                           scenario_years=spec.scenario_years,
                           solver=self.solver,
                           solver_command=self.exp.solver_command,
                           emit_lp_dir=self.emit_lp)
            try:
                result = run_design(plan)
                _persist_atomic(result, self.out, self._metrics(result),
                                self.exp.provenance())
            except (SolveError, ValueError, OSError) as exc:
                self._fail(spec.label, spec.mode, exc)
                return
            print(f"ran {spec.label} ({spec.mode}) "
                  f"objective={result.solution.objective:.6g}")
            self._record(spec.label, spec.mode, "optimal",
                         result.solution.objective)
        self._oos(spec)

    def _oos(self, spec: RunSpec) -> None:
        pending = [sc for sc in self.exp.oos_scenarios
                   if sc.year in spec.oos_years
                   and (self.force or not _is_complete(
                       self.out / f"{spec.label}_oos{sc.year}",
                       self.exp.provenance()))]
        for sc in self.exp.oos_scenarios:
            if sc.year in spec.oos_years and sc not in pending:
                label = f"{spec.label}_oos{sc.year}"
                print(f"skip {label} (complete)")
                record = json.loads(
                    (self.out / label / "report.json").read_text())
                self._record(label, "oos_dispatch", "optimal",
                             record.get("objective"))
        if not pending:
            return
        try:
            design = load_design(self.out / spec.label)
        except OSError as exc:
            self._fail(f"{spec.label}_oos", "oos_dispatch", exc)
            return
        case = self.exp.case_for(spec)
        for sc in pending:
            label = f"{design.label}_oos{sc.year}"
            try:
                result = run_oos(case, design, [sc], solver=self.solver,
                                 solver_command=self.exp.solver_command,
                                 emit_lp_dir=self.emit_lp)[0]
                robustness = analysis.robustness_metrics(result) \
                    if case.policy.tmr is TmrPolicy.HOURLY else None
                metrics = {"emissions_tco2":
                           analysis.emissions_total(result)}
                if robustness is not None:
                    metrics["robustness"] = {
                        "unmet_hours": robustness.unmet_hours,
                        "unmatched_share": robustness.unmatched_share}
                _persist_atomic(result, self.out, metrics,
                                self.exp.provenance())
            except (SolveError, ValueError, OSError) as exc:
                self._fail(label, "oos_dispatch", exc)
                continue
            print(f"ran {label} (oos_dispatch) "
                  f"objective={result.solution.objective:.6g}")
            self._record(label, "oos_dispatch", "optimal",
                         result.solution.objective)


def cmd_run(exp: Experiment, labels: str, force: bool,
            solver: Optional[str], emit_lp: Optional[str]) -> int:
    problems = _validate(exp)
    if problems:
        for p in problems:
            print(p)
        return EXIT_VALIDATION

    selected = [s for s in exp.runs if fnmatch.fnmatch(s.label, labels)]
    if not selected:
        print(f"no run labels match {labels!r}")
        return EXIT_VALIDATION
    exp.output_dir.mkdir(parents=True, exist_ok=True)

    loop = _RunLoop(exp, solver, emit_lp, force)
    for spec in _design_order(selected):
        loop.design(spec)

    write_manifest(exp.output_dir, loop.records, comment=exp.provenance())
    if loop.failures:
        print(f"{len(loop.failures)} run(s) failed:")
        for _, message in loop.failures:
            print(f"  {message}")
        if any(kind == "solve" for kind, _ in loop.failures):
            return EXIT_SOLVE
        return EXIT_IO
    print(f"all {len(loop.records)} run(s) complete")
    return EXIT_OK


def cmd_report(exp: Experiment) -> int:
    out = exp.output_dir
    if not out.is_dir():
        print(f"no output directory at {out}")
        return EXIT_IO
    reports = []
    partial = []
    for run_dir in sorted(p for p in out.iterdir() if p.is_dir()
                          and not p.name.startswith(".")):
        record_path = run_dir / "report.json"
        if not record_path.is_file():
            partial.append(f"{run_dir.name}: no report.json")
            continue
        try:
            record = json.loads(record_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            partial.append(f"{run_dir.name}: unreadable report ({exc})")
            continue
        if record.get("status") != "optimal":
            partial.append(f"{run_dir.name}: status "
                           f"{record.get('status')!r}")
            continue
        metrics = record.get("metrics", {})
        if "label" not in metrics:
            continue  # out-of-sample dispatch record, not a case report
        reports.append(analysis.report_from_dict(metrics))
    for message in partial:
        print(f"partial run ignored: {message}")
    if not reports:
        print("no completed runs to report on")
        return EXIT_IO

    with tempfile.TemporaryDirectory(dir=out, prefix=".report-") as tmp:
        staged = analysis.write_comparison_tables(
            reports, tmp, comment=exp.provenance())
        if exp.plots:
            figure_paths = plots.write_plots(reports, tmp)
            for path in figure_paths:
                with open(path, "a") as fh:
                    fh.write(f"<!-- {exp.provenance()} -->\n")
            staged += figure_paths
        for path in staged:
            os.replace(path, out / path.name)
            print(f"wrote {out / path.name}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        exp = _load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    if getattr(args, "seed", None) is not None:
        # the seed is part of every output's provenance stamp, so an
        # override invalidates prior runs for skipping purposes
        exp = dataclasses.replace(exp, seed=args.seed)

    try:
        if args.command == "validate":
            return cmd_validate(exp)
        if args.command == "run":
            return cmd_run(exp, args.labels, args.force, args.solver,
                           args.emit_lp)
        return cmd_report(exp)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
