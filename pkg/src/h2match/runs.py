"""Run orchestration: design solves, out-of-sample dispatch, persistence.

A run is one solved program. Design runs (baseline / deterministic /
stochastic) choose capacities; out-of-sample dispatch runs pin a prior
design's capacities via variable bounds and re-solve operations against
weather years the design never saw, with the hourly matching constraint
softened at the out-of-sample penalty price so a bad year shows up as
violation hours instead of an infeasible program. Grid load shedding
stays priced at the (much higher) value of lost load, so serving grid
demand keeps priority over the matching contract.

Everything written to disk is deterministic: fixed column orders, sorted
keys, repr() floats, no timestamps. Re-running with identical inputs
reproduces every output byte for byte.

Output layout per run label::

    <out_dir>/<label>/capacities.csv   first-stage variables
    <out_dir>/<label>/dispatch.csv     operational variables by (s, t)
    <out_dir>/<label>/duals.csv        constraint prices by (s, t)
    <out_dir>/<label>/report.json      record + caller-supplied metrics
"""

from __future__ import annotations

import json
import re
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

from h2match.domain import SystemCase, WeatherScenario
from h2match.lp import LinearProgram, SolveError, Solution
from h2match.model import VariableIndex, assemble

__all__ = ["RunPlan", "DesignSolution", "RunResult", "run_design",
           "run_oos", "persist_run", "load_design", "write_manifest"]

DESIGN_MODES = ("baseline", "deterministic", "stochastic")


@dataclass(frozen=True)
class RunPlan:
    """One planned solve: which case, which scenarios, how to label it."""

    label: str
    case: SystemCase
    mode: str  # baseline | deterministic | stochastic | oos_dispatch
    scenario_years: Optional[tuple[int, ...]] = None  # None = all in case
    solver: str = "embedded"  # or "external"
    solver_command: Optional[tuple[str, ...]] = None  # external override
    emit_lp_dir: Optional[Path] = None  # also write the program here


@dataclass(frozen=True)
class DesignSolution:
    """First-stage outcome of a design run, keyed by variable name."""

    label: str
    capacities: Mapping[str, float]
    objective: float

    def capacity(self, tech: str) -> float:
        return float(self.capacities.get(f"cap_{tech}", 0.0))

    def energy_capacity(self, tech: str) -> float:
        return float(self.capacities.get(f"ecap_{tech}", 0.0))

    def retired(self, tech: str) -> float:
        return float(self.capacities.get(f"retire_{tech}", 0.0))

    @property
    def electrolyzer_mw(self) -> float:
        return float(self.capacities.get("cap_ely", 0.0))

    @property
    def tank_tonnes(self) -> float:
        return float(self.capacities.get("cap_tank", 0.0))

    @property
    def compressor_tonnes_per_hour(self) -> float:
        return float(self.capacities.get("cap_comp", 0.0))


@dataclass
class RunResult:
    """A solved run: everything downstream reporting needs."""

    plan: RunPlan
    case: SystemCase  # as solved (baseline mode strips the H2 project)
    vix: VariableIndex
    solution: Solution
    design: DesignSolution


def _solve_or_dump(lp: LinearProgram, plan: RunPlan) -> Solution:
    """Solve; on any non-optimal status leave an LP file for inspection."""
    if plan.emit_lp_dir is not None:
        emit_dir = Path(plan.emit_lp_dir)
        emit_dir.mkdir(parents=True, exist_ok=True)
        lp.emit(emit_dir / f"{plan.label}.lp", fmt="lp")
    sol = lp.solve(backend=plan.solver, command=plan.solver_command)
    if not sol.is_optimal:
        out = Path(plan.emit_lp_dir or tempfile.gettempdir())
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{plan.label}_failed.lp"
        lp.emit(path, fmt="lp")
        raise SolveError(f"run {plan.label!r}: solver returned "
                         f"{sol.status}; program written to {path}")
    return sol


def run_design(plan: RunPlan) -> RunResult:
    """Solve a baseline, deterministic, or stochastic design run."""
    if plan.mode not in DESIGN_MODES:
        raise ValueError(f"run {plan.label!r}: mode {plan.mode!r} is not "
                         f"one of {DESIGN_MODES}")
    case = plan.case.without_h2() if plan.mode == "baseline" else plan.case

    years = plan.scenario_years
    if plan.mode == "deterministic":
        if years is None:
            if len(case.scenarios) != 1:
                raise ValueError(f"run {plan.label!r}: deterministic mode "
                                 "needs exactly one scenario year")
            years = (case.scenarios[0].year,)
        elif len(years) != 1:
            raise ValueError(f"run {plan.label!r}: deterministic mode "
                             f"got {len(years)} scenario years")

    lp, vix = assemble(case, mode="design", scenario_years=years)
    sol = _solve_or_dump(lp, plan)
    capacities = {name: float(sol.value(name))
                  for name in vix.capacity_variables()}
    design = DesignSolution(label=plan.label, capacities=capacities,
                            objective=sol.objective)
    return RunResult(plan=plan, case=case, vix=vix, solution=sol,
                     design=design)


def run_oos(case: SystemCase, design: DesignSolution,
            oos_scenarios: Sequence[WeatherScenario],
            solver: str = "embedded",
            solver_command: Optional[tuple[str, ...]] = None,
            emit_lp_dir: Optional[Path] = None) -> list[RunResult]:
    """Dispatch a fixed design against held-out weather years.

    One program per scenario. Capacities enter as equal lower/upper
    bounds, so reserve and cost rows stay intact and the first stage is
    reproduced exactly in each solution.
    """
    groups_needed = {t.cf_group for t in case.technologies
                     if t.cf_group is not None}
    results = []
    for sc in oos_scenarios:
        missing = groups_needed - set(sc.capacity_factors)
        if missing:
            raise ValueError(f"out-of-sample year {sc.year} lacks "
                             f"capacity-factor groups {sorted(missing)}")
        single = replace(case, scenarios=(replace(sc, weight=1.0),))
        plan = RunPlan(label=f"{design.label}_oos{sc.year}", case=single,
                       mode="oos_dispatch", solver=solver,
                       solver_command=solver_command,
                       emit_lp_dir=emit_lp_dir)
        lp, vix = assemble(single, mode="dispatch",
                           fixed_capacities=design.capacities)
        sol = _solve_or_dump(lp, plan)
        caps = {name: float(sol.value(name))
                for name in vix.capacity_variables()}
        results.append(RunResult(
            plan=plan, case=single, vix=vix, solution=sol,
            design=DesignSolution(label=plan.label, capacities=caps,
                                  objective=sol.objective)))
    return results


# -- persistence --------------------------------------------------------------

_INDEXED = re.compile(r"^(?P<base>.+?)\[(?P<args>[^\]]*)\]$")


def _split_name(name: str) -> tuple[str, str, str]:
    """(base, scenario, hour) with empty strings for missing indices."""
    m = _INDEXED.match(name)
    if not m:
        return name, "", ""
    args = m.group("args").split(",")
    if len(args) == 1:
        return m.group("base"), args[0], ""
    return m.group("base"), args[0], args[1]


def _write_csv(path: Path, header: Sequence[str], rows,
               comment: Optional[str]) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def persist_run(result: RunResult, out_dir,
                report: Optional[Mapping] = None,
                comment: Optional[str] = None) -> Path:
    """Write one run's artifacts under ``out_dir/<label>``.

    ``report`` is merged into report.json under "metrics"; ``comment``
    (typically config hash + seed) lands as a leading ``#`` line in each
    CSV and a "provenance" field in the JSON.
    """
    run_dir = Path(out_dir) / result.plan.label
    run_dir.mkdir(parents=True, exist_ok=True)
    sol = result.solution

    cap_rows = [(name, repr(float(sol.value(name))))
                for name in result.vix.capacity_variables()]
    _write_csv(run_dir / "capacities.csv", ("variable", "value"),
               cap_rows, comment)

    first_stage = set(result.vix.capacity_variables())
    dispatch = []
    for name, value in sol.values.items():
        if name in first_stage:
            continue
        base, s, t = _split_name(name)
        dispatch.append((base, s, t, repr(float(value))))
    dispatch.sort(key=lambda r: (r[0], r[1], "" if r[2] == "" else
                                 int(r[2] or 0)))
    _write_csv(run_dir / "dispatch.csv",
               ("variable", "scenario", "hour", "value"), dispatch, comment)

    duals = []
    for name, value in sol.duals.items():
        base, s, t = _split_name(name)
        duals.append((base, s, t, repr(float(value))))
    duals.sort(key=lambda r: (r[0], r[1], "" if r[2] == "" else
                              int(r[2] or 0)))
    _write_csv(run_dir / "duals.csv",
               ("constraint", "scenario", "hour", "value"), duals, comment)

    record = {
        "label": result.plan.label,
        "mode": result.plan.mode,
        "case": result.case.name,
        "scenario_years": list(result.vix.scenarios),
        "status": sol.status,
        "objective": sol.objective,
        "solver": sol.backend,
        "iterations": sol.iterations,
        "capacities": {k: float(v)
                       for k, v in result.design.capacities.items()},
    }
    if comment:
        record["provenance"] = comment
    if report:
        record["metrics"] = dict(report)
    (run_dir / "report.json").write_text(
        json.dumps(record, sort_keys=True, indent=2) + "\n")
    return run_dir


def load_design(run_dir) -> DesignSolution:
    """Rehydrate a design from a persisted run directory."""
    run_dir = Path(run_dir)
    record = json.loads((run_dir / "report.json").read_text())
    return DesignSolution(label=record["label"],
                          capacities={k: float(v) for k, v in
                                      record["capacities"].items()},
                          objective=float(record["objective"]))


def write_manifest(out_dir, records: Sequence[Mapping],
                   comment: Optional[str] = None) -> Path:
    """Summarize completed runs, ordered by label, at the output root."""
    path = Path(out_dir) / "manifest.json"
    body = {"runs": sorted((dict(r) for r in records),
                           key=lambda r: r.get("label", ""))}
    if comment:
        body["provenance"] = comment
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return path
