"""Experiment configs: one JSON file describes the case, data, and runs.

The file is plain JSON (no comments). Paths inside it resolve relative
to the file itself. Field names for fuels, technologies, the hydrogen
project, and policy are exactly the corresponding dataclass field names
in :mod:`h2match.domain`; unknown keys are rejected with the offending
path so typos fail loudly rather than silently taking a default.

Top-level keys::

    name            experiment name (required)
    output_dir      where runs land, default "runs"
    seed            recorded into every output, default 0
    solver          "embedded" (default) or "external"
    external        {"command": [...], "provides_duals": bool} overrides
    plots           emit SVG figures during reporting, default true
    fuels           list of fuel objects
    technologies    list of technology objects ("kind": thermal|vre|
                    storage|hydro)
    h2              hydrogen project object, or null for none
    policy          base policy, may be overridden per run entry
    demand          {"constant": MW} | {"series": [...]} |
                    {"csv": path, "column": name}
    scenarios       {"profiles": {year: {group: [...]}}} inline, or
                    {"library": dir} per the scenario CSV layout, plus
                    "design_years" and "oos_years"
    runs            list of {"label", "mode", "scenario_years"?,
                    "policy"?, "oos"?} entries; "oos": true dispatches
                    against every configured out-of-sample year

Scenario weights are uniform across the chosen design years; per-run
policy overrides may touch only the matching-related knobs, so every
label shares one fleet and one demand.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from h2match.domain import (DemandProfile, FuelSpec, H2ProjectSpec,
                            PolicyConfig, SystemCase, TechKind,
                            TechnologySpec, TmrPolicy, WeatherScenario)
from h2match.scenarios import ScenarioLibrary, read_library

__all__ = ["ConfigError", "Experiment", "RunSpec", "config_digest",
           "load_config"]

# per-run policy overrides are confined to the requirement under study
_RUN_POLICY_KEYS = ("tmr", "tmr_fraction", "excess_sales_cap",
                    "rps_fraction", "rps_covers_h2")


class ConfigError(ValueError):
    """A config file failed to parse or referenced missing data."""


@dataclasses.dataclass(frozen=True)
class RunSpec:
    """One labelled run request from the config."""

    label: str
    mode: str
    scenario_years: Optional[tuple[int, ...]] = None
    policy_overrides: tuple[tuple[str, Any], ...] = ()
    oos_years: tuple[int, ...] = ()


@dataclasses.dataclass(frozen=True)
class Experiment:
    """A fully parsed config, ready for the run loop."""

    name: str
    case: SystemCase  # design scenarios attached
    oos_scenarios: tuple[WeatherScenario, ...]
    runs: tuple[RunSpec, ...]
    output_dir: Path
    solver: str
    solver_command: Optional[tuple[str, ...]]
    seed: int
    plots: bool
    config_hash: str

    def case_for(self, spec: RunSpec) -> SystemCase:
        """The shared case with this run's policy overrides applied."""
        if not spec.policy_overrides:
            return self.case
        policy = dataclasses.replace(self.case.policy,
                                     **dict(spec.policy_overrides))
        return dataclasses.replace(self.case, policy=policy)

    def provenance(self) -> str:
        """The header comment embedded in every output file."""
        return f"config={self.config_hash} seed={self.seed}"


def config_digest(cfg: Mapping) -> str:
    """Stable short hash of a parsed config dict."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _require(cfg: Mapping, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return cfg[key]


def _build(cls, data: Mapping, where: str, convert: Mapping = {}):
    """Construct a domain dataclass from a JSON object, strictly."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) "
                          f"{', '.join(sorted(repr(u) for u in unknown))}")
    kwargs = dict(data)
    for key, fn in convert.items():
        if key in kwargs and kwargs[key] is not None:
            try:
                kwargs[key] = fn(kwargs[key])
            except ValueError as exc:
                raise ConfigError(f"{where}.{key}: {exc}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _excess_cap(value):
    if value == "inf":
        return float("inf")
    return float(value)


def _policy(data: Mapping, where: str) -> PolicyConfig:
    return _build(PolicyConfig, data, where,
                  convert={"tmr": TmrPolicy,
                           "excess_sales_cap": _excess_cap})


def _read_demand_csv(path: Path, column: str) -> tuple[float, ...]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.DictReader(fh)
                    if r and not (r.get("hour") or "").startswith("#")]
    except OSError as exc:
        raise ConfigError(f"demand.csv: {exc}") from None
    if not rows or column not in rows[0]:
        raise ConfigError(f"demand.csv: no column {column!r} in {path}")
    return tuple(float(r[column]) for r in rows)


def _demand_series(cfg: Mapping, base: Path, n_hours: int,
                   ) -> tuple[float, ...]:
    if "constant" in cfg:
        return (float(cfg["constant"]),) * n_hours
    if "series" in cfg:
        series = tuple(float(v) for v in cfg["series"])
    elif "csv" in cfg:
        series = _read_demand_csv(base / cfg["csv"],
                                  cfg.get("column", "load"))
    else:
        raise ConfigError("demand: give one of constant, series, or csv")
    if len(series) != n_hours:
        raise ConfigError(f"demand: {len(series)} hours, scenario profiles "
                          f"have {n_hours}")
    return series


def _library(cfg: Mapping, base: Path) -> ScenarioLibrary:
    design = tuple(int(y) for y in _require(cfg, "design_years", "scenarios"))
    oos = tuple(int(y) for y in cfg.get("oos_years", ()))
    if "profiles" in cfg:
        profiles = {}
        for year_key, groups in cfg["profiles"].items():
            try:
                year = int(year_key)
            except ValueError:
                raise ConfigError(f"scenarios.profiles: year {year_key!r} "
                                  "is not an integer") from None
            profiles[year] = {g: tuple(float(v) for v in series)
                              for g, series in groups.items()}
        library = ScenarioLibrary(profiles, design, oos)
    elif "library" in cfg:
        library = read_library(base / cfg["library"])
        library = dataclasses.replace(library, design_years=design,
                                      oos_years=oos)
    else:
        raise ConfigError("scenarios: give inline profiles or a library dir")
    problems = library.validate()
    if problems:
        raise ConfigError("scenarios: " + "; ".join(problems))
    return library


def _runs(entries: Sequence[Mapping], library: ScenarioLibrary,
          ) -> tuple[RunSpec, ...]:
    if not entries:
        raise ConfigError("runs: at least one run entry is required")
    specs = []
    seen = set()
    for i, entry in enumerate(entries):
        where = f"runs[{i}]"
        label = str(_require(entry, "label", where))
        if label in seen:
            raise ConfigError(f"{where}: duplicate label {label!r}")
        seen.add(label)
        if any(c in label for c in "/\\") or label.startswith("."):
            raise ConfigError(f"{where}: label {label!r} is not a safe "
                              "directory name")
        mode = str(_require(entry, "mode", where))
        years = entry.get("scenario_years")
        if years is not None:
            years = tuple(int(y) for y in years)
        overrides = entry.get("policy", {})
        bad = set(overrides) - set(_RUN_POLICY_KEYS)
        if bad:
            raise ConfigError(f"{where}.policy: only {_RUN_POLICY_KEYS} may "
                              f"vary per run, got {sorted(bad)}")
        if "tmr" in overrides:
            overrides = dict(overrides, tmr=TmrPolicy(overrides["tmr"]))
        if "excess_sales_cap" in overrides \
                and overrides["excess_sales_cap"] is not None:
            overrides = dict(overrides, excess_sales_cap=_excess_cap(
                overrides["excess_sales_cap"]))
        oos = entry.get("oos", False)
        if oos is True:
            oos_years = library.oos_years
        elif oos:
            oos_years = tuple(int(y) for y in oos)
        else:
            oos_years = ()
        missing = set(oos_years) - set(library.profiles)
        if missing:
            raise ConfigError(f"{where}: out-of-sample years "
                              f"{sorted(missing)} not in the library")
        specs.append(RunSpec(label=label, mode=mode, scenario_years=years,
                             policy_overrides=tuple(sorted(
                                 overrides.items())),
                             oos_years=oos_years))
    return tuple(specs)


def load_config(path) -> Experiment:
    """Parse and cross-check a config file into an Experiment."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: "
                          f"{exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base = path.parent

    name = str(_require(cfg, "name", "config"))
    fuels = tuple(_build(FuelSpec, f, f"fuels[{i}]")
                  for i, f in enumerate(cfg.get("fuels", ())))
    techs = tuple(_build(TechnologySpec, t, f"technologies[{i}]",
                         convert={"kind": TechKind})
                  for i, t in enumerate(_require(cfg, "technologies",
                                                 "config")))
    h2 = None
    if cfg.get("h2") is not None:
        h2 = _build(H2ProjectSpec, cfg["h2"], "h2")
    policy = _policy(cfg.get("policy", {}), "policy")

    library = _library(_require(cfg, "scenarios", "config"), base)
    demand = DemandProfile("system", _demand_series(
        _require(cfg, "demand", "config"), base, library.n_hours))
    design = library.scenarios_for(library.design_years, demand)
    oos = (library.scenarios_for(library.oos_years, demand)
           if library.oos_years else ())

    case = SystemCase(name=name, technologies=techs, fuels=fuels,
                      scenarios=design, policy=policy, h2=h2)

    solver = cfg.get("solver", "embedded")
    if solver not in ("embedded", "external"):
        raise ConfigError(f"solver: {solver!r} is not embedded or external")
    command = None
    external = cfg.get("external", {})
    if external:
        command = tuple(str(c) for c in external.get("command", ())) or None
        if solver == "external" and not external.get("provides_duals", True):
            # reporting prices every metric off row duals; a backend
            # that cannot return them is unusable, so fail now
            raise ConfigError("external: backend does not provide duals")

    return Experiment(
        name=name,
        case=case,
        oos_scenarios=tuple(oos),
        runs=_runs(_require(cfg, "runs", "config"), library),
        output_dir=base / cfg.get("output_dir", "runs"),
        solver=solver,
        solver_command=command,
        seed=int(cfg.get("seed", 0)),
        plots=bool(cfg.get("plots", True)),
        config_hash=config_digest(cfg),
    )
