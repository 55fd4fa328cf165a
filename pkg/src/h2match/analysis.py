"""Metrics over solved runs: emissions, hydrogen cost, prices, revenues.

Everything here is pure post-processing. A solved run carries variable
values and row duals; every metric is a weighted sum over those, so the
functions never touch a solver. Scenario weighting follows the
objective: a row dual already includes the scenario probability, which
means revenue and purchase totals use the raw dual directly while
quoted prices divide the probability back out.

Revenue is booked under exactly four source names (``REVENUE_SOURCES``).
The hydrogen project's books are the mirror image of the grid's: it
buys energy at the hourly balance dual and firm capacity at the reserve
dual, and its matching payments to dedicated resources are an internal
transfer that cancels out of the system total.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from h2match.domain import SystemCase, TechKind, TechnologySpec, TmrPolicy
from h2match.runs import RunResult, _write_csv

__all__ = ["CaseReport", "PriceReport", "ResourceRevenue",
           "RobustnessMetrics", "REVENUE_SOURCES", "annual_generation",
           "annual_h2_tonnes", "case_report", "consequential_emissions",
           "curtailment_by_group", "eac_cost", "emissions_total", "lcoh",
           "price_report", "report_from_dict", "revenue_stack",
           "robustness_metrics", "tmr_price_histogram",
           "write_comparison_tables"]

REVENUE_SOURCES = ("electricity sales", "RPS", "TMR", "capacity reserve")

FEAS_TOL = 1e-6  # below this, a capacity or a slack counts as zero


@dataclass(frozen=True)
class RobustnessMetrics:
    """Out-of-sample matching performance.

    ``unmet_hours`` counts hours whose matching slack exceeds the
    feasibility tolerance; ``unmatched_share`` is the slack energy in
    those hours divided by the electrolyzer draw in those hours (zero
    when no hour is unmet).
    """

    unmet_hours: int
    unmatched_share: float


@dataclass(frozen=True)
class ResourceRevenue:
    """Annualized per-MW revenue stack for one installed resource."""

    capacity_mw: float
    revenue: dict[str, float]  # source -> $/MW/yr, keys == REVENUE_SOURCES
    total_cost: float  # $/MW/yr, investment + fixed + variable

    @property
    def total_revenue(self) -> float:
        return float(sum(self.revenue.values()))


@dataclass(frozen=True)
class PriceReport:
    """Average prices and the hourly matching-price histogram.

    ``energy_per_mwh`` is demand weighted. ``capacity_per_mw_year`` is
    the annual sum of hourly reserve prices, i.e. what 1 MW of perfectly
    firm capacity would earn. ``tmr_per_mwh`` is the plain hourly mean
    under hourly matching and the annual certificate price under annual
    matching. The histogram pools hours across scenarios; prices at or
    above the terminal edge collapse into the last bin.
    """

    energy_per_mwh: float
    capacity_per_mw_year: float
    rps_per_mwh: float
    tmr_per_mwh: float
    tmr_histogram: tuple[tuple[str, int], ...] = ()


@dataclass
class CaseReport:
    """Everything reported for one solved run."""

    label: str
    capacities: dict[str, float]
    generation: dict[str, float]  # tech -> MWh/yr, storage net of charging
    emissions_tco2: float
    lcoh_per_kg: Optional[float]
    curtailment: dict[str, float]  # cf group -> fraction of available energy
    prices: PriceReport
    revenue_stacks: dict[str, ResourceRevenue]
    consequential_tco2_per_tonne: Optional[float] = None
    robustness: Optional[RobustnessMetrics] = None

    def as_dict(self) -> dict:
        """JSON-ready view, used for report.json metrics."""
        out = {
            "label": self.label,
            "capacities": dict(self.capacities),
            "generation_mwh": dict(self.generation),
            "emissions_tco2": self.emissions_tco2,
            "lcoh_per_kg": self.lcoh_per_kg,
            "curtailment": dict(self.curtailment),
            "prices": {
                "energy_per_mwh": self.prices.energy_per_mwh,
                "capacity_per_mw_year": self.prices.capacity_per_mw_year,
                "rps_per_mwh": self.prices.rps_per_mwh,
                "tmr_per_mwh": self.prices.tmr_per_mwh,
                "tmr_histogram": [list(b) for b in self.prices.tmr_histogram],
            },
            "revenue_stacks": {
                name: {"capacity_mw": r.capacity_mw,
                       "revenue": dict(r.revenue),
                       "total_revenue": r.total_revenue,
                       "total_cost": r.total_cost}
                for name, r in self.revenue_stacks.items()
            },
            "consequential_tco2_per_tonne": self.consequential_tco2_per_tonne,
        }
        if self.robustness is not None:
            out["robustness"] = {
                "unmet_hours": self.robustness.unmet_hours,
                "unmatched_share": self.robustness.unmatched_share,
            }
        return out


# ---------------------------------------------------------------- helpers

def _net_output(sol, tech: TechnologySpec, s: int) -> np.ndarray:
    """Hourly grid injection: generation, or discharge net of charging."""
    if tech.kind is TechKind.STORAGE:
        return (sol.value_series(f"discharge_{tech.name}", s)
                - sol.value_series(f"charge_{tech.name}", s))
    return sol.value_series(f"gen_{tech.name}", s)


def _fixed_cost(sol, tech: TechnologySpec) -> float:
    """Annual investment plus fixed O&M, $/yr (investment on new builds)."""
    values = sol.values
    cost = tech.fom * values.get(f"cap_{tech.name}", 0.0)
    cost += tech.capex_annualized * values.get(f"build_{tech.name}", 0.0)
    if tech.kind is TechKind.STORAGE:
        cost += tech.energy_fom * values.get(f"ecap_{tech.name}", 0.0)
        cost += (tech.energy_capex_annualized
                 * values.get(f"ebuild_{tech.name}", 0.0))
    return float(cost)


def _variable_cost(result: RunResult, tech: TechnologySpec) -> float:
    """Scenario-weighted fuel, variable O&M, and start costs, $/yr."""
    sol, vix, case = result.solution, result.vix, result.case
    fuel_price = 0.0
    if tech.fuel is not None:
        fuel_price = case.fuel(tech.fuel).price_per_mmbtu
    total = 0.0
    for s in vix.scenarios:
        w = vix.weights[s]
        if tech.kind is TechKind.STORAGE:
            dispatched = float(
                sol.value_series(f"discharge_{tech.name}", s).sum())
            total += w * tech.vom * dispatched
            continue
        energy = float(sol.value_series(f"gen_{tech.name}", s).sum())
        total += w * (tech.vom + tech.heat_rate * fuel_price) * energy
        if tech.kind is TechKind.THERMAL:
            per_start = tech.start_cost + tech.start_fuel * fuel_price
            if per_start:
                started = float(
                    sol.value_series(f"start_{tech.name}", s).sum())
                total += w * per_start * started
    return total


def _scenario(case: SystemCase, year: int):
    return next(sc for sc in case.scenarios if sc.year == year)


# ---------------------------------------------------------------- metrics

def emissions_total(result: RunResult) -> float:
    """Scenario-weighted annual CO2 from fuel burn, tCO2/yr.

    Burn is generation times heat rate plus start-up fuel; fuels with a
    zero carbon factor contribute nothing.
    """
    case, sol, vix = result.case, result.solution, result.vix
    total = 0.0
    for tech in case.technologies:
        if tech.fuel is None:
            continue
        factor = case.fuel(tech.fuel).co2_per_mmbtu
        if factor == 0.0:
            continue
        for s in vix.scenarios:
            burn = 0.0
            if tech.heat_rate:
                burn += tech.heat_rate * float(
                    sol.value_series(f"gen_{tech.name}", s).sum())
            if tech.kind is TechKind.THERMAL and tech.start_fuel:
                burn += tech.start_fuel * float(
                    sol.value_series(f"start_{tech.name}", s).sum())
            total += vix.weights[s] * factor * burn
    return total


def consequential_emissions(with_h2: "CaseReport", baseline: "CaseReport",
                            h2_tonnes: float) -> float:
    """Emissions attributable to the hydrogen load, tCO2 per tonne.

    The difference between the system's emissions with the project and
    the same system without it, spread over annual production. Negative
    values are meaningful: the project's dedicated resources can
    displace more fossil generation than the electrolyzer induces.
    """
    if h2_tonnes <= 0:
        raise ValueError("hydrogen production must be positive")
    return (with_h2.emissions_tco2 - baseline.emissions_tco2) / h2_tonnes


def annual_h2_tonnes(result: RunResult) -> float:
    """Scenario-weighted annual hydrogen production."""
    sol, vix = result.solution, result.vix
    return sum(vix.weights[s] * float(sol.value_series("h2_gen", s).sum())
               for s in vix.scenarios)


def annual_generation(result: RunResult) -> dict[str, float]:
    """Scenario-weighted annual grid injection per technology, MWh.

    Storage is net of charging, so summing this dict plus unserved
    energy reproduces demand plus the hydrogen project's draw.
    """
    sol, vix = result.solution, result.vix
    out = {}
    for tech in result.case.technologies:
        out[tech.name] = sum(
            vix.weights[s] * float(_net_output(sol, tech, s).sum())
            for s in vix.scenarios)
    return out


def lcoh(result: RunResult) -> float:
    """Break-even hydrogen price, $/kg.

    Books every cost the project incurs: its own assets, energy and
    firm-capacity purchases for the electrolyzer and compressor at the
    system duals, clean-energy certificates when the obligation covers
    hydrogen load, and the dedicated resources' full costs net of their
    energy sales back to the grid. Matching payments between the
    project and its dedicated resources cancel and are not booked.
    """
    case, sol, vix = result.case, result.solution, result.vix
    h = case.h2
    if h is None:
        raise ValueError(f"run {result.plan.label!r} has no hydrogen project")
    tonnes = annual_h2_tonnes(result)
    if tonnes <= FEAS_TOL:
        raise ValueError(f"run {result.plan.label!r} produced no hydrogen")
    lam = h.ely_mwh_per_tonne

    cost = ((h.ely_capex_annualized + h.ely_fom) / lam * sol.value("cap_ely")
            + (h.tank_capex_annualized + h.tank_fom) * sol.value("cap_tank")
            + (h.comp_capex_annualized + h.comp_fom) * sol.value("cap_comp"))
    for tech in case.technologies:
        if tech.is_ppa_eligible:
            cost += _fixed_cost(sol, tech) + _variable_cost(result, tech)

    kappa = case.policy.rps_fraction if case.policy.rps_covers_h2 else 0.0
    for s in vix.scenarios:
        price = sol.dual_series("power_balance", s)
        h2gen = sol.value_series("h2_gen", s)
        draw = (lam * h2gen
                + h.comp_mwh_per_tonne * sol.value_series("h2_to_store", s))
        # duals carry the scenario weight, so these are weighted totals
        cost += float(price @ draw)
        cost += h.ely_crm_derate * lam * float(
            sol.dual_series("crm", s) @ h2gen)
        if kappa > 0:
            cost += sol.duals.get(f"rps[{s}]", 0.0) * kappa * float(draw.sum())
        for tech in case.technologies:
            if tech.is_ppa_eligible:
                cost -= float(price @ _net_output(sol, tech, s))
    return cost / (tonnes * 1000.0)


def eac_cost(consumption_mwh_per_tonne: float, certificate_share: float,
             price_per_mwh: float) -> float:
    """Certificate cost of covering a share of consumption, $/kg."""
    for v in (consumption_mwh_per_tonne, certificate_share, price_per_mwh):
        if v < 0:
            raise ValueError("certificate cost inputs must be nonnegative")
    return certificate_share * consumption_mwh_per_tonne * price_per_mwh \
        / 1000.0


def robustness_metrics(results: Union[RunResult, Iterable[RunResult]],
                       feas_tol: float = FEAS_TOL) -> RobustnessMetrics:
    """Pool matching violations over one or more dispatch runs.

    A single result gives the per-year statistic; a list pools hours
    across years, which is how a design's overall exposure is quoted.
    """
    if isinstance(results, RunResult):
        results = [results]
    unmet = 0
    slack_total = load_total = 0.0
    for res in results:
        h = res.case.h2
        if h is None:
            raise ValueError(
                f"run {res.plan.label!r} has no hydrogen project")
        for s in res.vix.scenarios:
            try:
                slack = res.solution.value_series("tmr_slack", s)
            except KeyError:
                raise ValueError(
                    f"run {res.plan.label!r} carries no matching slack; "
                    "robustness is measured on dispatch-mode runs") from None
            load = h.ely_mwh_per_tonne * res.solution.value_series("h2_gen", s)
            over = slack > feas_tol
            unmet += int(over.sum())
            slack_total += float(slack[over].sum())
            load_total += float(load[over].sum())
    share = slack_total / load_total if load_total > 0 else 0.0
    return RobustnessMetrics(unmet_hours=unmet, unmatched_share=share)


def _crm_contribution(sol, tech: TechnologySpec, scen, s: int,
                      cap: float, n_hours: int) -> np.ndarray:
    # mirrors the reserve row: thermal counts installed capacity,
    # storage counts net discharge, profile resources derated output
    if tech.kind is TechKind.THERMAL:
        return np.full(n_hours, tech.derate * cap)
    if tech.kind is TechKind.STORAGE:
        return tech.derate * _net_output(sol, tech, s)
    cf = (np.asarray(scen.cf(tech.cf_group), dtype=float)
          if tech.cf_group is not None else np.ones(n_hours))
    return tech.derate * cf * cap


def revenue_stack(result: RunResult) -> dict[str, ResourceRevenue]:
    """Annualized $/MW revenue by source for every installed resource.

    Sources are exactly ``REVENUE_SOURCES``; a resource earns zero from
    any programme it does not participate in. Dedicated resources earn
    matching revenue instead of reserve revenue, and their certificate
    claim is already spoken for, so their RPS line is always zero.
    Resources with no installed capacity are omitted.
    """
    case, sol, vix = result.case, result.solution, result.vix
    policy = case.policy
    stacks: dict[str, ResourceRevenue] = {}
    for tech in case.technologies:
        cap = float(sol.values.get(f"cap_{tech.name}", 0.0))
        if cap <= FEAS_TOL:
            continue
        rev = dict.fromkeys(REVENUE_SOURCES, 0.0)
        for s in vix.scenarios:
            scen = _scenario(case, s)
            qty = _net_output(sol, tech, s)
            rev["electricity sales"] += float(
                sol.dual_series("power_balance", s) @ qty)
            if tech.rps_eligible and not tech.is_ppa_eligible \
                    and policy.rps_fraction > 0:
                rev["RPS"] += (sol.duals.get(f"rps[{s}]", 0.0)
                               * float(qty.sum()))
            if tech.is_ppa_eligible:
                if policy.tmr is TmrPolicy.HOURLY:
                    rev["TMR"] += float(
                        sol.dual_series("tmr_hourly", s) @ qty)
                elif policy.tmr is TmrPolicy.ANNUAL:
                    rev["TMR"] += (sol.duals.get(f"tmr_annual[{s}]", 0.0)
                                   * float(qty.sum()))
            else:
                contribution = _crm_contribution(sol, tech, scen, s, cap,
                                                 vix.n_hours)
                rev["capacity reserve"] += float(
                    sol.dual_series("crm", s) @ contribution)
        total_cost = _fixed_cost(sol, tech) + _variable_cost(result, tech)
        stacks[tech.name] = ResourceRevenue(
            capacity_mw=cap,
            revenue={k: v / cap for k, v in rev.items()},
            total_cost=total_cost / cap)
    return stacks


def tmr_price_histogram(prices, bin_width: float = 10.0,
                        terminal: float = 250.0,
                        ) -> tuple[tuple[str, int], ...]:
    """Count hourly matching prices into fixed-width bins.

    Bins run [0, w), [w, 2w), ... up to the terminal edge; everything at
    or above it lands in the open-ended last bin. Small negative values
    (dual noise on a binding row) count into the first bin.
    """
    if bin_width <= 0 or terminal <= 0:
        raise ValueError("bin width and terminal edge must be positive")
    n_bins = int(round(terminal / bin_width))
    labels = [f"{i * bin_width:g}-{(i + 1) * bin_width:g}"
              for i in range(n_bins)]
    labels.append(f"{terminal:g}+")
    counts = [0] * (n_bins + 1)
    for p in np.asarray(prices, dtype=float).ravel():
        if p >= terminal:
            counts[-1] += 1
        else:
            counts[max(int(p // bin_width), 0)] += 1
    return tuple(zip(labels, counts))


def price_report(result: RunResult) -> PriceReport:
    """Average system prices seen by this run, plus the matching histogram."""
    case, sol, vix = result.case, result.solution, result.vix
    sales = demand_total = capacity = rps = tmr = 0.0
    pooled: list[np.ndarray] = []
    for s in vix.scenarios:
        w = vix.weights[s]
        scen = _scenario(case, s)
        demand = np.asarray(scen.demand.series, dtype=float)
        sales += float(sol.dual_series("power_balance", s) @ demand)
        demand_total += w * float(demand.sum())
        capacity += float(sol.dual_series("crm", s).sum())
        rps += sol.duals.get(f"rps[{s}]", 0.0)
        if not vix.has_h2:
            continue
        if case.policy.tmr is TmrPolicy.HOURLY:
            hourly = sol.dual_series("tmr_hourly", s) / w
            pooled.append(hourly)
            tmr += w * float(hourly.mean())
        elif case.policy.tmr is TmrPolicy.ANNUAL:
            tmr += sol.duals.get(f"tmr_annual[{s}]", 0.0)
    histogram = (tmr_price_histogram(np.concatenate(pooled))
                 if pooled else ())
    return PriceReport(
        energy_per_mwh=sales / demand_total if demand_total > 0 else 0.0,
        capacity_per_mw_year=capacity,
        rps_per_mwh=rps,
        tmr_per_mwh=tmr,
        tmr_histogram=histogram)


def curtailment_by_group(result: RunResult) -> dict[str, float]:
    """Share of available profile-limited energy left unused, per group."""
    case, sol, vix = result.case, result.solution, result.vix
    potential: dict[str, float] = {}
    actual: dict[str, float] = {}
    for tech in case.technologies:
        if tech.kind is not TechKind.VRE or tech.cf_group is None:
            continue
        group = tech.cf_group
        cap = float(sol.values.get(f"cap_{tech.name}", 0.0))
        for s in vix.scenarios:
            w = vix.weights[s]
            cf = np.asarray(_scenario(case, s).cf(group), dtype=float)
            potential[group] = potential.get(group, 0.0) \
                + w * cap * float(cf.sum())
            actual[group] = actual.get(group, 0.0) + w * float(
                sol.value_series(f"gen_{tech.name}", s).sum())
    out = {}
    for group in sorted(potential):
        avail = potential[group]
        if avail <= FEAS_TOL:
            out[group] = 0.0
        else:
            out[group] = min(1.0, max(0.0, 1.0 - actual[group] / avail))
    return out


def case_report(result: RunResult,
                baseline: Optional["CaseReport"] = None,
                oos: Sequence[RunResult] = ()) -> CaseReport:
    """Assemble the full report for one run.

    ``baseline`` (the matching no-hydrogen run's report) switches on
    consequential accounting; ``oos`` dispatch results switch on the
    robustness block.
    """
    sol = result.solution
    has_h2 = result.case.h2 is not None
    report = CaseReport(
        label=result.plan.label,
        capacities={name: float(sol.value(name))
                    for name in result.vix.capacity_variables()},
        generation=annual_generation(result),
        emissions_tco2=emissions_total(result),
        lcoh_per_kg=lcoh(result) if has_h2 else None,
        curtailment=curtailment_by_group(result),
        prices=price_report(result),
        revenue_stacks=revenue_stack(result),
    )
    if baseline is not None and has_h2:
        report.consequential_tco2_per_tonne = consequential_emissions(
            report, baseline, annual_h2_tonnes(result))
    if oos:
        report.robustness = robustness_metrics(oos)
    return report


def report_from_dict(data) -> CaseReport:
    """Rebuild a report from its ``as_dict`` form (report.json metrics)."""
    prices = data.get("prices", {})

    def opt(value):
        return None if value is None else float(value)

    report = CaseReport(
        label=str(data["label"]),
        capacities={k: float(v)
                    for k, v in data.get("capacities", {}).items()},
        generation={k: float(v)
                    for k, v in data.get("generation_mwh", {}).items()},
        emissions_tco2=float(data.get("emissions_tco2", 0.0)),
        lcoh_per_kg=opt(data.get("lcoh_per_kg")),
        curtailment={k: float(v)
                     for k, v in data.get("curtailment", {}).items()},
        prices=PriceReport(
            energy_per_mwh=float(prices.get("energy_per_mwh", 0.0)),
            capacity_per_mw_year=float(prices.get("capacity_per_mw_year",
                                                  0.0)),
            rps_per_mwh=float(prices.get("rps_per_mwh", 0.0)),
            tmr_per_mwh=float(prices.get("tmr_per_mwh", 0.0)),
            tmr_histogram=tuple((str(b), int(c)) for b, c
                                in prices.get("tmr_histogram", ()))),
        revenue_stacks={
            name: ResourceRevenue(
                capacity_mw=float(r["capacity_mw"]),
                revenue={k: float(v) for k, v in r["revenue"].items()},
                total_cost=float(r["total_cost"]))
            for name, r in data.get("revenue_stacks", {}).items()},
        consequential_tco2_per_tonne=opt(
            data.get("consequential_tco2_per_tonne")),
    )
    rb = data.get("robustness")
    if rb is not None:
        report.robustness = RobustnessMetrics(
            unmet_hours=int(rb["unmet_hours"]),
            unmatched_share=float(rb["unmatched_share"]))
    return report


# ---------------------------------------------------------------- tables

def write_comparison_tables(reports: Sequence[CaseReport], out_dir,
                            comment: Optional[str] = None) -> list[Path]:
    """Write the cross-case CSVs; returns the paths written.

    Rows are sorted by case label (and resource name within a case) so
    regeneration from the same reports is byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(reports, key=lambda r: r.label)

    def fmt(x) -> str:
        return "" if x is None else repr(float(x))

    paths = []
    path = out / "emissions_by_case.csv"
    _write_csv(path,
               ("label", "emissions_tco2_per_year",
                "consequential_tco2_per_tonne"),
               [(r.label, fmt(r.emissions_tco2),
                 fmt(r.consequential_tco2_per_tonne)) for r in ordered],
               comment)
    paths.append(path)

    path = out / "lcoh_by_case.csv"
    _write_csv(path, ("label", "lcoh_usd_per_kg"),
               [(r.label, fmt(r.lcoh_per_kg)) for r in ordered], comment)
    paths.append(path)

    path = out / "revenue_stacks.csv"
    rows = []
    for r in ordered:
        for name in sorted(r.revenue_stacks):
            stack = r.revenue_stacks[name]
            rows.append((r.label, name, fmt(stack.capacity_mw),
                         *(fmt(stack.revenue[src])
                           for src in REVENUE_SOURCES),
                         fmt(stack.total_revenue), fmt(stack.total_cost)))
    _write_csv(path,
               ("label", "resource", "capacity_mw", "electricity_sales",
                "rps", "tmr", "capacity_reserve", "total_revenue",
                "total_cost"),
               rows, comment)
    paths.append(path)
    return paths
