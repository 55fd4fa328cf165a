"""Core value types for electricity + hydrogen capacity planning cases.

Unit conventions used throughout the package:

    power            MW (MWh per hour)
    energy           MWh
    hydrogen         tonnes (t), tonnes/hour for rates
    capacity cost    $/MW-yr (annualized), tank in $/t-yr
    variable cost    $/MWh ($/t for hydrogen penalties)
    fuel             $/MMBtu, heat rates in MMBtu/MWh
    emissions        tCO2 (fuel content in tCO2/MMBtu)

Everything here is a plain frozen dataclass. Construction is cheap and
side-effect free; consistency checks live in :func:`validate_case` so a
partially built case can still be inspected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

__all__ = [
    "TechKind",
    "TmrPolicy",
    "FuelSpec",
    "TechnologySpec",
    "H2ProjectSpec",
    "DemandProfile",
    "WeatherScenario",
    "PolicyConfig",
    "SystemCase",
    "annuitize",
    "validate_case",
    "H2_LHV_MWH_PER_TONNE",
]

# Lower heating value of hydrogen, used only to express electrolyzer power
# capacity (MW of H2 output) in tonne terms where a spec quotes $/MW.
H2_LHV_MWH_PER_TONNE = 33.33


class TechKind(enum.Enum):
    """Dispatch family a technology belongs to."""

    THERMAL = "thermal"
    VRE = "vre"
    STORAGE = "storage"
    HYDRO = "hydro"


class TmrPolicy(enum.Enum):
    """Time-matching requirement applied to the hydrogen project's supply."""

    NONE = "none"
    ANNUAL = "annual"
    HOURLY = "hourly"


@dataclass(frozen=True)
class FuelSpec:
    """A combustible (or fissile) fuel with price and carbon content."""

    name: str
    price_per_mmbtu: float  # $/MMBtu
    co2_per_mmbtu: float = 0.0  # tCO2/MMBtu


@dataclass(frozen=True)
class TechnologySpec:
    """One electricity-sector technology (existing fleet and/or expandable).

    Capacity variables are in MW of rated power. For storage,
    ``existing_energy_capacity`` is MWh and the duration bounds constrain
    the ratio of energy to power capacity built.
    """

    name: str
    kind: TechKind
    # investment / fixed costs, all annualized $/MW-yr unless noted
    capex_annualized: float = 0.0
    energy_capex_annualized: float = 0.0  # storage only, $/MWh-yr
    fom: float = 0.0
    energy_fom: float = 0.0  # storage only, $/MWh-yr
    vom: float = 0.0  # $/MWh generated (discharged for storage)
    # thermal operating characteristics
    heat_rate: float = 0.0  # MMBtu/MWh
    fuel: Optional[str] = None
    start_cost: float = 0.0  # $/MW started
    start_fuel: float = 0.0  # MMBtu/MW started
    min_stable_fraction: float = 0.0  # of committed capacity
    ramp_fraction: float = 1.0  # of committed (or rated) capacity per hour
    max_availability: float = 1.0  # committable share of installed capacity
    # fleet limits
    existing_capacity: float = 0.0  # MW
    existing_energy_capacity: float = 0.0  # MWh, storage only
    max_capacity: Optional[float] = None  # MW cap on total installed
    can_expand: bool = True
    can_retire: bool = False
    # reliability contribution (capacity reserve margin derate)
    derate: float = 1.0
    # renewable profile hookup: key into WeatherScenario.capacity_factors
    cf_group: Optional[str] = None
    # hydro-style must-run floor, fraction of installed capacity
    min_output_fraction: float = 0.0
    # storage characteristics
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    self_discharge: float = 0.0  # fraction of state of charge lost per hour
    min_soc_fraction: float = 0.0
    min_duration_hours: float = 0.0
    max_duration_hours: Optional[float] = None
    # policy membership
    rps_eligible: bool = False
    is_ppa_eligible: bool = False

    def with_(self, **changes) -> "TechnologySpec":
        """Copy with fields replaced; convenience for building variants."""
        return replace(self, **changes)


@dataclass(frozen=True)
class H2ProjectSpec:
    """The co-optimized hydrogen offtaker: electrolyzer, tank, compressor.

    The electrolyzer is sized in tonnes/hour of output; its electric load
    is ``ely_mwh_per_tonne`` times production. Compression between the
    electrolyzer and the tank draws ``comp_mwh_per_tonne`` per tonne routed
    into storage, and the compressor is sized on that flow.
    """

    demand_tonnes_per_hour: float
    # electrolyzer; costs are quoted on output capacity (t/h of H2), the
    # optimization itself sizes the unit in MW of electric input
    ely_capex_annualized: float  # $/(t/h)-yr
    ely_fom: float = 0.0  # $/(t/h)-yr
    ely_mwh_per_tonne: float = 54.3
    ely_availability: float = 1.0
    ely_min_fraction: float = 0.0
    ely_ramp_fraction: float = 1.0
    ely_crm_derate: float = 1.0  # firm-load derate in the reserve constraint
    # storage tank
    tank_capex_annualized: float = 0.0  # $/t-yr
    tank_fom: float = 0.0
    tank_max_tonnes: Optional[float] = None
    tank_self_discharge: float = 0.0
    # compressor
    comp_capex_annualized: float = 0.0  # $/(t/h)-yr
    comp_fom: float = 0.0
    comp_mwh_per_tonne: float = 0.71

    @property
    def demand_mw_equivalent(self) -> float:
        """Electric load at full electrolyzer output serving demand directly."""
        return self.demand_tonnes_per_hour * self.ely_mwh_per_tonne


@dataclass(frozen=True)
class DemandProfile:
    """A named hourly electricity demand series in MWh/h."""

    name: str
    series: tuple[float, ...]

    @staticmethod
    def from_iterable(name: str, values) -> "DemandProfile":
        return DemandProfile(name, tuple(float(v) for v in values))

    def __len__(self) -> int:
        return len(self.series)

    @property
    def peak(self) -> float:
        return max(self.series) if self.series else 0.0

    @property
    def total(self) -> float:
        return float(sum(self.series))


@dataclass(frozen=True)
class WeatherScenario:
    """One weather year: capacity-factor series per profile group + demand.

    ``weight`` is the probability mass the scenario carries in the
    two-stage problem; design runs require weights over all scenarios to
    sum to one.
    """

    year: int
    weight: float
    capacity_factors: Mapping[str, tuple[float, ...]]
    demand: DemandProfile

    @property
    def n_hours(self) -> int:
        return len(self.demand)

    def cf(self, group: str) -> tuple[float, ...]:
        return self.capacity_factors[group]


@dataclass(frozen=True)
class PolicyConfig:
    """Reliability, clean-energy, and time-matching policy knobs."""

    crm_reserve_margin: float = 0.1375  # planning reserve on top of demand
    rps_fraction: float = 0.0  # share of annual demand from eligible VRE
    rps_covers_h2: bool = False  # count hydrogen loads in the RPS base
    tmr: TmrPolicy = TmrPolicy.NONE
    tmr_fraction: float = 1.0  # share of electrolyzer load to be matched
    # cap on contracted energy sold beyond the matched load, as a fraction
    # above annual matched consumption; only meaningful under hourly
    # matching. None picks the standard 0.2; math.inf removes the cap.
    excess_sales_cap: Optional[float] = None
    voll: float = 9_000.0  # $/MWh unserved electricity
    unserved_h2_penalty: float = 5.0e7  # $/t unserved hydrogen
    rps_slack_penalty: float = 1_000.0  # $/MWh of RPS shortfall
    tmr_slack_penalty: float = 500.0  # $/MWh of unmatched load (dispatch mode)

    def effective_excess_cap(self) -> float:
        if self.excess_sales_cap is None:
            return 0.2
        return self.excess_sales_cap


@dataclass(frozen=True)
class SystemCase:
    """A complete planning case: one region, one policy, N weather years."""

    name: str
    technologies: tuple[TechnologySpec, ...]
    fuels: tuple[FuelSpec, ...]
    scenarios: tuple[WeatherScenario, ...]
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    h2: Optional[H2ProjectSpec] = None
    discount_rate: float = 0.04

    def tech(self, name: str) -> TechnologySpec:
        for t in self.technologies:
            if t.name == name:
                return t
        raise KeyError(name)

    def fuel(self, name: str) -> FuelSpec:
        for f in self.fuels:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def n_hours(self) -> int:
        return self.scenarios[0].n_hours if self.scenarios else 0

    def without_h2(self) -> "SystemCase":
        """Counterfactual with the hydrogen project removed.

        Dedicated-supply technologies exist only to serve the matching
        requirement, so they are dropped along with the project and the
        matching policy itself.
        """
        techs = tuple(t for t in self.technologies if not t.is_ppa_eligible)
        pol = replace(self.policy, tmr=TmrPolicy.NONE, excess_sales_cap=None)
        return replace(self, name=self.name + "_no_h2", technologies=techs,
                       h2=None, policy=pol)


def annuitize(capex: float, discount_rate: float, lifetime_years: float) -> float:
    """Annualized cost of an upfront investment over its lifetime.

    Standard capital-recovery factor: ``capex * r / (1 - (1+r)^-L)``.
    A zero discount rate degenerates to straight-line ``capex / L``.
    """
    if lifetime_years <= 0:
        raise ValueError("lifetime must be positive")
    if capex < 0:
        raise ValueError("capex must be nonnegative")
    if discount_rate < 0:
        raise ValueError("discount rate must be nonnegative")
    if discount_rate == 0.0:
        return capex / lifetime_years
    r = discount_rate
    return capex * r / (1.0 - (1.0 + r) ** (-lifetime_years))


def _check_series(errors: list[str], label: str, series: Sequence[float],
                  lo: float = -math.inf, hi: float = math.inf) -> None:
    for i, v in enumerate(series):
        if not math.isfinite(v):
            errors.append(f"{label}: non-finite value at hour {i}")
            return
        if v < lo or v > hi:
            errors.append(f"{label}: value {v} at hour {i} outside [{lo}, {hi}]")
            return


def validate_case(case: SystemCase) -> list[str]:
    """Collect every consistency violation in a case; empty list means valid.

    Pure function: never mutates the case, never raises for bad data (only
    for outright wrong types upstream of it).
    """
    errors: list[str] = []

    if not case.name:
        errors.append("case name must be nonempty")
    if not case.technologies:
        errors.append("case has no technologies")
    if not case.scenarios:
        errors.append("case has no weather scenarios")
    if case.discount_rate < 0:
        errors.append("discount rate must be nonnegative")

    seen = set()
    for t in case.technologies:
        if t.name in seen:
            errors.append(f"duplicate technology name {t.name!r}")
        seen.add(t.name)

    fuel_names = {f.name for f in case.fuels}
    if len(fuel_names) != len(case.fuels):
        errors.append("duplicate fuel name")
    for f in case.fuels:
        if f.price_per_mmbtu < 0:
            errors.append(f"fuel {f.name}: negative price")
        if f.co2_per_mmbtu < 0:
            errors.append(f"fuel {f.name}: negative carbon content")

    for t in case.technologies:
        pre = f"technology {t.name}"
        for fld in ("capex_annualized", "energy_capex_annualized", "fom",
                    "energy_fom", "heat_rate", "start_cost", "start_fuel",
                    "existing_capacity", "existing_energy_capacity"):
            if getattr(t, fld) < 0:
                errors.append(f"{pre}: {fld} must be nonnegative")
        if t.fuel is not None and t.fuel not in fuel_names:
            errors.append(f"{pre}: unknown fuel {t.fuel!r}")
        if t.kind is TechKind.THERMAL and t.heat_rate > 0 and t.fuel is None:
            errors.append(f"{pre}: heat rate without a fuel")
        if not 0.0 <= t.derate <= 1.0:
            errors.append(f"{pre}: derate must lie in [0, 1]")
        if not 0.0 <= t.min_stable_fraction <= 1.0:
            errors.append(f"{pre}: min_stable_fraction must lie in [0, 1]")
        if not 0.0 <= t.max_availability <= 1.0:
            errors.append(f"{pre}: max_availability must lie in [0, 1]")
        if not 0.0 < t.ramp_fraction <= 1.0:
            errors.append(f"{pre}: ramp_fraction must lie in (0, 1]")
        if not 0.0 <= t.min_output_fraction <= 1.0:
            errors.append(f"{pre}: min_output_fraction must lie in [0, 1]")
        if t.max_capacity is not None and t.max_capacity < t.existing_capacity:
            errors.append(f"{pre}: max_capacity below existing fleet")
        if t.kind is TechKind.VRE and t.cf_group is None:
            errors.append(f"{pre}: VRE requires a cf_group")
        if t.kind is TechKind.STORAGE:
            if not 0.0 < t.charge_efficiency <= 1.0:
                errors.append(f"{pre}: charge_efficiency must lie in (0, 1]")
            if not 0.0 < t.discharge_efficiency <= 1.0:
                errors.append(f"{pre}: discharge_efficiency must lie in (0, 1]")
            if not 0.0 <= t.self_discharge < 1.0:
                errors.append(f"{pre}: self_discharge must lie in [0, 1)")
            if not 0.0 <= t.min_soc_fraction < 1.0:
                errors.append(f"{pre}: min_soc_fraction must lie in [0, 1)")
            if t.min_duration_hours < 0:
                errors.append(f"{pre}: min_duration_hours must be nonnegative")
            if (t.max_duration_hours is not None
                    and t.max_duration_hours < t.min_duration_hours):
                errors.append(f"{pre}: duration bounds inverted")
        if t.rps_eligible and t.is_ppa_eligible:
            # Dedicated-supply generation settles against the matching
            # requirement, not the grid clean-energy standard; letting one
            # MWh count for both would double-book it.
            errors.append(f"{pre}: cannot be both rps_eligible and dedicated "
                          "(PPA) supply")

    # scenario block
    total_weight = 0.0
    n_hours: Optional[int] = None
    years = set()
    needed_groups = {t.cf_group for t in case.technologies
                     if t.cf_group is not None}
    for s in case.scenarios:
        pre = f"scenario {s.year}"
        if s.year in years:
            errors.append(f"duplicate scenario year {s.year}")
        years.add(s.year)
        if s.weight < 0:
            errors.append(f"{pre}: negative weight")
        total_weight += s.weight
        if n_hours is None:
            n_hours = s.n_hours
        elif s.n_hours != n_hours:
            errors.append(f"{pre}: demand has {s.n_hours} hours, expected "
                          f"{n_hours}")
        if s.n_hours == 0:
            errors.append(f"{pre}: empty demand series")
        _check_series(errors, f"{pre} demand", s.demand.series, lo=0.0)
        for g in needed_groups:
            if g not in s.capacity_factors:
                errors.append(f"{pre}: missing capacity-factor group {g!r}")
        for g, series in s.capacity_factors.items():
            if len(series) != s.n_hours:
                errors.append(f"{pre}: cf group {g!r} has {len(series)} hours,"
                              f" expected {s.n_hours}")
            _check_series(errors, f"{pre} cf {g!r}", series, lo=0.0, hi=1.0)
    if case.scenarios and abs(total_weight - 1.0) > 1e-9:
        errors.append(f"scenario weights sum to {total_weight!r}, expected 1")

    # policy block
    p = case.policy
    if p.crm_reserve_margin < 0:
        errors.append("policy: reserve margin must be nonnegative")
    if not 0.0 <= p.rps_fraction <= 1.0:
        errors.append("policy: rps_fraction must lie in [0, 1]")
    if not 0.0 <= p.tmr_fraction <= 1.0:
        errors.append("policy: tmr_fraction must lie in [0, 1]")
    for fld in ("voll", "unserved_h2_penalty", "rps_slack_penalty",
                "tmr_slack_penalty"):
        if getattr(p, fld) < 0:
            errors.append(f"policy: {fld} must be nonnegative")
    if p.excess_sales_cap is not None:
        if p.tmr is not TmrPolicy.HOURLY:
            errors.append("policy: excess_sales_cap only applies under "
                          "hourly matching")
        elif p.excess_sales_cap < 0:
            errors.append("policy: excess_sales_cap must be nonnegative")
    if p.tmr is not TmrPolicy.NONE:
        if case.h2 is None:
            errors.append("policy: time-matching requires a hydrogen project")
        if not any(t.is_ppa_eligible for t in case.technologies):
            errors.append("policy: time-matching requires at least one "
                          "dedicated (PPA) supply technology")

    # hydrogen block
    h = case.h2
    if h is not None:
        if h.demand_tonnes_per_hour < 0:
            errors.append("h2: demand must be nonnegative")
        if h.ely_mwh_per_tonne <= 0:
            errors.append("h2: electrolyzer consumption must be positive")
        if h.comp_mwh_per_tonne < 0:
            errors.append("h2: compressor consumption must be nonnegative")
        for fld in ("ely_capex_annualized", "ely_fom", "tank_capex_annualized",
                    "tank_fom", "comp_capex_annualized", "comp_fom"):
            if getattr(h, fld) < 0:
                errors.append(f"h2: {fld} must be nonnegative")
        if not 0.0 <= h.ely_availability <= 1.0:
            errors.append("h2: ely_availability must lie in [0, 1]")
        if not 0.0 <= h.ely_min_fraction <= 1.0:
            errors.append("h2: ely_min_fraction must lie in [0, 1]")
        if not 0.0 < h.ely_ramp_fraction <= 1.0:
            errors.append("h2: ely_ramp_fraction must lie in (0, 1]")
        if not 0.0 <= h.ely_crm_derate <= 1.0:
            errors.append("h2: ely_crm_derate must lie in [0, 1]")
        if not 0.0 <= h.tank_self_discharge < 1.0:
            errors.append("h2: tank_self_discharge must lie in [0, 1)")
        if h.tank_max_tonnes is not None and h.tank_max_tonnes < 0:
            errors.append("h2: tank_max_tonnes must be nonnegative")

    return errors
