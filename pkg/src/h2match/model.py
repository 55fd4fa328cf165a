"""Translate a :class:`SystemCase` into a linear program.

Two-stage structure: capacity variables are shared across weather
scenarios, operational variables and constraints are replicated per
scenario and weighted by scenario probability in the objective. Fixed
O&M rides on capacity (first stage, unweighted); fuel, variable O&M,
start costs, and penalty terms are scenario-weighted.

Row-name conventions (duals are read back out by these names):

    power_balance[s,t]   hourly electricity balance, = demand
    h2_balance[s,t]      hourly hydrogen balance, = offtake
    crm[s,t]             firm-capacity requirement, >=
    rps[s]               clean-energy share of annual demand, >=
    tmr_hourly[s,t]      hourly supply matching for the h2 project, >=
    tmr_annual[s]        annual supply matching, =
    excess_cap[s]        cap on contracted sales above matched load, <=
    soc_<tech>[s,t]      storage state-of-charge recursion, =
    commit_<tech>[s,t]   thermal commitment <= installed capacity

``s`` is the scenario's weather year, ``t`` the 0-based hour. Storage
recursions are cyclic over the modeled horizon.

Dispatch mode re-solves operations with capacities pinned: investment
costs drop out of the objective, and hourly matching gains a priced
slack so that a broken weather year produces a violation signal instead
of an infeasible program. Annual matching is an equality and gets no
such slack; passing ``slack=True`` for it is an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from h2match.domain import (SystemCase, TechKind, TechnologySpec, TmrPolicy)
from h2match.lp import LinearProgram

__all__ = ["VariableIndex", "assemble", "build_balances", "build_thermal",
           "build_vre_and_storage", "build_h2_assets", "build_crm",
           "build_rps", "build_tmr", "build_objective"]


@dataclass
class VariableIndex:
    """Name bookkeeping for one assembled program.

    Knows how every variable family is spelled so that run/analysis code
    never string-formats names itself.
    """

    scenarios: tuple[int, ...]
    n_hours: int
    mode: str
    thermal: tuple[str, ...] = ()
    vre: tuple[str, ...] = ()
    storage: tuple[str, ...] = ()
    hydro: tuple[str, ...] = ()
    ppa: tuple[str, ...] = ()  # subset of vre+storage flagged is_ppa_eligible
    has_h2: bool = False
    weights: dict[int, float] = field(default_factory=dict)
    first_stage: tuple[str, ...] = ()  # filled during assembly

    # first-stage names
    @staticmethod
    def cap(tech: str) -> str:
        return f"cap_{tech}"

    @staticmethod
    def build(tech: str) -> str:
        return f"build_{tech}"

    @staticmethod
    def retire(tech: str) -> str:
        return f"retire_{tech}"

    @staticmethod
    def ecap(tech: str) -> str:
        return f"ecap_{tech}"

    @staticmethod
    def ebuild(tech: str) -> str:
        return f"ebuild_{tech}"

    @staticmethod
    def eretire(tech: str) -> str:
        return f"eretire_{tech}"

    # operational names
    @staticmethod
    def gen(tech: str, s: int, t: int) -> str:
        return f"gen_{tech}[{s},{t}]"

    @staticmethod
    def commit(tech: str, s: int, t: int) -> str:
        return f"commit_{tech}[{s},{t}]"

    @staticmethod
    def start(tech: str, s: int, t: int) -> str:
        return f"start_{tech}[{s},{t}]"

    @staticmethod
    def shut(tech: str, s: int, t: int) -> str:
        return f"shut_{tech}[{s},{t}]"

    @staticmethod
    def charge(tech: str, s: int, t: int) -> str:
        return f"charge_{tech}[{s},{t}]"

    @staticmethod
    def discharge(tech: str, s: int, t: int) -> str:
        return f"discharge_{tech}[{s},{t}]"

    @staticmethod
    def stored(tech: str, s: int, t: int) -> str:
        return f"stored_{tech}[{s},{t}]"

    @staticmethod
    def nse(s: int, t: int) -> str:
        return f"nse[{s},{t}]"

    @staticmethod
    def h2_gen(s: int, t: int) -> str:
        return f"h2_gen[{s},{t}]"

    @staticmethod
    def h2_to_store(s: int, t: int) -> str:
        return f"h2_to_store[{s},{t}]"

    @staticmethod
    def h2_from_store(s: int, t: int) -> str:
        return f"h2_from_store[{s},{t}]"

    @staticmethod
    def h2_stored(s: int, t: int) -> str:
        return f"h2_stored[{s},{t}]"

    @staticmethod
    def h2_nse(s: int, t: int) -> str:
        return f"h2_nse[{s},{t}]"

    @staticmethod
    def tmr_slack(s: int, t: int) -> str:
        return f"tmr_slack[{s},{t}]"

    @staticmethod
    def rps_slack(s: int) -> str:
        return f"rps_slack[{s}]"

    def capacity_variables(self) -> list[str]:
        """All first-stage variable names in assembly order."""
        return list(self.first_stage)


def _iter_st(vix: VariableIndex):
    for s in vix.scenarios:
        for t in range(vix.n_hours):
            yield s, t


def _techs(case: SystemCase, kind: TechKind) -> list[TechnologySpec]:
    return [t for t in case.technologies if t.kind is kind]


def _add_capacity_vars(lp: LinearProgram, vix: VariableIndex,
                       case: SystemCase) -> None:
    first_stage: list[str] = []

    def capacity_block(cap: str, build: str, retire: str, row: str,
                       existing: float, cap_upper: Optional[float],
                       can_expand: bool, can_retire: bool) -> None:
        if not can_expand and not can_retire:
            lp.add_variable(cap, lower=existing, upper=existing)
            first_stage.append(cap)
            return
        lp.add_variable(cap, lower=0.0, upper=cap_upper)
        first_stage.append(cap)
        link = {cap: 1.0}
        if can_expand:
            lp.add_variable(build, lower=0.0)
            first_stage.append(build)
            link[build] = -1.0
        if can_retire:
            lp.add_variable(retire, lower=0.0, upper=existing)
            first_stage.append(retire)
            link[retire] = 1.0
        # installed = existing + additions - retirements
        lp.add_constraint(row, link, "=", existing)

    for tech in case.technologies:
        capacity_block(vix.cap(tech.name), vix.build(tech.name),
                       vix.retire(tech.name), f"cap_def_{tech.name}",
                       tech.existing_capacity, tech.max_capacity,
                       tech.can_expand,
                       tech.can_retire and tech.existing_capacity > 0)
        if tech.kind is TechKind.STORAGE:
            capacity_block(
                vix.ecap(tech.name), vix.ebuild(tech.name),
                vix.eretire(tech.name), f"ecap_def_{tech.name}",
                tech.existing_energy_capacity, None, tech.can_expand,
                tech.can_retire and tech.existing_energy_capacity > 0)
            if tech.min_duration_hours > 0:
                lp.add_constraint(f"duration_min_{tech.name}",
                                  {vix.ecap(tech.name): 1.0,
                                   vix.cap(tech.name):
                                       -tech.min_duration_hours},
                                  ">=", 0.0)
            if tech.max_duration_hours is not None:
                lp.add_constraint(f"duration_max_{tech.name}",
                                  {vix.ecap(tech.name): 1.0,
                                   vix.cap(tech.name):
                                       -tech.max_duration_hours},
                                  "<=", 0.0)
    if case.h2 is not None:
        h = case.h2
        lp.add_variable("cap_ely", lower=0.0)  # MW of electric input
        lp.add_variable("cap_tank", lower=0.0, upper=h.tank_max_tonnes)
        lp.add_variable("cap_comp", lower=0.0)  # t/h routed into the tank
        first_stage += ["cap_ely", "cap_tank", "cap_comp"]
    vix.first_stage = tuple(first_stage)


def build_thermal(lp: LinearProgram, vix: VariableIndex,
                  case: SystemCase) -> None:
    """Commitment-relaxed thermal operation: capacity, output, starts."""
    T = vix.n_hours
    for tech in _techs(case, TechKind.THERMAL):
        g = tech.name
        for s, t in _iter_st(vix):
            lp.add_variable(vix.gen(g, s, t), lower=0.0)
            lp.add_variable(vix.commit(g, s, t), lower=0.0)
            lp.add_variable(vix.start(g, s, t), lower=0.0)
            lp.add_variable(vix.shut(g, s, t), lower=0.0)
        for s, t in _iter_st(vix):
            tm1 = (t - 1) % T
            lp.add_constraint(f"commit_{g}[{s},{t}]",
                              {vix.commit(g, s, t): 1.0,
                               vix.cap(g): -tech.max_availability},
                              "<=", 0.0)
            lp.add_constraint(f"commit_track_{g}[{s},{t}]",
                              {vix.commit(g, s, t): 1.0,
                               vix.commit(g, s, tm1): -1.0,
                               vix.start(g, s, t): -1.0,
                               vix.shut(g, s, t): 1.0}, "=", 0.0)
            lp.add_constraint(f"gen_max_{g}[{s},{t}]",
                              {vix.gen(g, s, t): 1.0,
                               vix.commit(g, s, t): -1.0}, "<=", 0.0)
            lp.add_constraint(f"gen_min_{g}[{s},{t}]",
                              {vix.gen(g, s, t): 1.0,
                               vix.commit(g, s, t):
                                   -tech.min_stable_fraction}, ">=", 0.0)
            lp.add_constraint(f"ramp_up_{g}[{s},{t}]",
                              {vix.gen(g, s, t): 1.0,
                               vix.gen(g, s, tm1): -1.0,
                               vix.commit(g, s, t): -tech.ramp_fraction},
                              "<=", 0.0)
            lp.add_constraint(f"ramp_dn_{g}[{s},{t}]",
                              {vix.gen(g, s, tm1): 1.0,
                               vix.gen(g, s, t): -1.0,
                               vix.commit(g, s, tm1): -tech.ramp_fraction},
                              "<=", 0.0)


def build_vre_and_storage(lp: LinearProgram, vix: VariableIndex,
                          case: SystemCase) -> None:
    """Profile-limited generation plus cyclic storage recursions."""
    T = vix.n_hours
    for tech in (*_techs(case, TechKind.VRE), *_techs(case, TechKind.HYDRO)):
        g = tech.name
        for s in vix.scenarios:
            scen = next(sc for sc in case.scenarios if sc.year == s)
            cf = (scen.cf(tech.cf_group) if tech.cf_group is not None
                  else (1.0,) * T)
            for t in range(T):
                lp.add_variable(vix.gen(g, s, t), lower=0.0)
                lp.add_constraint(f"avail_{g}[{s},{t}]",
                                  {vix.gen(g, s, t): 1.0,
                                   vix.cap(g): -float(cf[t])}, "<=", 0.0)
                if tech.min_output_fraction > 0:
                    lp.add_constraint(
                        f"gen_min_{g}[{s},{t}]",
                        {vix.gen(g, s, t): 1.0,
                         vix.cap(g):
                             -tech.min_output_fraction * float(cf[t])},
                        ">=", 0.0)

    for tech in _techs(case, TechKind.STORAGE):
        g = tech.name
        keep = 1.0 - tech.self_discharge
        for s, t in _iter_st(vix):
            lp.add_variable(vix.charge(g, s, t), lower=0.0)
            lp.add_variable(vix.discharge(g, s, t), lower=0.0)
            lp.add_variable(vix.stored(g, s, t), lower=0.0)
        for s, t in _iter_st(vix):
            tm1 = (t - 1) % T
            lp.add_constraint(f"soc_{g}[{s},{t}]",
                              {vix.stored(g, s, t): 1.0,
                               vix.stored(g, s, tm1): -keep,
                               vix.charge(g, s, t):
                                   -tech.charge_efficiency,
                               vix.discharge(g, s, t):
                                   1.0 / tech.discharge_efficiency},
                              "=", 0.0)
            lp.add_constraint(f"charge_cap_{g}[{s},{t}]",
                              {vix.charge(g, s, t): 1.0,
                               vix.cap(g): -1.0}, "<=", 0.0)
            lp.add_constraint(f"discharge_cap_{g}[{s},{t}]",
                              {vix.discharge(g, s, t): 1.0,
                               vix.cap(g): -1.0}, "<=", 0.0)
            lp.add_constraint(f"soc_cap_{g}[{s},{t}]",
                              {vix.stored(g, s, t): 1.0,
                               vix.ecap(g): -1.0}, "<=", 0.0)
            if tech.min_soc_fraction > 0:
                lp.add_constraint(f"soc_min_{g}[{s},{t}]",
                                  {vix.stored(g, s, t): 1.0,
                                   vix.ecap(g): -tech.min_soc_fraction},
                                  ">=", 0.0)


def build_h2_assets(lp: LinearProgram, vix: VariableIndex,
                    case: SystemCase) -> None:
    """Electrolyzer, compressor, and tank operation plus hydrogen balance."""
    if case.h2 is None:
        return
    h = case.h2
    T = vix.n_hours
    for s, t in _iter_st(vix):
        lp.add_variable(vix.h2_gen(s, t), lower=0.0)
        lp.add_variable(vix.h2_to_store(s, t), lower=0.0)
        lp.add_variable(vix.h2_from_store(s, t), lower=0.0)
        lp.add_variable(vix.h2_stored(s, t), lower=0.0)
        lp.add_variable(vix.h2_nse(s, t), lower=0.0,
                        upper=h.demand_tonnes_per_hour)
    keep = 1.0 - h.tank_self_discharge
    for s, t in _iter_st(vix):
        tm1 = (t - 1) % T
        lp.add_constraint(f"h2_balance[{s},{t}]",
                          {vix.h2_gen(s, t): 1.0,
                           vix.h2_to_store(s, t): -1.0,
                           vix.h2_from_store(s, t): 1.0,
                           vix.h2_nse(s, t): 1.0},
                          "=", h.demand_tonnes_per_hour)
        lp.add_constraint(f"h2_soc[{s},{t}]",
                          {vix.h2_stored(s, t): 1.0,
                           vix.h2_stored(s, tm1): -keep,
                           vix.h2_to_store(s, t): -1.0,
                           vix.h2_from_store(s, t): 1.0},
                          "=", 0.0)
        # cap_ely is MW of electric input: production times specific
        # consumption must fit inside the available electric capacity
        lam = h.ely_mwh_per_tonne
        lp.add_constraint(f"ely_cap[{s},{t}]",
                          {vix.h2_gen(s, t): lam,
                           "cap_ely": -h.ely_availability}, "<=", 0.0)
        lp.add_constraint(f"comp_cap[{s},{t}]",
                          {vix.h2_to_store(s, t): 1.0, "cap_comp": -1.0},
                          "<=", 0.0)
        lp.add_constraint(f"h2_soc_cap[{s},{t}]",
                          {vix.h2_stored(s, t): 1.0, "cap_tank": -1.0},
                          "<=", 0.0)
        if h.ely_min_fraction > 0:
            lp.add_constraint(f"ely_min[{s},{t}]",
                              {vix.h2_gen(s, t): 1.0,
                               "cap_ely": -h.ely_min_fraction / lam},
                              ">=", 0.0)
        if h.ely_ramp_fraction < 1.0:
            lp.add_constraint(f"ely_ramp_up[{s},{t}]",
                              {vix.h2_gen(s, t): 1.0,
                               vix.h2_gen(s, tm1): -1.0,
                               "cap_ely": -h.ely_ramp_fraction / lam},
                              "<=", 0.0)
            lp.add_constraint(f"ely_ramp_dn[{s},{t}]",
                              {vix.h2_gen(s, tm1): 1.0,
                               vix.h2_gen(s, t): -1.0,
                               "cap_ely": -h.ely_ramp_fraction / lam},
                              "<=", 0.0)


def build_balances(lp: LinearProgram, vix: VariableIndex,
                   case: SystemCase) -> None:
    """Hourly electricity balance tying every resource to demand."""
    h = case.h2
    for s in vix.scenarios:
        scen = next(sc for sc in case.scenarios if sc.year == s)
        for t in range(vix.n_hours):
            demand = float(scen.demand.series[t])
            coeffs: dict[str, float] = {}
            for tech in case.technologies:
                if tech.kind is TechKind.STORAGE:
                    coeffs[vix.discharge(tech.name, s, t)] = 1.0
                    coeffs[vix.charge(tech.name, s, t)] = -1.0
                else:
                    coeffs[vix.gen(tech.name, s, t)] = 1.0
            lp.add_variable(vix.nse(s, t), lower=0.0, upper=demand)
            coeffs[vix.nse(s, t)] = 1.0
            if h is not None:
                coeffs[vix.h2_gen(s, t)] = -h.ely_mwh_per_tonne
                coeffs[vix.h2_to_store(s, t)] = -h.comp_mwh_per_tonne
            lp.add_constraint(f"power_balance[{s},{t}]", coeffs, "=", demand)


def build_crm(lp: LinearProgram, vix: VariableIndex,
              case: SystemCase) -> None:
    """Firm capacity (derated) must exceed demand plus a reserve margin.

    Dedicated (PPA) resources are carved out: their capacity backs the
    hydrogen supply contract, not system adequacy. The electrolyzer's
    draw enters as extra load, derated by its own availability factor.
    """
    margin = 1.0 + case.policy.crm_reserve_margin
    h = case.h2
    for s in vix.scenarios:
        scen = next(sc for sc in case.scenarios if sc.year == s)
        for t in range(vix.n_hours):
            coeffs: dict[str, float] = {}
            for tech in case.technologies:
                if tech.is_ppa_eligible:
                    continue
                if tech.kind is TechKind.THERMAL:
                    coeffs[vix.cap(tech.name)] = tech.derate
                elif tech.kind is TechKind.STORAGE:
                    coeffs[vix.discharge(tech.name, s, t)] = tech.derate
                    coeffs[vix.charge(tech.name, s, t)] = -tech.derate
                else:  # profile-limited: derated available output
                    cf = (scen.cf(tech.cf_group)[t]
                          if tech.cf_group is not None else 1.0)
                    coeffs[vix.cap(tech.name)] = \
                        coeffs.get(vix.cap(tech.name), 0.0) \
                        + tech.derate * float(cf)
            if h is not None:
                coeffs[vix.h2_gen(s, t)] = \
                    -h.ely_crm_derate * h.ely_mwh_per_tonne
            rhs = margin * float(scen.demand.series[t])
            lp.add_constraint(f"crm[{s},{t}]", coeffs, ">=", rhs)


def build_rps(lp: LinearProgram, vix: VariableIndex,
              case: SystemCase) -> None:
    """Annual clean-energy share with a priced shortfall slack.

    Dedicated (PPA) generation never counts: it is already claimed by the
    matching requirement. With ``rps_covers_h2`` the electrolyzer and
    compressor loads join the demand base the share applies to.
    """
    kappa = case.policy.rps_fraction
    if kappa <= 0:
        return
    h = case.h2
    for s in vix.scenarios:
        scen = next(sc for sc in case.scenarios if sc.year == s)
        coeffs: dict[str, float] = {}
        for tech in case.technologies:
            if not tech.rps_eligible or tech.is_ppa_eligible:
                continue
            for t in range(vix.n_hours):
                coeffs[vix.gen(tech.name, s, t)] = 1.0
        lp.add_variable(vix.rps_slack(s), lower=0.0)
        coeffs[vix.rps_slack(s)] = 1.0
        rhs = kappa * scen.demand.total
        if h is not None and case.policy.rps_covers_h2:
            for t in range(vix.n_hours):
                coeffs[vix.h2_gen(s, t)] = \
                    coeffs.get(vix.h2_gen(s, t), 0.0) \
                    - kappa * h.ely_mwh_per_tonne
                coeffs[vix.h2_to_store(s, t)] = \
                    coeffs.get(vix.h2_to_store(s, t), 0.0) \
                    - kappa * h.comp_mwh_per_tonne
        lp.add_constraint(f"rps[{s}]", coeffs, ">=", rhs)


def _ppa_supply_terms(vix: VariableIndex, case: SystemCase, s: int,
                      t: int) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    for tech in case.technologies:
        if not tech.is_ppa_eligible:
            continue
        if tech.kind is TechKind.STORAGE:
            coeffs[vix.discharge(tech.name, s, t)] = 1.0
            coeffs[vix.charge(tech.name, s, t)] = -1.0
        else:
            coeffs[vix.gen(tech.name, s, t)] = 1.0
    return coeffs


def build_tmr(lp: LinearProgram, vix: VariableIndex, case: SystemCase,
              mode: str = "design", slack: Optional[bool] = None) -> None:
    """Time-matching requirement on dedicated supply.

    Hourly: dedicated net supply must cover ``tmr_fraction`` of the
    electrolyzer draw hour by hour, with total contracted sales capped a
    fraction above the matched consumption. Annual: an exact energy
    match per scenario. In dispatch mode the hourly form gains a priced
    slack so infeasibility shows up as violation hours; the annual form
    is an accounting identity and ``slack=True`` is refused for it.
    """
    policy = case.policy
    if policy.tmr is TmrPolicy.NONE:
        return
    h = case.h2
    if h is None:
        raise ValueError("time-matching requires a hydrogen project")
    if slack is None:
        slack = (mode == "dispatch" and policy.tmr is TmrPolicy.HOURLY)
    if slack and policy.tmr is TmrPolicy.ANNUAL:
        raise ValueError("annual matching is an exact identity; it has no "
                         "priced slack")

    load = policy.tmr_fraction * h.ely_mwh_per_tonne
    if policy.tmr is TmrPolicy.HOURLY:
        for s, t in _iter_st(vix):
            coeffs = _ppa_supply_terms(vix, case, s, t)
            coeffs[vix.h2_gen(s, t)] = -load
            if slack:
                lp.add_variable(vix.tmr_slack(s, t), lower=0.0)
                coeffs[vix.tmr_slack(s, t)] = 1.0
            lp.add_constraint(f"tmr_hourly[{s},{t}]", coeffs, ">=", 0.0)
        beta = policy.effective_excess_cap()
        if beta != float("inf"):
            for s in vix.scenarios:
                coeffs = {}
                for t in range(vix.n_hours):
                    for name, v in _ppa_supply_terms(vix, case, s,
                                                     t).items():
                        coeffs[name] = v
                    coeffs[vix.h2_gen(s, t)] = \
                        -(1.0 + beta) * h.ely_mwh_per_tonne
                lp.add_constraint(f"excess_cap[{s}]", coeffs, "<=", 0.0)
    else:  # annual
        for s in vix.scenarios:
            coeffs = {}
            for t in range(vix.n_hours):
                for name, v in _ppa_supply_terms(vix, case, s, t).items():
                    coeffs[name] = v
                coeffs[vix.h2_gen(s, t)] = -load
            lp.add_constraint(f"tmr_annual[{s}]", coeffs, "=", 0.0)


def build_objective(lp: LinearProgram, vix: VariableIndex, case: SystemCase,
                    mode: str = "design") -> None:
    """Investment (design mode only) plus weighted operating cost."""
    if mode == "design":
        for tech in case.technologies:
            lp.add_cost(vix.cap(tech.name), tech.fom)
            if tech.can_expand:
                lp.add_cost(vix.build(tech.name), tech.capex_annualized)
            if tech.kind is TechKind.STORAGE:
                lp.add_cost(vix.ecap(tech.name), tech.energy_fom)
                if tech.can_expand:
                    lp.add_cost(vix.ebuild(tech.name),
                                tech.energy_capex_annualized)
        if case.h2 is not None:
            h = case.h2
            # electrolyzer costs are quoted per t/h of output; the MW
            # variable carries 1/lambda of a t/h, so scale down
            lp.add_cost("cap_ely", (h.ely_capex_annualized + h.ely_fom)
                        / h.ely_mwh_per_tonne)
            lp.add_cost("cap_tank", h.tank_capex_annualized + h.tank_fom)
            lp.add_cost("cap_comp", h.comp_capex_annualized + h.comp_fom)

    policy = case.policy
    for s in vix.scenarios:
        w = vix.weights[s]
        for tech in case.technologies:
            if tech.kind is TechKind.STORAGE:
                if tech.vom:
                    for t in range(vix.n_hours):
                        lp.add_cost(vix.discharge(tech.name, s, t),
                                    w * tech.vom)
                continue
            fuel_price = (case.fuel(tech.fuel).price_per_mmbtu
                          if tech.fuel else 0.0)
            marginal = tech.vom + tech.heat_rate * fuel_price
            if marginal:
                for t in range(vix.n_hours):
                    lp.add_cost(vix.gen(tech.name, s, t), w * marginal)
            if tech.kind is TechKind.THERMAL:
                per_start = tech.start_cost + tech.start_fuel * fuel_price
                if per_start:
                    for t in range(vix.n_hours):
                        lp.add_cost(vix.start(tech.name, s, t),
                                    w * per_start)
        for t in range(vix.n_hours):
            lp.add_cost(vix.nse(s, t), w * policy.voll)
            if case.h2 is not None:
                lp.add_cost(vix.h2_nse(s, t), w * policy.unserved_h2_penalty)
            if lp.has_variable(vix.tmr_slack(s, t)):
                lp.add_cost(vix.tmr_slack(s, t),
                            w * policy.tmr_slack_penalty)
        if lp.has_variable(vix.rps_slack(s)):
            lp.add_cost(vix.rps_slack(s), w * policy.rps_slack_penalty)


def assemble(case: SystemCase, mode: str = "design",
             fixed_capacities: Optional[Mapping[str, float]] = None,
             scenario_years: Optional[tuple[int, ...]] = None,
             ) -> tuple[LinearProgram, VariableIndex]:
    """Build the full program for a case.

    ``mode`` is "design" (capacity choices free, hard matching) or
    "dispatch" (capacities pinned via ``fixed_capacities``, matching
    slack priced). ``scenario_years`` restricts the build to a subset of
    the case's scenarios; design mode renormalizes the selected weights
    to sum to one, dispatch mode weights every scenario at 1.
    """
    if mode not in ("design", "dispatch"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "dispatch" and fixed_capacities is None:
        raise ValueError("dispatch mode requires fixed capacities")

    scenarios = case.scenarios
    if scenario_years is not None:
        by_year = {sc.year: sc for sc in scenarios}
        scenarios = tuple(by_year[y] for y in scenario_years)
    years = tuple(sc.year for sc in scenarios)
    if mode == "dispatch":
        weights = {sc.year: 1.0 for sc in scenarios}
    else:
        # selecting a subset renormalizes the probability mass, so a
        # single-scenario selection is the deterministic special case
        total = sum(sc.weight for sc in scenarios)
        if total <= 0:
            raise ValueError("selected scenarios carry no weight")
        weights = {sc.year: sc.weight / total for sc in scenarios}

    vix = VariableIndex(
        scenarios=years,
        n_hours=scenarios[0].n_hours if scenarios else 0,
        mode=mode,
        thermal=tuple(t.name for t in _techs(case, TechKind.THERMAL)),
        vre=tuple(t.name for t in _techs(case, TechKind.VRE)),
        storage=tuple(t.name for t in _techs(case, TechKind.STORAGE)),
        hydro=tuple(t.name for t in _techs(case, TechKind.HYDRO)),
        ppa=tuple(t.name for t in case.technologies if t.is_ppa_eligible),
        has_h2=case.h2 is not None,
        weights=weights,
    )

    lp = LinearProgram(name=f"{case.name}_{mode}")

    def step(label, fn, **kw):
        try:
            fn(lp, vix, case, **kw)
        except (KeyError, ValueError) as exc:
            raise type(exc)(f"{label}: {exc}") from exc

    step("capacity", _add_capacity_vars)
    step("build_thermal", build_thermal)
    step("build_vre_and_storage", build_vre_and_storage)
    step("build_h2_assets", build_h2_assets)
    step("build_balances", build_balances)
    step("build_crm", build_crm)
    step("build_rps", build_rps)
    step("build_tmr", build_tmr, mode=mode)
    step("build_objective", build_objective, mode=mode)

    if fixed_capacities is not None:
        for name, value in fixed_capacities.items():
            if lp.has_variable(name):
                lp.set_bounds(name, lower=float(value), upper=float(value))
    return lp, vix
