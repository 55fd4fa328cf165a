"""Metric checks against hand-solved duals and fabricated solutions.

The two-technology toy below is solved on paper first: with wind at
cf (0.5, 1.0) and solar at (1.0, 0.0) against demand (8, 6) and a 25%
reserve margin, the reserve rows pin cap_wind = 7.5 (hour 1) and
cap_solar = 6.25 (hour 0). Wind is the marginal unit in both hours, so
the energy price is its 0.1 variable cost, and working the reduced
costs of the capacity variables gives reserve prices 4.9 and 9.55.
Every revenue line asserted here comes from that arithmetic.
"""

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h2match import analysis
from h2match.analysis import (REVENUE_SOURCES, CaseReport, PriceReport,
                              RobustnessMetrics, annual_generation,
                              annual_h2_tonnes, case_report,
                              consequential_emissions, curtailment_by_group,
                              eac_cost, emissions_total, lcoh, price_report,
                              report_from_dict, revenue_stack,
                              robustness_metrics, tmr_price_histogram,
                              write_comparison_tables)
from h2match.domain import (PolicyConfig, SystemCase, TechKind,
                            TechnologySpec, TmrPolicy)
from h2match.lp import Solution
from h2match.runs import RunPlan, run_design, run_oos

from _cases import GAS, gas_plant, h2_project, mini_case, scenario, week_case

LAM = 54.3


@pytest.fixture(scope="module")
def week_none():
    return run_design(RunPlan(label="week_none", case=week_case(),
                              mode="stochastic", solver="external"))


@pytest.fixture(scope="module")
def week_hourly():
    return run_design(RunPlan(label="week_hourly",
                              case=week_case(tmr=TmrPolicy.HOURLY),
                              mode="stochastic", solver="external"))


def _fake_result(case, values, duals=None, weights=None, label="fake"):
    years = tuple(sc.year for sc in case.scenarios)
    vix = SimpleNamespace(scenarios=years,
                          weights=weights or {y: 1.0 for y in years},
                          n_hours=case.scenarios[0].n_hours,
                          has_h2=case.h2 is not None)
    sol = Solution(status="optimal", objective=0.0, values=values,
                   duals=dict(duals or {}), reduced_costs={})
    return SimpleNamespace(case=case, vix=vix, solution=sol,
                           plan=SimpleNamespace(label=label,
                                                mode="stochastic"))


# -- certificate arithmetic -------------------------------------------------------

def test_certificate_cost_arithmetic():
    assert eac_cost(50.0, 0.5, 40.0) == pytest.approx(1.0)
    assert eac_cost(55.01, 0.0, 999.0) == 0.0
    # linear in each argument
    assert eac_cost(50.0, 1.0, 40.0) == pytest.approx(2 * eac_cost(50.0, 0.5,
                                                                   40.0))
    with pytest.raises(ValueError, match="nonnegative"):
        eac_cost(-1.0, 0.5, 40.0)
    with pytest.raises(ValueError, match="nonnegative"):
        eac_cost(50.0, 0.5, -40.0)


# -- hand-solved revenue stack ----------------------------------------------------

def _two_hour_toy() -> SystemCase:
    wind = TechnologySpec(name="wind", kind=TechKind.VRE,
                          capex_annualized=9.0, fom=3.0, vom=0.1,
                          cf_group="wind")
    solar = TechnologySpec(name="solar", kind=TechKind.VRE,
                           capex_annualized=3.0, fom=2.0, cf_group="sun")
    # never worth building; must be left out of the revenue report
    diesel = gas_plant(name="diesel", capex_annualized=1.0e6, fom=1.0e5)
    scen = scenario(2020, 1.0, (8.0, 6.0), wind=(0.5, 1.0), sun=(1.0, 0.0))
    return SystemCase(name="toy", technologies=(wind, solar, diesel),
                      fuels=(GAS,), scenarios=(scen,),
                      policy=PolicyConfig(crm_reserve_margin=0.25))


@pytest.fixture(scope="module")
def toy_run():
    return run_design(RunPlan(label="toy", case=_two_hour_toy(),
                              mode="stochastic"))


def test_toy_solution_matches_paper_arithmetic(toy_run):
    sol = toy_run.solution
    assert sol.objective == pytest.approx(122.025, abs=1e-8)
    assert sol.value("cap_wind") == pytest.approx(7.5, abs=1e-9)
    assert sol.value("cap_solar") == pytest.approx(6.25, abs=1e-9)
    assert sol.value("cap_diesel") == pytest.approx(0.0, abs=1e-9)
    assert sol.dual("power_balance[2020,0]") == pytest.approx(0.1, abs=1e-9)
    assert sol.dual("power_balance[2020,1]") == pytest.approx(0.1, abs=1e-9)
    assert sol.dual("crm[2020,0]") == pytest.approx(4.9, abs=1e-9)
    assert sol.dual("crm[2020,1]") == pytest.approx(9.55, abs=1e-9)


def test_revenue_stack_matches_hand_computation(toy_run):
    stacks = revenue_stack(toy_run)
    assert set(stacks) == {"wind", "solar"}  # diesel unbuilt, excluded

    wind = stacks["wind"]
    assert set(wind.revenue) == set(REVENUE_SOURCES)
    # sales: 0.1 x (1.75 + 6) MWh over 7.5 MW
    assert wind.revenue["electricity sales"] == pytest.approx(0.775 / 7.5)
    # reserve: 4.9 x 3.75 + 9.55 x 7.5 derated MW-hours, per MW
    assert wind.revenue["capacity reserve"] == pytest.approx(12.0)
    assert wind.revenue["RPS"] == 0.0
    assert wind.revenue["TMR"] == 0.0
    assert wind.total_cost == pytest.approx((90.0 + 0.775) / 7.5)
    assert wind.total_revenue == pytest.approx(wind.total_cost)

    solar = stacks["solar"]
    assert solar.revenue["electricity sales"] == pytest.approx(0.1)
    assert solar.revenue["capacity reserve"] == pytest.approx(4.9)
    assert solar.total_revenue == pytest.approx(5.0)
    assert solar.total_cost == pytest.approx(5.0)


def test_toy_price_report(toy_run):
    prices = price_report(toy_run)
    assert prices.energy_per_mwh == pytest.approx(0.1, abs=1e-9)
    assert prices.capacity_per_mw_year == pytest.approx(14.45, abs=1e-8)
    assert prices.rps_per_mwh == 0.0
    assert prices.tmr_per_mwh == 0.0
    assert prices.tmr_histogram == ()


# -- emissions and generation ------------------------------------------------------

def test_emissions_from_known_burn():
    case = SystemCase(name="burn", technologies=(gas_plant(),), fuels=(GAS,),
                      scenarios=(scenario(2011, 1.0, (10.0, 20.0)),))
    fake = _fake_result(case, {
        "gen_gas[2011,0]": 10.0, "gen_gas[2011,1]": 20.0,
        "start_gas[2011,0]": 1.0, "start_gas[2011,1]": 0.0,
    }, weights={2011: 0.25})
    expected = 0.25 * 0.05306 * (9.71 * 30.0 + 8.155 * 1.0)
    assert emissions_total(fake) == pytest.approx(expected)


def test_consequential_accounting_is_antisymmetric():
    def rep(emissions):
        return CaseReport(label="x", capacities={}, generation={},
                          emissions_tco2=emissions, lcoh_per_kg=None,
                          curtailment={}, prices=PriceReport(0, 0, 0, 0),
                          revenue_stacks={})
    a, b = rep(120.0), rep(90.0)
    assert consequential_emissions(a, b, 10.0) == pytest.approx(3.0)
    assert consequential_emissions(b, a, 10.0) == pytest.approx(
        -consequential_emissions(a, b, 10.0))
    with pytest.raises(ValueError, match="positive"):
        consequential_emissions(a, b, 0.0)


def test_weighted_h2_production():
    case = week_case()
    h2 = {f"h2_gen[2030,{t}]": 0.0 for t in range(168)}
    h2["h2_gen[2030,0]"] = 0.6
    h2["h2_gen[2030,1]"] = 0.4
    fake = _fake_result(case, h2, weights={2030: 0.5})
    assert annual_h2_tonnes(fake) == pytest.approx(0.5)


def test_generation_accounting_closes_the_power_balance(week_hourly):
    result = week_hourly
    gen = annual_generation(result)
    sol, vix, h = result.solution, result.vix, result.case.h2
    served = sum(gen.values())
    load = 0.0
    for s in vix.scenarios:
        w = vix.weights[s]
        scen = next(sc for sc in result.case.scenarios if sc.year == s)
        served += w * float(sol.value_series("nse", s).sum())
        load += w * (sum(scen.demand.series)
                     + LAM * float(sol.value_series("h2_gen", s).sum())
                     + 0.71 * float(sol.value_series("h2_to_store", s).sum()))
    assert served == pytest.approx(load, rel=1e-9)


def test_curtailment_from_known_dispatch():
    case = SystemCase(
        name="curt",
        technologies=(TechnologySpec(name="wind", kind=TechKind.VRE,
                                     cf_group="wind"),),
        fuels=(), scenarios=(scenario(2011, 1.0, (5.0, 5.0),
                                      wind=(0.5, 1.0)),))
    fake = _fake_result(case, {"cap_wind": 10.0, "gen_wind[2011,0]": 5.0,
                               "gen_wind[2011,1]": 5.0})
    # available 15 MWh, used 10
    assert curtailment_by_group(fake) == {"wind": pytest.approx(1.0 / 3.0)}


def test_curtailment_stays_in_bounds(week_hourly):
    for group, frac in curtailment_by_group(week_hourly).items():
        assert 0.0 <= frac <= 1.0, group


# -- hydrogen cost ------------------------------------------------------------------

def test_lcoh_equals_the_hydrogen_shadow_price(week_none, week_hourly):
    """With everything newly built, no scarcity rents exist anywhere, so
    the project's full booked cost must equal the shadow value of its
    demand: lcoh x tonnes x 1000 = sum of h2-balance duals x offtake."""
    for result in (week_none, week_hourly):
        sol, vix = result.solution, result.vix
        for s in vix.scenarios:  # preconditions: nothing unserved
            assert float(sol.value_series("h2_nse", s).sum()) <= 1e-9
            assert float(sol.value_series("nse", s).sum()) <= 1e-9
        shadow = sum(
            float(sol.dual_series("h2_balance", s).sum())
            * result.case.h2.demand_tonnes_per_hour
            for s in vix.scenarios)
        tonnes = annual_h2_tonnes(result)
        assert lcoh(result) == pytest.approx(shadow / (tonnes * 1000.0),
                                             rel=1e-6)


def test_lcoh_error_paths():
    baseline = run_design(RunPlan(label="b", case=mini_case(years=(2011,)),
                                  mode="baseline"))
    with pytest.raises(ValueError, match="no hydrogen project"):
        lcoh(baseline)

    case = week_case()
    priced_out = SystemCase(
        name="idle", technologies=case.technologies, fuels=case.fuels,
        scenarios=case.scenarios, policy=case.policy,
        h2=h2_project(ely_capex_annualized=1.0e12))
    run = run_design(RunPlan(label="idle", case=priced_out,
                             mode="stochastic", solver="external"))
    assert annual_h2_tonnes(run) <= 1e-9  # penalty beats building
    with pytest.raises(ValueError, match="produced no hydrogen"):
        lcoh(run)


def test_cost_recovery_is_exact_without_matching(week_none):
    # all-new-build interior optimum, no binding sales cap: every
    # resource's books close exactly, not just from below
    for name, stack in revenue_stack(week_none).items():
        scale = max(abs(stack.total_cost), 1.0)
        assert abs(stack.total_revenue - stack.total_cost) <= 1e-4 * scale, \
            name


def test_ppa_rent_appears_under_a_binding_sales_cap(week_hourly):
    stacks = revenue_stack(week_hourly)
    assert stacks["ppa_wind"].capacity_mw > 1.0
    for name, stack in stacks.items():
        scale = max(abs(stack.total_cost), 1.0)
        gap = stack.total_revenue - stack.total_cost
        assert gap >= -1e-4 * scale, (name, gap)
        if name.startswith("ppa_"):
            assert stack.revenue["RPS"] == 0.0
            assert stack.revenue["capacity reserve"] == 0.0
        else:
            assert stack.revenue["TMR"] == 0.0
            # the cap constrains the contract, not the grid resource
            assert abs(gap) <= 1e-4 * scale, (name, gap)
    # capped contracted sales force the project to pay its dedicated
    # supply above cost; that premium is the matching rent
    wind = stacks["ppa_wind"]
    assert wind.total_revenue - wind.total_cost > 1.0
    assert wind.revenue["TMR"] > 0.0


# -- robustness --------------------------------------------------------------------

def test_robustness_pools_slack_hours():
    case = week_case(tmr=TmrPolicy.HOURLY)
    values = {}
    for t in range(168):
        values[f"tmr_slack[2030,{t}]"] = 0.0
        values[f"h2_gen[2030,{t}]"] = 100.0 / LAM if t < 2 else 50.0 / LAM
    values["tmr_slack[2030,0]"] = 10.0
    values["tmr_slack[2030,2]"] = 5.0
    fake = _fake_result(case, values)

    metrics = robustness_metrics([fake])
    assert metrics.unmet_hours == 2
    assert metrics.unmatched_share == pytest.approx(15.0 / 150.0)
    # pooling two identical years doubles hours, not the share
    both = robustness_metrics([fake, fake])
    assert both.unmet_hours == 4
    assert both.unmatched_share == pytest.approx(0.10)


def test_robustness_zero_slack_is_a_clean_bill():
    case = week_case(tmr=TmrPolicy.HOURLY)
    values = {f"tmr_slack[2030,{t}]": 0.0 for t in range(168)}
    values.update({f"h2_gen[2030,{t}]": 1.0 / LAM for t in range(168)})
    metrics = robustness_metrics([_fake_result(case, values)])
    assert metrics == RobustnessMetrics(unmet_hours=0, unmatched_share=0.0)


def test_robustness_requires_dispatch_mode(week_hourly):
    with pytest.raises(ValueError, match="no matching slack"):
        robustness_metrics(week_hourly)  # design run, hard constraint


# -- prices ------------------------------------------------------------------------

def test_matching_price_histogram_oracle():
    hist = tmr_price_histogram([0.0, 0.0, 25.0, 249.99, 250.0, 10_000.0])
    assert len(hist) == 26
    assert hist[0] == ("0-10", 2)
    assert hist[2] == ("20-30", 1)
    assert hist[24] == ("240-250", 1)
    assert hist[25] == ("250+", 2)
    # binding-row dual noise lands in the first bin, not out of range
    assert tmr_price_histogram([-1e-9])[0][1] == 1
    with pytest.raises(ValueError, match="positive"):
        tmr_price_histogram([1.0], bin_width=0.0)


def test_histogram_of_one_spike_year():
    prices = [0.0] * 8759 + [300.0]
    hist = dict(tmr_price_histogram(prices))
    assert hist["0-10"] == 8759
    assert hist["250+"] == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5.0, 1e4, allow_nan=False), max_size=400))
def test_histogram_conserves_the_hour_count(prices):
    hist = tmr_price_histogram(prices)
    assert sum(count for _, count in hist) == len(prices)
    assert all(count >= 0 for _, count in hist)


def test_nonbinding_clean_energy_share_prices_at_zero():
    case = mini_case(tmr=TmrPolicy.NONE, rps=0.05)
    result = run_design(RunPlan(label="slack_rps", case=case,
                                mode="stochastic"))
    sol, vix = result.solution, result.vix
    for s in vix.scenarios:
        eligible = float(sol.value_series("gen_grid_wind", s).sum())
        scen = next(sc for sc in case.scenarios if sc.year == s)
        margin = eligible - 0.05 * scen.demand.total
        assert margin > 1e-6  # precondition: the row really is slack
        assert abs(sol.dual(f"rps[{s}]")) <= 1e-9
    assert price_report(result).rps_per_mwh == pytest.approx(0.0, abs=1e-9)


def test_hourly_matching_prices_feed_the_report(week_hourly):
    prices = price_report(week_hourly)
    counts = dict(prices.tmr_histogram)
    assert sum(counts.values()) == 168
    assert prices.tmr_histogram[-1][0] == "250+"
    duals = week_hourly.solution.dual_series("tmr_hourly", 2030)
    assert prices.tmr_per_mwh == pytest.approx(float(duals.mean()))
    assert prices.energy_per_mwh > 0.0


# -- report assembly ----------------------------------------------------------------

def test_case_report_round_trips_through_json(week_hourly):
    oos = run_oos(week_hourly.case, week_hourly.design,
                  list(week_hourly.case.scenarios), solver="external")
    baseline = CaseReport(label="base", capacities={}, generation={},
                          emissions_tco2=50.0, lcoh_per_kg=None,
                          curtailment={}, prices=PriceReport(0, 0, 0, 0),
                          revenue_stacks={})
    report = case_report(week_hourly, baseline=baseline, oos=oos)
    assert report.consequential_tco2_per_tonne is not None
    assert report.robustness is not None
    assert report_from_dict(report.as_dict()) == report

    bare = case_report(week_hourly)
    assert bare.consequential_tco2_per_tonne is None
    assert bare.robustness is None
    assert report_from_dict(bare.as_dict()) == bare


def test_comparison_tables_are_deterministic(tmp_path):
    def rep(label, emissions, lcoh_value):
        return CaseReport(
            label=label, capacities={}, generation={},
            emissions_tco2=emissions, lcoh_per_kg=lcoh_value,
            curtailment={}, prices=PriceReport(0, 0, 0, 0),
            revenue_stacks={"wind": analysis.ResourceRevenue(
                capacity_mw=2.0,
                revenue={"electricity sales": 3.0, "RPS": 1.0, "TMR": 0.0,
                         "capacity reserve": 0.5},
                total_cost=4.5)})

    reports = [rep("zeta", 10.0, 4.0), rep("alpha", 20.0, None)]
    paths = write_comparison_tables(reports, tmp_path / "a",
                                    comment="config=x seed=1")
    assert [p.name for p in paths] == ["emissions_by_case.csv",
                                       "lcoh_by_case.csv",
                                       "revenue_stacks.csv"]
    lines = paths[1].read_text().splitlines()
    assert lines[0] == "# config=x seed=1"
    assert lines[1] == "label,lcoh_usd_per_kg"
    assert lines[2].startswith("alpha,")  # sorted, None -> empty field
    assert lines[2] == "alpha,"
    assert lines[3] == "zeta,4.0"

    stacks = paths[2].read_text().splitlines()
    assert stacks[1] == ("label,resource,capacity_mw,electricity_sales,"
                         "rps,tmr,capacity_reserve,total_revenue,total_cost")
    assert stacks[2] == "alpha,wind,2.0,3.0,1.0,0.0,0.5,4.5,4.5"

    again = write_comparison_tables(reports, tmp_path / "b",
                                    comment="config=x seed=1")
    for a, b in zip(paths, again):
        assert a.read_bytes() == b.read_bytes()
