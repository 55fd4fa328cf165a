import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h2match.lp import LinearProgram, solve_lp
from h2match.lp.simplex import SolveError

from _oracles import assert_kkt, random_bounded_lp, solver_battery


def test_dual_sign_ge_row():
    # min x s.t. x >= 3: tightening the floor raises cost one-for-one
    lp = LinearProgram()
    lp.add_variable("x", cost=1.0)
    lp.add_constraint("floor", {"x": 1.0}, ">=", 3.0)
    sol = lp.solve()
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0, abs=1e-12)
    assert sol.dual("floor") == pytest.approx(1.0, abs=1e-9)


def test_dual_sign_le_row():
    # min -x s.t. x <= 5: raising the cap lowers cost one-for-one
    lp = LinearProgram()
    lp.add_variable("x", cost=-1.0)
    lp.add_constraint("cap", {"x": 1.0}, "<=", 5.0)
    sol = lp.solve()
    assert sol.objective == pytest.approx(-5.0, abs=1e-12)
    assert sol.dual("cap") == pytest.approx(-1.0, abs=1e-9)


def test_equality_dual_and_values():
    lp = LinearProgram()
    lp.add_variable("x", cost=2.0)
    lp.add_variable("y", cost=3.0)
    lp.add_constraint("bal", {"x": 1.0, "y": 1.0}, "=", 4.0)
    lp.add_constraint("mix", {"x": 1.0, "y": -1.0}, "<=", 1.0)
    sol = lp.solve()
    assert sol.value("x") == pytest.approx(2.5, abs=1e-9)
    assert sol.value("y") == pytest.approx(1.5, abs=1e-9)
    assert sol.dual("bal") == pytest.approx(2.5, abs=1e-9)
    assert sol.dual("mix") == pytest.approx(-0.5, abs=1e-9)


def test_infeasible_detected():
    lp = LinearProgram()
    lp.add_variable("x", upper=1.0, cost=1.0)
    lp.add_constraint("need", {"x": 1.0}, ">=", 2.0)
    assert lp.solve().status == "infeasible"


def test_unbounded_detected():
    lp = LinearProgram()
    lp.add_variable("x", lower=None, upper=None, cost=1.0)
    lp.add_constraint("cap", {"x": 1.0}, "<=", 5.0)
    assert lp.solve().status == "unbounded"


def test_crossed_bounds_infeasible():
    res = solve_lp([1.0], np.zeros((1, 1)), ["<="], [1.0], [2.0], [1.0])
    assert res.status == "infeasible"


def test_bounds_only_problem():
    lp = LinearProgram()
    lp.add_variable("x", lower=-1.0, upper=4.0, cost=-2.0)
    lp.add_variable("y", lower=0.5, upper=2.0, cost=3.0)
    sol = lp.solve()
    assert sol.value("x") == pytest.approx(4.0)
    assert sol.value("y") == pytest.approx(0.5)
    assert sol.reduced_cost("x") == pytest.approx(-2.0)
    assert sol.reduced_cost("y") == pytest.approx(3.0)


def test_free_variable_ends_basic():
    lp = LinearProgram()
    lp.add_variable("x", lower=None, upper=None, cost=1.0)
    lp.add_variable("y", upper=3.0, cost=-2.0)
    lp.add_constraint("link", {"x": 1.0, "y": -1.0}, ">=", 0.0)
    sol = lp.solve()
    assert sol.status == "optimal"
    assert sol.value("y") == pytest.approx(3.0, abs=1e-9)
    assert sol.value("x") == pytest.approx(3.0, abs=1e-9)
    assert sol.objective == pytest.approx(-3.0, abs=1e-9)


def test_fixed_variable_acts_as_constant():
    lp = LinearProgram()
    lp.add_variable("x", lower=2.0, upper=2.0, cost=5.0)
    lp.add_variable("y", cost=1.0)
    lp.add_constraint("sum", {"x": 1.0, "y": 1.0}, ">=", 6.0)
    sol = lp.solve()
    assert sol.value("x") == pytest.approx(2.0)
    assert sol.value("y") == pytest.approx(4.0)
    assert sol.objective == pytest.approx(14.0)


def test_redundant_equality_rows():
    # duplicated equality rows force a dependent basis through phase 1
    lp = LinearProgram()
    lp.add_variable("x", cost=1.0)
    lp.add_variable("y", cost=2.0)
    lp.add_constraint("a", {"x": 1.0, "y": 1.0}, "=", 2.0)
    lp.add_constraint("b", {"x": 1.0, "y": 1.0}, "=", 2.0)
    lp.add_constraint("c", {"x": 2.0, "y": 2.0}, "=", 4.0)
    sol = lp.solve()
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0, abs=1e-9)
    assert sol.value("x") == pytest.approx(2.0, abs=1e-9)


def test_cycling_prone_instance_terminates():
    # Beale-style degenerate instance that loops under naive pivoting
    c = np.array([-10.0, 57.0, 9.0, 24.0])
    A = np.array([
        [0.5, -5.5, -2.5, 9.0],
        [0.5, -1.5, -0.5, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    b = np.array([0.0, 0.0, 1.0])
    res = solve_lp(c, A, ["<=", "<=", "<="], b,
                   np.zeros(4), np.full(4, np.inf))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-1.0, abs=1e-9)


def test_iteration_limit_status():
    rng = np.random.default_rng(7)
    inst = random_bounded_lp(rng)
    res = solve_lp(inst["c"], inst["A"], inst["senses"], inst["b"],
                   inst["lower"], inst["upper"], max_iterations=1)
    assert res.status in ("iteration_limit", "optimal")


def test_shape_mismatch_raises():
    with pytest.raises(SolveError):
        solve_lp([1.0, 2.0], np.zeros((2, 1)), ["<=", "<="], [1.0, 1.0],
                 [0.0], [np.inf])


def test_random_instances_match_enumeration_oracle():
    worst, n = solver_battery(solve_lp, n_instances=60, seed=4711)
    assert n == 60
    assert worst <= 1e-9


def test_scaling_off_still_correct():
    rng = np.random.default_rng(99)
    for _ in range(10):
        inst = random_bounded_lp(rng)
        a = solve_lp(inst["c"], inst["A"], inst["senses"], inst["b"],
                     inst["lower"], inst["upper"], scale=True)
        b = solve_lp(inst["c"], inst["A"], inst["senses"], inst["b"],
                     inst["lower"], inst["upper"], scale=False)
        assert a.status == b.status == "optimal"
        assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


def test_wide_coefficient_range():
    # penalty-sized costs next to unit costs, like the planning models
    lp = LinearProgram()
    lp.add_variable("supply", cost=1.0)
    lp.add_variable("shortfall", cost=5.0e7)
    lp.add_constraint("demand", {"supply": 1.0, "shortfall": 1.0}, ">=",
                      1000.0)
    lp.add_constraint("cap", {"supply": 1.0}, "<=", 400.0)
    sol = lp.solve()
    assert sol.value("supply") == pytest.approx(400.0, rel=1e-9)
    assert sol.value("shortfall") == pytest.approx(600.0, rel=1e-9)
    assert sol.dual("demand") == pytest.approx(5.0e7, rel=1e-9)
    assert sol.dual("cap") == pytest.approx(1.0 - 5.0e7, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.1, 10.0), seed=st.integers(0, 10_000))
def test_objective_scaling_covariance(lam, seed):
    # scaling every cost by lambda scales the optimum by lambda
    inst = random_bounded_lp(np.random.default_rng(seed))
    base = solve_lp(inst["c"], inst["A"], inst["senses"], inst["b"],
                    inst["lower"], inst["upper"])
    scaled = solve_lp(lam * inst["c"], inst["A"], inst["senses"], inst["b"],
                      inst["lower"], inst["upper"])
    assert base.status == scaled.status == "optimal"
    assert scaled.objective == pytest.approx(lam * base.objective,
                                             rel=1e-7, abs=1e-7)


def test_kkt_holds_on_solved_instance():
    rng = np.random.default_rng(2024)
    inst = random_bounded_lp(rng)
    res = solve_lp(inst["c"], inst["A"], inst["senses"], inst["b"],
                   inst["lower"], inst["upper"])
    assert res.status == "optimal"
    assert_kkt(inst["c"], inst["A"], inst["senses"], inst["b"],
               inst["lower"], inst["upper"], res.x, res.duals)
