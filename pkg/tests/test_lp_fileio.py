import numpy as np
import pytest

from h2match.lp import (LinearProgram, read_lp, read_mps, write_lp,
                        write_mps)


def _sample_program() -> LinearProgram:
    lp = LinearProgram("sample")
    lp.add_variable("cap_wind", lower=0.0, upper=None, cost=57807.0)
    lp.add_variable("gen_wind[1987,0]", lower=0.0, upper=350.5, cost=0.0)
    lp.add_variable("soc[1987,0]", lower=-2.5, upper=12.25, cost=0.125)
    lp.add_variable("slack_free", lower=None, upper=None, cost=-3.0)
    lp.add_variable("pinned", lower=4.0, upper=4.0, cost=0.0)
    lp.add_variable("half_open", lower=None, upper=9.5, cost=1e-7)
    lp.add_constraint("power_balance[1987,0]",
                      {"gen_wind[1987,0]": 1.0, "slack_free": -0.3125},
                      "=", 999.12)
    lp.add_constraint("avail_wind[1987,0]",
                      {"gen_wind[1987,0]": 1.0, "cap_wind": -0.731}, "<=",
                      0.0)
    lp.add_constraint("floor", {"soc[1987,0]": 2.0, "pinned": 1.0}, ">=",
                      -7.5)
    lp.add_constraint("empty_row", {}, "<=", 5.0)
    return lp


def _assert_same_structure(a: LinearProgram, b: LinearProgram):
    assert a.variable_names == b.variable_names
    assert a.constraint_names == b.constraint_names
    for name in a.variable_names:
        assert a.bounds_of(name) == b.bounds_of(name), name
        assert a.cost_of(name) == b.cost_of(name), name
    for name in a.constraint_names:
        assert a.row(name) == b.row(name), name


@pytest.mark.parametrize("fmt,write,read", [
    ("mps", write_mps, read_mps),
    ("lp", write_lp, read_lp),
])
def test_round_trip_preserves_everything(tmp_path, fmt, write, read):
    original = _sample_program()
    path = tmp_path / f"model.{fmt}"
    write(original, path)
    parsed = read(path)
    _assert_same_structure(original, parsed)

    # a second write of the parsed program is byte-identical
    path2 = tmp_path / f"model2.{fmt}"
    write(parsed, path2)
    assert path.read_text() == path2.read_text()


@pytest.mark.parametrize("fmt,write,read", [
    ("mps", write_mps, read_mps),
    ("lp", write_lp, read_lp),
])
def test_parsed_program_solves_identically(tmp_path, fmt, write, read):
    original = _sample_program()
    path = tmp_path / f"model.{fmt}"
    write(original, path)
    parsed = read(path)
    a = original.solve()
    b = parsed.solve()
    assert a.status == b.status == "optimal"
    assert a.objective == pytest.approx(b.objective, rel=1e-12, abs=1e-12)
    for name in original.variable_names:
        assert a.value(name) == pytest.approx(b.value(name), abs=1e-9)


def test_emit_dispatches_on_format(tmp_path):
    lp = _sample_program()
    lp.emit(tmp_path / "m.mps", fmt="mps")
    lp.emit(tmp_path / "m.lp", fmt="lp")
    assert (tmp_path / "m.mps").read_text().startswith("NAME sample")
    assert (tmp_path / "m.lp").read_text().startswith("\\ Problem: sample")
    with pytest.raises(ValueError):
        lp.emit(tmp_path / "m.x", fmt="sav")


def test_whitespace_in_names_rejected(tmp_path):
    lp = LinearProgram()
    lp.add_variable("bad name", cost=1.0)
    with pytest.raises(ValueError):
        write_mps(lp, tmp_path / "m.mps")


def test_full_precision_floats_survive(tmp_path):
    lp = LinearProgram("precise")
    ugly = 0.1 + 0.2  # not representable prettily
    lp.add_variable("x", lower=ugly, upper=ugly * 7, cost=1.0 / 3.0)
    lp.add_constraint("r", {"x": np.pi}, "<=", np.e)
    for write, read in ((write_mps, read_mps), (write_lp, read_lp)):
        path = tmp_path / "m.txt"
        write(lp, path)
        parsed = read(path)
        assert parsed.bounds_of("x") == (ugly, ugly * 7)
        assert parsed.cost_of("x") == 1.0 / 3.0
        coeffs, _, rhs = parsed.row("r")
        assert coeffs["x"] == np.pi
        assert rhs == np.e


def test_long_rows_wrap_and_reparse(tmp_path):
    lp = LinearProgram("wide")
    coeffs = {}
    for j in range(40):
        name = f"generation[2005,{j}]"
        lp.add_variable(name, cost=float(j))
        coeffs[name] = 1.0 + j / 7.0
    lp.add_constraint("mix[2005]", coeffs, ">=", 123.456)
    path = tmp_path / "wide.lp"
    write_lp(lp, path)
    assert max(len(line) for line in path.read_text().splitlines()) < 100
    parsed = read_lp(path)
    _assert_same_structure(lp, parsed)
