"""End-to-end command tests: validate, run, report.

Each test drives ``h2match.cli.main`` with a throwaway eight-hour
config, so every solve finishes in well under a second and the on-disk
artifacts can be byte-compared across invocations.
"""

import copy
import json
import re
from pathlib import Path

import pytest

import h2match
from h2match.cli import main

DESK = Path(h2match.__file__).parent / "fixtures" / "desk.json"

PROVENANCE = re.compile(r"^config=[0-9a-f]{12} seed=\d+$")

BASE_CONFIG = {
    "name": "cli-mini",
    "output_dir": "out",
    "seed": 11,
    "plots": False,
    "fuels": [{"name": "gas", "price_per_mmbtu": 2.03,
               "co2_per_mmbtu": 0.05306}],
    "technologies": [
        {"name": "gas", "kind": "thermal", "capex_annualized": 50.2,
         "fom": 10.0, "vom": 3.5, "heat_rate": 9.71, "fuel": "gas",
         "derate": 0.93, "start_cost": 270.28, "start_fuel": 8.155},
        {"name": "grid_wind", "kind": "vre", "capex_annualized": 52.8,
         "fom": 6.4, "cf_group": "wind", "rps_eligible": True},
        {"name": "ppa_wind", "kind": "vre", "capex_annualized": 52.8,
         "fom": 6.4, "cf_group": "wind", "is_ppa_eligible": True},
    ],
    "h2": {"demand_tonnes_per_hour": 0.2,
           "ely_capex_annualized": 4340.0, "ely_fom": 870.0,
           "ely_mwh_per_tonne": 54.3, "tank_capex_annualized": 31.0,
           "comp_capex_annualized": 6711.0, "comp_mwh_per_tonne": 0.71},
    "policy": {"tmr": "hourly"},
    "demand": {"series": [60, 55, 52, 58, 70, 74, 68, 62]},
    "scenarios": {
        "profiles": {
            "2011": {"wind": [0.55, 0.62, 0.7, 0.48, 0.22, 0.15, 0.3, 0.45]},
            "2012": {"wind": [0.4, 0.52, 0.66, 0.55, 0.3, 0.1, 0.24, 0.38]},
            "2013": {"wind": [0.45, 0.5, 0.6, 0.5, 0.28, 0.12, 0.2, 0.4]},
        },
        "design_years": [2011, 2012],
        "oos_years": [2013],
    },
    "runs": [
        {"label": "base", "mode": "baseline"},
        {"label": "S-H", "mode": "stochastic", "oos": True},
        {"label": "D-2011", "mode": "deterministic",
         "scenario_years": [2011]},
    ],
}

ALL_LABELS = ("base", "S-H", "S-H_oos2013", "D-2011")


def write_config(directory: Path, mutate=None) -> Path:
    cfg = copy.deepcopy(BASE_CONFIG)
    if mutate:
        mutate(cfg)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "config.json"
    path.write_text(json.dumps(cfg, indent=1))
    return path


@pytest.fixture(scope="module")
def grid(tmp_path_factory):
    """A fully executed run grid shared by the read-only tests."""
    root = tmp_path_factory.mktemp("grid")
    config = write_config(root)
    assert main(["run", "--config", str(config)]) == 0
    return config


def _report(config: Path, label: str) -> dict:
    path = config.parent / "out" / label / "report.json"
    return json.loads(path.read_text())


# -- validate ----------------------------------------------------------------------

def test_validate_accepts_the_packaged_fixture(capsys):
    assert main(["validate", "--config", str(DESK)]) == 0
    out = capsys.readouterr().out
    assert "config ok" in out
    assert "5 run(s)" in out


def test_validate_names_the_offending_field(tmp_path, capsys):
    config = write_config(
        tmp_path, lambda c: c["policy"].update(rps_fraction=1.5))
    assert main(["validate", "--config", str(config)]) == 1
    assert "rps_fraction" in capsys.readouterr().out


def test_validate_names_the_missing_profile_group(tmp_path, capsys):
    def mutate(cfg):
        cfg["technologies"][1]["cf_group"] = "breeze"
    config = write_config(tmp_path, mutate)
    assert main(["validate", "--config", str(config)]) == 1
    assert "breeze" in capsys.readouterr().out


def test_config_error_exits(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{"name": "x",')
    assert main(["validate", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err

    config = write_config(
        tmp_path, lambda c: c["technologies"][0].update(capex=1.0))
    assert main(["validate", "--config", str(config)]) == 1
    assert "capex" in capsys.readouterr().err

    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 3


# -- run ---------------------------------------------------------------------------

def test_run_writes_every_label(grid):
    out = grid.parent / "out"
    for label in ALL_LABELS:
        assert sorted(p.name for p in (out / label).iterdir()) == [
            "capacities.csv", "dispatch.csv", "duals.csv", "report.json"]
        record = _report(grid, label)
        assert record["status"] == "optimal"
        assert PROVENANCE.match(record["provenance"]), record["provenance"]
        assert record["provenance"].endswith("seed=11")
    manifest = json.loads((out / "manifest.json").read_text())
    assert [r["label"] for r in manifest["runs"]] == sorted(ALL_LABELS)
    assert all(r["status"] == "optimal" for r in manifest["runs"])


def test_run_skips_completed_labels(grid, capsys):
    before = {label: (grid.parent / "out" / label / "report.json"
                      ).read_bytes() for label in ALL_LABELS}
    assert main(["run", "--config", str(grid)]) == 0
    out = capsys.readouterr().out
    for label in ALL_LABELS:
        assert f"skip {label} (complete)" in out
    assert "ran" not in out
    for label, body in before.items():
        assert (grid.parent / "out" / label / "report.json"
                ).read_bytes() == body


def test_force_reruns_and_reproduces_bytes(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main(["run", "--config", str(config)]) == 0
    files = sorted((tmp_path / "out").rglob("*.csv"))
    before = {p: p.read_bytes() for p in files}
    assert main(["run", "--config", str(config), "--force"]) == 0
    out = capsys.readouterr().out
    assert "skip" not in out
    assert "ran base (baseline)" in out
    for path, body in before.items():
        assert path.read_bytes() == body, path


def test_label_filter(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main(["run", "--config", str(config), "--labels", "S-*"]) == 0
    out = tmp_path / "out"
    assert (out / "S-H").is_dir()
    assert (out / "S-H_oos2013").is_dir()
    assert not (out / "base").exists()
    assert not (out / "D-2011").exists()
    # without its baseline the consequential column stays empty
    assert _report(config, "S-H")["metrics"][
        "consequential_tco2_per_tonne"] is None

    assert main(["run", "--config", str(config), "--labels", "Q*"]) == 1
    assert "no run labels match" in capsys.readouterr().out


def test_baseline_comparison_survives_separate_invocations(tmp_path):
    config = write_config(tmp_path)
    assert main(["run", "--config", str(config), "--labels", "base"]) == 0
    assert main(["run", "--config", str(config), "--labels", "S-H"]) == 0
    consequential = _report(config, "S-H")["metrics"][
        "consequential_tco2_per_tonne"]
    assert consequential is not None


def test_seed_flag_overrides_the_recorded_seed(tmp_path):
    config = write_config(tmp_path)
    assert main(["run", "--config", str(config), "--seed", "99",
                 "--labels", "base"]) == 0
    assert _report(config, "base")["provenance"].endswith("seed=99")


def test_one_failing_label_spares_its_siblings(tmp_path, capsys):
    def mutate(cfg):
        cfg["runs"].append({"label": "D-BAD", "mode": "deterministic",
                            "scenario_years": [2011, 2012]})
    config = write_config(tmp_path, mutate)
    assert main(["run", "--config", str(config)]) == 2
    out = capsys.readouterr().out
    assert "FAIL D-BAD" in out
    assert "1 run(s) failed" in out
    for label in ALL_LABELS:
        assert _report(config, label)["status"] == "optimal"
    assert not (tmp_path / "out" / "D-BAD").exists()
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    status = {r["label"]: r["status"] for r in manifest["runs"]}
    assert status["D-BAD"].startswith("failed")


# -- report ------------------------------------------------------------------------

def test_report_tables(grid, capsys):
    assert main(["report", "--config", str(grid)]) == 0
    out = grid.parent / "out"
    lcoh_lines = (out / "lcoh_by_case.csv").read_text().splitlines()
    assert lcoh_lines[0].startswith("# config=")
    assert lcoh_lines[0].endswith("seed=11")
    assert lcoh_lines[1] == "label,lcoh_usd_per_kg"
    rows = dict(line.split(",", 1) for line in lcoh_lines[2:])
    assert rows["base"] == ""  # no hydrogen, no hydrogen cost
    assert float(rows["S-H"]) > 0.0
    assert float(rows["D-2011"]) > 0.0

    emissions = (out / "emissions_by_case.csv").read_text().splitlines()
    by_label = {line.split(",")[0]: line for line in emissions[2:]}
    assert by_label["S-H"].split(",")[2] != ""  # consequential present

    # regeneration from identical inputs is byte-identical
    tables = [out / "lcoh_by_case.csv", out / "emissions_by_case.csv",
              out / "revenue_stacks.csv"]
    before = {p: p.read_bytes() for p in tables}
    assert main(["report", "--config", str(grid)]) == 0
    for path, body in before.items():
        assert path.read_bytes() == body


def test_report_emits_stamped_reproducible_figures(tmp_path):
    config = write_config(tmp_path, lambda c: c.update(plots=True))
    assert main(["run", "--config", str(config)]) == 0
    assert main(["report", "--config", str(config)]) == 0
    figures = sorted((tmp_path / "out").glob("*.svg"))
    assert figures
    for fig in figures:
        trailer = fig.read_text().rsplit("<!--", 1)[1]
        assert "config=" in trailer and "seed=11" in trailer
    before = {p: p.read_bytes() for p in figures}
    assert main(["report", "--config", str(config)]) == 0
    for path, body in before.items():
        assert path.read_bytes() == body, path


def test_report_flags_partial_runs(grid, capsys):
    stray = grid.parent / "out" / "stray"
    stray.mkdir(exist_ok=True)
    try:
        assert main(["report", "--config", str(grid)]) == 0
        out = capsys.readouterr().out
        assert "partial run ignored: stray: no report.json" in out
    finally:
        stray.rmdir()


def test_report_without_runs(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main(["report", "--config", str(config)]) == 3
    assert "no output directory" in capsys.readouterr().out
