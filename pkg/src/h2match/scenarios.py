"""Weather-year library: ingestion, aggregation, and scenario reduction.

Raw data is per-plant hourly generation across many historical weather
years. This module turns that into capacity-weighted group profiles
(existing/new x wind/solar), picks k representative years by clustering
the new-wind profiles, and samples held-out years for out-of-sample
dispatch.

CSV formats understood:

    per-plant long format   columns ``year,hour,plant_id,mwh`` plus a
                            registry ``plant_id,group,capacity_mw``
    per (group, year)       one file ``<group>_<year>.csv`` with columns
                            ``hour,cf``
    emitted library         one file ``profiles_<year>.csv`` per year,
                            column per group

Hours are 0-based within a year. Series of 8784 hours lose the leap day
(hours 1416-1439) so every year is 8760 hours long; desk-scale series of
other lengths pass through untouched as long as they agree with each
other.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from h2match.domain import DemandProfile, WeatherScenario

__all__ = [
    "GROUPS",
    "PlantRecord",
    "YearProfiles",
    "ScenarioLibrary",
    "KMeansReduction",
    "aggregate_profiles",
    "build_library",
    "kmeans_reduce",
    "sample_oos",
    "ingest_plant_data",
    "read_library",
    "write_library",
]

log = logging.getLogger(__name__)

GROUPS = ("existing-solar", "existing-wind", "new-solar", "new-wind")

_LEAP_HOURS = 8784
_YEAR_HOURS = 8760
_FEB29_START = 1416  # hour index of Feb 29 00:00 in a leap year


@dataclass(frozen=True)
class PlantRecord:
    """One plant's nameplate rating and hourly output per weather year."""

    plant_id: str
    group: str
    capacity_mw: float
    generation: Mapping[int, tuple[float, ...]]  # year -> MWh per hour

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"plant {self.plant_id}: unknown group "
                             f"{self.group!r} (expected one of {GROUPS})")
        if not self.capacity_mw > 0:
            raise ValueError(f"plant {self.plant_id}: capacity must be "
                             "positive")
        for year, series in self.generation.items():
            if any(v < 0 for v in series):
                raise ValueError(f"plant {self.plant_id}: negative "
                                 f"generation in year {year}")


@dataclass(frozen=True)
class YearProfiles:
    """Aggregated capacity-factor series for one weather year."""

    year: int
    capacity_factors: Mapping[str, tuple[float, ...]]
    clamped: int  # number of cf points pulled back into [0, 1]


def aggregate_profiles(plants: Sequence[PlantRecord],
                       year: int) -> YearProfiles:
    """Capacity-weighted group profiles: cf[t] = sum gen[t] / sum capacity.

    Values outside [0, 1] are clamped and counted; empirical datasets
    carry rating anomalies and the count is the honest record of them.
    """
    groups: dict[str, list[PlantRecord]] = {}
    for p in plants:
        if year in p.generation:
            groups.setdefault(p.group, []).append(p)
    if not groups:
        raise ValueError(f"no plant has data for year {year}")

    profiles: dict[str, tuple[float, ...]] = {}
    clamped = 0
    for group in sorted(groups):
        members = groups[group]
        cap = sum(p.capacity_mw for p in members)
        if cap <= 0:
            raise ValueError(f"group {group!r} year {year}: zero total "
                             "capacity")
        lengths = {len(p.generation[year]) for p in members}
        if len(lengths) != 1:
            raise ValueError(f"group {group!r} year {year}: ragged series "
                             f"lengths {sorted(lengths)}")
        total = np.zeros(lengths.pop())
        for p in members:
            total += np.asarray(p.generation[year], dtype=float)
        cf = total / cap
        bad = int(np.count_nonzero((cf < 0.0) | (cf > 1.0)))
        if bad:
            log.warning("group %s year %s: clamped %d of %d cf values "
                        "into [0, 1]", group, year, bad, cf.size)
            clamped += bad
            cf = np.clip(cf, 0.0, 1.0)
        profiles[group] = tuple(float(v) for v in cf)
    return YearProfiles(year=year, capacity_factors=profiles,
                        clamped=clamped)


@dataclass
class ScenarioLibrary:
    """All ingested weather years plus the design/out-of-sample split."""

    profiles: dict[int, dict[str, tuple[float, ...]]]
    design_years: tuple[int, ...] = ()
    oos_years: tuple[int, ...] = ()

    def years(self) -> list[int]:
        return sorted(self.profiles)

    @property
    def n_hours(self) -> int:
        for groups in self.profiles.values():
            for series in groups.values():
                return len(series)
        return 0

    def validate(self) -> list[str]:
        errors = []
        if not self.profiles:
            errors.append("library has no years")
        overlap = set(self.design_years) & set(self.oos_years)
        if overlap:
            errors.append("design and out-of-sample years overlap: "
                          f"{sorted(overlap)}")
        for named in (self.design_years, self.oos_years):
            for y in named:
                if y not in self.profiles:
                    errors.append(f"year {y} not in the library")
        n = self.n_hours
        group_sets = {frozenset(g) for g in self.profiles.values()}
        if len(group_sets) > 1:
            errors.append("years disagree on which groups are present")
        for year, groups in sorted(self.profiles.items()):
            for group, series in sorted(groups.items()):
                if len(series) != n:
                    errors.append(f"year {year} group {group!r}: "
                                  f"{len(series)} hours, expected {n}")
                if any(v < 0 or v > 1 for v in series):
                    errors.append(f"year {year} group {group!r}: cf "
                                  "outside [0, 1]")
        return errors

    def scenarios_for(self, years: Sequence[int], demand: DemandProfile,
                      ) -> tuple[WeatherScenario, ...]:
        """Materialize equally weighted scenarios for the given years."""
        if not years:
            raise ValueError("no years requested")
        w = 1.0 / len(years)
        out = []
        for y in years:
            if y not in self.profiles:
                raise KeyError(f"year {y} not in the library")
            out.append(WeatherScenario(year=y, weight=w,
                                       capacity_factors=self.profiles[y],
                                       demand=demand))
        return tuple(out)


def build_library(plants: Sequence[PlantRecord]) -> ScenarioLibrary:
    """Aggregate every year present in the plant data into a library."""
    years = sorted({y for p in plants for y in p.generation})
    if not years:
        raise ValueError("plant data is empty")
    profiles = {}
    clamped = 0
    for y in years:
        agg = aggregate_profiles(plants, y)
        profiles[y] = dict(agg.capacity_factors)
        clamped += agg.clamped
    if clamped:
        log.warning("library aggregation clamped %d cf values in total",
                    clamped)
    return ScenarioLibrary(profiles=profiles)


# -- scenario reduction -----------------------------------------------------


@dataclass(frozen=True)
class KMeansReduction:
    """Outcome of one clustering run."""

    design_years: tuple[int, ...]  # medoid year per cluster, ascending
    assignments: Mapping[int, int]  # year -> cluster index
    wcss_history: tuple[float, ...]  # objective after each center update


def _kmeans_pp_init(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # every point coincides with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[i] = X[idx]
        d2 = np.minimum(d2, ((X - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans_reduce(library: ScenarioLibrary, k: int, seed: int,
                  group: str = "new-wind",
                  max_iterations: int = 300) -> KMeansReduction:
    """Pick k representative weather years by clustering one group's cf.

    Seeded k-means++ initialization, Lloyd's iterations until the
    assignment is stable (or the iteration cap), Euclidean distance on
    the full hourly series. Each cluster is represented by its medoid:
    the member year closest to the cluster centroid. Deterministic for a
    fixed seed.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    years = library.years()
    if not years:
        raise ValueError("library is empty")
    if k > len(years):
        raise ValueError(f"k={k} exceeds the {len(years)} library years")
    for y in years:
        if group not in library.profiles[y]:
            raise ValueError(f"year {y} has no {group!r} profile")

    X = np.array([library.profiles[y][group] for y in years], dtype=float)
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(X, k, rng)

    labels = None
    history: list[float] = []
    for _ in range(max_iterations):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for c in range(k):
            if not (new_labels == c).any():
                # repair an emptied cluster with the worst-fitting point,
                # taken from a cluster that can spare one
                counts = np.bincount(new_labels, minlength=k)
                movable = np.nonzero(counts[new_labels] > 1)[0]
                far = int(movable[d2[movable, new_labels[movable]].argmax()])
                new_labels[far] = c
        if labels is not None and (new_labels == labels).all():
            break
        labels = new_labels
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
        history.append(float(((X - centers[labels]) ** 2).sum()))

    medoids = []
    for c in range(k):
        members = np.nonzero(labels == c)[0]
        dist = ((X[members] - centers[c]) ** 2).sum(axis=1)
        # ties break toward the earlier year: members is in year order
        medoids.append(years[int(members[int(np.argmin(dist))])])
    return KMeansReduction(
        design_years=tuple(sorted(medoids)),
        assignments={years[i]: int(labels[i]) for i in range(len(years))},
        wcss_history=tuple(history))


def sample_oos(library: ScenarioLibrary, n: int,
               seed: int) -> tuple[int, ...]:
    """Uniform sample without replacement from the non-design years."""
    pool = [y for y in library.years() if y not in set(library.design_years)]
    if n > len(pool):
        raise ValueError(f"asked for {n} out-of-sample years, only "
                         f"{len(pool)} remain")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=n, replace=False)
    return tuple(sorted(pool[int(i)] for i in picks))


# -- CSV ingestion / emission -----------------------------------------------


def _trim_leap(series: list[float], where: str) -> list[float]:
    if len(series) == _LEAP_HOURS:
        log.info("%s: trimmed leap day to %d hours", where, _YEAR_HOURS)
        return series[:_FEB29_START] + series[_FEB29_START + 24:]
    return series


def ingest_plant_data(generation_csv, registry_csv) -> list[PlantRecord]:
    """Read long-format per-plant generation plus the plant registry."""
    registry: dict[str, tuple[str, float]] = {}
    with open(registry_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            registry[row["plant_id"]] = (row["group"],
                                         float(row["capacity_mw"]))

    series: dict[tuple[str, int], dict[int, float]] = {}
    with open(generation_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            pid = row["plant_id"]
            if pid not in registry:
                raise ValueError(f"plant {pid!r} missing from the registry")
            key = (pid, int(row["year"]))
            series.setdefault(key, {})[int(row["hour"])] = float(row["mwh"])

    per_plant: dict[str, dict[int, tuple[float, ...]]] = {}
    for (pid, year), hours in sorted(series.items()):
        n = len(hours)
        if sorted(hours) != list(range(n)):
            raise ValueError(f"plant {pid} year {year}: hours must be "
                             f"0..{n - 1} without gaps")
        values = [hours[t] for t in range(n)]
        values = _trim_leap(values, f"plant {pid} year {year}")
        per_plant.setdefault(pid, {})[year] = tuple(values)

    plants = []
    for pid, gen in sorted(per_plant.items()):
        group, cap = registry[pid]
        plants.append(PlantRecord(plant_id=pid, group=group,
                                  capacity_mw=cap, generation=gen))
    return plants


_GROUP_YEAR_RE = re.compile(
    r"^(?P<group>[a-z-]+)_(?P<year>\d{1,4})\.csv$")


def read_library(directory) -> ScenarioLibrary:
    """Load an emitted library directory.

    Accepts either ``profiles_<year>.csv`` files (column per group) or
    one ``<group>_<year>.csv`` file per group and year.
    """
    directory = Path(directory)
    profiles: dict[int, dict[str, tuple[float, ...]]] = {}
    year_files = sorted(directory.glob("profiles_*.csv"))
    if year_files:
        for path in year_files:
            year = int(path.stem.split("_", 1)[1])
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                groups = [g for g in (reader.fieldnames or [])
                          if g != "hour"]
                cols: dict[str, list[float]] = {g: [] for g in groups}
                for row in reader:
                    for g in groups:
                        cols[g].append(float(row[g]))
            profiles[year] = {
                g: tuple(_trim_leap(v, f"{path.name} group {g}"))
                for g, v in cols.items()}
    else:
        for path in sorted(directory.glob("*.csv")):
            m = _GROUP_YEAR_RE.match(path.name)
            if not m or m.group("group") not in GROUPS:
                continue
            year = int(m.group("year"))
            values = []
            with open(path, newline="") as fh:
                for row in csv.DictReader(fh):
                    values.append(float(row["cf"]))
            values = _trim_leap(values, path.name)
            profiles.setdefault(year, {})[m.group("group")] = tuple(values)
    if not profiles:
        raise ValueError(f"no library CSVs found under {directory}")

    clamped = 0
    for year, groups in profiles.items():
        for g, v in groups.items():
            arr = np.asarray(v)
            bad = int(np.count_nonzero((arr < 0.0) | (arr > 1.0)))
            if bad:
                log.warning("year %s group %s: clamped %d cf values on "
                            "read", year, g, bad)
                clamped += bad
                groups[g] = tuple(float(x) for x in np.clip(arr, 0.0, 1.0))
    return ScenarioLibrary(profiles=profiles)


def write_library(library: ScenarioLibrary, directory) -> list[Path]:
    """Emit ``profiles_<year>.csv`` per year, one column per group."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for year in library.years():
        groups = sorted(library.profiles[year])
        path = directory / f"profiles_{year}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["hour", *groups])
            n = len(library.profiles[year][groups[0]]) if groups else 0
            for t in range(n):
                writer.writerow(
                    [t, *(repr(library.profiles[year][g][t])
                          for g in groups)])
        written.append(path)
    return written
