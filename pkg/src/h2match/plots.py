"""SVG figures over case reports.

Rendering is deterministic: the agg backend, a fixed hash salt for SVG
ids, and no embedded timestamps, so regenerating from identical reports
is byte-identical (which the run tooling relies on to detect staleness).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib import pyplot as plt  # noqa: E402  (backend must be set first)

from h2match.analysis import REVENUE_SOURCES, CaseReport  # noqa: E402

__all__ = ["plot_emissions", "plot_lcoh", "plot_average_prices",
           "plot_revenue_stack", "plot_tmr_histogram", "write_plots"]

_SOURCE_COLORS = {
    "electricity sales": "#4878cf",
    "RPS": "#6acc65",
    "TMR": "#d65f5f",
    "capacity reserve": "#b47cc7",
}


def _save(fig, path: Path) -> Path:
    plt.rcParams["svg.hashsalt"] = "h2match"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _bars(values_by_label: dict[str, float], title: str, ylabel: str,
          path: Path) -> Path:
    labels = sorted(values_by_label)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels)), 3.5))
    ax.bar(range(len(labels)), [values_by_label[k] for k in labels],
           color="#4878cf")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    return _save(fig, path)


def plot_emissions(reports: Sequence[CaseReport], path) -> Path:
    """Consequential emissions per case when present, else totals."""
    per_tonne = {r.label: r.consequential_tco2_per_tonne for r in reports
                 if r.consequential_tco2_per_tonne is not None}
    if per_tonne:
        return _bars(per_tonne, "Consequential emissions",
                     "tCO2 per tonne H2", Path(path))
    totals = {r.label: r.emissions_tco2 for r in reports}
    return _bars(totals, "System emissions", "tCO2 per year", Path(path))


def plot_lcoh(reports: Sequence[CaseReport], path) -> Path:
    values = {r.label: r.lcoh_per_kg for r in reports
              if r.lcoh_per_kg is not None}
    return _bars(values, "Levelized cost of hydrogen", "$ per kg",
                 Path(path))


def plot_average_prices(reports: Sequence[CaseReport], path) -> Path:
    """One panel per price family, bars over cases."""
    labels = sorted(r.label for r in reports)
    by_label = {r.label: r.prices for r in reports}
    panels = (("energy_per_mwh", "Energy, $/MWh"),
              ("capacity_per_mw_year", "Capacity, $/MW-yr"),
              ("rps_per_mwh", "RPS, $/MWh"),
              ("tmr_per_mwh", "TMR, $/MWh"))
    fig, axes = plt.subplots(2, 2, figsize=(8, 6))
    for ax, (attr, title) in zip(axes.ravel(), panels):
        ax.bar(range(len(labels)),
               [getattr(by_label[k], attr) for k in labels],
               color="#4878cf")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
        ax.set_title(title, fontsize=9)
    fig.suptitle("Average prices")
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_revenue_stack(report: CaseReport, path) -> Path:
    """Stacked per-MW revenue by source, with total cost marked."""
    names = sorted(report.revenue_stacks)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(names)), 3.8))
    base = [0.0] * len(names)
    for source in REVENUE_SOURCES:
        heights = [report.revenue_stacks[n].revenue[source] for n in names]
        ax.bar(range(len(names)), heights, bottom=base, label=source,
               color=_SOURCE_COLORS[source])
        base = [b + h for b, h in zip(base, heights)]
    costs = [report.revenue_stacks[n].total_cost for n in names]
    ax.scatter(range(len(names)), costs, marker="_", s=500, color="black",
               label="total cost", zorder=3)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("$ per MW-year")
    ax.set_title(f"Revenue stack: {report.label}")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_tmr_histogram(report: CaseReport, path) -> Optional[Path]:
    """Hour counts by matching-price bin; None when the case has none."""
    hist = report.prices.tmr_histogram
    if not hist:
        return None
    labels = [b for b, _ in hist]
    counts = [c for _, c in hist]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.bar(range(len(labels)), counts, color="#d65f5f")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("hours")
    ax.set_xlabel("$ per MWh")
    ax.set_title(f"Hourly matching prices: {report.label}")
    fig.tight_layout()
    return _save(fig, Path(path))


def write_plots(reports: Sequence[CaseReport], out_dir) -> list[Path]:
    """Emit the standard figure set for a group of reports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [plot_emissions(reports, out / "emissions_by_case.svg")]
    if any(r.lcoh_per_kg is not None for r in reports):
        paths.append(plot_lcoh(reports, out / "lcoh_by_case.svg"))
    paths.append(plot_average_prices(reports, out / "avg_prices.svg"))
    for report in sorted(reports, key=lambda r: r.label):
        if report.revenue_stacks:
            paths.append(plot_revenue_stack(
                report, out / f"revenue_stack_{report.label}.svg"))
        hist = plot_tmr_histogram(report,
                                  out / f"tmr_prices_{report.label}.svg")
        if hist is not None:
            paths.append(hist)
    return paths
