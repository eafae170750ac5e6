"""Rendering of checking results: JSON, CSV, human-readable text, figures.

The JSON document has exactly the keys

    {property, verdict, iterations: [{round, states, transitions,
     numerator, denominator, value}], wallClockSeconds}

with exact rationals serialized as strings ("5/16") so no precision is
lost, floats as JSON numbers, and the undefined value as null.  CSV
exports the per-round (states, value) curve.  Text output is a human
summary with numbers rounded to two significant digits; JSON and CSV keep
full precision.

Figures render through the non-interactive backend straight to files:
the per-round convergence curve for a checking run, and the parameter-
region heatmap for a synthesis run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass(frozen=True)
class IterationRow:
    round: int
    states: int
    transitions: int
    numerator: object
    denominator: object
    value: object  # Fraction | float | None (undefined)


@dataclass
class Report:
    property: str
    verdict: str
    iterations: list[IterationRow] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    note: str = ""
    value: object = None
    fully_expanded: bool = False


def _json_num(x):
    if x is None or isinstance(x, (int, float)):
        return x
    return str(x)  # Fraction and polynomial strings stay exact


def report_json(report: Report) -> str:
    doc = {
        "property": report.property,
        "verdict": report.verdict,
        "fullyExpanded": report.fully_expanded,
        "iterations": [
            {
                "round": row.round,
                "states": row.states,
                "transitions": row.transitions,
                "numerator": _json_num(row.numerator),
                "denominator": _json_num(row.denominator),
                "value": _json_num(row.value),
            }
            for row in report.iterations
        ],
        "wallClockSeconds": report.wall_clock_seconds,
    }
    return json.dumps(doc, indent=2)


def report_csv(report: Report) -> str:
    lines = ["states,value"]
    for row in report.iterations:
        value = "" if row.value is None else str(row.value)
        lines.append(f"{row.states},{value}")
    return "\n".join(lines) + "\n"


def _sig2(x) -> str:
    if x is None:
        return "undef"
    f = float(x)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return f"{f:.2g}"


def report_text(report: Report) -> str:
    lines = [
        f"property     {report.property}",
        f"verdict      {report.verdict}"
        + (f" ({report.note})" if report.note else ""),
        f"wall clock   {report.wall_clock_seconds:.2f} s",
        "",
    ]
    header = ["round", "states", "transitions", "numerator", "denominator", "value"]
    rows = [
        [
            str(r.round),
            str(r.states),
            str(r.transitions),
            _sig2(r.numerator),
            _sig2(r.denominator),
            _sig2(r.value),
        ]
        for r in report.iterations
    ]
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def render_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return report_json(report)
    if fmt == "csv":
        return report_csv(report)
    return report_text(report)


# -- simulation estimates --------------------------------------------------------


def simulation_json(est) -> str:
    return json.dumps(
        {
            "runs": est.runs,
            "accepted": est.accepted,
            "bad": est.bad,
            "diverged": est.diverged,
            "estimate": est.estimate,
            "ciLow": est.ci_low,
            "ciHigh": est.ci_high,
            "seed": est.seed,
        },
        indent=2,
    )


def simulation_csv(est) -> str:
    head = "runs,accepted,bad,diverged,estimate,ciLow,ciHigh,seed"
    fmt = lambda x: "" if x is None else repr(x)
    row = (
        f"{est.runs},{est.accepted},{est.bad},{est.diverged},"
        f"{fmt(est.estimate)},{fmt(est.ci_low)},{fmt(est.ci_high)},{est.seed}"
    )
    return head + "\n" + row + "\n"


def simulation_text(est) -> str:
    lines = [
        f"runs         {est.runs}",
        f"accepted     {est.accepted}",
        f"violations   {est.bad}",
        f"diverged     {est.diverged}",
    ]
    if est.estimate is None:
        lines.append("estimate     undefined (no accepted runs)")
    else:
        lines.append(
            f"estimate     {_sig2(est.estimate)}  "
            f"(95% CI {_sig2(est.ci_low)} .. {_sig2(est.ci_high)})"
        )
    lines.append(f"seed         {est.seed}")
    return "\n".join(lines) + "\n"


def render_simulation(est, fmt: str) -> str:
    if fmt == "json":
        return simulation_json(est)
    if fmt == "csv":
        return simulation_csv(est)
    return simulation_text(est)


# -- figures ------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def convergence_figure(report: Report, path: str, threshold=None) -> None:
    """Plot the per-round value against explored states and save to path."""
    plt = _pyplot()
    xs = [row.states for row in report.iterations if row.value is not None]
    ys = [float(row.value) for row in report.iterations if row.value is not None]
    fig, axis = plt.subplots(figsize=(6.0, 3.6))
    axis.plot(xs, ys, marker="o", linewidth=1.5, color="#2a6f97")
    if threshold is not None:
        axis.axhline(float(threshold), linestyle="--", color="#bc4749", linewidth=1.0)
        axis.annotate(
            f"bound {_sig2(threshold)}",
            xy=(0.02, float(threshold)),
            xycoords=("axes fraction", "data"),
            va="bottom",
            fontsize=8,
            color="#bc4749",
        )
    axis.set_xlabel("explored states")
    axis.set_ylabel("conditional value")
    axis.set_title(f"{report.property}  —  {report.verdict}", fontsize=10)
    axis.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def region_figure(scan, path: str) -> None:
    """Render a two-parameter region classification as a heatmap.

    ``scan`` carries axes (name, lo, hi, steps) and a cell-class matrix
    indexed [i][j] with i along the first axis; classes are Unsafe,
    Unknown, and IllDefined.
    """
    plt = _pyplot()
    from matplotlib.colors import ListedColormap

    if len(scan.axes) != 2:
        raise ValueError("the heatmap needs exactly two parameter axes")
    x_axis, y_axis = scan.axes
    order = ["Unsafe", "Unknown", "IllDefined"]
    palette = {"Unsafe": "#bc4749", "Unknown": "#d7d9d7", "IllDefined": "#e9c46a"}
    codes = [[order.index(c) for c in rowv] for rowv in scan.classes]
    import numpy as np

    grid = np.array(codes).T  # imshow rows are the y axis
    fig, axis = plt.subplots(figsize=(5.4, 4.6))
    axis.imshow(
        grid,
        origin="lower",
        aspect="auto",
        cmap=ListedColormap([palette[c] for c in order]),
        vmin=-0.5,
        vmax=len(order) - 0.5,
        extent=(
            float(x_axis.lo),
            float(x_axis.hi),
            float(y_axis.lo),
            float(y_axis.hi),
        ),
        interpolation="nearest",
    )
    axis.set_xlabel(x_axis.name)
    axis.set_ylabel(y_axis.name)
    axis.set_title("parameter region classification", fontsize=10)
    handles = [
        plt.Rectangle((0, 0), 1, 1, facecolor=palette[c], label=c) for c in order
    ]
    axis.legend(handles=handles, loc="upper right", fontsize=8, framealpha=0.9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
