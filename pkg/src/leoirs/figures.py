"""Plot rendering for experiment outputs.

Renders the same rows the CSV writer consumes, next to the CSV. Uses the
Agg backend so the CLI works headless.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .experiments import ResultRow

_AXIS_LABELS = {
    "tx_power_dbm": "Transmit power (dBm)",
    "elements_total": "Total reflecting elements",
    "time_s": "Time (s)",
}

_MARKERS = ("o", "s", "^", "v", "d", "x", "+", "*")


def _grouped(rows: Sequence[ResultRow]) -> dict[str, list[ResultRow]]:
    groups: dict[str, list[ResultRow]] = defaultdict(list)
    for row in rows:
        groups[row.scheme].append(row)
    for series in groups.values():
        series.sort(key=lambda r: r.value)
    return dict(groups)


def plot_rows(rows: Iterable[ResultRow], path: str | Path) -> Path:
    """Render result rows to a PNG; picks line or bar form automatically.

    Multiple values per scheme give one line per scheme over the swept
    variable; a single value gives a bar chart across schemes.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to plot")
    variables = {row.variable for row in rows}
    if len(variables) != 1:
        raise ValueError(f"rows mix variables {sorted(variables)}")
    variable = rows[0].variable
    groups = _grouped(rows)
    path = Path(path)

    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    if all(len(series) == 1 for series in groups.values()):
        names = list(groups)
        heights = [groups[name][0].rate_bps_hz for name in names]
        ax.bar(range(len(names)), heights, color="tab:blue", alpha=0.85)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("Achievable rate (bps/Hz)")
        ax.set_title(f"{_AXIS_LABELS.get(variable, variable)} = {rows[0].value:g}")
    else:
        for i, (name, series) in enumerate(sorted(groups.items())):
            xs = [r.value for r in series]
            ys = [r.rate_bps_hz for r in series]
            marker = _MARKERS[i % len(_MARKERS)]
            markevery = max(1, len(xs) // 12)
            ax.plot(xs, ys, marker=marker, markevery=markevery, markersize=4.5, label=name)
        ax.set_xlabel(_AXIS_LABELS.get(variable, variable))
        ax.set_ylabel("Achievable rate (bps/Hz)")
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
