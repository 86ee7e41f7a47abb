"""Figure rendering over estimate CSVs.

Consumes the fixed 14-column estimate schema written by the benchmark CLI and
renders one truth-vs-estimate figure plus an error-curve variant. All checks
happen on the data; the image files are a pure view.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# Wire contract shared with the estimator CLI; parsed verbatim.
CSV_HEADER = [
    "step", "t",
    "truth_x", "truth_v", "truth_h",
    "est_x", "est_v", "est_h",
    "var_x", "var_v", "var_h",
    "err_x", "err_v", "err_h",
]

STATE_LABELS = {
    "x": ("distance", "m"),
    "v": ("velocity", "m/s"),
    "h": ("altitude", "m"),
}


class SchemaError(ValueError):
    """Input CSV does not match the estimate schema; names the offending column."""


@dataclass
class SeriesData:
    """One estimator's parsed run."""

    tag: str
    step: np.ndarray
    t: np.ndarray
    columns: dict[str, np.ndarray]


@dataclass
class PlotSpec:
    """What to draw: input runs, the state to plot, and the output path."""

    csv_paths: list[Path]
    out_path: Path
    state: str = "v"
    step_range: tuple[int, int] | None = None
    title: str | None = None

    def __post_init__(self):
        self.csv_paths = [Path(p) for p in self.csv_paths]
        self.out_path = Path(self.out_path)
        if self.state not in STATE_LABELS:
            raise ValueError(f"state must be one of {sorted(STATE_LABELS)}, got {self.state!r}")
        if not self.csv_paths:
            raise ValueError("at least one estimate CSV is required")


def load_series(path: Path) -> SeriesData:
    """Parse one estimate CSV, validating the exact column layout."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {CSV_HEADER}") from None
        if header != CSV_HEADER:
            missing = [c for c in CSV_HEADER if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing column {missing[0]!r}")
            raise SchemaError(f"{path}: unexpected column order {header}")
        rows = [r for r in reader if r]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array([[float(v) for v in r] for r in rows])
    columns = {name: data[:, i] for i, name in enumerate(CSV_HEADER)}
    return SeriesData(
        tag=path.stem,
        step=columns["step"].astype(int),
        t=columns["t"],
        columns=columns,
    )


def load_aligned(paths) -> list[SeriesData]:
    """Load every run and refuse step columns that do not line up."""
    series = [load_series(p) for p in paths]
    base = series[0]
    for s in series[1:]:
        if len(s.step) != len(base.step) or not np.array_equal(s.step, base.step):
            raise SchemaError(
                f"step columns differ between {base.tag} and {s.tag}: "
                f"{len(base.step)} vs {len(s.step)} rows or mismatched indices"
            )
    return series


def _select(spec: PlotSpec, s: SeriesData) -> np.ndarray:
    if spec.step_range is None:
        return np.ones(len(s.step), dtype=bool)
    lo, hi = spec.step_range
    return (s.step >= lo) & (s.step <= hi)


def render(spec: PlotSpec) -> list[Path]:
    """Write the estimate overlay figure and its error-curve variant.

    Returns the written paths: [main image, error image]. Inputs are read
    only; rendering the same inputs twice produces images of identical size.
    """
    series = load_aligned(spec.csv_paths)
    name, unit = STATE_LABELS[spec.state]
    truth_col = f"truth_{spec.state}"
    est_col = f"est_{spec.state}"
    err_col = f"err_{spec.state}"

    mask = _select(spec, series[0])
    if not mask.any():
        raise ValueError(f"step range {spec.step_range} selects no rows")
    t = series[0].t[mask]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(t, series[0].columns[truth_col][mask], "k--", linewidth=1.2, label="truth")
    for s in series:
        ax.plot(t, s.columns[est_col][mask], linewidth=1.0, label=s.tag)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"{name} ({unit})")
    ax.set_title(spec.title or f"{name.capitalize()} estimation")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, dpi=120)
    plt.close(fig)

    err_path = spec.out_path.with_name(spec.out_path.stem + "_error" + spec.out_path.suffix)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for s in series:
        ax.plot(t, s.columns[err_col][mask], linewidth=1.0, label=s.tag)
    ax.axhline(0.0, color="k", linewidth=0.8, alpha=0.5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"{name} error ({unit})")
    ax.set_title(spec.title or f"{name.capitalize()} estimation error")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(err_path, dpi=120)
    plt.close(fig)

    return [spec.out_path, err_path]
