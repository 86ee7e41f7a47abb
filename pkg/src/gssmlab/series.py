"""Estimate series containers, CSV serialization, and RMSE summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

# Column order is a wire contract: the plotting front end and the oracle
# scripts parse it verbatim.
CSV_HEADER = [
    "step", "t",
    "truth_x", "truth_v", "truth_h",
    "est_x", "est_v", "est_h",
    "var_x", "var_v", "var_h",
    "err_x", "err_v", "err_h",
]

STATE_NAMES = ("x", "v", "h")


@dataclass
class EstimateSeries:
    """Per-step means and covariance diagonals emitted by one estimator."""

    tag: str
    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    means: list[np.ndarray] = field(default_factory=list)
    cov_diags: list[np.ndarray] = field(default_factory=list)

    def append(self, step: int, t: float, mean: np.ndarray, cov_diag: np.ndarray) -> None:
        self.steps.append(int(step))
        self.times.append(float(t))
        self.means.append(np.asarray(mean, dtype=float).copy())
        self.cov_diags.append(np.asarray(cov_diag, dtype=float).copy())

    def __len__(self) -> int:
        return len(self.steps)

    def mean_array(self) -> np.ndarray:
        return np.array(self.means) if self.means else np.zeros((0, 0))

    def cov_diag_array(self) -> np.ndarray:
        return np.array(self.cov_diags) if self.cov_diags else np.zeros((0, 0))


@dataclass
class RadarRunTable:
    """One estimator run against truth, in the fixed CSV column layout.

    Errors are always estimate minus truth, computed here so the invariant
    cannot drift from the stored columns.
    """

    tag: str
    step: np.ndarray
    t: np.ndarray
    truth: np.ndarray  # N x 3, columns (x, v, h)
    est: np.ndarray    # N x 3
    var: np.ndarray    # N x 3
    err: np.ndarray    # N x 3

    @classmethod
    def from_series(cls, series: EstimateSeries, truth: np.ndarray) -> "RadarRunTable":
        n = len(series)
        truth = np.asarray(truth, dtype=float).reshape(n, 3)
        est = series.mean_array().reshape(n, 3)
        var = series.cov_diag_array().reshape(n, 3)
        return cls(
            tag=series.tag,
            step=np.asarray(series.steps, dtype=int),
            t=np.asarray(series.times, dtype=float),
            truth=truth,
            est=est,
            var=var,
            err=est - truth,
        )

    @classmethod
    def empty(cls, tag: str) -> "RadarRunTable":
        z = np.zeros((0, 3))
        return cls(tag=tag, step=np.zeros(0, dtype=int), t=np.zeros(0), truth=z, est=z.copy(), var=z.copy(), err=z.copy())

    def __len__(self) -> int:
        return self.step.shape[0]

    def to_csv(self, path) -> None:
        """Write with full-precision decimal text so parsing round-trips exactly."""
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for i in range(len(self)):
                row = [str(int(self.step[i])), repr(float(self.t[i]))]
                for block in (self.truth, self.est, self.var, self.err):
                    row.extend(repr(float(v)) for v in block[i])
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path, tag: str | None = None) -> "RadarRunTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header in {path}: {header}")
            rows = [row for row in reader if row]
        n = len(rows)
        data = np.array([[float(v) for v in row] for row in rows]) if n else np.zeros((0, len(CSV_HEADER)))
        return cls(
            tag=tag or str(path),
            step=data[:, 0].astype(int) if n else np.zeros(0, dtype=int),
            t=data[:, 1] if n else np.zeros(0),
            truth=data[:, 2:5],
            est=data[:, 5:8],
            var=data[:, 8:11],
            err=data[:, 11:14],
        )


@dataclass
class RmseSummary:
    """Per-state RMSE of one run, optionally over a trailing fraction of steps."""

    tag: str
    trailing_fraction: float
    rmse: dict[str, float]

    def to_dict(self) -> dict:
        return {"tag": self.tag, "trailing_fraction": self.trailing_fraction, "rmse": dict(self.rmse)}


def compute_rmse(table: RadarRunTable, trailing_fraction: float = 1.0) -> RmseSummary:
    """RMSE per state over the trailing fraction of steps.

    trailing_fraction=1.0 covers the whole run; 0.5 measures post-convergence
    accuracy by skipping the transient-dominated first half.
    """
    if not 0.0 < trailing_fraction <= 1.0:
        raise ValueError(f"trailing fraction must be in (0, 1], got {trailing_fraction}")
    n = len(table)
    if n == 0:
        raise ValueError("cannot compute RMSE of an empty series")
    n_sel = max(1, int(math.ceil(trailing_fraction * n)))
    err = table.err[n - n_sel:]
    values = np.sqrt(np.mean(err ** 2, axis=0))
    return RmseSummary(
        tag=table.tag,
        trailing_fraction=trailing_fraction,
        rmse={name: float(v) for name, v in zip(STATE_NAMES, values)},
    )


@dataclass
class MonteCarloSummary:
    """RMSE statistics aggregated over independent seeded runs."""

    runs: int
    base_seed: int
    trailing_fraction: float
    per_run: dict[str, list[dict[str, float]]]  # estimator -> per-run rmse dicts

    def mean(self, tag: str) -> dict[str, float]:
        rows = self.per_run[tag]
        return {s: float(np.mean([r[s] for r in rows])) for s in STATE_NAMES}

    def extrema(self, tag: str) -> tuple[dict[str, float], dict[str, float]]:
        rows = self.per_run[tag]
        lo = {s: float(np.min([r[s] for r in rows])) for s in STATE_NAMES}
        hi = {s: float(np.max([r[s] for r in rows])) for s in STATE_NAMES}
        return lo, hi

    def to_dict(self) -> dict:
        out = {
            "runs": self.runs,
            "base_seed": self.base_seed,
            "trailing_fraction": self.trailing_fraction,
            "estimators": {},
        }
        for tag, rows in self.per_run.items():
            lo, hi = self.extrema(tag)
            out["estimators"][tag] = {
                "mean": self.mean(tag),
                "min": lo,
                "max": hi,
                "per_run": rows,
            }
        return out

    def to_json(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
