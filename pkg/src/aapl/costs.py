"""Annotation-time estimation from the measured relative-time tables.

Each table cell is minutes of annotator work per minute of video, measured
for full segment, video-level, point-level, and interval-based point
supervision at 3/5/10/30-second spacings, with and without the self-check
pass. Times for unmeasured spacings come from a least-squares line in label
density (labels per video-minute), on the grounds that per-frame annotation
time is roughly constant. Estimates are comparative devices, not absolute
costs; they inherit every protocol detail of the measurement.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMES = ("full", "video", "point", "aapl")
VARIANTS = ("raw", "with_self_check")
AAPL_INTERVALS = (3.0, 5.0, 10.0, 30.0)

_DATASET_ALIASES = {
    "thumos": "thumos14",
    "thumos14": "thumos14",
    "thumos'14": "thumos14",
    "gtea": "gtea",
    "beoid": "beoid",
}

# Relative annotation time (work minutes per video minute), without and with
# the self-checking pass. Row order: full, video, point, aapl@3/5/10/30 s.
_RAW_TABLE = {
    "beoid": (3.72, 1.11, 2.44, 2.09, 1.43, 0.94, 0.45),
    "gtea": (4.49, 0.93, 3.03, 1.98, 1.60, 1.09, 0.53),
    "thumos14": (1.92, 0.45, 1.10, 1.31, 0.95, 0.64, 0.36),
}
_SELF_CHECK_TABLE = {
    "thumos14": (2.994, 0.810, 1.863, 2.272, 1.648, 1.072, 0.644),
    "gtea": (6.105, 1.591, 4.594, 3.138, 2.481, 1.690, 0.855),
    "beoid": (5.205, 1.976, 3.873, 3.305, 2.312, 1.483, 0.827),
}


def _canonical_dataset(dataset: str) -> str:
    key = dataset.strip().lower().replace(" ", "")
    if key not in _DATASET_ALIASES:
        raise KeyError(f"unknown dataset {dataset!r}; known: thumos14, gtea, beoid")
    return _DATASET_ALIASES[key]


def lookup_cost(
    dataset: str,
    scheme: str,
    variant: str = "raw",
    interval: float | None = None,
) -> float:
    """Measured relative annotation time for a (dataset, scheme, variant) cell.

    ``interval`` selects the spacing for the "aapl" scheme and must be one of
    the measured values (3, 5, 10, 30 seconds).
    """
    name = _canonical_dataset(dataset)
    if variant not in VARIANTS:
        raise KeyError(f"unknown variant {variant!r}; known: {VARIANTS}")
    if scheme not in SCHEMES:
        raise KeyError(f"unknown scheme {scheme!r}; known: {SCHEMES}")
    table = _RAW_TABLE if variant == "raw" else _SELF_CHECK_TABLE
    row = table[name]
    if scheme != "aapl":
        return row[SCHEMES.index(scheme)]
    if interval is None or float(interval) not in AAPL_INTERVALS:
        raise KeyError(
            f"aapl interval must be one of {AAPL_INTERVALS}, got {interval!r}"
        )
    return row[3 + AAPL_INTERVALS.index(float(interval))]


def aapl_rows(dataset: str, variant: str = "raw") -> list[tuple[float, float]]:
    """(interval seconds, relative time) pairs for the interval scheme."""
    return [
        (interval, lookup_cost(dataset, "aapl", variant, interval))
        for interval in AAPL_INTERVALS
    ]


@dataclass(frozen=True)
class LinearCostFit:
    per_frame_cost: float  # minutes of work per label
    base_cost: float  # minutes of work per video minute, independent of labels
    residuals: tuple[float, ...]
    r_squared: float

    def relative_time(self, interval: float) -> float:
        """Predicted work minutes per video minute at the given spacing."""
        return self.base_cost + self.per_frame_cost * (60.0 / interval)


def fit_linear(rows: list[tuple[float, float]]) -> LinearCostFit:
    """Least squares of relative time against label density (60/interval)."""
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to fit")
    x = np.array([60.0 / interval for interval, _ in rows])
    y = np.array([time for _, time in rows])
    x_mean, y_mean = x.mean(), y.mean()
    sxx = float(((x - x_mean) ** 2).sum())
    if sxx == 0:
        raise ValueError("rows must span at least two distinct intervals")
    slope = float(((x - x_mean) * (y - y_mean)).sum()) / sxx
    intercept = float(y_mean - slope * x_mean)
    fitted = intercept + slope * x
    residuals = y - fitted
    ss_tot = float(((y - y_mean) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0 else 1.0 - float((residuals**2).sum()) / ss_tot
    return LinearCostFit(slope, intercept, tuple(float(r) for r in residuals), r_squared)


def estimate(
    dataset: str,
    scheme: str,
    total_video_minutes: float,
    variant: str = "raw",
    interval: float | None = None,
) -> float:
    """Estimated work minutes to annotate ``total_video_minutes`` of video.

    Unmeasured interval spacings interpolate through the linear fit; spacings
    outside half/double the measured density range warn as extrapolation.
    """
    if total_video_minutes < 0:
        raise ValueError("total_video_minutes must be >= 0")
    if scheme == "aapl" and interval is not None and float(interval) not in AAPL_INTERVALS:
        fit = fit_linear(aapl_rows(dataset, variant))
        density = 60.0 / float(interval)
        measured = [60.0 / iv for iv in AAPL_INTERVALS]
        if density > 2 * max(measured) or density < 0.5 * min(measured):
            warnings.warn(
                f"interval {interval}s is beyond twice the measured range; "
                "the linear model is extrapolating",
                RuntimeWarning,
            )
        relative = fit.relative_time(float(interval))
    else:
        relative = lookup_cost(dataset, scheme, variant, interval)
    return relative * total_video_minutes


def tradeoff_rows(
    entries: list[tuple[str, float, float]],
) -> list[dict]:
    """Rows for a cost/performance trade-off curve.

    ``entries`` are (label, relative annotation time, metric) triples; the
    metric axis is whatever the caller supplies (e.g. average mAP).
    """
    return [
        {"label": label, "relative_annotation_time": time, "metric": metric}
        for label, time, metric in entries
    ]


def save_tradeoff(entries: list[tuple[str, float, float]], path: str | Path) -> None:
    """Write trade-off rows as CSV or JSON depending on the file suffix."""
    rows = tradeoff_rows(entries)
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(rows, indent=2) + "\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["label", "relative_annotation_time", "metric"]
        )
        writer.writeheader()
        writer.writerows(rows)
