"""Detection evaluation: per-class AP under greedy tIoU matching and mAP.

Predictions are matched per class in descending confidence order; each
ground-truth segment matches at most once, a prediction is a true positive
iff its best-tIoU unmatched ground truth reaches the threshold. AP is the
interpolation-free sum of precision times recall increments. mAP averages
over classes that have at least one ground-truth instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ACTIVITYNET_THRESHOLDS, THUMOS_THRESHOLDS, DatasetManifest
from .detection import ActionInstance, temporal_iou

THRESHOLD_PRESETS: dict[str, tuple[float, ...]] = {
    "thumos": THUMOS_THRESHOLDS,
    "activitynet": ACTIVITYNET_THRESHOLDS,
}


def tiou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Temporal intersection over union of two (start, end) intervals."""
    if a[1] <= a[0] or b[1] <= b[0]:
        raise ValueError("degenerate interval")
    return temporal_iou(a, b)


def average_precision(
    preds: list[tuple[tuple[float, float], float]],
    gts: list[tuple[float, float]],
    threshold: float,
) -> float:
    """AP for one class at one tIoU threshold.

    ``preds`` are ((start, end), confidence) pairs; ties in confidence keep
    input order, ties in tIoU match the earlier ground truth.
    """
    if not gts:
        return 0.0
    order = sorted(range(len(preds)), key=lambda i: -preds[i][1])
    matched = [False] * len(gts)
    tp_flags = []
    for i in order:
        interval = preds[i][0]
        best_iou = 0.0
        best_j = -1
        for j, gt in enumerate(gts):
            if matched[j]:
                continue
            iou = temporal_iou(interval, gt)
            if iou > best_iou:
                best_iou = iou
                best_j = j
        if best_j >= 0 and best_iou >= threshold:
            matched[best_j] = True
            tp_flags.append(True)
        else:
            tp_flags.append(False)
    ap = 0.0
    tp_count = 0
    for rank, is_tp in enumerate(tp_flags, start=1):
        if is_tp:
            tp_count += 1
            ap += (tp_count / rank) / len(gts)
    return ap


@dataclass(frozen=True)
class EvalReport:
    thresholds: tuple[float, ...]
    class_names: tuple[str, ...]
    per_class_ap: np.ndarray  # (n_thresholds, C); NaN for classes without GT
    map_per_threshold: tuple[float, ...]
    average_map: float
    gt_count: int
    prediction_count: int

    def to_json(self) -> dict:
        per_class = {}
        for ci, name in enumerate(self.class_names):
            col = self.per_class_ap[:, ci]
            per_class[name] = [None if np.isnan(v) else float(v) for v in col]
        return {
            "thresholds": list(self.thresholds),
            "per_class_ap": per_class,
            "map_per_threshold": list(self.map_per_threshold),
            "average_map": self.average_map,
            "gt_count": self.gt_count,
            "prediction_count": self.prediction_count,
        }

    def to_table(self) -> str:
        """Aligned text table: one mAP column per threshold plus the average."""
        headers = [f"mAP@{t:g}" for t in self.thresholds] + ["Avg"]
        values = [f"{100 * v:.1f}" for v in self.map_per_threshold]
        values.append(f"{100 * self.average_map:.1f}")
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        body = "  ".join(v.rjust(w) for v, w in zip(values, widths))
        return head + "\n" + body


def evaluate(
    predictions: list[ActionInstance],
    manifest: DatasetManifest,
    thresholds: tuple[float, ...] | None = None,
) -> EvalReport:
    """Score predictions against the manifest's ground truth.

    ``thresholds`` defaults to the manifest's own threshold set; the named
    families live in THRESHOLD_PRESETS.
    """
    if thresholds is None:
        thresholds = manifest.map_thresholds
    C = manifest.num_classes
    known = {v.id for v in manifest.videos}
    for pred in predictions:
        if pred.video_id not in known:
            raise ValueError(f"prediction references unknown video {pred.video_id!r}")
        if not 0 <= pred.class_index < C:
            raise ValueError(f"prediction references unknown class {pred.class_index}")

    gt_by_class: dict[int, list[tuple[str, tuple[float, float]]]] = {c: [] for c in range(C)}
    for video in manifest.videos:
        for start, end, cls in video.ground_truth or ():
            gt_by_class[cls].append((video.id, (start, end)))
    preds_by_class: dict[int, list[ActionInstance]] = {c: [] for c in range(C)}
    for pred in predictions:
        preds_by_class[pred.class_index].append(pred)

    per_class_ap = np.full((len(thresholds), C), np.nan)
    for c in range(C):
        gts = gt_by_class[c]
        if not gts:
            continue
        for ti, threshold in enumerate(thresholds):
            per_class_ap[ti, c] = _class_ap(preds_by_class[c], gts, threshold)

    has_gt = ~np.isnan(per_class_ap[0])
    if has_gt.any():
        map_per_threshold = tuple(float(np.nanmean(row)) for row in per_class_ap)
    else:
        map_per_threshold = tuple(0.0 for _ in thresholds)
    average_map = float(np.mean(map_per_threshold))
    return EvalReport(
        thresholds=tuple(thresholds),
        class_names=manifest.class_names,
        per_class_ap=per_class_ap,
        map_per_threshold=map_per_threshold,
        average_map=average_map,
        gt_count=sum(len(v) for v in gt_by_class.values()),
        prediction_count=len(predictions),
    )


def _class_ap(
    preds: list[ActionInstance],
    gts: list[tuple[str, tuple[float, float]]],
    threshold: float,
) -> float:
    """Greedy matching pooled across videos; tIoU applies within one video."""
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    matched = [False] * len(gts)
    tp_flags = []
    for i in order:
        pred = preds[i]
        best_iou = 0.0
        best_j = -1
        for j, (video_id, gt) in enumerate(gts):
            if matched[j] or video_id != pred.video_id:
                continue
            iou = temporal_iou((pred.start, pred.end), gt)
            if iou > best_iou:
                best_iou = iou
                best_j = j
        if best_j >= 0 and best_iou >= threshold:
            matched[best_j] = True
            tp_flags.append(True)
        else:
            tp_flags.append(False)
    ap = 0.0
    tp_count = 0
    for rank, is_tp in enumerate(tp_flags, start=1):
        if is_tp:
            tp_count += 1
            ap += (tp_count / rank) / len(gts)
    return ap


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n")
