"""Action instance generation from score sequences.

Per class: upsample the fused scores to frame rate, collect superlevel-set
intervals over a grid of thresholds, give each candidate an outer-inner
contrastive confidence, then resolve duplicates with Gaussian soft-NMS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import DatasetManifest, FeatureSequence, VideoRecord
from .model import ModelParams, ScoringOutputs, forward

DEFAULT_THRESHOLDS = tuple(round(0.10 + 0.05 * k, 2) for k in range(17))  # 0.10 .. 0.90


@dataclass(frozen=True)
class ActionInstance:
    video_id: str
    start: float
    end: float
    class_index: int
    confidence: float

    def validate(self, duration: float | None = None) -> None:
        if not self.start < self.end:
            raise ValueError(f"instance must satisfy start < end, got ({self.start}, {self.end})")
        if duration is not None and not (0 <= self.start and self.end <= duration):
            raise ValueError(
                f"instance ({self.start}, {self.end}) outside [0, {duration}]"
            )
        if not np.isfinite(self.confidence):
            raise ValueError("confidence must be finite")


@dataclass(frozen=True)
class DetectorConfig:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    oic_inflation: float = 0.25
    nms_sigma: float = 0.3
    nms_min_score: float = 1e-4
    upsample: bool = True

    def __post_init__(self) -> None:
        if any(not 0 < t < 1 for t in self.thresholds):
            raise ValueError("thresholds must lie strictly inside (0, 1)")
        if self.oic_inflation < 0:
            raise ValueError("oic_inflation must be >= 0")


def upsample_scores(row: np.ndarray, frame_rate: float, snippet_len: int) -> np.ndarray:
    """Linear interpolation from snippet centers to per-frame scores.

    Frame j (center j + 0.5 in frame units) reads the score at snippet
    position (j + 0.5)/snippet_len - 0.5, constant beyond the end centers.
    Output length is round(T * snippet_len).
    """
    row = np.asarray(row, dtype=np.float64)
    T = row.shape[0]
    if T < 1:
        raise ValueError("need at least one snippet score")
    n_frames = int(round(T * snippet_len))
    positions = (np.arange(n_frames) + 0.5) / snippet_len - 0.5
    return np.interp(positions, np.arange(T), row)


def generate_candidates(
    scores: np.ndarray,
    thresholds: tuple[float, ...],
    frame_rate: float = 1.0,
) -> list[tuple[float, float]]:
    """Maximal runs of frames scoring strictly above each threshold.

    The union over thresholds keeps duplicates; soft-NMS resolves them later.
    Intervals are in seconds ([frame, frame+1) spans converted at frame_rate).
    """
    scores = np.asarray(scores, dtype=np.float64)
    candidates: list[tuple[float, float]] = []
    for theta in thresholds:
        mask = scores > theta
        start = None
        for i, on in enumerate(mask):
            if on and start is None:
                start = i
            elif not on and start is not None:
                candidates.append((start / frame_rate, i / frame_rate))
                start = None
        if start is not None:
            candidates.append((start / frame_rate, len(mask) / frame_rate))
    return candidates


def oic_score(
    scores: np.ndarray,
    start: float,
    end: float,
    inflation: float = 0.25,
    frame_rate: float = 1.0,
) -> float:
    """Outer-inner contrastive confidence of an interval.

    Inner mean minus the mean over flanks of length inflation * (end - start)
    on each side, clipped to the sequence; both empty flanks contribute 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    lo = int(round(start * frame_rate))
    hi = int(round(end * frame_rate))
    if not 0 <= lo < hi <= n:
        raise ValueError(f"degenerate or out-of-span interval [{start}, {end})")
    flank = int(round(inflation * (hi - lo)))
    left = scores[max(0, lo - flank) : lo]
    right = scores[hi : min(n, hi + flank)]
    inner = float(scores[lo:hi].mean())
    outer_count = left.size + right.size
    if outer_count == 0:
        return inner
    return inner - float((left.sum() + right.sum()) / outer_count)


def temporal_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    if inter <= 0.0:
        return 0.0
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union


def soft_nms(
    instances: list[ActionInstance],
    sigma: float = 0.3,
    min_score: float = 1e-4,
) -> list[ActionInstance]:
    """Gaussian soft-NMS within one (video, class) group.

    Iteratively keeps the highest-confidence instance, decaying the rest by
    exp(-tIoU^2 / sigma); instances falling below ``min_score`` drop out.
    The returned confidences are the decayed (final) scores.
    """
    remaining = list(instances)
    kept: list[ActionInstance] = []
    while remaining:
        best_idx = max(range(len(remaining)), key=lambda i: remaining[i].confidence)
        best = remaining.pop(best_idx)
        kept.append(best)
        rescored = []
        for inst in remaining:
            iou = temporal_iou((best.start, best.end), (inst.start, inst.end))
            decayed = inst.confidence * float(np.exp(-(iou**2) / sigma))
            if decayed >= min_score:
                rescored.append(
                    ActionInstance(inst.video_id, inst.start, inst.end, inst.class_index, decayed)
                )
        remaining = rescored
    return kept


def detect(
    outputs: ScoringOutputs,
    record: VideoRecord,
    cfg: DetectorConfig = DetectorConfig(),
) -> list[ActionInstance]:
    """Full generator: per-class candidates, OIC confidences, soft-NMS.

    Emits the surviving instances sorted by descending confidence.
    """
    C = outputs.P.shape[0]
    results: list[ActionInstance] = []
    for c in range(C):
        row = outputs.P[c]
        if cfg.upsample:
            scores = upsample_scores(row, record.frame_rate, record.snippet_len)
            rate = record.frame_rate
        else:
            scores = np.asarray(row, dtype=np.float64)
            rate = record.frame_rate / record.snippet_len
        candidates = generate_candidates(scores, cfg.thresholds, frame_rate=rate)
        scored = []
        for start, end in candidates:
            end = min(end, record.duration)
            if end <= start or int(round(end * rate)) <= int(round(start * rate)):
                continue
            conf = oic_score(scores, start, end, inflation=cfg.oic_inflation, frame_rate=rate)
            scored.append(ActionInstance(record.id, start, end, c, conf))
        results.extend(soft_nms(scored, sigma=cfg.nms_sigma, min_score=cfg.nms_min_score))
    results.sort(key=lambda inst: -inst.confidence)
    for inst in results:
        inst.validate(duration=record.duration)
    return results


def detect_dataset(
    manifest: DatasetManifest,
    features: dict[str, FeatureSequence],
    params: ModelParams,
    cfg: DetectorConfig = DetectorConfig(),
) -> list[ActionInstance]:
    """Score every manifest video with the eval-mode model and detect."""
    instances: list[ActionInstance] = []
    for video in manifest.videos:
        seq = features[video.id]
        outputs = forward(seq.data.T, params, mode="eval")
        instances.extend(detect(outputs, video, cfg))
    return instances


# ---------------------------------------------------------------------------
# Predictions IO


def save_predictions(instances: list[ActionInstance], path: str | Path) -> None:
    rows = [
        {
            "video_id": inst.video_id,
            "start": inst.start,
            "end": inst.end,
            "class": inst.class_index,
            "score": inst.confidence,
        }
        for inst in instances
    ]
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


def load_predictions(path: str | Path) -> list[ActionInstance]:
    rows = json.loads(Path(path).read_text())
    return [
        ActionInstance(
            video_id=str(r["video_id"]),
            start=float(r["start"]),
            end=float(r["end"]),
            class_index=int(r["class"]),
            confidence=float(r["score"]),
        )
        for r in rows
    ]
