"""Dataset manifests, point-label storage, feature file IO, and temporal resampling.

Feature files use the AAPLFT1 binary layout: the magic bytes ``AAPLFT1\\0``,
two little-endian uint32 fields (T, D), then T*D little-endian float32 values
in snippet-major order. Manifests and label sets are plain JSON.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FEATURE_MAGIC = b"AAPLFT1\0"

DEFAULT_SNIPPET_LEN = 16

# tIoU threshold families used for averaged mAP reporting.
THUMOS_THRESHOLDS = tuple(round(0.1 * k, 1) for k in range(1, 8))
ACTIVITYNET_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))


class ManifestError(ValueError):
    """Raised when a manifest or label file violates an invariant."""


class FeatureFileError(ValueError):
    """Raised when a feature file is malformed."""


@dataclass(frozen=True)
class VideoRecord:
    id: str
    duration: float
    frame_rate: float
    feature_path: str
    snippet_len: int = DEFAULT_SNIPPET_LEN
    ground_truth: tuple[tuple[float, float, int], ...] | None = None

    def validate(self, num_classes: int | None = None) -> None:
        if self.duration <= 0:
            raise ManifestError(f"video {self.id!r}: duration must be > 0, got {self.duration}")
        if self.frame_rate <= 0:
            raise ManifestError(f"video {self.id!r}: frame_rate must be > 0, got {self.frame_rate}")
        if self.snippet_len <= 0:
            raise ManifestError(f"video {self.id!r}: snippet_len must be > 0, got {self.snippet_len}")
        for seg in self.ground_truth or ():
            start, end, cls = seg
            if not 0 <= start < end <= self.duration:
                raise ManifestError(
                    f"video {self.id!r}: ground-truth segment ({start}, {end}) must satisfy "
                    f"0 <= start < end <= duration ({self.duration})"
                )
            if num_classes is not None and not 0 <= cls < num_classes:
                raise ManifestError(
                    f"video {self.id!r}: ground-truth class {cls} outside [0, {num_classes})"
                )

    @property
    def snippet_seconds(self) -> float:
        return self.snippet_len / self.frame_rate


@dataclass(frozen=True)
class DatasetManifest:
    class_names: tuple[str, ...]
    videos: tuple[VideoRecord, ...]
    map_thresholds: tuple[float, ...]
    split: str = "training"

    def validate(self) -> None:
        if len(self.class_names) < 1:
            raise ManifestError("manifest must declare at least one class")
        seen: set[str] = set()
        for video in self.videos:
            if video.id in seen:
                raise ManifestError(f"duplicate video id {video.id!r}")
            seen.add(video.id)
            video.validate(num_classes=len(self.class_names))
        thr = self.map_thresholds
        if any(not 0 < t <= 1 for t in thr) or any(a >= b for a, b in zip(thr, thr[1:])):
            raise ManifestError(
                f"map_thresholds must be strictly increasing within (0, 1], got {list(thr)}"
            )
        if self.split not in ("training", "validation"):
            raise ManifestError(f"split must be 'training' or 'validation', got {self.split!r}")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def video(self, video_id: str) -> VideoRecord:
        for record in self.videos:
            if record.id == video_id:
                return record
        raise KeyError(f"unknown video id {video_id!r}")


@dataclass(frozen=True)
class AAPLLabelSet:
    """Per-video point labels: (timestamp seconds, class-index set) pairs.

    An empty class set marks a background frame.
    """

    video_id: str
    labels: tuple[tuple[float, frozenset[int]], ...]

    def validate(self, duration: float | None = None, num_classes: int | None = None) -> None:
        times = [t for t, _ in self.labels]
        if len(set(times)) != len(times):
            raise ManifestError(f"video {self.video_id!r}: duplicate label timestamps")
        for t, classes in self.labels:
            if duration is not None and not 0 <= t <= duration:
                raise ManifestError(
                    f"video {self.video_id!r}: label time {t} outside [0, {duration}]"
                )
            if num_classes is not None and any(not 0 <= c < num_classes for c in classes):
                raise ManifestError(
                    f"video {self.video_id!r}: label at t={t} has class outside [0, {num_classes})"
                )

    def sorted(self) -> "AAPLLabelSet":
        return AAPLLabelSet(self.video_id, tuple(sorted(self.labels, key=lambda lb: lb[0])))


@dataclass(frozen=True)
class IndexedLabels:
    """Labels mapped onto snippet indices of a (possibly resampled) sequence."""

    video_id: str
    labels: tuple[tuple[int, frozenset[int]], ...]

    @property
    def foreground(self) -> tuple[tuple[int, frozenset[int]], ...]:
        return tuple((i, c) for i, c in self.labels if c)

    @property
    def background_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in self.labels if not c)


@dataclass
class FeatureSequence:
    video_id: str
    data: np.ndarray  # (T, D) float32
    snippet_len: int = DEFAULT_SNIPPET_LEN
    frame_rate: float = 25.0

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise FeatureFileError(f"video {self.video_id!r}: feature data must be 2-D")
        T, D = self.data.shape
        if T < 1:
            raise FeatureFileError(f"video {self.video_id!r}: need at least one snippet")
        if D < 2 or D % 2 != 0:
            raise FeatureFileError(
                f"video {self.video_id!r}: feature dim must be even and >= 2, got {D}"
            )
        if not np.all(np.isfinite(self.data)):
            raise FeatureFileError(f"video {self.video_id!r}: non-finite feature entries")

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]

    @property
    def snippet_seconds(self) -> float:
        return self.snippet_len / self.frame_rate

    def snippet_center_time(self, index: int) -> float:
        return (index + 0.5) * self.snippet_seconds


# ---------------------------------------------------------------------------
# JSON IO


def _record_from_json(obj: dict) -> VideoRecord:
    gt = obj.get("ground_truth")
    segments = None
    if gt is not None:
        segments = tuple(
            (float(seg["start"]), float(seg["end"]), int(seg["class_index"])) for seg in gt
        )
    return VideoRecord(
        id=str(obj["id"]),
        duration=float(obj["duration"]),
        frame_rate=float(obj["frame_rate"]),
        snippet_len=int(obj.get("snippet_len", DEFAULT_SNIPPET_LEN)),
        feature_path=str(obj.get("feature_path", "")),
        ground_truth=segments,
    )


def _record_to_json(record: VideoRecord) -> dict:
    obj: dict = {
        "id": record.id,
        "duration": record.duration,
        "frame_rate": record.frame_rate,
        "snippet_len": record.snippet_len,
        "feature_path": record.feature_path,
    }
    if record.ground_truth is not None:
        obj["ground_truth"] = [
            {"start": s, "end": e, "class_index": c} for s, e, c in record.ground_truth
        ]
    return obj


def load_manifest(path: str | Path, check_features: bool = False) -> DatasetManifest:
    """Load and validate a dataset manifest.

    With ``check_features`` set, every referenced feature file must exist.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    try:
        manifest = DatasetManifest(
            class_names=tuple(str(c) for c in raw["class_names"]),
            videos=tuple(_record_from_json(v) for v in raw["videos"]),
            map_thresholds=tuple(float(t) for t in raw.get("map_thresholds", THUMOS_THRESHOLDS)),
            split=str(raw.get("split", "training")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"{path}: malformed manifest ({exc})") from exc
    manifest.validate()
    if check_features:
        base = path.parent
        for video in manifest.videos:
            feature_path = resolve_feature_path(video, base)
            if not feature_path.is_file():
                raise ManifestError(
                    f"video {video.id!r}: feature file not found: {feature_path}"
                )
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    manifest.validate()
    obj = {
        "class_names": list(manifest.class_names),
        "split": manifest.split,
        "map_thresholds": list(manifest.map_thresholds),
        "videos": [_record_to_json(v) for v in manifest.videos],
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def resolve_feature_path(record: VideoRecord, base: str | Path | None = None) -> Path:
    feature_path = Path(record.feature_path)
    if not feature_path.is_absolute() and base is not None:
        feature_path = Path(base) / feature_path
    return feature_path


def labels_to_json(labels: AAPLLabelSet) -> dict:
    return {
        "video_id": labels.video_id,
        "labels": [
            {"t": t, "classes": sorted(classes)} for t, classes in labels.sorted().labels
        ],
    }


def labels_from_json(obj: dict) -> AAPLLabelSet:
    return AAPLLabelSet(
        video_id=str(obj["video_id"]),
        labels=tuple(
            (float(lb["t"]), frozenset(int(c) for c in lb["classes"])) for lb in obj["labels"]
        ),
    )


def save_labels(label_sets: list[AAPLLabelSet] | AAPLLabelSet, path: str | Path) -> None:
    if isinstance(label_sets, AAPLLabelSet):
        obj: object = labels_to_json(label_sets)
    else:
        obj = [labels_to_json(ls) for ls in label_sets]
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_labels(path: str | Path) -> dict[str, AAPLLabelSet]:
    """Load labels from a JSON file (single object or list) or a directory of files."""
    path = Path(path)
    if path.is_dir():
        out: dict[str, AAPLLabelSet] = {}
        for child in sorted(path.glob("*.json")):
            out.update(load_labels(child))
        return out
    raw = json.loads(path.read_text())
    objs = raw if isinstance(raw, list) else [raw]
    label_sets = [labels_from_json(o) for o in objs]
    for ls in label_sets:
        ls.validate()
    return {ls.video_id: ls for ls in label_sets}


# ---------------------------------------------------------------------------
# Feature file IO


def write_features(seq: FeatureSequence, path: str | Path) -> None:
    data = np.ascontiguousarray(seq.data, dtype="<f4")
    T, D = data.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", T, D))
        fh.write(data.tobytes())


def load_features(
    path: str | Path,
    video_id: str | None = None,
    snippet_len: int = DEFAULT_SNIPPET_LEN,
    frame_rate: float = 25.0,
) -> FeatureSequence:
    """Read an AAPLFT1 feature file bit-exactly."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(FEATURE_MAGIC)] != FEATURE_MAGIC:
        raise FeatureFileError(f"{path}: bad magic bytes")
    header_end = len(FEATURE_MAGIC) + 8
    if len(blob) < header_end:
        raise FeatureFileError(f"{path}: truncated header")
    T, D = struct.unpack("<II", blob[len(FEATURE_MAGIC) : header_end])
    expected = T * D * 4
    payload = blob[header_end:]
    if len(payload) < expected:
        raise FeatureFileError(
            f"{path}: truncated payload, expected {expected} bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(T, D)
    return FeatureSequence(
        video_id=video_id if video_id is not None else path.stem,
        data=data.copy(),
        snippet_len=snippet_len,
        frame_rate=frame_rate,
    )


def load_features_for(record: VideoRecord, base: str | Path | None = None) -> FeatureSequence:
    return load_features(
        resolve_feature_path(record, base),
        video_id=record.id,
        snippet_len=record.snippet_len,
        frame_rate=record.frame_rate,
    )


# ---------------------------------------------------------------------------
# Temporal resampling


def rescale_features(seq: FeatureSequence, target_len: int) -> FeatureSequence:
    """Endpoint-aligned linear interpolation to ``target_len`` snippets."""
    if target_len < 2:
        raise ValueError(f"target_len must be >= 2, got {target_len}")
    T = seq.length
    if target_len == T:
        return FeatureSequence(seq.video_id, seq.data.copy(), seq.snippet_len, seq.frame_rate)
    positions = np.arange(target_len) * (T - 1) / (target_len - 1)
    lo = np.floor(positions).astype(int)
    hi = np.minimum(lo + 1, T - 1)
    frac = (positions - lo)[:, None].astype(np.float64)
    data = (1.0 - frac) * seq.data[lo].astype(np.float64) + frac * seq.data[hi].astype(np.float64)
    return FeatureSequence(
        seq.video_id, data.astype(np.float32), seq.snippet_len, seq.frame_rate
    )


def _nearest_positions(chosen: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Positions in sorted ``chosen`` nearest each source; ties to the earlier one."""
    pos = np.searchsorted(chosen, sources)
    left = np.clip(pos - 1, 0, len(chosen) - 1)
    right = np.clip(pos, 0, len(chosen) - 1)
    take_left = np.abs(chosen[left] - sources) <= np.abs(chosen[right] - sources)
    return np.where(take_left, left, right)


def sample_to_train_length(
    seq: FeatureSequence,
    labels: AAPLLabelSet,
    target_len: int,
    mode: str = "deterministic",
    seed: int = 0,
) -> tuple[FeatureSequence, IndexedLabels]:
    """Resample a sequence to a fixed training length and remap its labels.

    Downsizing uses stratified index selection over ``target_len`` equal
    strata (stratum midpoint when deterministic, uniform within the stratum
    when stochastic); upsizing uses linear interpolation. Each label maps to
    the retained snippet whose source index is nearest (earlier index on
    ties); labels colliding on one retained snippet merge by class-set union.
    """
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")
    if mode not in ("stochastic", "deterministic"):
        raise ValueError(f"mode must be 'stochastic' or 'deterministic', got {mode!r}")
    T = seq.length
    times = np.array([t for t, _ in labels.labels], dtype=np.float64)
    source_indices = np.clip(
        np.floor(times * seq.frame_rate / seq.snippet_len).astype(int), 0, T - 1
    )

    if T == target_len:
        # Width-1 strata select every index; skip the selection machinery.
        indexed = {}
        for s, (_, classes) in zip(source_indices, labels.labels):
            indexed[int(s)] = indexed.get(int(s), frozenset()) | classes
        return (
            FeatureSequence(seq.video_id, seq.data.copy(), seq.snippet_len, seq.frame_rate),
            IndexedLabels(seq.video_id, tuple(sorted(indexed.items()))),
        )

    if T >= target_len:
        if mode == "deterministic":
            chosen = np.floor((np.arange(target_len) + 0.5) * T / target_len).astype(int)
        else:
            bounds = np.floor(np.arange(target_len + 1) * T / target_len).astype(int)
            rng = np.random.default_rng(seed)
            chosen = rng.integers(bounds[:-1], bounds[1:])
        out = FeatureSequence(
            seq.video_id, seq.data[chosen].copy(), seq.snippet_len, seq.frame_rate
        )
        positions = _nearest_positions(chosen, source_indices)
        mapped = [
            (int(p), classes) for p, (_, classes) in zip(positions, labels.labels)
        ]
    else:
        out = rescale_features(seq, target_len)
        # Source row i lands at output position i*(L-1)/(T-1); snap to nearest,
        # earlier index on exact .5 ties.
        scale = (target_len - 1) / (T - 1) if T > 1 else 0.0
        mapped = []
        for s, (_, classes) in zip(source_indices, labels.labels):
            x = s * scale
            frac = x - math.floor(x)
            idx = int(math.floor(x)) if frac <= 0.5 else int(math.ceil(x))
            mapped.append((idx, classes))

    merged: dict[int, frozenset[int]] = {}
    for idx, classes in mapped:
        merged[idx] = merged.get(idx, frozenset()) | classes
    indexed = tuple(sorted(merged.items()))
    return out, IndexedLabels(seq.video_id, indexed)
