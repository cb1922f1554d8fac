"""Synthetic fixture dataset: videos with class-dependent feature blobs.

Each video is a sequence of 1-second snippets (16 frames at 16 fps). A few
non-overlapping action segments carry class-specific feature means; the rest
is background around a zero mean. Isotropic Gaussian noise sits on top. The
fixture is small enough to train in seconds yet structured enough that the
whole pipeline (sampling, training, detection, evaluation) is exercised
meaningfully.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import (
    DatasetManifest,
    FeatureSequence,
    THUMOS_THRESHOLDS,
    VideoRecord,
    save_manifest,
    write_features,
)

SNIPPET_LEN = 16
FRAME_RATE = 16.0  # one snippet per second


def class_means(classes: int, dims: int, amplitude: float = 3.0) -> np.ndarray:
    """Distinct mean directions, cycling through coordinate axes."""
    means = np.zeros((classes, dims))
    for c in range(classes):
        means[c, c % dims] = amplitude
        means[c, (c + 1) % dims] = amplitude / 2
    return means


def make_synthetic_dataset(
    num_videos: int = 20,
    snippets: int = 100,
    dims: int = 8,
    classes: int = 3,
    seed: int = 0,
    noise: float = 1.0,
    out_dir: str | Path | None = None,
) -> tuple[DatasetManifest, dict[str, FeatureSequence]]:
    """Build the fixture; optionally persist it as manifest + feature files."""
    rng = np.random.default_rng(seed)
    means = class_means(classes, dims)
    videos = []
    features: dict[str, FeatureSequence] = {}
    for v in range(num_videos):
        vid = f"synth{v:03d}"
        # Sparse layout: a handful of short segments with wide gaps, so a
        # class is often present just once per video.
        segments: list[tuple[float, float, int]] = []
        cursor = int(rng.integers(2, 9))
        while True:
            length = int(rng.integers(6, 13))
            if cursor + length > snippets - 3:
                break
            cls = int(rng.integers(classes))
            segments.append((float(cursor), float(cursor + length), cls))
            cursor += length + int(rng.integers(8, 23))
        data = rng.standard_normal((snippets, dims)) * noise
        for start, end, cls in segments:
            data[int(start) : int(end)] += means[cls]
        seq = FeatureSequence(
            vid, data.astype(np.float32), snippet_len=SNIPPET_LEN, frame_rate=FRAME_RATE
        )
        features[vid] = seq
        videos.append(
            VideoRecord(
                id=vid,
                duration=float(snippets),
                frame_rate=FRAME_RATE,
                snippet_len=SNIPPET_LEN,
                feature_path=f"{vid}.aaplft",
                ground_truth=tuple(segments),
            )
        )
    manifest = DatasetManifest(
        class_names=tuple(f"action{c}" for c in range(classes)),
        videos=tuple(videos),
        map_thresholds=THUMOS_THRESHOLDS,
        split="training",
    )
    manifest.validate()
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for vid, seq in features.items():
            write_features(seq, out_dir / f"{vid}.aaplft")
        save_manifest(manifest, out_dir / "manifest.json")
    return manifest, features
