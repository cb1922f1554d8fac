"""Per-dataset hyper-parameter presets and benchmark dataset statistics.

The five benchmark presets carry the tuned values for the scoring model
(learning rate, weight decay, loss weights, contrastive temperature,
pseudo-label thresholds) plus the fixed training-time settings: batch size
16, dropout 0.7, prototype momentum 0.001, top-k divisors (8, 3) everywhere
except ActivityNet's (2, 10), and the fixed resampled sequence lengths
(750 / 50 / 100). The "synthetic" preset is a desk-scale configuration for
the bundled synthetic fixture, not a benchmark value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ACTIVITYNET_THRESHOLDS, THUMOS_THRESHOLDS


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    learning_rate: float
    weight_decay: float
    lam_vid: float
    lam_pascl: float
    temperature: float
    theta_fg: float
    theta_bg: float
    train_length: int
    r_fg: float
    r_bg: float
    map_thresholds: tuple[float, ...]
    batch_size: int = 16
    dropout: float = 0.7
    momentum: float = 0.001


DATASET_PRESETS: dict[str, DatasetPreset] = {
    "thumos": DatasetPreset(
        name="thumos",
        learning_rate=0.0001,
        weight_decay=0.001,
        lam_vid=3.0,
        lam_pascl=0.1,
        temperature=0.10,
        theta_fg=1.0,
        theta_bg=0.05,
        train_length=750,
        r_fg=8,
        r_bg=3,
        map_thresholds=THUMOS_THRESHOLDS,
    ),
    "fineaction": DatasetPreset(
        name="fineaction",
        learning_rate=0.0001,
        weight_decay=0.0001,
        lam_vid=0.003,
        lam_pascl=0.01,
        temperature=0.1,
        theta_fg=1.0,
        theta_bg=0.5,
        train_length=100,
        r_fg=8,
        r_bg=3,
        map_thresholds=ACTIVITYNET_THRESHOLDS,
    ),
    "gtea": DatasetPreset(
        name="gtea",
        learning_rate=0.0001,
        weight_decay=0.0,
        lam_vid=0.3,
        lam_pascl=0.03,
        temperature=0.3,
        theta_fg=0.5,
        theta_bg=0.0,
        train_length=100,
        r_fg=8,
        r_bg=3,
        map_thresholds=THUMOS_THRESHOLDS,
    ),
    "beoid": DatasetPreset(
        name="beoid",
        learning_rate=0.001,
        weight_decay=0.0001,
        lam_vid=0.3,
        lam_pascl=30.0,
        temperature=0.3,
        theta_fg=0.5,
        theta_bg=0.0,
        train_length=100,
        r_fg=8,
        r_bg=3,
        map_thresholds=THUMOS_THRESHOLDS,
    ),
    "activitynet": DatasetPreset(
        name="activitynet",
        learning_rate=0.0001,
        weight_decay=0.0001,
        lam_vid=0.001,
        lam_pascl=0.001,
        temperature=1.0,
        theta_fg=0.95,
        theta_bg=0.5,
        train_length=50,
        r_fg=2,
        r_bg=10,
        map_thresholds=ACTIVITYNET_THRESHOLDS,
    ),
    # Desk-scale settings for the bundled synthetic fixture (not benchmark
    # values): 8-dim features want far less dropout than 2048-dim ones.
    "synthetic": DatasetPreset(
        name="synthetic",
        learning_rate=0.005,
        weight_decay=0.0001,
        lam_vid=1.0,
        lam_pascl=0.1,
        temperature=0.3,
        theta_fg=0.9,
        theta_bg=0.05,
        train_length=100,
        r_fg=8,
        r_bg=3,
        map_thresholds=THUMOS_THRESHOLDS,
        dropout=0.3,
    ),
}


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level statistics: sizes and medians of the benchmark datasets."""

    classes: int
    training_videos: int
    validation_videos: int
    median_video_seconds: float
    median_action_seconds: float
    median_actions_per_video: int
    median_classes_per_video: int


DATASET_STATS: dict[str, DatasetStats] = {
    "beoid": DatasetStats(34, 46, 12, 45.3, 1.2, 6, 3),
    "gtea": DatasetStats(7, 21, 7, 62.8, 1.8, 18, 6),
    "thumos": DatasetStats(20, 200, 213, 150.4, 2.9, 8, 1),
    "fineaction": DatasetStats(106, 8440, 4174, 101.5, 1.3, 2, 1),
    "activitynet": DatasetStats(200, 10024, 4926, 114.3, 26.8, 1, 1),
}
