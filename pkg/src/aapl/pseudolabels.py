"""Ground-truth anchored pseudo-labeling.

Point labels expand onto maximal contiguous snippet runs whose predictions
are confidently and consistently foreground (per class) or background. The
original labels are never altered; qualifying runs only extend them to
neighboring snippets, and the extended set replaces the point labels in the
point and contrastive losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import IndexedLabels


@dataclass(frozen=True)
class PseudoLabelConfig:
    theta_fg: float = 1.0  # strict P > theta_fg, so 1.0 disables foreground runs
    theta_bg: float = 0.0  # strict A < theta_bg, so 0.0 disables background runs
    enabled: bool = True
    warmup_fraction: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_fg <= 1.0 or not 0.0 <= self.theta_bg <= 1.0:
            raise ValueError("thresholds must lie in [0, 1]")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1]")

    def active_at(self, iteration: int, max_iterations: int) -> bool:
        return self.enabled and iteration >= self.warmup_fraction * max_iterations


@dataclass
class PseudoLabelSet:
    """Per-snippet pseudo-labels plus the anchoring real label per snippet."""

    video_id: str
    foreground: dict[int, frozenset[int]] = field(default_factory=dict)
    background: set[int] = field(default_factory=set)
    anchors: dict[int, int] = field(default_factory=dict)  # snippet -> anchoring label index

    def validate(self) -> None:
        overlap = set(self.foreground) & self.background
        if overlap:
            raise ValueError(f"foreground/background pseudo sets overlap at {sorted(overlap)}")


def _runs_above(values: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximal [start, end) index runs with values strictly above threshold."""
    mask = values > threshold
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def _nearest_anchor(run: tuple[int, int], candidates: list[int], snippet: int) -> int:
    in_run = [i for i in candidates if run[0] <= i < run[1]]
    return min(in_run, key=lambda i: (abs(i - snippet), i))


def generate_pseudo_labels(
    P: np.ndarray,
    A: np.ndarray,
    labels: IndexedLabels,
    cfg: PseudoLabelConfig,
) -> PseudoLabelSet:
    """Expand point labels onto confident, label-consistent score runs.

    A class-c run (P[c] > theta_fg throughout) qualifies iff it contains at
    least one point label and every point label inside carries class c. A
    background run (A < theta_bg throughout) qualifies iff it contains a
    background label and no foreground label. Foreground wins when a snippet
    would land in both sets.
    """
    P = np.asarray(P, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    C, T = P.shape
    for t, _ in labels.labels:
        if not 0 <= t < T:
            raise IndexError(f"label index {t} outside [0, {T})")
    label_map = dict(labels.labels)
    label_indices = sorted(label_map)
    fg_indices = [t for t, y in labels.labels if y]

    out = PseudoLabelSet(labels.video_id)
    for c in range(C):
        for run in _runs_above(P[c], cfg.theta_fg):
            inside = [i for i in label_indices if run[0] <= i < run[1]]
            if not inside:
                continue
            if any(c not in label_map[i] for i in inside):
                continue
            for t in range(run[0], run[1]):
                out.foreground[t] = out.foreground.get(t, frozenset()) | {c}
                if t not in label_map:
                    out.anchors.setdefault(t, _nearest_anchor(run, inside, t))

    for run in _runs_above(-A, -cfg.theta_bg):  # A < theta_bg as a strict run
        inside = [i for i in label_indices if run[0] <= i < run[1]]
        if not inside or any(label_map[i] for i in inside):
            continue
        for t in range(run[0], run[1]):
            if t in out.foreground or t in fg_indices:
                continue
            out.background.add(t)
            if t not in label_map:
                out.anchors.setdefault(t, _nearest_anchor(run, inside, t))

    out.validate()
    return out


def apply_pseudo_labels(labels: IndexedLabels, pseudo: PseudoLabelSet) -> IndexedLabels:
    """Merge pseudo-labels with the originals into the effective label set.

    Original labels survive verbatim; pseudo-foreground classes union onto
    them (a no-op for qualifying runs) and new snippets come in as pure
    pseudo-labels.
    """
    merged: dict[int, frozenset[int]] = {t: y for t, y in labels.labels}
    for t, classes in pseudo.foreground.items():
        merged[t] = merged.get(t, frozenset()) | classes
    for t in pseudo.background:
        merged.setdefault(t, frozenset())
    return IndexedLabels(labels.video_id, tuple(sorted(merged.items())))
