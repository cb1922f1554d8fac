"""Action-agnostic frame sampling and a ground-truth oracle annotator.

Samplers pick the frames a human will label, without looking at any labels:
regular midpoint spacing, uniform random draws, or k-means clustering of
PCA-reduced snippet features. ``annotate_oracle`` simulates the human for
synthetic experiments by reading the ground truth.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import AAPLLabelSet, FeatureSequence


@dataclass(frozen=True)
class SamplingPlan:
    video_id: str
    timestamps: tuple[float, ...]
    method: str  # regular | random | clustering
    params: dict = field(default_factory=dict)

    def validate(self, duration: float | None = None) -> None:
        ts = self.timestamps
        if any(a >= b for a, b in zip(ts, ts[1:])):
            raise ValueError(f"plan for {self.video_id!r}: timestamps must be strictly increasing")
        if duration is not None and any(not 0 <= t <= duration for t in ts):
            raise ValueError(f"plan for {self.video_id!r}: timestamp outside [0, {duration}]")


def plan_to_json(plan: SamplingPlan) -> dict:
    return {
        "video_id": plan.video_id,
        "timestamps": list(plan.timestamps),
        "method": plan.method,
        "params": plan.params,
    }


def plan_from_json(obj: dict) -> SamplingPlan:
    return SamplingPlan(
        video_id=str(obj["video_id"]),
        timestamps=tuple(float(t) for t in obj["timestamps"]),
        method=str(obj["method"]),
        params=dict(obj.get("params", {})),
    )


def save_plans(plans: list[SamplingPlan], path: str | Path) -> None:
    Path(path).write_text(json.dumps([plan_to_json(p) for p in plans], indent=2) + "\n")


def load_plans(path: str | Path) -> dict[str, SamplingPlan]:
    raw = json.loads(Path(path).read_text())
    plans = [plan_from_json(o) for o in (raw if isinstance(raw, list) else [raw])]
    for p in plans:
        p.validate()
    return {p.video_id: p for p in plans}


# ---------------------------------------------------------------------------
# Samplers


def sample_regular(duration: float, interval: float) -> list[float]:
    """Midpoints (k + 0.5) * interval for k = 0 .. floor(duration/interval) - 1."""
    if duration <= 0 or interval <= 0:
        raise ValueError("duration and interval must be positive")
    count = int(np.floor(duration / interval))
    return [(k + 0.5) * interval for k in range(count)]


def sample_random(duration: float, count: int, seed: int = 0) -> list[float]:
    """``count`` sorted i.i.d. uniform draws on [0, duration)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    return sorted(float(t) for t in rng.uniform(0.0, duration, size=count))


def pca_reduce(points: np.ndarray, out_dims: int) -> np.ndarray:
    """Project centered points onto the top principal directions.

    Components are ordered by descending eigenvalue; each component's sign is
    fixed so its largest-magnitude loading is positive. All-identical input
    degenerates to a zero matrix with a warning.
    """
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    if n < 2:
        raise ValueError("need at least 2 points")
    if out_dims > min(n, d):
        raise ValueError(f"out_dims {out_dims} exceeds min(N, D) = {min(n, d)}")
    centered = points - points.mean(axis=0)
    if not np.any(centered):
        warnings.warn("pca_reduce: degenerate all-identical input", RuntimeWarning)
        return np.zeros((n, out_dims))
    # Right singular vectors of the centered matrix = covariance eigenvectors.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:out_dims]
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return centered @ components.T


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray  # (N,) int
    centers: np.ndarray  # (k, d)
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = _sq_dists(points, np.array(centers)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(points[rng.integers(n)])
            continue
        centers.append(points[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm from a k-means++ style seeded start.

    Runs to an assignment fixpoint or ``max_iter`` iterations; an emptied
    cluster is reseeded to the point farthest from its assigned center.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be within [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(points, k, rng)
    assignments = np.full(n, -1)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(points, centers)
        new_assignments = d2.argmin(axis=1)
        for c in range(k):
            if not np.any(new_assignments == c):
                # Reseed to the farthest point whose donor cluster keeps >= 1 member.
                counts = np.bincount(new_assignments, minlength=k)
                eligible = counts[new_assignments] >= 2
                dists = np.where(eligible, d2[np.arange(n), new_assignments], -np.inf)
                new_assignments[int(dists.argmax())] = c
        history.append(float(d2[np.arange(n), new_assignments].sum()))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        for c in range(k):
            members = assignments == c
            if np.any(members):
                centers[c] = points[members].mean(axis=0)
    inertia = float(_sq_dists(points, centers)[np.arange(n), assignments].sum())
    return KMeansResult(assignments, centers, inertia, n_iter, tuple(history))


def sample_clustering(
    seq: FeatureSequence,
    interval: float,
    pca_dims: int = 64,
    seed: int = 0,
) -> list[float]:
    """Cluster snippet features and emit one snippet-center time per cluster.

    The cluster count is duration/interval rounded to nearest (floor of 1);
    features are PCA-reduced first when the sequence is wide enough.
    """
    if seq.length < 1:
        raise ValueError("empty sequence")
    duration = seq.length * seq.snippet_seconds
    k = max(1, int(round(duration / interval)))
    k = min(k, seq.length)
    feats = seq.data.astype(np.float64)
    dims = min(pca_dims, seq.length, seq.dims)
    if seq.length >= 2 and dims < seq.dims:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # degenerate input tolerated
            feats = pca_reduce(feats, dims)
    result = kmeans(feats, k, seed=seed)
    chosen: set[int] = set()
    for c in range(k):
        members = np.flatnonzero(result.assignments == c)
        if members.size == 0:
            continue
        d2 = ((feats[members] - result.centers[c]) ** 2).sum(axis=1)
        chosen.add(int(members[d2.argmin()]))
    return sorted(seq.snippet_center_time(i) for i in chosen)


def annotate_oracle(
    timestamps: list[float] | tuple[float, ...],
    ground_truth: list[tuple[float, float, int]] | tuple[tuple[float, float, int], ...],
    video_id: str = "",
) -> AAPLLabelSet:
    """Simulated annotator: each timestamp gets the classes of every segment
    containing it (closed start, open end); none means background."""
    labels = []
    for t in timestamps:
        classes = frozenset(c for start, end, c in ground_truth if start <= t < end)
        labels.append((float(t), classes))
    return AAPLLabelSet(video_id, tuple(labels))
