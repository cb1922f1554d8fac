"""Training objectives: point-level focal loss, incomplete-label video loss
with top-/bottom-k logit pooling, and the prototype-anchored contrastive loss.

Every loss returns its value together with analytic gradients w.r.t. the
score sequences (S, A, or P) or the embedded features, so the trainer can
chain them through the scoring model's backward pass. Scores are clamped to
[1e-7, 1 - 1e-7] before logs and inverse sigmoids; sigmoid outputs can
saturate in finite precision even though the equations assume (0, 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import IndexedLabels
from .model import ScoringOutputs, logit, sigmoid

SCORE_EPS = 1e-7


def _clamp_scores(values: np.ndarray, op_name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0.0) or np.any(values >= 1.0):
        warnings.warn(f"{op_name}: scores at 0 or 1 clamped to [1e-7, 1-1e-7]", RuntimeWarning)
    return np.clip(values, SCORE_EPS, 1.0 - SCORE_EPS)


@dataclass(frozen=True)
class VideoLossConfig:
    r_fg: float = 8.0
    r_bg: float = 3.0

    def __post_init__(self) -> None:
        if self.r_fg < 1 or self.r_bg < 1:
            raise ValueError("pooling ratio divisors must be >= 1")

    def k_pos(self, T: int) -> int:
        return max(1, int(np.floor(T / self.r_fg)))

    def k_neg(self, T: int) -> int:
        return max(1, int(np.floor(T / self.r_bg)))


@dataclass(frozen=True)
class ContrastiveConfig:
    temperature: float = 0.1
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")


@dataclass
class PrototypeBank:
    """EMA-maintained class prototypes over labeled snippet embeddings."""

    prototypes: np.ndarray  # (C, D)
    initialized: np.ndarray  # (C,) bool
    momentum: float = 0.001

    def __post_init__(self) -> None:
        if not 0.0 < self.momentum <= 1.0:
            raise ValueError("momentum must be in (0, 1]")

    @classmethod
    def empty(cls, num_classes: int, dims: int, momentum: float = 0.001) -> "PrototypeBank":
        return cls(np.zeros((num_classes, dims)), np.zeros(num_classes, dtype=bool), momentum)

    def to_json(self) -> dict:
        return {
            "momentum": self.momentum,
            "prototypes": self.prototypes.tolist(),
            "initialized": self.initialized.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PrototypeBank":
        return cls(
            prototypes=np.array(obj["prototypes"], dtype=np.float64),
            initialized=np.array(obj["initialized"], dtype=bool),
            momentum=float(obj["momentum"]),
        )


@dataclass(frozen=True)
class LossReport:
    l_pt_fg: float
    l_pt_bg: float
    l_vid_pos: float
    l_vid_neg: float
    l_pascl: float
    lam_vid: float
    lam_pascl: float
    total: float

    @classmethod
    def assemble(
        cls,
        l_pt_fg: float,
        l_pt_bg: float,
        l_vid_pos: float,
        l_vid_neg: float,
        l_pascl: float,
        lam_vid: float,
        lam_pascl: float,
    ) -> "LossReport":
        total = (l_pt_fg + l_pt_bg) + lam_vid * (l_vid_pos + l_vid_neg) + lam_pascl * l_pascl
        return cls(l_pt_fg, l_pt_bg, l_vid_pos, l_vid_neg, l_pascl, lam_vid, lam_pascl, total)

    def recombines_exactly(self) -> bool:
        return self.total == (self.l_pt_fg + self.l_pt_bg) + self.lam_vid * (
            self.l_vid_pos + self.l_vid_neg
        ) + self.lam_pascl * self.l_pascl


# ---------------------------------------------------------------------------
# Point-level focal loss


@dataclass
class PointLossResult:
    value_fg: float
    value_bg: float
    grad_s: np.ndarray
    grad_a: np.ndarray

    @property
    def value(self) -> float:
        return self.value_fg + self.value_bg


def point_loss(outputs: ScoringOutputs, labels: IndexedLabels) -> PointLossResult:
    """Focal classification loss on labeled snippets, foreground and
    background parts averaged over their own label subsets."""
    S = _clamp_scores(outputs.S, "point_loss")
    A = _clamp_scores(outputs.A, "point_loss")
    C, T = S.shape
    grad_s = np.zeros_like(S)
    grad_a = np.zeros_like(A)
    for t, _ in labels.labels:
        if not 0 <= t < T:
            raise IndexError(f"label index {t} outside [0, {T})")
    fg = labels.foreground
    bg = np.array(labels.background_indices, dtype=int)

    value_fg = 0.0
    if fg:
        inv = 1.0 / len(fg)
        ti = np.array([t for t, _ in fg], dtype=int)
        hot = np.zeros((C, len(fg)))
        for col, (_, classes) in enumerate(fg):
            hot[list(classes), col] = 1.0
        a = A[ti]
        log_a = np.log(a)
        value_fg += float(-((1 - a) ** 2 * log_a).sum())
        grad_a[ti] -= inv * ((1 - a) ** 2 / a - 2 * (1 - a) * log_a)
        sel = S[:, ti]
        log_s = np.log(sel)
        log_1ms = np.log1p(-sel)
        value_fg += float(
            -(hot * (1 - sel) ** 2 * log_s + (1 - hot) * sel**2 * log_1ms).sum()
        )
        grad_s[:, ti] -= inv * (
            hot * ((1 - sel) ** 2 / sel - 2 * (1 - sel) * log_s)
            + (1 - hot) * (2 * sel * log_1ms - sel**2 / (1 - sel))
        )
        value_fg *= inv

    value_bg = 0.0
    if bg.size:
        inv = 1.0 / bg.size
        a = A[bg]
        log_1ma = np.log1p(-a)
        value_bg += float(-(a**2 * log_1ma).sum())
        grad_a[bg] -= inv * (2 * a * log_1ma - a**2 / (1 - a))
        sel = S[:, bg]
        log_1ms = np.log1p(-sel)
        value_bg += float(-(sel**2 * log_1ms).sum())
        grad_s[:, bg] -= inv * (2 * sel * log_1ms - sel**2 / (1 - sel))
        value_bg *= inv

    return PointLossResult(float(value_fg), float(value_bg), grad_s, grad_a)


# ---------------------------------------------------------------------------
# Video-level loss


def video_label(labels: IndexedLabels, num_classes: int) -> np.ndarray:
    """Multi-hot video-level label: class c is on iff some point label has it."""
    y = np.zeros(num_classes)
    for _, classes in labels.labels:
        for c in classes:
            y[c] = 1.0
    return y


def _pool_logit(row: np.ndarray, k: int, largest: bool, op_name: str) -> tuple[float, np.ndarray]:
    row = np.asarray(row, dtype=np.float64)
    T = row.shape[0]
    if not 1 <= k <= T:
        raise ValueError(f"{op_name}: k must be within [1, {T}], got {k}")
    clamped = _clamp_scores(row, op_name)
    order = np.argsort(-clamped if largest else clamped, kind="stable")
    idx = order[:k]
    pooled = float(sigmoid(np.array([logit(clamped[idx]).mean()]))[0])
    return pooled, idx


def topk_pool_logit(row: np.ndarray, k: int) -> float:
    """Sigmoid of the mean of the k largest inverse-sigmoid scores.

    Ties break toward the earlier index.
    """
    return _pool_logit(row, k, largest=True, op_name="topk_pool_logit")[0]


def bottomk_pool_logit(row: np.ndarray, k: int) -> float:
    """Sigmoid of the mean of the k smallest inverse-sigmoid scores."""
    return _pool_logit(row, k, largest=False, op_name="bottomk_pool_logit")[0]


@dataclass
class VideoLossResult:
    value_pos: float
    value_neg: float
    grad_p: np.ndarray

    @property
    def value(self) -> float:
        return self.value_pos + self.value_neg


def _scalar_sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    ex = np.exp(x)
    return ex / (1.0 + ex)


def video_loss(P: np.ndarray, labels: IndexedLabels, cfg: VideoLossConfig) -> VideoLossResult:
    """Positive part over classes with a point label, negative part over all
    classes via bottom-k pooling."""
    P = np.asarray(P, dtype=np.float64)
    C, T = P.shape
    y = video_label(labels, C)
    k_pos = cfg.k_pos(T)
    k_neg = cfg.k_neg(T)
    grad_p = np.zeros_like(P)
    clamped = _clamp_scores(P, "video_loss")
    logits = np.log(clamped) - np.log1p(-clamped)
    denom = clamped * (1.0 - clamped)

    value_pos = 0.0
    for c in np.flatnonzero(y):
        idx = np.argsort(-clamped[c], kind="stable")[:k_pos]
        pooled = _scalar_sigmoid(float(logits[c, idx].mean()))
        value_pos -= np.log(pooled)
        grad_p[c, idx] -= (1.0 - pooled) / (k_pos * denom[c, idx])

    value_neg = 0.0
    for c in range(C):
        idx = np.argsort(clamped[c], kind="stable")[:k_neg]
        pooled = _scalar_sigmoid(float(logits[c, idx].mean()))
        value_neg -= np.log1p(-pooled)
        grad_p[c, idx] += pooled / (k_neg * denom[c, idx])

    return VideoLossResult(float(value_pos), float(value_neg), grad_p)


def fused_grads_to_heads(
    grad_p: np.ndarray, outputs: ScoringOutputs
) -> tuple[np.ndarray, np.ndarray]:
    """Convert a gradient w.r.t. P = A * S into gradients w.r.t. S and A."""
    grad_s = grad_p * outputs.A[None, :]
    grad_a = (grad_p * outputs.S).sum(axis=0)
    return grad_s, grad_a


# ---------------------------------------------------------------------------
# Prototype-anchored supervised contrastive loss


def collect_labeled_embeddings(
    Z: np.ndarray, labels: IndexedLabels
) -> tuple[np.ndarray, list[frozenset[int]]]:
    """Embeddings (rows) and class sets of the foreground-labeled snippets."""
    fg = labels.foreground
    if not fg:
        return np.zeros((0, Z.shape[0])), []
    idx = [t for t, _ in fg]
    return Z[:, idx].T.copy(), [classes for _, classes in fg]


def init_prototypes(
    per_video: list[tuple[IndexedLabels, np.ndarray]],
    num_classes: int,
    dims: int,
    momentum: float = 0.001,
) -> PrototypeBank:
    """Class means of labeled snippet embeddings across the training set.

    Classes without any label stay uninitialized and are excluded from the
    contrastive loss.
    """
    sums = np.zeros((num_classes, dims))
    counts = np.zeros(num_classes)
    for labels, Z in per_video:
        for t, classes in labels.foreground:
            for c in classes:
                sums[c] += Z[:, t]
                counts[c] += 1
    bank = PrototypeBank.empty(num_classes, dims, momentum)
    present = counts > 0
    bank.prototypes[present] = sums[present] / counts[present, None]
    bank.initialized = present
    return bank


def update_prototypes(
    bank: PrototypeBank, embeddings: np.ndarray, class_sets: list[frozenset[int]]
) -> None:
    """EMA update from one mini-batch; classes absent from the batch keep
    their prototypes. A class never initialized adopts the batch mean."""
    if len(class_sets) == 0:
        return
    num_classes = bank.prototypes.shape[0]
    for c in range(num_classes):
        members = [i for i, classes in enumerate(class_sets) if c in classes]
        if not members:
            continue
        batch_mean = embeddings[members].mean(axis=0)
        if bank.initialized[c]:
            bank.prototypes[c] = (1.0 - bank.momentum) * bank.prototypes[c] + (
                bank.momentum * batch_mean
            )
        else:
            bank.prototypes[c] = batch_mean
            bank.initialized[c] = True


@dataclass
class ContrastiveResult:
    value: float
    grad_embeddings: np.ndarray
    active: bool


def contrastive_loss(
    embeddings: np.ndarray,
    class_sets: list[frozenset[int]],
    bank: PrototypeBank,
    cfg: ContrastiveConfig,
) -> ContrastiveResult:
    """Pull each class's labeled embeddings toward its prototype against a
    denominator over every foreground-labeled snippet in the batch.

    Per-class terms are averaged within the class and summed over classes
    (no mini-batch averaging). Returns zero with ``active=False`` when the
    batch has no usable foreground labels.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n = embeddings.shape[0]
    if n == 0:
        return ContrastiveResult(0.0, np.zeros_like(embeddings), active=False)
    present = sorted(
        {c for classes in class_sets for c in classes if bank.initialized[c]}
    )
    if not present:
        return ContrastiveResult(0.0, np.zeros_like(embeddings), active=False)

    protos = bank.prototypes[present]  # (K, D)
    logits = protos @ embeddings.T / cfg.temperature  # (K, N)
    peak = logits.max(axis=1, keepdims=True)
    log_denom = peak[:, 0] + np.log(np.exp(logits - peak).sum(axis=1))
    softmax = np.exp(logits - log_denom[:, None])

    value = 0.0
    coeff = np.zeros_like(logits)
    for j, c in enumerate(present):
        members = [i for i, classes in enumerate(class_sets) if c in classes]
        inv = 1.0 / len(members)
        value += float((log_denom[j] - logits[j, members]).sum()) * inv
        coeff[j] = softmax[j]
        coeff[j, members] -= inv
    grad = coeff.T @ (protos / cfg.temperature)
    return ContrastiveResult(float(value), grad, active=True)
