"""Snippet scoring model: temporal-conv embedder plus two sigmoid heads.

The embedder is a kernel-3 temporal convolution (zero "same" padding) with
ReLU. Its output splits halfway: the first D/2 rows feed the classification
head (per-class scores S), the last D/2 rows feed the actionness head (A).
Both heads are point-wise affine maps through a sigmoid; fused scores are
P = A * S. Forward, exact reverse-mode gradients, and Adam live here; there
is no autodiff framework underneath.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def logit(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@dataclass
class ModelParams:
    embed_w: np.ndarray  # (D, D, 3): out channel, in channel, tap
    embed_b: np.ndarray  # (D,)
    cls_w: np.ndarray  # (C, D/2)
    cls_b: np.ndarray  # (C,)
    act_w: np.ndarray  # (D/2,)
    act_b: float

    @property
    def dims(self) -> int:
        return self.embed_w.shape[0]

    @property
    def num_classes(self) -> int:
        return self.cls_w.shape[0]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("embed_w", self.embed_w),
            ("embed_b", self.embed_b),
            ("cls_w", self.cls_w),
            ("cls_b", self.cls_b),
            ("act_w", self.act_w),
            ("act_b", np.atleast_1d(np.asarray(self.act_b, dtype=np.float64))),
        ]

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.embed_w.copy(),
            self.embed_b.copy(),
            self.cls_w.copy(),
            self.cls_b.copy(),
            self.act_w.copy(),
            float(self.act_b),
        )


@dataclass
class ParamGrads:
    embed_w: np.ndarray
    embed_b: np.ndarray
    cls_w: np.ndarray
    cls_b: np.ndarray
    act_w: np.ndarray
    act_b: float

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "ParamGrads":
        return cls(
            np.zeros_like(params.embed_w),
            np.zeros_like(params.embed_b),
            np.zeros_like(params.cls_w),
            np.zeros_like(params.cls_b),
            np.zeros_like(params.act_w),
            0.0,
        )

    def add_(self, other: "ParamGrads", scale: float = 1.0) -> "ParamGrads":
        self.embed_w += scale * other.embed_w
        self.embed_b += scale * other.embed_b
        self.cls_w += scale * other.cls_w
        self.cls_b += scale * other.cls_b
        self.act_w += scale * other.act_w
        self.act_b += scale * other.act_b
        return self

    def scale_(self, factor: float) -> "ParamGrads":
        self.embed_w *= factor
        self.embed_b *= factor
        self.cls_w *= factor
        self.cls_b *= factor
        self.act_w *= factor
        self.act_b *= factor
        return self

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("embed_w", self.embed_w),
            ("embed_b", self.embed_b),
            ("cls_w", self.cls_w),
            ("cls_b", self.cls_b),
            ("act_w", self.act_w),
            ("act_b", np.atleast_1d(np.asarray(self.act_b, dtype=np.float64))),
        ]


@dataclass
class ScoringOutputs:
    """Forward results for one video: embeddings and score sequences.

    ``pre_relu``, ``head_in_cls``/``head_in_act`` and the dropout masks are
    retained so the backward pass can replay the exact forward computation.
    """

    Z: np.ndarray  # (D, T) embedded features
    S: np.ndarray  # (C, T) class scores (T-CAS)
    A: np.ndarray  # (T,) actionness
    P: np.ndarray  # (C, T) fused scores, exactly A * S
    pre_relu: np.ndarray
    head_in_cls: np.ndarray
    head_in_act: np.ndarray
    drop_mask_cls: np.ndarray | None = None
    drop_mask_act: np.ndarray | None = None

    @property
    def length(self) -> int:
        return self.Z.shape[1]


def init_params(dims: int, num_classes: int, seed: int = 0) -> ModelParams:
    """Fan-in uniform weights on +-sqrt(1/fan_in), zero biases."""
    if dims % 2 != 0 or dims < 2:
        raise ValueError(f"feature dim must be even and >= 2, got {dims}")
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    rng = np.random.default_rng(seed)
    half = dims // 2
    embed_bound = (1.0 / (dims * 3)) ** 0.5
    head_bound = (1.0 / half) ** 0.5
    return ModelParams(
        embed_w=rng.uniform(-embed_bound, embed_bound, size=(dims, dims, 3)),
        embed_b=np.zeros(dims),
        cls_w=rng.uniform(-head_bound, head_bound, size=(num_classes, half)),
        cls_b=np.zeros(num_classes),
        act_w=rng.uniform(-head_bound, head_bound, size=half),
        act_b=0.0,
    )


def forward(
    X: np.ndarray,
    params: ModelParams,
    dropout_rate: float = 0.0,
    mode: str = "eval",
    seed: int = 0,
) -> ScoringOutputs:
    """Run the scoring model on a (D, T) feature matrix.

    Train mode applies inverted dropout (keep-prob scaling) to the head
    inputs, with masks drawn deterministically from ``seed``; eval mode is
    dropout-free and pure.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    X = np.asarray(X, dtype=np.float64)
    D = params.dims
    if X.ndim != 2 or X.shape[0] != D:
        raise ValueError(f"expected ({D}, T) input, got {X.shape}")
    T = X.shape[1]
    half = D // 2

    Xpad = np.zeros((D, T + 2))
    Xpad[:, 1 : T + 1] = X
    pre = (
        params.embed_w[:, :, 0] @ Xpad[:, 0:T]
        + params.embed_w[:, :, 1] @ Xpad[:, 1 : T + 1]
        + params.embed_w[:, :, 2] @ Xpad[:, 2 : T + 2]
        + params.embed_b[:, None]
    )
    Z = np.maximum(pre, 0.0)

    mask_cls = mask_act = None
    head_in_cls = Z[:half]
    head_in_act = Z[half:]
    if mode == "train" and dropout_rate > 0.0:
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {dropout_rate}")
        keep = 1.0 - dropout_rate
        rng = np.random.default_rng(seed)
        mask_cls = (rng.random((half, T)) < keep) / keep
        mask_act = (rng.random((half, T)) < keep) / keep
        head_in_cls = head_in_cls * mask_cls
        head_in_act = head_in_act * mask_act

    S = sigmoid(params.cls_w @ head_in_cls + params.cls_b[:, None])
    A = sigmoid(params.act_w @ head_in_act + params.act_b)
    P = A[None, :] * S
    return ScoringOutputs(
        Z=Z,
        S=S,
        A=A,
        P=P,
        pre_relu=pre,
        head_in_cls=head_in_cls,
        head_in_act=head_in_act,
        drop_mask_cls=mask_cls,
        drop_mask_act=mask_act,
    )


def backward(
    X: np.ndarray,
    params: ModelParams,
    outputs: ScoringOutputs,
    upstream_s: np.ndarray | None = None,
    upstream_a: np.ndarray | None = None,
    upstream_z: np.ndarray | None = None,
) -> ParamGrads:
    """Exact reverse-mode gradients of the forward map.

    ``upstream_s``/``upstream_a`` are loss gradients w.r.t. S and A;
    ``upstream_z`` optionally adds a direct gradient w.r.t. the embedded
    features (the contrastive loss produces one). The dropout masks stored
    on ``outputs`` replay the forward's masks exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    D = params.dims
    T = X.shape[1]
    half = D // 2
    S, A = outputs.S, outputs.A

    d_logit_s = np.zeros_like(S)
    if upstream_s is not None:
        if upstream_s.shape != S.shape:
            raise ValueError(f"upstream_s shape {upstream_s.shape} != S shape {S.shape}")
        d_logit_s = upstream_s * S * (1.0 - S)
    d_logit_a = np.zeros_like(A)
    if upstream_a is not None:
        if upstream_a.shape != A.shape:
            raise ValueError(f"upstream_a shape {upstream_a.shape} != A shape {A.shape}")
        d_logit_a = upstream_a * A * (1.0 - A)

    g_cls_w = d_logit_s @ outputs.head_in_cls.T
    g_cls_b = d_logit_s.sum(axis=1)
    g_act_w = outputs.head_in_act @ d_logit_a
    g_act_b = float(d_logit_a.sum())

    d_head_cls = params.cls_w.T @ d_logit_s
    d_head_act = params.act_w[:, None] * d_logit_a[None, :]
    if outputs.drop_mask_cls is not None:
        d_head_cls = d_head_cls * outputs.drop_mask_cls
        d_head_act = d_head_act * outputs.drop_mask_act

    d_Z = np.concatenate([d_head_cls, d_head_act], axis=0)
    if upstream_z is not None:
        d_Z = d_Z + upstream_z
    d_pre = d_Z * (outputs.pre_relu > 0)

    Xpad = np.zeros((D, T + 2))
    Xpad[:, 1 : T + 1] = X
    g_embed_w = np.stack(
        [d_pre @ Xpad[:, k : T + k].T for k in range(3)], axis=2
    )
    g_embed_b = d_pre.sum(axis=1)
    return ParamGrads(g_embed_w, g_embed_b, g_cls_w, g_cls_b, g_act_w, g_act_b)


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(
        cls, params: ModelParams, learning_rate: float = 1e-3, weight_decay: float = 0.0
    ) -> "AdamState":
        state = cls(learning_rate=learning_rate, weight_decay=weight_decay)
        for name, arr in params.named_arrays():
            state.m[name] = np.zeros_like(arr)
            state.v[name] = np.zeros_like(arr)
        return state


def adam_step(params: ModelParams, grads: ParamGrads, state: AdamState) -> ModelParams:
    """One classic Adam update with bias correction.

    Weight decay is coupled: added to the gradient before the moment update.
    Returns new params; ``state`` is updated in place.
    """
    grad_map = dict(grads.named_arrays())
    for name, g in grad_map.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for {name!r}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_values: dict[str, np.ndarray] = {}
    for name, theta in params.named_arrays():
        g = grad_map[name] + state.weight_decay * theta
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        new_values[name] = theta - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return ModelParams(
        embed_w=new_values["embed_w"],
        embed_b=new_values["embed_b"],
        cls_w=new_values["cls_w"],
        cls_b=new_values["cls_b"],
        act_w=new_values["act_w"],
        act_b=float(new_values["act_b"][0]),
    )


# ---------------------------------------------------------------------------
# Checkpoints

CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    adam: AdamState | None = None,
    iteration: int = 0,
    prototypes: dict | None = None,
) -> None:
    """Versioned JSON checkpoint: shapes, parameters, optimizer state, prototypes."""
    obj: dict = {
        "version": CHECKPOINT_VERSION,
        "dims": params.dims,
        "num_classes": params.num_classes,
        "iteration": iteration,
        "params": {name: arr.tolist() for name, arr in params.named_arrays()},
    }
    if adam is not None:
        obj["adam"] = {
            "learning_rate": adam.learning_rate,
            "weight_decay": adam.weight_decay,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps": adam.eps,
            "step": adam.step,
            "m": {k: v.tolist() for k, v in adam.m.items()},
            "v": {k: v.tolist() for k, v in adam.v.items()},
        }
    if prototypes is not None:
        obj["prototypes"] = prototypes
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n")


@dataclass
class Checkpoint:
    params: ModelParams
    adam: AdamState | None
    iteration: int
    prototypes: dict | None


def load_checkpoint(path: str | Path) -> Checkpoint:
    obj = json.loads(Path(path).read_text())
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {obj.get('version')!r}")
    p = obj["params"]
    params = ModelParams(
        embed_w=np.array(p["embed_w"], dtype=np.float64),
        embed_b=np.array(p["embed_b"], dtype=np.float64),
        cls_w=np.array(p["cls_w"], dtype=np.float64),
        cls_b=np.array(p["cls_b"], dtype=np.float64),
        act_w=np.array(p["act_w"], dtype=np.float64),
        act_b=float(p["act_b"][0]),
    )
    adam = None
    if "adam" in obj:
        a = obj["adam"]
        adam = AdamState(
            learning_rate=a["learning_rate"],
            weight_decay=a["weight_decay"],
            beta1=a["beta1"],
            beta2=a["beta2"],
            eps=a["eps"],
            step=a["step"],
            m={k: np.array(v, dtype=np.float64) for k, v in a["m"].items()},
            v={k: np.array(v, dtype=np.float64) for k, v in a["v"].items()},
        )
    return Checkpoint(
        params=params,
        adam=adam,
        iteration=int(obj.get("iteration", 0)),
        prototypes=obj.get("prototypes"),
    )
