"""Mini-batch training loop for the scoring model.

Each iteration samples a batch of videos, resamples them to the fixed
training length, runs the train-mode forward, evaluates the point, video,
and contrastive losses, accumulates analytic gradients, and takes one Adam
step. Prototypes initialize at iteration 0 from the freshly initialized
embedder over the whole training set and EMA-update every iteration. When
pseudo-labeling is active (after the warmup fraction), the point and
contrastive losses see the pseudo-extended labels; the video loss always
sees the original point labels. Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import (
    AAPLLabelSet,
    DatasetManifest,
    FeatureSequence,
    load_features_for,
    sample_to_train_length,
)
from .losses import (
    ContrastiveConfig,
    LossReport,
    PrototypeBank,
    VideoLossConfig,
    collect_labeled_embeddings,
    contrastive_loss,
    fused_grads_to_heads,
    init_prototypes,
    point_loss,
    update_prototypes,
    video_loss,
)
from .model import (
    AdamState,
    ModelParams,
    ParamGrads,
    ScoringOutputs,
    adam_step,
    backward,
    forward,
    init_params,
    save_checkpoint,
)
from .presets import DATASET_PRESETS
from .pseudolabels import PseudoLabelConfig, apply_pseudo_labels, generate_pseudo_labels

LOSS_CSV_HEADER = "iteration,l_pt_fg,l_pt_bg,l_vid_pos,l_vid_neg,l_pascl,total"


@dataclass(frozen=True)
class TrainConfig:
    lam_vid: float = 1.0
    lam_pascl: float = 0.1
    learning_rate: float = 0.001
    weight_decay: float = 0.0001
    batch_size: int = 16
    max_iterations: int = 2000
    train_length: int = 100
    dropout: float = 0.7
    r_fg: float = 8.0
    r_bg: float = 3.0
    temperature: float = 0.3
    momentum: float = 0.001
    theta_fg: float = 1.0
    theta_bg: float = 0.0
    pseudo_labels: bool = True
    warmup_fraction: float = 0.2
    seed: int = 0
    checkpoint_every: int = 0  # 0 disables periodic checkpoints

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lam_vid < 0 or self.lam_pascl < 0:
            raise ValueError("loss weights must be >= 0")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "TrainConfig":
        preset = DATASET_PRESETS[name]
        base = cls(
            lam_vid=preset.lam_vid,
            lam_pascl=preset.lam_pascl,
            learning_rate=preset.learning_rate,
            weight_decay=preset.weight_decay,
            batch_size=preset.batch_size,
            train_length=preset.train_length,
            dropout=preset.dropout,
            r_fg=preset.r_fg,
            r_bg=preset.r_bg,
            temperature=preset.temperature,
            momentum=preset.momentum,
            theta_fg=preset.theta_fg,
            theta_bg=preset.theta_bg,
        )
        return replace(base, **overrides) if overrides else base

    @classmethod
    def from_json(cls, path: str | Path) -> "TrainConfig":
        raw = json.loads(Path(path).read_text())
        preset = raw.pop("preset", None)
        if preset is not None:
            return cls.from_preset(preset, **raw)
        return cls(**raw)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    def video_loss_config(self) -> VideoLossConfig:
        return VideoLossConfig(r_fg=self.r_fg, r_bg=self.r_bg)

    def contrastive_config(self) -> ContrastiveConfig:
        return ContrastiveConfig(temperature=self.temperature, weight=self.lam_pascl)

    def pseudo_config(self) -> PseudoLabelConfig:
        return PseudoLabelConfig(
            theta_fg=self.theta_fg,
            theta_bg=self.theta_bg,
            enabled=self.pseudo_labels,
            warmup_fraction=self.warmup_fraction,
        )


@dataclass
class TrainReport:
    history: list[LossReport]
    params: ModelParams
    bank: PrototypeBank
    config: TrainConfig
    wall_clock_seconds: float

    def history_csv(self) -> str:
        """Loss history as CSV text; float repr keeps runs byte-comparable."""
        lines = [LOSS_CSV_HEADER]
        for i, rep in enumerate(self.history):
            lines.append(
                f"{i},{rep.l_pt_fg!r},{rep.l_pt_bg!r},{rep.l_vid_pos!r},"
                f"{rep.l_vid_neg!r},{rep.l_pascl!r},{rep.total!r}"
            )
        return "\n".join(lines) + "\n"


def load_dataset_features(
    manifest: DatasetManifest, base: str | Path | None = None
) -> dict[str, FeatureSequence]:
    return {video.id: load_features_for(video, base) for video in manifest.videos}


def train(
    manifest: DatasetManifest,
    labels: dict[str, AAPLLabelSet],
    cfg: TrainConfig,
    features: dict[str, FeatureSequence] | None = None,
    features_base: str | Path | None = None,
    out_dir: str | Path | None = None,
) -> TrainReport:
    """Train the scoring model; returns history, final params, prototypes.

    Passing ``features`` skips disk IO; otherwise feature files load via the
    manifest (relative paths resolved against ``features_base``). ``out_dir``
    enables the loss-history CSV and periodic/final checkpoints.
    """
    start_time = time.monotonic()
    if not manifest.videos:
        raise ValueError("empty dataset")
    if features is None:
        features = load_dataset_features(manifest, features_base)
    for video in manifest.videos:
        if video.id not in features:
            raise ValueError(f"video {video.id!r} has no features")
        if video.id not in labels:
            raise ValueError(f"video {video.id!r} has no label set")

    dims = next(iter(features.values())).dims
    num_classes = manifest.num_classes
    for seq in features.values():
        if seq.dims != dims:
            raise ValueError("all feature sequences must share one dimensionality")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(dims, num_classes, seed=int(rng.integers(2**31)))
    adam = AdamState.for_params(
        params, learning_rate=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    video_ids = [video.id for video in manifest.videos]
    pseudo_cfg = cfg.pseudo_config()
    vid_cfg = cfg.video_loss_config()
    con_cfg = cfg.contrastive_config()

    # Prototype initialization: deterministic resample, eval-mode embedder.
    proto_inputs = []
    for vid in video_ids:
        seq, mapped = sample_to_train_length(
            features[vid], labels[vid], cfg.train_length, mode="deterministic"
        )
        out = forward(seq.data.T, params, mode="eval")
        proto_inputs.append((mapped, out.Z))
    bank = init_prototypes(proto_inputs, num_classes, dims, momentum=cfg.momentum)

    history: list[LossReport] = []
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    for iteration in range(cfg.max_iterations):
        if len(video_ids) >= cfg.batch_size:
            batch = rng.choice(len(video_ids), size=cfg.batch_size, replace=False)
        else:
            batch = rng.integers(0, len(video_ids), size=cfg.batch_size)
        pseudo_active = pseudo_cfg.active_at(iteration, cfg.max_iterations)

        batch_data: list[dict] = []
        pt_fg = pt_bg = v_pos = v_neg = 0.0
        for vid_idx in batch:
            vid = video_ids[int(vid_idx)]
            resample_seed = int(rng.integers(2**31))
            dropout_seed = int(rng.integers(2**31))
            seq, mapped = sample_to_train_length(
                features[vid], labels[vid], cfg.train_length,
                mode="stochastic", seed=resample_seed,
            )
            X = seq.data.T
            out = forward(X, params, dropout_rate=cfg.dropout, mode="train", seed=dropout_seed)
            effective = mapped
            if pseudo_active:
                pseudo = generate_pseudo_labels(out.P, out.A, mapped, pseudo_cfg)
                effective = apply_pseudo_labels(mapped, pseudo)
            pt = point_loss(out, effective)
            vl = video_loss(out.P, mapped, vid_cfg)
            emb, class_sets = collect_labeled_embeddings(out.Z, effective)
            fg_indices = [t for t, _ in effective.foreground]
            pt_fg += pt.value_fg
            pt_bg += pt.value_bg
            v_pos += vl.value_pos
            v_neg += vl.value_neg
            batch_data.append(
                dict(x=X, out=out, pt=pt, vl=vl, emb=emb,
                     class_sets=class_sets, fg_indices=fg_indices)
            )

        B = len(batch_data)
        pt_fg /= B
        pt_bg /= B
        v_pos /= B
        v_neg /= B

        all_emb = np.concatenate([d["emb"] for d in batch_data], axis=0)
        all_sets: list[frozenset[int]] = []
        for d in batch_data:
            all_sets.extend(d["class_sets"])
        con = contrastive_loss(all_emb, all_sets, bank, con_cfg)

        report = LossReport.assemble(
            pt_fg, pt_bg, v_pos, v_neg, con.value, cfg.lam_vid, cfg.lam_pascl
        )
        if not np.isfinite(report.total):
            raise RuntimeError(f"non-finite loss at iteration {iteration}")
        history.append(report)

        grads = ParamGrads.zeros_like(params)
        offset = 0
        for d in batch_data:
            out: ScoringOutputs = d["out"]
            vl_grad_s, vl_grad_a = fused_grads_to_heads(d["vl"].grad_p, out)
            upstream_s = (d["pt"].grad_s + cfg.lam_vid * vl_grad_s) / B
            upstream_a = (d["pt"].grad_a + cfg.lam_vid * vl_grad_a) / B
            upstream_z = None
            n_emb = d["emb"].shape[0]
            if con.active and n_emb:
                upstream_z = np.zeros_like(out.Z)
                rows = con.grad_embeddings[offset : offset + n_emb]
                for t, row in zip(d["fg_indices"], rows):
                    upstream_z[:, t] += cfg.lam_pascl * row
            offset += n_emb
            grads.add_(backward(d["x"], params, out, upstream_s, upstream_a, upstream_z))

        update_prototypes(bank, all_emb, all_sets)
        params = adam_step(params, grads, adam)

        if out_dir is not None and cfg.checkpoint_every and (
            (iteration + 1) % cfg.checkpoint_every == 0
        ):
            save_checkpoint(
                out_dir / f"checkpoint_{iteration + 1:06d}.json",
                params, adam=adam, iteration=iteration + 1, prototypes=bank.to_json(),
            )

    wall = time.monotonic() - start_time
    report = TrainReport(history, params, bank, cfg, wall)
    if out_dir is not None:
        (out_dir / "loss_history.csv").write_text(report.history_csv())
        save_checkpoint(
            out_dir / "checkpoint_final.json",
            params, adam=adam, iteration=cfg.max_iterations, prototypes=bank.to_json(),
        )
    return report
