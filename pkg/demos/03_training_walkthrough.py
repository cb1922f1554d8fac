"""Training internals on a small synthetic corpus.

Shows the pieces the trainer wires together: fixed-length resampling with
label remapping, the scoring model's forward pass, the three loss terms,
and anchored pseudo-labeling, then runs a short training loop and plots the
loss trajectory as text.
"""

import numpy as np

from aapl import (
    ContrastiveConfig,
    PseudoLabelConfig,
    TrainConfig,
    VideoLossConfig,
    annotate_oracle,
    apply_pseudo_labels,
    contrastive_loss,
    forward,
    generate_pseudo_labels,
    init_params,
    make_synthetic_dataset,
    point_loss,
    sample_regular,
    sample_to_train_length,
    train,
    video_loss,
)
from aapl.losses import collect_labeled_embeddings, init_prototypes

manifest, features = make_synthetic_dataset(num_videos=6, snippets=60, dims=8, classes=3, seed=2)
labels = {
    v.id: annotate_oracle(sample_regular(v.duration, 5.0), v.ground_truth, video_id=v.id)
    for v in manifest.videos
}

# One video through the pieces.
video = manifest.videos[0]
seq, mapped = sample_to_train_length(features[video.id], labels[video.id], 60)
print(f"{video.id}: {len(mapped.labels)} point labels on {seq.length} snippets")

params = init_params(seq.dims, manifest.num_classes, seed=0)
out = forward(seq.data.T, params, mode="eval")
print(f"scores: S {out.S.shape}, actionness {out.A.shape}, fused P = A*S {out.P.shape}")

pt = point_loss(out, mapped)
vl = video_loss(out.P, mapped, VideoLossConfig(r_fg=8, r_bg=3))
bank = init_prototypes(
    [(mapped, out.Z)], manifest.num_classes, seq.dims
)
emb, sets = collect_labeled_embeddings(out.Z, mapped)
con = contrastive_loss(emb, sets, bank, ContrastiveConfig(temperature=0.3))
print(
    f"initial losses: point fg {pt.value_fg:.3f} / bg {pt.value_bg:.3f}, "
    f"video pos {vl.value_pos:.3f} / neg {vl.value_neg:.3f}, contrastive {con.value:.3f}"
)

# Pseudo-labeling extends points onto confident runs; with a fresh model
# nothing qualifies at strict thresholds.
pseudo = generate_pseudo_labels(out.P, out.A, mapped, PseudoLabelConfig(0.9, 0.05))
extended = apply_pseudo_labels(mapped, pseudo)
print(
    f"pseudo-labels with an untrained model: +{len(extended.labels) - len(mapped.labels)} snippets"
)

# The full loop: losses combine as L_pt + lam_vid * L_vid + lam_pascl * L_pascl.
cfg = TrainConfig.from_preset("synthetic", seed=0, max_iterations=400, train_length=60)
report = train(manifest, labels, cfg, features=features)
totals = np.array([r.total for r in report.history])
print(f"\ntrained {cfg.max_iterations} iterations in {report.wall_clock_seconds:.1f}s")
width = 50
for block in range(8):
    chunk = totals[block * len(totals) // 8 : (block + 1) * len(totals) // 8]
    bar = "#" * int(width * chunk.mean() / totals[:20].mean())
    print(f"  iter {block * len(totals) // 8:4d}+ {chunk.mean():7.3f} {bar}")

# After training, pseudo-labels do fire and extend the supervision.
seq, mapped = sample_to_train_length(features[video.id], labels[video.id], 60)
out = forward(seq.data.T, report.params, mode="eval")
pseudo = generate_pseudo_labels(out.P, out.A, mapped, PseudoLabelConfig(0.9, 0.05))
extended = apply_pseudo_labels(mapped, pseudo)
print(
    f"pseudo-labels with the trained model: +{len(extended.labels) - len(mapped.labels)} snippets "
    f"({len(pseudo.foreground)} fg, {len(pseudo.background)} bg)"
)
