"""Frame sampling strategies on a synthetic corpus.

The first stage of the pipeline picks which frames a human will label,
without any knowledge of the actions. This script runs the three built-in
samplers on one synthetic video and shows how their picks relate to the
(hidden) ground-truth segments.
"""

import numpy as np

from aapl import (
    annotate_oracle,
    make_synthetic_dataset,
    sample_clustering,
    sample_random,
    sample_regular,
)

manifest, features = make_synthetic_dataset(num_videos=3, seed=1)
video = manifest.videos[0]
seq = features[video.id]

print(f"video {video.id}: {video.duration:.0f} s, ground truth:")
for start, end, cls in video.ground_truth:
    print(f"  [{start:5.1f}, {end:5.1f})  {manifest.class_names[cls]}")

# Regular sampling: midpoints of fixed intervals. One knob, no compute.
regular = sample_regular(video.duration, interval=10.0)
print(f"\nregular @10s   ({len(regular)} frames):", [f"{t:.1f}" for t in regular])

# Random sampling at the same budget: cheap but can cluster redundantly.
random_ts = sample_random(video.duration, count=len(regular), seed=0)
print(f"random, same n ({len(random_ts)} frames):", [f"{t:.1f}" for t in random_ts])

# Clustering-based sampling: k-means over PCA-reduced snippet features,
# one representative frame per cluster. Adapts to content.
clustered = sample_clustering(seq, interval=10.0, pca_dims=4, seed=0)
print(f"clustering     ({len(clustered)} frames):", [f"{t:.1f}" for t in clustered])

# What would an annotator answer? The oracle reads the ground truth: the
# class set of every segment containing the frame, empty = background.
labels = annotate_oracle(regular, video.ground_truth, video_id=video.id)
print("\noracle labels for the regular plan:")
for t, classes in labels.labels:
    names = sorted(manifest.class_names[c] for c in classes) or ["background"]
    print(f"  t={t:5.1f}  {', '.join(names)}")

# The sparser the plan, the fewer segments receive any label at all.
for interval in (5.0, 10.0, 20.0):
    ts = sample_regular(video.duration, interval)
    hit = set()
    for t in ts:
        for i, (start, end, _) in enumerate(video.ground_truth):
            if start <= t < end:
                hit.add(i)
    print(
        f"interval {interval:4.1f}s: {len(ts):2d} labels, "
        f"{len(hit)}/{len(video.ground_truth)} segments labeled"
    )
