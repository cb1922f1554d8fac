"""Annotation-cost model: measured tables, the linear fit, and trade-offs.

All numbers are relative times (annotator-minutes per video-minute) from an
eight-worker measurement study; treat them as a comparison device between
supervision schemes, not as absolute costs for your own annotators.
"""

from aapl.costs import (
    AAPL_INTERVALS,
    aapl_rows,
    estimate,
    fit_linear,
    lookup_cost,
    save_tradeoff,
)

print("relative annotation time (work minutes per video minute):")
print(f"{'':12s} {'full':>6s} {'video':>6s} {'point':>6s}", end="")
print("".join(f"{f'{iv:g}s':>7s}" for iv in AAPL_INTERVALS))
for dataset in ("thumos14", "gtea", "beoid"):
    cells = [lookup_cost(dataset, s) for s in ("full", "video", "point")]
    cells += [lookup_cost(dataset, "aapl", "raw", iv) for iv in AAPL_INTERVALS]
    print(f"{dataset:12s}" + "".join(f"{c:7.2f}" for c in cells))

# Interval-based labeling time is close to linear in label density
# (labels per video-minute), because the per-frame decision dominates.
print("\nlinear fits in label density (60/interval):")
for dataset in ("thumos14", "gtea", "beoid"):
    fit = fit_linear(aapl_rows(dataset))
    print(
        f"  {dataset:10s} {fit.per_frame_cost * 60:.2f} s per label "
        f"+ {fit.base_cost:.2f} base, R^2 = {fit.r_squared:.3f}"
    )

# The fit interpolates spacings that were never measured.
print("\nestimated cost of labeling 10 hours of THUMOS-like video:")
for interval in (3, 7, 15, 30):
    minutes = estimate("thumos14", "aapl", 600.0, interval=interval)
    print(f"  every {interval:2d}s: {minutes:6.1f} annotator-minutes")
print(f"  full supervision: {estimate('thumos14', 'full', 600.0):6.1f}")
print(f"  video-level only: {estimate('thumos14', 'video', 600.0):6.1f}")

# Cost/performance trade-off rows (y values come from your own eval runs).
entries = [
    ("aapl-30s", lookup_cost("thumos14", "aapl", "raw", 30), 0.443),
    ("aapl-10s", lookup_cost("thumos14", "aapl", "raw", 10), 0.495),
    ("aapl-3s", lookup_cost("thumos14", "aapl", "raw", 3), 0.521),
    ("point", lookup_cost("thumos14", "point"), 0.518),
]
save_tradeoff(entries, "tradeoff.csv")
print("\nwrote tradeoff.csv (x = relative annotation time, y = your metric)")
