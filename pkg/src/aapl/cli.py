"""Command-line entry point: sample -> annotate -> train -> detect -> eval -> cost.

Every subcommand honors --seed and --config where applicable and prints one
summary line; artifacts go to --out. Set AAPL_LOG=debug|info|warning for
verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import corpus, costs, detection, evaluation, sampling, synthetic
from .evaluation import THRESHOLD_PRESETS
from .model import load_checkpoint
from .presets import DATASET_PRESETS
from .training import TrainConfig, load_dataset_features, train

log = logging.getLogger("aapl")


@dataclass(frozen=True)
class CommandOutcome:
    exit_code: int
    artifacts: tuple[str, ...]
    summary: str


def _setup_logging() -> None:
    level = os.environ.get("AAPL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_features(manifest, manifest_path: str, features_dir: str | None):
    base = Path(features_dir) if features_dir else Path(manifest_path).parent
    return load_dataset_features(manifest, base)


def cmd_synth(args) -> CommandOutcome:
    out = Path(args.out)
    manifest, _ = synthetic.make_synthetic_dataset(
        num_videos=args.videos,
        snippets=args.snippets,
        dims=args.dims,
        classes=args.classes,
        seed=args.seed,
        noise=args.noise,
        out_dir=out,
    )
    total_gt = sum(len(v.ground_truth or ()) for v in manifest.videos)
    return CommandOutcome(
        0,
        (str(out / "manifest.json"),),
        f"synthetic dataset: {len(manifest.videos)} videos, "
        f"{manifest.num_classes} classes, {total_gt} segments -> {out}",
    )


def cmd_sample(args) -> CommandOutcome:
    manifest = corpus.load_manifest(args.manifest)
    plans = []
    features = None
    if args.method == "clustering":
        features = _load_features(manifest, args.manifest, args.features_dir)
    for video in manifest.videos:
        if args.method == "regular":
            ts = sampling.sample_regular(video.duration, args.interval)
            params = {"interval": args.interval}
        elif args.method == "random":
            count = args.count
            if count is None:
                count = len(sampling.sample_regular(video.duration, args.interval))
            ts = sampling.sample_random(video.duration, count, seed=args.seed)
            params = {"count": count, "seed": args.seed}
        else:
            ts = sampling.sample_clustering(
                features[video.id], args.interval, pca_dims=args.pca_dims, seed=args.seed
            )
            params = {"interval": args.interval, "pca_dims": args.pca_dims, "seed": args.seed}
        plans.append(sampling.SamplingPlan(video.id, tuple(ts), args.method, params))
    sampling.save_plans(plans, args.out)
    n = sum(len(p.timestamps) for p in plans)
    return CommandOutcome(
        0, (args.out,), f"{args.method} sampling: {n} frames over {len(plans)} videos -> {args.out}"
    )


def cmd_annotate_oracle(args) -> CommandOutcome:
    manifest = corpus.load_manifest(args.manifest)
    plans = sampling.load_plans(args.plans)
    label_sets = []
    for video in manifest.videos:
        if video.id not in plans:
            continue
        if video.ground_truth is None:
            return CommandOutcome(1, (), f"video {video.id!r} has no ground truth")
        label_sets.append(
            sampling.annotate_oracle(
                plans[video.id].timestamps, video.ground_truth, video_id=video.id
            )
        )
    corpus.save_labels(label_sets, args.out)
    n = sum(len(ls.labels) for ls in label_sets)
    return CommandOutcome(0, (args.out,), f"oracle labels: {n} points -> {args.out}")


def cmd_serve(args) -> CommandOutcome:
    import uvicorn

    from .service import ProjectStore, create_app

    store = ProjectStore(args.store)
    app = create_app(store, frames_dir=args.frames_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return CommandOutcome(0, (), "server stopped")


def _train_config(args) -> TrainConfig:
    if args.config:
        cfg = TrainConfig.from_json(args.config)
    elif args.preset:
        cfg = TrainConfig.from_preset(args.preset)
    else:
        cfg = TrainConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.iterations is not None:
        overrides["max_iterations"] = args.iterations
    return replace(cfg, **overrides) if overrides else cfg


def cmd_train(args) -> CommandOutcome:
    manifest = corpus.load_manifest(args.manifest)
    labels = corpus.load_labels(args.labels)
    features = _load_features(manifest, args.manifest, args.features_dir)
    cfg = _train_config(args)
    report = train(manifest, labels, cfg, features=features, out_dir=args.out)
    final = report.history[-1].total if report.history else float("nan")
    return CommandOutcome(
        0,
        (str(Path(args.out) / "loss_history.csv"), str(Path(args.out) / "checkpoint_final.json")),
        f"trained {cfg.max_iterations} iterations in {report.wall_clock_seconds:.1f}s, "
        f"final loss {final:.4f} -> {args.out}",
    )


def cmd_detect(args) -> CommandOutcome:
    manifest = corpus.load_manifest(args.manifest)
    features = _load_features(manifest, args.manifest, args.features_dir)
    checkpoint = load_checkpoint(args.checkpoint)
    cfg = detection.DetectorConfig(
        nms_sigma=args.nms_sigma, nms_min_score=args.min_score, upsample=not args.no_upsample
    )
    instances = detection.detect_dataset(manifest, features, checkpoint.params, cfg)
    detection.save_predictions(instances, args.out)
    return CommandOutcome(
        0, (args.out,), f"{len(instances)} predictions over {len(manifest.videos)} videos -> {args.out}"
    )


def cmd_eval(args) -> CommandOutcome:
    manifest = corpus.load_manifest(args.manifest)
    predictions = detection.load_predictions(args.predictions)
    thresholds = THRESHOLD_PRESETS[args.preset] if args.preset else None
    report = evaluation.evaluate(predictions, manifest, thresholds)
    print(report.to_table())
    artifacts = ()
    if args.out:
        evaluation.save_report(report, args.out)
        artifacts = (args.out,)
    return CommandOutcome(
        0, artifacts, f"average mAP {report.average_map:.4f} over {len(report.thresholds)} thresholds"
    )


def cmd_cost(args) -> CommandOutcome:
    if args.minutes is not None:
        value = costs.estimate(
            args.dataset, args.scheme, args.minutes, args.variant, args.interval
        )
        summary = (
            f"{args.dataset}/{args.scheme}"
            + (f"@{args.interval:g}s" if args.interval else "")
            + f" ({args.variant}): {value:.2f} annotator-minutes for {args.minutes:g} video-minutes"
        )
    else:
        value = costs.lookup_cost(args.dataset, args.scheme, args.variant, args.interval)
        summary = (
            f"{args.dataset}/{args.scheme}"
            + (f"@{args.interval:g}s" if args.interval else "")
            + f" ({args.variant}): relative annotation time {value}"
        )
    print(value)
    return CommandOutcome(0, (), summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aapl",
        description="Point-level supervision pipeline for temporal action detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic fixture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--videos", type=int, default=20)
    p.add_argument("--snippets", type=int, default=100)
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="emit sampling plans for annotation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("regular", "random", "clustering"), default="regular")
    p.add_argument("--interval", type=float, default=5.0)
    p.add_argument("--count", type=int, default=None, help="random method: draws per video")
    p.add_argument("--pca-dims", type=int, default=64)
    p.add_argument("--features-dir", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("annotate-oracle", help="simulate annotators from ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_annotate_oracle)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--store", required=True)
    p.add_argument("--frames-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("train", help="train the scoring model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--features-dir", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=sorted(DATASET_PRESETS), default=None)
    p.add_argument("--config", default=None, help="JSON TrainConfig (may name a preset)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="generate action instances from a checkpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features-dir", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--nms-sigma", type=float, default=0.3)
    p.add_argument("--min-score", type=float, default=1e-4)
    p.add_argument("--no-upsample", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--preset", choices=sorted(THRESHOLD_PRESETS), default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cost", help="annotation-time lookup and estimation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scheme", choices=costs.SCHEMES, required=True)
    p.add_argument("--variant", choices=costs.VARIANTS, default="raw")
    p.add_argument("--interval", type=float, default=None)
    p.add_argument("--minutes", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cost)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        outcome: CommandOutcome = args.func(args)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if outcome.summary:
        print(outcome.summary)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
