"""Command-line front end binding the pipeline into runnable workflows.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 augmentation
stopped on an exhausted attempt budget (partial result was still written).
Every run echoes its fully resolved configuration before doing anything;
``--dry-run`` stops right after the echo.
"""
from __future__ import annotations

import argparse
import json
import shlex
import sys

import numpy as np

from . import __version__
from .backends.base import DetectorBackend, GeneratorBackend
from .backends.protocol import spawn_protocol_backend
from .backends.toy import (ToyDetector, ToyDetectorParams, ToyGenerator,
                           ToyGeneratorParams, build_eval_detector,
                           calibrate_uniform_scores, default_template_bank)
from .dataset import load_dataset, save_dataset, split_dataset
from .engine import (AugmentationConfig, acceptance_rate_probe,
                     augment_dataset, export_training_patches,
                     write_run_manifest)
from .errors import AeroaugError
from .experiments import (SweepSpec, emit_report, instance_size_histogram,
                          size_grid, threshold_sweep)
from .metrics import evaluate, load_predictions
from .toydata import make_toy_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_BUDGET = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; we use 1
        raise UsageError(message)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _build_parser() -> _Parser:
    parser = _Parser(prog="aeroaug", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, backends=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--verbose", "-v", action="count", default=0)
        p.add_argument("--dry-run", action="store_true")
        p.add_argument("--out", default=None)
        if data:
            p.add_argument("--data-root", required=True)
            p.add_argument("--format", choices=["vedai", "yolo"],
                           default="vedai")
        if backends:
            p.add_argument("--toy-backends", action="store_true")
            p.add_argument("--generator-cmd", default=None)
            p.add_argument("--detector-cmd", default=None)
            p.add_argument("--timeout-secs", type=float, default=30.0)

    p = sub.add_parser("harvest", help="export instance patches for "
                                       "backend training")
    common(p)
    p.add_argument("--patch-size", type=int, default=96)

    p = sub.add_parser("augment", help="run the generate-score-accept loop")
    common(p, backends=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--per-image", type=int, default=1)

    p = sub.add_parser("evaluate", help="AP of a prediction file against "
                                        "ground truth")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--iou", type=_float_list, default=(0.2, 0.5, 0.7))

    p = sub.add_parser("sweep", help="acceptance-threshold sweep")
    common(p, backends=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--thresholds", type=_float_list,
                   default=tuple(round(t * 0.1, 1) for t in range(10)))
    p.add_argument("--iou", type=_float_list, default=(0.2, 0.5, 0.7))
    p.add_argument("--per-image", type=int, default=1)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--report", choices=["csv", "md"], default="csv")

    p = sub.add_parser("grid", help="dataset-size x per-image augmentation grid")
    common(p, backends=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--sizes", type=_int_list, default=(200, 300, 400))
    p.add_argument("--per-image-list", type=_int_list, default=(0, 1, 2))
    p.add_argument("--iou", type=_float_list, default=(0.2, 0.5, 0.7))
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--report", choices=["csv", "md"], default="csv")

    p = sub.add_parser("probe", help="score histogram over unfiltered "
                                     "generated candidates")
    common(p, backends=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--target", type=int, default=5000,
                   help="number of candidates to score")

    p = sub.add_parser("hist", help="instance size histogram and coverage")
    common(p)
    p.add_argument("--bin-width", type=float, default=8.0)
    p.add_argument("--coverage-at", type=float, default=48.0)

    p = sub.add_parser("fixture", help="write a synthetic sprite dataset")
    common(p, data=False)
    p.add_argument("--images", type=int, default=30)
    p.add_argument("--size", type=int, default=192)
    p.add_argument("--max-per-image", type=int, default=3)
    p.add_argument("--out-format", choices=["vedai", "yolo"], default="vedai")
    return parser


def _echo_config(args) -> dict:
    resolved = {k: v for k, v in sorted(vars(args).items())
                if k not in ("command",)}
    resolved["command"] = args.command
    print("config: " + json.dumps(resolved, default=str))
    return resolved


def _toy_backends(args, train=None):
    """(generator, scoring detector) pair from --toy-backends settings."""
    root = np.random.SeedSequence(args.seed & 0xFFFFFFFF)
    gen_seed, cal_seed = (int(s.generate_state(1)[0]) for s in root.spawn(2))
    generator = ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)),
                             seed=gen_seed)
    params = ToyDetectorParams(templates=default_template_bank(args.patch_size))
    if train is not None and len(train):
        params = calibrate_uniform_scores(
            ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)),
                         seed=cal_seed),
            params, train, args.patch_size, n_samples=1500, seed=cal_seed)
    return generator, ToyDetector(params)


def _protocol_backends(args):
    generator = detector = None
    if args.generator_cmd:
        generator = spawn_protocol_backend(
            shlex.split(args.generator_cmd), "generator",
            patch_size=args.patch_size, timeout=args.timeout_secs)
    if args.detector_cmd:
        detector = spawn_protocol_backend(
            shlex.split(args.detector_cmd), "detector",
            patch_size=args.patch_size, timeout=args.timeout_secs)
    return generator, detector


def _resolve_backends(args, train=None) -> tuple[GeneratorBackend,
                                                 DetectorBackend]:
    if args.toy_backends:
        return _toy_backends(args, train)
    generator, detector = _protocol_backends(args)
    if generator is None or detector is None:
        raise UsageError("need --toy-backends or both --generator-cmd and "
                         "--detector-cmd")
    return generator, detector


def _require_out(args):
    if not args.out:
        raise UsageError(f"{args.command} requires --out")


def _cmd_harvest(args) -> int:
    _require_out(args)
    dataset = load_dataset(args.data_root, args.format)
    manifest = export_training_patches(dataset, args.patch_size, args.out)
    print(f"exported {manifest['count']} patches to {args.out}")
    return EXIT_OK


def _cmd_augment(args) -> int:
    _require_out(args)
    dataset = load_dataset(args.data_root, args.format)
    generator, detector = _resolve_backends(args, train=dataset)
    config = AugmentationConfig(
        target_new_instances=args.target,
        patch_size=args.patch_size,
        acceptance_threshold=args.threshold,
        instances_per_image=args.per_image,
        seed=args.seed,
    )
    augmented, stats, accepted = augment_dataset(dataset, generator,
                                                 detector, config)
    save_dataset(augmented, args.out, args.format)
    write_run_manifest(f"{args.out}/run_manifest.json", config, stats,
                       accepted)
    print(f"accepted {stats.accepted}/{config.target_new_instances} in "
          f"{stats.attempts} attempts "
          f"({stats.rejected_intersection} holes discarded pre-generation)")
    if stats.budget_exhausted:
        print("attempt budget exhausted; partial result written",
              file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    dataset = load_dataset(args.data_root, args.format)
    predictions = load_predictions(args.predictions)
    aps = evaluate(dataset, predictions, args.iou)
    for threshold in args.iou:
        print(f"AP@{threshold:g} {aps[threshold]:.2f}")
    return EXIT_OK


def _eval_factory(args):
    def factory(train, seed):
        return build_eval_detector(train, seed)
    return factory


def _sweep_datasets(args):
    dataset = load_dataset(args.data_root, args.format)
    n_train = args.n_train if args.n_train else len(dataset) // 2
    return split_dataset(dataset, n_train, args.seed)


def _toy_factories(args, train):
    """Per-row backend factories for experiment sweeps."""
    base_params = ToyDetectorParams(
        templates=default_template_bank(args.patch_size))
    cal_seed = int(np.random.SeedSequence(
        [args.seed & 0xFFFFFFFF, 77]).generate_state(1)[0])
    cal_params = calibrate_uniform_scores(
        ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)),
                     seed=cal_seed),
        base_params, train, args.patch_size, n_samples=1500, seed=cal_seed)

    def generator_factory(seed):
        return ToyGenerator(ToyGeneratorParams(quality_range=(0.0, 1.0)),
                            seed=seed)

    def detector_factory(seed):
        return ToyDetector(cal_params)

    return generator_factory, detector_factory


def _protocol_factories(args):
    def generator_factory(seed):
        return spawn_protocol_backend(shlex.split(args.generator_cmd),
                                      "generator", patch_size=args.patch_size,
                                      timeout=args.timeout_secs)

    def detector_factory(seed):
        return spawn_protocol_backend(shlex.split(args.detector_cmd),
                                      "detector", patch_size=args.patch_size,
                                      timeout=args.timeout_secs)

    return generator_factory, detector_factory


def _row_factories(args, train):
    if args.toy_backends:
        return _toy_factories(args, train)
    if not (args.generator_cmd and args.detector_cmd):
        raise UsageError("need --toy-backends or both --generator-cmd and "
                         "--detector-cmd")
    return _protocol_factories(args)


def _cmd_sweep(args) -> int:
    _require_out(args)
    train, test = _sweep_datasets(args)
    spec = SweepSpec(thresholds=args.thresholds, iou_thresholds=args.iou,
                     instances_per_image=(args.per_image,),
                     seeds=(args.seed,), patch_size=args.patch_size)
    generator_factory, detector_factory = _row_factories(args, train)
    rows = threshold_sweep(spec, train, test, generator_factory,
                           detector_factory, _eval_factory(args),
                           threads=args.threads)
    emit_report(rows, args.report, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_grid(args) -> int:
    _require_out(args)
    train, test = _sweep_datasets(args)
    spec = SweepSpec(iou_thresholds=args.iou, dataset_sizes=args.sizes,
                     instances_per_image=args.per_image_list,
                     seeds=(args.seed,), patch_size=args.patch_size)
    generator_factory, detector_factory = _row_factories(args, train)
    rows = size_grid(spec, train, test, generator_factory, detector_factory,
                     _eval_factory(args), threshold=args.threshold,
                     threads=args.threads)
    emit_report(rows, args.report, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_probe(args) -> int:
    dataset = load_dataset(args.data_root, args.format)
    generator, detector = _resolve_backends(args, train=dataset)
    bins = acceptance_rate_probe(generator, detector, args.target, dataset,
                                 seed=args.seed, patch_size=args.patch_size)
    for k, count in enumerate(bins):
        lo, hi = k / 10.0, (k + 1) / 10.0
        print(f"[{lo:.1f},{hi:.1f}) {count}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"bins": [int(b) for b in bins]}, fh)
    return EXIT_OK


def _cmd_hist(args) -> int:
    dataset = load_dataset(args.data_root, args.format)
    hist = instance_size_histogram(dataset, args.bin_width)
    for k, count in enumerate(hist.counts):
        print(f"[{hist.bin_edges[k]:g},{hist.bin_edges[k + 1]:g}) {count}")
    print(f"coverage({args.coverage_at:g}) = "
          f"{hist.coverage(args.coverage_at):.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"bin_edges": list(hist.bin_edges),
                       "counts": list(hist.counts)}, fh)
    return EXIT_OK


def _cmd_fixture(args) -> int:
    _require_out(args)
    dataset = make_toy_dataset(args.images, size=args.size,
                               instances_per_image=(1, args.max_per_image),
                               seed=args.seed)
    save_dataset(dataset, args.out, args.out_format)
    print(f"wrote {len(dataset)} images with {dataset.annotation_count} "
          f"instances to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "harvest": _cmd_harvest,
    "augment": _cmd_augment,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "grid": _cmd_grid,
    "probe": _cmd_probe,
    "hist": _cmd_hist,
    "fixture": _cmd_fixture,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    _echo_config(args)
    if args.dry_run:
        print("dry run: stopping before execution")
        return EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AeroaugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
