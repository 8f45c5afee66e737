"""Experiment sweeps over thresholds and dataset sizes, plus CSV/Markdown reports.

Every row re-creates its backends from a seed derived off the row's
parameters, so rows are independent of execution order and can run on a
thread pool. Report assembly keeps the declared row order regardless.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .engine import AugmentationConfig, augment_dataset
from .errors import EmptyDataset, IoFailure
from .metrics import evaluate

DEFAULT_THRESHOLDS = tuple(round(t * 0.1, 1) for t in range(10))
DEFAULT_IOUS = (0.2, 0.5, 0.7)


@dataclass(frozen=True)
class SweepSpec:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    iou_thresholds: tuple[float, ...] = DEFAULT_IOUS
    dataset_sizes: tuple[int, ...] = (200, 300, 400)
    instances_per_image: tuple[int, ...] = (0, 1, 2)
    seeds: tuple[int, ...] = (0,)
    patch_size: int = 96

    def __post_init__(self):
        for name in ("thresholds", "iou_thresholds", "dataset_sizes",
                     "instances_per_image", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if any(not 0.0 <= t <= 1.0 for t in self.thresholds):
            raise ValueError("thresholds must lie in [0,1]")

    @property
    def sweep_per_image(self) -> int:
        """Instances per image used by the threshold sweep (first nonzero)."""
        for k in self.instances_per_image:
            if k > 0:
                return k
        return 1


@dataclass(frozen=True)
class ReportRow:
    threshold: float
    n_images: int
    instances_per_image: int
    seed: int
    aps: dict[float, float] = field(compare=False)
    attempts: int = 0
    seconds: float = 0.0

    @property
    def ap_average(self) -> float:
        return sum(self.aps.values()) / len(self.aps)


def _row_seed(*parts: int) -> int:
    entropy = [int(p) & 0xFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _run_row(train: Dataset, test: Dataset, threshold: float, k: int,
             seed: int, spec: SweepSpec, generator_factory, detector_factory,
             eval_detector_factory) -> ReportRow:
    started = time.perf_counter()
    base = _row_seed(seed, int(round(threshold * 1000)), len(train), k)
    if k > 0:
        config = AugmentationConfig(
            target_new_instances=k * len(train),
            patch_size=spec.patch_size,
            acceptance_threshold=threshold,
            instances_per_image=k,
            seed=base,
        )
        generator = generator_factory(_row_seed(base, 1))
        detector = detector_factory(_row_seed(base, 2))
        try:
            augmented, stats, _ = augment_dataset(train, generator, detector,
                                                  config)
        finally:
            for backend in (generator, detector):
                close = getattr(backend, "close", None)
                if close:
                    close()
        attempts = stats.attempts
    else:
        augmented, attempts = train, 0  # baseline: generator never touched

    eval_detector = eval_detector_factory(augmented, _row_seed(base, 3))
    predictions = {rec.id: eval_detector.detect(rec.pixels)
                   for rec in test.records}
    aps = evaluate(test, predictions, spec.iou_thresholds)
    return ReportRow(threshold=threshold, n_images=len(train),
                     instances_per_image=k, seed=seed, aps=aps,
                     attempts=attempts,
                     seconds=time.perf_counter() - started)


def _run_rows(tasks, threads: int):
    if threads <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def threshold_sweep(spec: SweepSpec, train: Dataset, test: Dataset,
                    generator_factory, detector_factory,
                    eval_detector_factory, threads: int = 1
                    ) -> list[ReportRow]:
    """One row per (threshold, seed): augment, refit the eval detector, score."""
    train_ids = {r.id for r in train.records}
    if train_ids & {r.id for r in test.records}:
        raise ValueError("train and test sets must be disjoint")
    k = spec.sweep_per_image
    tasks = []
    for threshold in spec.thresholds:
        for seed in spec.seeds:
            tasks.append(lambda t=threshold, s=seed: _run_row(
                train, test, t, k, s, spec, generator_factory,
                detector_factory, eval_detector_factory))
    return _run_rows(tasks, threads)


def size_grid(spec: SweepSpec, full_train: Dataset, test: Dataset,
              generator_factory, detector_factory, eval_detector_factory,
              threshold: float = 0.4, threads: int = 1) -> list[ReportRow]:
    """Rows over (dataset size, per-image count, seed) at a fixed threshold.

    Subsets are prefixes of one seed-shuffled order, so smaller sizes are
    nested inside larger ones. ``instances_per_image`` zero means the
    un-augmented baseline.
    """
    if max(spec.dataset_sizes) > len(full_train):
        raise ValueError(f"largest size {max(spec.dataset_sizes)} exceeds "
                         f"training set of {len(full_train)}")
    tasks = []
    for seed in spec.seeds:
        order = np.random.default_rng(seed).permutation(len(full_train))
        for n in spec.dataset_sizes:
            subset = Dataset(tuple(full_train.records[i] for i in order[:n]),
                             full_train.label_set)
            for k in spec.instances_per_image:
                tasks.append(lambda sub=subset, kk=k, s=seed: _run_row(
                    sub, test, threshold, kk, s, spec, generator_factory,
                    detector_factory, eval_detector_factory))
    # task list is seed-major; reorder rows to (size, k, seed)
    rows = _run_rows(tasks, threads)
    ordered = []
    per_seed = len(spec.dataset_sizes) * len(spec.instances_per_image)
    for block in range(per_seed):
        for s in range(len(spec.seeds)):
            ordered.append(rows[s * per_seed + block])
    return ordered


# --- instance size histogram ---------------------------------------------------

@dataclass(frozen=True)
class InstanceSizeHistogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    widths: tuple[float, ...]
    heights: tuple[float, ...]

    @property
    def total(self) -> int:
        return len(self.widths)

    def coverage(self, side: float) -> float:
        """Fraction of instances whose both sides fit in a side x side square."""
        ok = sum(1 for w, h in zip(self.widths, self.heights)
                 if w <= side and h <= side)
        return ok / self.total


def instance_size_histogram(dataset: Dataset,
                            bin_width: float = 8.0) -> InstanceSizeHistogram:
    """Histogram of per-instance max(width, height) in ``bin_width`` steps."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    widths, heights = [], []
    for rec in dataset.records:
        for ann in rec.annotations:
            widths.append(ann.bbox.width)
            heights.append(ann.bbox.height)
    if not widths:
        raise EmptyDataset("dataset has no instances")
    largest = max(max(widths), max(heights))
    n_bins = max(int(np.ceil(largest / bin_width)), 1)
    edges = np.arange(n_bins + 1) * bin_width
    sizes = np.maximum(widths, heights)
    counts, _ = np.histogram(sizes, bins=edges)
    # np.histogram closes the last bin; sizes equal to the last edge land there
    return InstanceSizeHistogram(tuple(float(e) for e in edges),
                                 tuple(int(c) for c in counts),
                                 tuple(widths), tuple(heights))


# --- reports ----------------------------------------------------------------------

def _ap_column(iou: float) -> str:
    scaled = iou * 10.0
    if abs(scaled - round(scaled)) < 1e-9:
        return f"ap_{int(round(scaled)):02d}"
    return "ap_" + f"{iou:g}".replace(".", "")


def _format_rows(rows: list[ReportRow]):
    ious = sorted(rows[0].aps)
    for row in rows:
        if sorted(row.aps) != ious:
            raise ValueError("rows disagree on IoU thresholds")
    header = (["threshold", "n_images", "instances_per_image"] +
              [_ap_column(i) for i in ious] + ["ap_avg", "attempts", "seconds"])
    table = []
    for row in rows:
        aps = [round(row.aps[i], 2) for i in ious]
        avg = round(sum(aps) / len(aps), 2)
        table.append([f"{row.threshold!r}", str(row.n_images),
                      str(row.instances_per_image)] +
                     [f"{ap:.2f}" for ap in aps] +
                     [f"{avg:.2f}", str(row.attempts), f"{row.seconds:.3f}"])
    return header, table, ious


def emit_report(rows: list[ReportRow], format: str, out_path) -> None:
    """Write rows as ``csv`` (fixed column order) or ``md`` (table layout)."""
    if not rows:
        raise ValueError("no rows to report")
    header, table, ious = _format_rows(rows)
    if format == "csv":
        text = ",".join(header) + "\n"
        text += "".join(",".join(cells) + "\n" for cells in table)
    elif format == "md":
        names = (["threshold", "images", "per-image"] +
                 [f"AP@{i:g}" for i in ious] + ["average", "attempts"])
        text = "| " + " | ".join(names) + " |\n"
        text += "|" + "|".join(["---"] * len(names)) + "|\n"
        for cells in table:
            text += "| " + " | ".join(cells[:-1]) + " |\n"
    else:
        raise ValueError(f"unknown report format {format!r}")
    try:
        Path(out_path).write_text(text)
    except OSError as exc:
        raise IoFailure(str(out_path), str(exc)) from None


def parse_report_csv(path) -> list[dict]:
    """Read back an emitted CSV; numbers come out as the printed values."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for record in reader:
            parsed = {}
            for key, value in record.items():
                if key in ("n_images", "instances_per_image", "attempts"):
                    parsed[key] = int(value)
                else:
                    parsed[key] = float(value)
            out.append(parsed)
    return out
