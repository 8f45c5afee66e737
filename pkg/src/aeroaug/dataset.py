"""Annotated image datasets: loading, persistence, splits, oversize filtering.

Two on-disk annotation formats are supported, both one file per image
next to a PNG of the same stem:

* ``vedai``: ``<label> <x_min> <y_min> <x_max> <y_max> [orig|synth]``,
  corner coordinates as decimal floats. The optional sixth column records
  whether the instance is original or synthesized by the pipeline.
* ``yolo``: ``<class-index> <cx> <cy> <w> <h>`` normalized to [0,1], with
  a ``classes.txt`` (one label per line) mapping indices to labels.
  Provenance does not fit in the fixed five-column line, so synthetic
  flags go to a ``<stem>.prov`` sidecar file (one orig/synth token per
  annotation line); absent sidecars mean all-original.

Datasets are immutable after construction; every transform returns a new
``Dataset``. Images are PNG only, keeping round trips bit-exact.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from pathlib import Path

from .boxes import BBox
from .errors import (InvalidSplit, IoFailure, MalformedAnnotation,
                     MissingAnnotation, OutOfBoundsBox, UnreadableImage)

IMAGE_SUFFIX = ".png"


class AnnotationFormat(str, enum.Enum):
    VEDAI = "vedai"
    YOLO = "yolo"


class Provenance(str, enum.Enum):
    ORIGINAL = "orig"
    SYNTHETIC = "synth"


@dataclass(frozen=True)
class Annotation:
    bbox: BBox
    label: str
    provenance: Provenance = Provenance.ORIGINAL

    def __post_init__(self):
        if not self.label:
            raise ValueError("annotation label must be non-empty")


@dataclass(frozen=True)
class ImageRecord:
    id: str
    pixels: np.ndarray  # height x width x 3, uint8
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(
                f"{self.id}: pixels must be HxWx3 uint8, got {px.shape} {px.dtype}")
        for ann in self.annotations:
            if not ann.bbox.inside_image(self.width, self.height):
                raise ValueError(
                    f"{self.id}: annotation {ann.bbox} outside "
                    f"{self.width}x{self.height} image")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def with_pixels(self, pixels: np.ndarray) -> "ImageRecord":
        return ImageRecord(self.id, pixels, self.annotations)

    def with_annotations(self, annotations) -> "ImageRecord":
        return ImageRecord(self.id, self.pixels, tuple(annotations))


@dataclass(frozen=True)
class Dataset:
    records: tuple[ImageRecord, ...]
    label_set: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate record ids: {dupes}")
        for rec in self.records:
            for ann in rec.annotations:
                if ann.label not in self.label_set:
                    raise ValueError(
                        f"{rec.id}: label {ann.label!r} not in label set")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, record_id: str) -> ImageRecord | None:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        return None

    @property
    def annotation_count(self) -> int:
        return sum(len(r.annotations) for r in self.records)

    @staticmethod
    def from_records(records) -> "Dataset":
        records = tuple(records)
        labels = frozenset(a.label for r in records for a in r.annotations)
        return Dataset(records, labels)


# --- format helpers ---------------------------------------------------------

def _parse_vedai_line(path, line_no, line, width, height):
    parts = line.split()
    if len(parts) not in (5, 6):
        raise MalformedAnnotation(path, line_no,
                                  f"expected 5 or 6 fields, got {len(parts)}")
    label = parts[0]
    try:
        x0, y0, x1, y1 = (float(p) for p in parts[1:5])
    except ValueError as exc:
        raise MalformedAnnotation(path, line_no, str(exc)) from None
    provenance = Provenance.ORIGINAL
    if len(parts) == 6:
        try:
            provenance = Provenance(parts[5])
        except ValueError:
            raise MalformedAnnotation(
                path, line_no, f"bad provenance token {parts[5]!r}") from None
    bbox = _checked_bbox(path, line_no, x0, y0, x1, y1, width, height)
    return Annotation(bbox, label, provenance)


def _parse_yolo_line(path, line_no, line, width, height, labels_by_index):
    parts = line.split()
    if len(parts) != 5:
        raise MalformedAnnotation(path, line_no,
                                  f"expected 5 fields, got {len(parts)}")
    try:
        class_index = int(parts[0])
        cx, cy, w, h = (float(p) for p in parts[1:])
    except ValueError as exc:
        raise MalformedAnnotation(path, line_no, str(exc)) from None
    if class_index < 0 or class_index >= len(labels_by_index):
        raise MalformedAnnotation(path, line_no,
                                  f"class index {class_index} has no label")
    x0 = (cx - w / 2.0) * width
    x1 = (cx + w / 2.0) * width
    y0 = (cy - h / 2.0) * height
    y1 = (cy + h / 2.0) * height
    bbox = _checked_bbox(path, line_no, x0, y0, x1, y1, width, height)
    return Annotation(bbox, labels_by_index[class_index])


def _checked_bbox(path, line_no, x0, y0, x1, y1, width, height):
    try:
        bbox = BBox(x0, y0, x1, y1)
    except ValueError as exc:
        raise MalformedAnnotation(path, line_no, str(exc)) from None
    if not bbox.inside_image(width, height):
        # boxes poking outside the raster are an error, never clamped
        raise OutOfBoundsBox(path, line_no,
                             f"{bbox} vs {width}x{height}")
    return bbox


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise UnreadableImage(str(path), str(exc)) from None


def load_dataset(root_path, format: AnnotationFormat | str) -> Dataset:
    """Load every ``*.png`` under ``root_path`` with its annotation file.

    Images are listed in sorted filename order so record order is stable
    across machines.
    """
    format = AnnotationFormat(format)
    root = Path(root_path)
    if not root.is_dir():
        raise IoFailure(str(root), "not a directory")

    labels_by_index: list[str] = []
    if format is AnnotationFormat.YOLO:
        classes_file = root / "classes.txt"
        if not classes_file.is_file():
            raise MissingAnnotation(str(classes_file))
        labels_by_index = [ln.strip() for ln in
                           classes_file.read_text().splitlines() if ln.strip()]

    records = []
    for image_path in sorted(root.glob(f"*{IMAGE_SUFFIX}")):
        ann_path = image_path.with_suffix(".txt")
        if not ann_path.is_file():
            raise MissingAnnotation(str(image_path))
        pixels = _read_image(image_path)
        height, width = pixels.shape[:2]

        provenances = None
        if format is AnnotationFormat.YOLO:
            prov_path = image_path.with_suffix(".prov")
            if prov_path.is_file():
                provenances = [tok for tok in
                               prov_path.read_text().split() if tok]

        annotations = []
        for line_no, line in enumerate(ann_path.read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if format is AnnotationFormat.VEDAI:
                ann = _parse_vedai_line(str(ann_path), line_no, line,
                                        width, height)
            else:
                ann = _parse_yolo_line(str(ann_path), line_no, line,
                                       width, height, labels_by_index)
                if provenances is not None:
                    idx = len(annotations)
                    if idx >= len(provenances):
                        raise MalformedAnnotation(
                            str(ann_path), line_no,
                            "provenance sidecar shorter than annotation list")
                    try:
                        ann = Annotation(ann.bbox, ann.label,
                                         Provenance(provenances[idx]))
                    except ValueError:
                        raise MalformedAnnotation(
                            str(ann_path), line_no,
                            f"bad provenance token {provenances[idx]!r}") from None
            annotations.append(ann)
        records.append(ImageRecord(image_path.stem, pixels, tuple(annotations)))

    dataset = Dataset.from_records(records)
    if format is AnnotationFormat.YOLO:
        # labels with no instances still belong to the label set
        dataset = Dataset(dataset.records,
                          dataset.label_set | frozenset(labels_by_index))
    return dataset


def save_dataset(dataset: Dataset, root_path,
                 format: AnnotationFormat | str) -> None:
    """Write ``dataset`` so that ``load_dataset`` reproduces it.

    Coordinates round-trip exactly for vedai (full float repr) and within
    one quantization step (1e-6 of the image dimension) for yolo.
    """
    format = AnnotationFormat(format)
    root = Path(root_path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(root), str(exc)) from None

    labels_by_index = sorted(dataset.label_set)
    index_by_label = {label: i for i, label in enumerate(labels_by_index)}

    try:
        if format is AnnotationFormat.YOLO:
            (root / "classes.txt").write_text(
                "".join(f"{label}\n" for label in labels_by_index))
        for rec in dataset.records:
            Image.fromarray(rec.pixels).save(root / f"{rec.id}{IMAGE_SUFFIX}")
            lines = []
            prov_tokens = []
            for ann in rec.annotations:
                b = ann.bbox
                if format is AnnotationFormat.VEDAI:
                    cols = [ann.label, repr(b.x_min), repr(b.y_min),
                            repr(b.x_max), repr(b.y_max), ann.provenance.value]
                    lines.append(" ".join(cols))
                else:
                    cx = (b.x_min + b.x_max) / 2.0 / rec.width
                    cy = (b.y_min + b.y_max) / 2.0 / rec.height
                    w = b.width / rec.width
                    h = b.height / rec.height
                    lines.append(f"{index_by_label[ann.label]} "
                                 f"{cx:.6f} {cy:.6f} {w:.6f} {h:.6f}")
                    prov_tokens.append(ann.provenance.value)
            (root / f"{rec.id}.txt").write_text(
                "".join(line + "\n" for line in lines))
            if format is AnnotationFormat.YOLO:
                prov_path = root / f"{rec.id}.prov"
                if any(tok != Provenance.ORIGINAL.value for tok in prov_tokens):
                    prov_path.write_text(
                        "".join(tok + "\n" for tok in prov_tokens))
                elif prov_path.exists():
                    prov_path.unlink()
    except OSError as exc:
        raise IoFailure(str(root), str(exc)) from None


def split_dataset(dataset: Dataset, n_train: int,
                  seed: int) -> tuple[Dataset, Dataset]:
    """Seeded random partition into (train, test) of sizes (n_train, rest)."""
    n = len(dataset)
    if not (0 < n_train < n):
        raise InvalidSplit(n_train, n)
    order = np.random.default_rng(seed).permutation(n)
    train = [dataset.records[i] for i in order[:n_train]]
    test = [dataset.records[i] for i in order[n_train:]]
    return (Dataset(tuple(train), dataset.label_set),
            Dataset(tuple(test), dataset.label_set))


def filter_oversized(dataset: Dataset,
                     max_side: float) -> tuple[Dataset, int]:
    """Drop annotations with either side strictly greater than ``max_side``.

    Images are always retained; only their annotation lists shrink.
    """
    if max_side <= 0:
        raise ValueError(f"max_side must be positive, got {max_side}")
    removed = 0
    records = []
    for rec in dataset.records:
        kept = tuple(a for a in rec.annotations
                     if a.bbox.width <= max_side and a.bbox.height <= max_side)
        removed += len(rec.annotations) - len(kept)
        records.append(rec.with_annotations(kept) if len(kept) != len(rec.annotations)
                       else rec)
    return Dataset(tuple(records), dataset.label_set), removed
