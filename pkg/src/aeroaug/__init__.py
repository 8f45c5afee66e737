"""Generative augmentation toolkit for vehicle detection in aerial images.

The pipeline harvests instance patches from annotated imagery, asks a
generator backend to fill masked patch centers, keeps only fills a
detector backend scores above an acceptance threshold, composites them
back as synthetic instances, and evaluates the effect on detection AP
across threshold and dataset-size sweeps.
"""

from .boxes import BBox
from .dataset import (Annotation, AnnotationFormat, Dataset, ImageRecord,
                      Provenance, filter_oversized, load_dataset, save_dataset,
                      split_dataset)
from .engine import (AcceptedInstance, AugmentationConfig, AugmentationStats,
                     acceptance_rate_probe, augment_dataset,
                     export_training_patches, write_run_manifest)
from .experiments import (InstanceSizeHistogram, ReportRow, SweepSpec,
                          emit_report, instance_size_histogram,
                          parse_report_csv, size_grid, threshold_sweep)
from .metrics import (Detection, MatchOutcome, PRCurve, average_precision,
                      evaluate, iou, load_predictions, match_detections,
                      pr_curve, save_predictions)
from .patches import (GenerationResult, MaskedPatch, Patch, composite_hole,
                      extract_patch, harvest_instance_patch, hole_rect_global,
                      intersects_any, mask_center, sample_patch_origin)
from .toydata import make_toy_dataset

__version__ = "0.1.0"
