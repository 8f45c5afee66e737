import numpy as np
import pytest

from aeroaug.backends.toy import (ToyDetector, ToyDetectorParams, ToyGenerator,
                                  ToyGeneratorParams, calibrate_uniform_scores,
                                  default_template_bank)
from aeroaug.dataset import Annotation, Dataset, ImageRecord
from aeroaug.boxes import BBox
from aeroaug.toydata import make_toy_dataset


def blank_record(record_id, width=128, height=128, boxes=(), label="car",
                 value=80):
    pixels = np.full((height, width, 3), value, dtype=np.uint8)
    anns = tuple(Annotation(BBox(*b), label) for b in boxes)
    return ImageRecord(record_id, pixels, anns)


@pytest.fixture(scope="session")
def toy_world():
    """Small sprite dataset shared by fast tests."""
    return make_toy_dataset(10, size=192, instances_per_image=(1, 2), seed=21)


@pytest.fixture(scope="session")
def empty_backgrounds():
    """Instance-free textured backgrounds large enough for a 96 patch."""
    return make_toy_dataset(8, size=256, instances_per_image=(0, 0), seed=3)


@pytest.fixture(scope="session")
def calibrated_pair_64(empty_backgrounds):
    """(generator params, calibrated detector params) at patch size 64.

    Session-scoped: calibration costs a few seconds and several tests and
    the acceptance suite share it. Backends are rebuilt per test from
    these params so every run stays independent.
    """
    gen_params = ToyGeneratorParams(quality_range=(0.0, 1.0))
    base = ToyDetectorParams(templates=default_template_bank(64))
    cal = calibrate_uniform_scores(ToyGenerator(gen_params, seed=991), base,
                                   empty_backgrounds, 64, n_samples=4000,
                                   seed=17)
    return gen_params, cal


@pytest.fixture(scope="session")
def calibrated_pair_96(empty_backgrounds):
    gen_params = ToyGeneratorParams(quality_range=(0.0, 1.0))
    base = ToyDetectorParams(templates=default_template_bank(96))
    cal = calibrate_uniform_scores(ToyGenerator(gen_params, seed=991), base,
                                   empty_backgrounds, 96, n_samples=2500,
                                   seed=17)
    return gen_params, cal
