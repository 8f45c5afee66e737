from .base import DetectorBackend, GeneratorBackend, score_generated
from .toy import (ToyDetector, ToyDetectorParams, ToyGenerator,
                  ToyGeneratorParams, ScoreMap, build_eval_detector,
                  calibrate_uniform_scores, default_template_bank,
                  toy_detect, toy_generate)
from .protocol import (ProtocolDetector, ProtocolGenerator,
                       spawn_protocol_backend)

__all__ = [
    "DetectorBackend", "GeneratorBackend", "score_generated",
    "ToyDetector", "ToyDetectorParams", "ToyGenerator", "ToyGeneratorParams",
    "ScoreMap", "build_eval_detector", "calibrate_uniform_scores",
    "default_template_bank", "toy_detect", "toy_generate",
    "ProtocolDetector", "ProtocolGenerator", "spawn_protocol_backend",
]
