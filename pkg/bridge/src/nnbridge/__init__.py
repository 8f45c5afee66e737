"""Wire-protocol child process serving trained models to the augmentation pipeline.

The bridge speaks newline-delimited JSON on stdin/stdout (handshake,
generate, detect, error replies) and maps each request onto a TorchScript
checkpoint, handling resizing/letterboxing so the pipeline never sees
model-specific geometry.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
