"""Framing and payload codecs for the stdin/stdout protocol."""
from __future__ import annotations

import base64
import io
import json
import sys

import numpy as np
from PIL import Image


def read_message(stream=None) -> dict | None:
    """Next JSON object from the stream; None on EOF.

    Raises ValueError on a line that is not a JSON object.
    """
    stream = stream or sys.stdin
    line = stream.readline()
    if not line:
        return None
    message = json.loads(line)
    if not isinstance(message, dict):
        raise ValueError("protocol messages must be JSON objects")
    return message


def write_message(message: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(message) + "\n")
    stream.flush()


def png_to_array(payload: str, mode: str = "RGB") -> np.ndarray:
    raw = base64.b64decode(payload.encode("ascii"))
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert(mode), dtype=np.uint8)


def array_to_png(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
