"""Client for external generator/detector processes.

The wire format is newline-delimited JSON over the child's standard
streams, UTF-8, one request in flight per handle:

* handshake: ``{"op":"hello","role":"generator"|"detector","version":1,
  "patch_size":96}`` answered by ``{"op":"hello_ack","role":...,"version":1}``
* ``{"op":"generate","id":n,"patch_png":b64,"mask_png":b64}`` ->
  ``{"op":"result","id":n,"patch_png":b64}``
* ``{"op":"detect","id":n,"image_png":b64}`` ->
  ``{"op":"detections","id":n,"items":[{x_min,y_min,x_max,y_max,confidence,label}]}``
* failures: ``{"op":"error","id":n,"message":s}``; ids always echo the request.

Raster payloads are base64 PNG. A background thread drains the child's
stdout so every wait can time out; pools of handles provide parallelism,
a single handle is strictly sequential.
"""
from __future__ import annotations

import base64
import io
import json
import queue
import subprocess
import threading

import numpy as np
from PIL import Image

from ..boxes import BBox
from ..errors import (BackendCrashed, BackendFailure, HandshakeMismatch,
                      ResponseTimeout, SpawnFailure)
from ..metrics import Detection
from ..patches import GenerationResult, MaskedPatch
from .base import DetectorBackend, GeneratorBackend

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0


def encode_png(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png(payload: str, mode: str = "RGB") -> np.ndarray:
    raw = base64.b64decode(payload.encode("ascii"))
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert(mode), dtype=np.uint8)


class ProtocolHandle:
    """Owns one child process; single-threaded, one request at a time."""

    def __init__(self, command, role: str, patch_size: int = 96,
                 timeout: float = DEFAULT_TIMEOUT):
        self.role = role
        self.patch_size = patch_size
        self.timeout = timeout
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise SpawnFailure(f"cannot start {command!r}: {exc}") from None
        self._reader = threading.Thread(target=self._drain, daemon=True)
        self._reader.start()
        self._handshake()

    def _drain(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendCrashed(f"backend closed stdin: {exc}") from None

    def _receive(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ResponseTimeout(
                f"no reply within {self.timeout}s") from None
        if line is None:
            code = self._proc.poll()
            raise BackendCrashed(f"backend exited (code {code}) mid-request")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendFailure(f"unparseable reply {line!r}: {exc}") from None

    def _handshake(self) -> None:
        self._send({"op": "hello", "role": self.role,
                    "version": PROTOCOL_VERSION, "patch_size": self.patch_size})
        try:
            reply = self._receive()
        except BackendFailure as exc:
            raise HandshakeMismatch(str(exc)) from None
        if reply.get("op") != "hello_ack":
            raise HandshakeMismatch(f"expected hello_ack, got {reply!r}")
        if reply.get("role") != self.role:
            raise HandshakeMismatch(
                f"asked for role {self.role!r}, child serves "
                f"{reply.get('role')!r}")
        if reply.get("version") != PROTOCOL_VERSION:
            raise HandshakeMismatch(
                f"protocol version {reply.get('version')} != "
                f"{PROTOCOL_VERSION}")

    def request(self, message: dict, expect_op: str) -> dict:
        """Send one request and wait for its reply (strict alternation)."""
        request_id = self._next_id
        self._next_id += 1
        message = dict(message, id=request_id)
        self._send(message)
        reply = self._receive()
        if reply.get("id") != request_id:
            raise BackendFailure(
                f"reply id {reply.get('id')} does not echo {request_id}")
        if reply.get("op") == "error":
            raise BackendFailure(reply.get("message", "backend error"))
        if reply.get("op") != expect_op:
            raise BackendFailure(
                f"expected {expect_op!r}, got {reply.get('op')!r}")
        return reply

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class ProtocolGenerator(GeneratorBackend):
    def __init__(self, handle: ProtocolHandle):
        if handle.role != "generator":
            raise HandshakeMismatch(f"handle role {handle.role!r} is not "
                                    "generator")
        self.handle = handle
        self.patch_size = handle.patch_size

    def fill(self, masked: MaskedPatch) -> GenerationResult:
        mask = (masked.mask.astype(np.uint8)) * 255
        reply = self.handle.request(
            {"op": "generate",
             "patch_png": encode_png(masked.base.pixels),
             "mask_png": encode_png(mask)},
            expect_op="result")
        completed = decode_png(reply["patch_png"])
        s = masked.base.size
        if completed.shape != (s, s, 3):
            raise BackendFailure(
                f"generator returned {completed.shape}, wanted {s}x{s}x3")
        return GenerationResult.from_completed(completed)

    def close(self):
        self.handle.close()


class ProtocolDetector(DetectorBackend):
    def __init__(self, handle: ProtocolHandle):
        if handle.role != "detector":
            raise HandshakeMismatch(f"handle role {handle.role!r} is not "
                                    "detector")
        self.handle = handle

    def detect(self, image: np.ndarray) -> list[Detection]:
        reply = self.handle.request(
            {"op": "detect", "image_png": encode_png(image)},
            expect_op="detections")
        height, width = image.shape[:2]
        detections = []
        for item in reply.get("items", []):
            try:
                bbox = BBox(float(item["x_min"]), float(item["y_min"]),
                            float(item["x_max"]), float(item["y_max"]))
                det = Detection(bbox, float(item["confidence"]),
                                str(item.get("label", "car")))
            except (KeyError, ValueError) as exc:
                raise BackendFailure(f"bad detection item {item!r}: {exc}") \
                    from None
            if not bbox.inside_image(width, height):
                raise BackendFailure(f"detection {bbox} outside "
                                     f"{width}x{height} image")
            detections.append(det)
        return detections

    def close(self):
        self.handle.close()


def spawn_protocol_backend(command, role: str, patch_size: int = 96,
                           timeout: float = DEFAULT_TIMEOUT):
    """Start a child process and wrap it in the matching backend adapter."""
    if role not in ("generator", "detector"):
        raise ValueError(f"role must be generator or detector, got {role!r}")
    handle = ProtocolHandle(command, role, patch_size, timeout)
    if role == "generator":
        return ProtocolGenerator(handle)
    return ProtocolDetector(handle)
