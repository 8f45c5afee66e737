"""Request loop and selfcheck for the bridge process."""
from __future__ import annotations

import json
import sys
import time

import numpy as np

from . import PROTOCOL_VERSION
from .models import BridgeConfig, load_adapter
from .wire import array_to_png, png_to_array, read_message, write_message


def _error(request_id, message: str) -> dict:
    return {"op": "error", "id": request_id, "message": message}


def _handle(adapter, config: BridgeConfig, request: dict) -> dict:
    request_id = request.get("id", -1)
    op = request.get("op")
    try:
        if op == "generate":
            if config.role != "generator":
                return _error(request_id,
                              f"role {config.role!r} cannot serve generate")
            patch = png_to_array(request["patch_png"])
            mask = png_to_array(request["mask_png"], mode="L")
            completed = adapter.complete(patch, mask)
            return {"op": "result", "id": request_id,
                    "patch_png": array_to_png(completed)}
        if op == "detect":
            if config.role != "detector":
                return _error(request_id,
                              f"role {config.role!r} cannot serve detect")
            image = png_to_array(request["image_png"])
            return {"op": "detections", "id": request_id,
                    "items": adapter.detect(image)}
        return _error(request_id, f"unsupported op {op!r}")
    except Exception as exc:  # model failures must not kill the loop
        return _error(request_id, f"{type(exc).__name__}: {exc}")


def serve(config: BridgeConfig) -> int:
    """Answer the handshake, then loop until stdin closes."""
    try:
        adapter = load_adapter(config)
    except Exception as exc:
        print(f"cannot load checkpoint {config.checkpoint!r}: {exc}",
              file=sys.stderr)
        return 1

    hello = read_message()
    if hello is None:
        return 0
    if hello.get("op") != "hello" or hello.get("version") != PROTOCOL_VERSION:
        write_message(_error(-1, "expected hello with version "
                                 f"{PROTOCOL_VERSION}"))
        return 1
    if hello.get("role") != config.role:
        write_message(_error(-1, f"bridge serves {config.role!r}, caller "
                                 f"asked for {hello.get('role')!r}"))
        return 1
    if hello.get("patch_size") != config.patch_size:
        write_message(_error(-1, f"bridge is configured for patch size "
                                 f"{config.patch_size}, caller uses "
                                 f"{hello.get('patch_size')}"))
        return 1
    write_message({"op": "hello_ack", "role": config.role,
                   "version": PROTOCOL_VERSION})

    while True:
        try:
            request = read_message()
        except (json.JSONDecodeError, ValueError) as exc:
            write_message(_error(-1, f"malformed request line: {exc}"))
            continue
        if request is None:
            return 0
        write_message(_handle(adapter, config, request))


def _synthetic_patch(side: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(0)
    patch = rng.integers(40, 200, (side, side, 3)).astype(np.uint8)
    mask = np.zeros((side, side), dtype=np.uint8)
    q = side // 4
    mask[q:q + side // 2, q:q + side // 2] = 255
    return patch, mask


def selfcheck(config: BridgeConfig) -> int:
    """Load the model and drive one request per op; nonzero exit on failure."""
    print(f"protocol version: {PROTOCOL_VERSION}")
    print(f"role: {config.role}  model: {config.model}  "
          f"device: {config.device}")
    try:
        adapter = load_adapter(config)
    except Exception as exc:
        print(f"FAIL: cannot load checkpoint: {exc}", file=sys.stderr)
        return 1

    patch, mask = _synthetic_patch(config.patch_size)
    if config.role == "generator":
        started = time.perf_counter()
        completed = adapter.complete(patch, mask)
        latency = time.perf_counter() - started
        print(f"generate: {latency * 1000:.1f} ms, output shape "
              f"{completed.shape}")
        if completed.shape != patch.shape:
            print("FAIL: output shape mismatch", file=sys.stderr)
            return 1
        request = {"op": "detect", "id": 0, "image_png": array_to_png(patch)}
    else:
        started = time.perf_counter()
        items = adapter.detect(patch)
        latency = time.perf_counter() - started
        print(f"detect: {latency * 1000:.1f} ms, {len(items)} boxes")
        for item in items:
            inside = (0 <= item["x_min"] < item["x_max"] <= patch.shape[1]
                      and 0 <= item["y_min"] < item["y_max"]
                      <= patch.shape[0])
            if not inside or not 0 <= item["confidence"] <= 1:
                print(f"FAIL: bad detection {item}", file=sys.stderr)
                return 1
        request = {"op": "generate", "id": 0,
                   "patch_png": array_to_png(patch),
                   "mask_png": array_to_png(mask)}

    # a wrong-role request must come back as an error reply
    reply = _handle(adapter, config, request)
    if reply.get("op") != "error":
        print(f"FAIL: wrong-role request not rejected: {reply.get('op')}",
              file=sys.stderr)
        return 1
    print("wrong-role request rejected: ok")
    print("selfcheck: ok")
    return 0
