"""Regenerate the bridge golden transcripts.

Run from the ``bridge/`` directory:

    python3 tests/data/make_transcripts.py

Spawns the bridge with the deterministic fixture checkpoints, drives one
full session per role (handshake, a real request, a malformed line, a
wrong-role request), and records every exchanged line. The replay test
feeds the recorded requests back and checks the live responses against
the recorded ones.
"""
import json
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))  # for conftest fixtures

from conftest import (BridgeProcess, ConstFillInpaint, FixedBoxDetect,
                      center_mask, gradient_patch)

import torch

from nnbridge import PROTOCOL_VERSION
from nnbridge.wire import array_to_png


def record_session(args, interactions, out_path):
    bridge = BridgeProcess(args)
    records = []
    try:
        for kind, payload in interactions:
            if kind == "line":
                bridge.send_line(payload)
                records.append({"direction": "request_line",
                                "payload": payload})
            else:
                bridge.send(payload)
                records.append({"direction": "request", "payload": payload})
            reply = bridge.recv()
            records.append({"direction": "response", "payload": reply})
    finally:
        bridge.close()
    out_path.write_text("".join(json.dumps(r) + "\n" for r in records))
    print(f"wrote {out_path} ({len(records)} records)")


def main():
    tmp = Path(tempfile.mkdtemp())
    inpaint = tmp / "fill.pt"
    detect = tmp / "boxes.pt"
    torch.jit.script(ConstFillInpaint()).save(str(inpaint))
    torch.jit.script(FixedBoxDetect()).save(str(detect))

    patch, mask = gradient_patch(), center_mask()
    masked = patch.copy()
    masked[mask > 0] = 0

    hello_gen = {"op": "hello", "role": "generator",
                 "version": PROTOCOL_VERSION, "patch_size": 16}
    generate = {"op": "generate", "id": 0,
                "patch_png": array_to_png(masked),
                "mask_png": array_to_png(mask)}
    wrong_role = {"op": "detect", "id": 1,
                  "image_png": array_to_png(patch)}
    record_session(
        ["--role", "generator", "--model", "torchscript-inpaint",
         "--checkpoint", str(inpaint), "--patch-size", "16"],
        [("msg", hello_gen), ("msg", generate),
         ("line", "{{{ not json"), ("msg", wrong_role)],
        HERE / "transcript_generator.jsonl")

    hello_det = {"op": "hello", "role": "detector",
                 "version": PROTOCOL_VERSION, "patch_size": 16}
    detect_req = {"op": "detect", "id": 0,
                  "image_png": array_to_png(
                      gradient_patch(24))}
    record_session(
        ["--role", "detector", "--model", "torchscript-detect",
         "--checkpoint", str(detect), "--patch-size", "16"],
        [("msg", hello_det), ("msg", detect_req),
         ("line", "][ garbage ]["),
         ("msg", {"op": "generate", "id": 1,
                  "patch_png": array_to_png(patch),
                  "mask_png": array_to_png(mask)})],
        HERE / "transcript_detector.jsonl")


if __name__ == "__main__":
    main()
