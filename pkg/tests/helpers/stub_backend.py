"""Minimal wire-protocol child used by the protocol client tests.

Speaks the newline-JSON protocol with a trivial deterministic fill
(constant color in the masked region) and a fixed detection reply.
Misbehaviors for negative tests are switched on by flags:

  --role generator|detector   which role to acknowledge (default: echo
                              the requested role)
  --claim-role X              acknowledge role X regardless of the request
  --version N                 acknowledge protocol version N
  --exit-after-handshake      crash simulation
  --sleep-secs S              delay every reply (timeout simulation)
  --garbage                   reply with non-JSON noise once
  --wrong-id                  reply with a mismatched request id
"""
import argparse
import base64
import io
import json
import sys
import time

import numpy as np
from PIL import Image


def b64_to_array(payload, mode="RGB"):
    raw = base64.b64decode(payload)
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert(mode), dtype=np.uint8)


def array_to_b64(array):
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--role", default=None)
    parser.add_argument("--claim-role", default=None)
    parser.add_argument("--version", type=int, default=1)
    parser.add_argument("--exit-after-handshake", action="store_true")
    parser.add_argument("--sleep-secs", type=float, default=0.0)
    parser.add_argument("--garbage", action="store_true")
    parser.add_argument("--wrong-id", action="store_true")
    args = parser.parse_args()

    hello = json.loads(sys.stdin.readline())
    role = args.claim_role or args.role or hello.get("role")
    print(json.dumps({"op": "hello_ack", "role": role,
                      "version": args.version}), flush=True)
    if args.exit_after_handshake:
        return

    for line in sys.stdin:
        if args.sleep_secs:
            time.sleep(args.sleep_secs)
        if args.garbage:
            print("][ not json ][", flush=True)
            continue
        request = json.loads(line)
        request_id = request.get("id", -1)
        if args.wrong_id:
            request_id += 1000
        op = request.get("op")
        if op == "generate":
            patch = b64_to_array(request["patch_png"])
            mask = b64_to_array(request["mask_png"], mode="L")
            completed = patch.copy()
            completed[mask > 0] = (0, 200, 0)
            print(json.dumps({"op": "result", "id": request_id,
                              "patch_png": array_to_b64(completed)}),
                  flush=True)
        elif op == "detect":
            image = b64_to_array(request["image_png"])
            h, w = image.shape[:2]
            items = [{"x_min": 1.0, "y_min": 2.0,
                      "x_max": min(17.0, float(w)),
                      "y_max": min(18.0, float(h)),
                      "confidence": 0.75, "label": "car"}]
            print(json.dumps({"op": "detections", "id": request_id,
                              "items": items}), flush=True)
        else:
            print(json.dumps({"op": "error", "id": request_id,
                              "message": f"unsupported op {op!r}"}),
                  flush=True)


if __name__ == "__main__":
    main()
