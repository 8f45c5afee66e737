"""Driving an external backend process over the newline-JSON protocol.

Writes a tiny protocol-conformant child to a temp file, spawns it through
the pipeline client, and runs one generate round trip. Swap the child for
`nnbridge --role generator --checkpoint ...` to serve a real model.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from aeroaug import make_toy_dataset
from aeroaug.backends import spawn_protocol_backend
from aeroaug.patches import extract_patch, mask_center

CHILD = '''
import base64, io, json, sys
import numpy as np
from PIL import Image

def b64_to_array(payload, mode="RGB"):
    with Image.open(io.BytesIO(base64.b64decode(payload))) as img:
        return np.asarray(img.convert(mode), dtype=np.uint8)

def array_to_b64(array):
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")

hello = json.loads(sys.stdin.readline())
print(json.dumps({"op": "hello_ack", "role": hello["role"],
                  "version": hello["version"]}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    patch = b64_to_array(req["patch_png"])
    mask = b64_to_array(req["mask_png"], mode="L") > 0
    ring_mean = patch[~mask].reshape(-1, 3).mean(axis=0).astype(np.uint8)
    completed = patch.copy()
    completed[mask] = ring_mean
    print(json.dumps({"op": "result", "id": req["id"],
                      "patch_png": array_to_b64(completed)}), flush=True)
'''

with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as fh:
    fh.write(CHILD)
    child_path = fh.name

backgrounds = make_toy_dataset(1, size=224, instances_per_image=(0, 0),
                               seed=8)
masked = mask_center(extract_patch(backgrounds.records[0], (30, 40), 96))

backend = spawn_protocol_backend([sys.executable, child_path], "generator",
                                 patch_size=96)
print("handshake complete; child acknowledged role", backend.handle.role)
result = backend.fill(masked)
backend.close()

ys, xs = masked.hole_slices
print("hole filled with the ring mean color:",
      result.completed[ys, xs].reshape(-1, 3)[0])
print("context ring untouched:",
      np.array_equal(result.completed[~masked.mask],
                     masked.base.pixels[~masked.mask]))
Path(child_path).unlink()
