import json
import queue
import subprocess
import sys
import threading

import numpy as np
import pytest
import torch


class ConstFillInpaint(torch.nn.Module):
    """Paints the masked region a fixed color; stand-in for a trained filler."""

    def forward(self, image: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        fill = torch.tensor([30.0, 90.0, 150.0]).view(1, 3, 1, 1) / 255.0
        return image * (1.0 - mask) + fill * mask


class FixedBoxDetect(torch.nn.Module):
    """Returns two fixed boxes in native coordinates, whatever the pixels."""

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return torch.tensor([[2.0, 3.0, 10.0, 12.0, 0.875],
                             [1.0, 1.0, 6.0, 6.0, 0.5]])


@pytest.fixture(scope="session")
def checkpoints(tmp_path_factory):
    root = tmp_path_factory.mktemp("ckpt")
    inpaint = root / "fill.pt"
    detect = root / "boxes.pt"
    torch.jit.script(ConstFillInpaint()).save(str(inpaint))
    torch.jit.script(FixedBoxDetect()).save(str(detect))
    return {"inpaint": str(inpaint), "detect": str(detect)}


def gradient_patch(side=16):
    ramp = np.arange(side, dtype=np.uint16)
    red = np.broadcast_to(ramp[None, :] * (255 // side), (side, side))
    green = np.broadcast_to(ramp[:, None] * (255 // side), (side, side))
    blue = np.full((side, side), 40, np.uint16)
    return np.stack([red, green, blue], axis=-1).astype(np.uint8)


def center_mask(side=16):
    mask = np.zeros((side, side), np.uint8)
    q = side // 4
    mask[q:q + side // 2, q:q + side // 2] = 255
    return mask


class BridgeProcess:
    """Drives a bridge child over raw JSON lines with read timeouts."""

    def __init__(self, args, timeout=30.0):
        self.timeout = timeout
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "nnbridge", *args],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.PIPE, text=True, bufsize=1)
        self._lines = queue.Queue()
        threading.Thread(target=self._drain, daemon=True).start()

    def _drain(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def send_line(self, line: str):
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, message: dict):
        self.send_line(json.dumps(message))

    def recv(self):
        line = self._lines.get(timeout=self.timeout)
        if line is None:
            raise AssertionError(
                f"bridge exited (code {self.proc.poll()}); stderr: "
                f"{self.proc.stderr.read()}")
        return json.loads(line)

    def recv_eof(self):
        assert self._lines.get(timeout=self.timeout) is None

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        return self.proc.returncode


@pytest.fixture()
def spawn_bridge():
    procs = []

    def factory(args, timeout=30.0):
        proc = BridgeProcess(args, timeout)
        procs.append(proc)
        return proc

    yield factory
    for proc in procs:
        proc.close()
