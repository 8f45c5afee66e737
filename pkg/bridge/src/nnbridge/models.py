"""TorchScript checkpoint adapters and the geometry they hide.

Two model families are supported, both loaded with ``torch.jit.load``:

* ``torchscript-inpaint``: ``forward(image[1,3,H,W], mask[1,1,H,W]) ->
  [1,3,H,W]``, all float32 in [0,1]; the mask is 1 inside the hole.
  Trained inpainting networks attach by exporting this signature.
* ``torchscript-detect``: ``forward(image[1,3,H,W]) -> [N,5]`` rows of
  ``x_min, y_min, x_max, y_max, confidence`` in input-pixel coordinates.

The adapters resize/letterbox to the model's native input and map results
back, so callers work in their own pixel space throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

GENERATOR_FAMILIES = ("torchscript-inpaint",)
DETECTOR_FAMILIES = ("torchscript-detect",)
KNOWN_FAMILIES = GENERATOR_FAMILIES + DETECTOR_FAMILIES


@dataclass(frozen=True)
class BridgeConfig:
    role: str                      # generator | detector
    model: str                     # family identifier
    checkpoint: str
    patch_size: int = 96
    native_size: int | None = None  # model input side; defaults to patch_size
    device: str = "cpu"

    def __post_init__(self):
        if self.role not in ("generator", "detector"):
            raise ValueError(f"role must be generator or detector, "
                             f"got {self.role!r}")
        if self.model not in KNOWN_FAMILIES:
            raise ValueError(f"unknown model family {self.model!r}; "
                             f"known: {', '.join(KNOWN_FAMILIES)}")
        expected = GENERATOR_FAMILIES if self.role == "generator" else \
            DETECTOR_FAMILIES
        if self.model not in expected:
            raise ValueError(f"model family {self.model!r} does not serve "
                             f"role {self.role!r}")
        if self.patch_size <= 0 or self.patch_size % 2 != 0:
            raise ValueError(f"patch_size must be positive and even, "
                             f"got {self.patch_size}")

    @property
    def input_side(self) -> int:
        return self.native_size or self.patch_size


def _to_tensor(image: np.ndarray, device) -> torch.Tensor:
    """HxWx3 uint8 -> [1,3,H,W] float32 in [0,1]."""
    array = image.astype(np.float32) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1).unsqueeze(0).to(device)


def _to_image(tensor: torch.Tensor) -> np.ndarray:
    array = tensor.squeeze(0).permute(1, 2, 0).clamp(0.0, 1.0).cpu().numpy()
    return (array * 255.0 + 0.5).astype(np.uint8)


class InpaintAdapter:
    def __init__(self, config: BridgeConfig):
        self.config = config
        self.model = torch.jit.load(config.checkpoint,
                                    map_location=config.device)
        self.model.eval()

    def complete(self, patch: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Fill the masked region of an RGB patch; context stays put."""
        side = self.config.patch_size
        if patch.shape[:2] != (side, side):
            raise ValueError(f"patch {patch.shape[:2]} does not match "
                             f"handshake size {side}")
        device = self.config.device
        image_t = _to_tensor(patch, device)
        mask_t = torch.from_numpy(
            (mask > 0).astype(np.float32))[None, None].to(device)

        native = self.config.input_side
        if native != side:
            image_t = torch.nn.functional.interpolate(
                image_t, size=(native, native), mode="bilinear",
                align_corners=False)
            mask_t = torch.nn.functional.interpolate(
                mask_t, size=(native, native), mode="nearest")
        with torch.no_grad():
            out = self.model(image_t, mask_t)
        if native != side:
            out = torch.nn.functional.interpolate(
                out, size=(side, side), mode="bilinear", align_corners=False)
        completed = _to_image(out)
        # splice: model output inside the hole, original context outside
        hole = mask > 0
        result = patch.copy()
        result[hole] = completed[hole]
        return result


class DetectAdapter:
    def __init__(self, config: BridgeConfig):
        self.config = config
        self.model = torch.jit.load(config.checkpoint,
                                    map_location=config.device)
        self.model.eval()

    def detect(self, image: np.ndarray) -> list[dict]:
        """Scored boxes in the image's own pixel coordinates."""
        height, width = image.shape[:2]
        native = self.config.input_side
        scale = native / max(height, width)
        rh = max(int(round(height * scale)), 1)
        rw = max(int(round(width * scale)), 1)
        off_y = (native - rh) // 2
        off_x = (native - rw) // 2

        tensor = _to_tensor(image, self.config.device)
        tensor = torch.nn.functional.interpolate(
            tensor, size=(rh, rw), mode="bilinear", align_corners=False)
        canvas = torch.full((1, 3, native, native), 0.5,
                            device=self.config.device)
        canvas[:, :, off_y:off_y + rh, off_x:off_x + rw] = tensor
        with torch.no_grad():
            raw = self.model(canvas)
        boxes = raw.detach().cpu().numpy().reshape(-1, 5)

        items = []
        for x0, y0, x1, y1, conf in boxes:
            # undo the letterbox, then clip to the real image
            x0 = (x0 - off_x) / scale
            x1 = (x1 - off_x) / scale
            y0 = (y0 - off_y) / scale
            y1 = (y1 - off_y) / scale
            x0, x1 = max(x0, 0.0), min(x1, float(width))
            y0, y1 = max(y0, 0.0), min(y1, float(height))
            if x1 <= x0 or y1 <= y0:
                continue
            items.append({"x_min": float(x0), "y_min": float(y0),
                          "x_max": float(x1), "y_max": float(y1),
                          "confidence": float(min(max(conf, 0.0), 1.0)),
                          "label": "car"})
        return items


def load_adapter(config: BridgeConfig):
    if config.role == "generator":
        return InpaintAdapter(config)
    return DetectAdapter(config)
