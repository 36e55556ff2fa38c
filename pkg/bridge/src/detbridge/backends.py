"""Detector backends for the bridge.

A backend turns one layer image into detections: ``(box, scores)`` pairs
with the box in layer pixel coordinates and ``scores`` a label -> value map.
Backends that only expose a top-1 class confidence emit one-hot maps, which
is a documented fidelity gap versus detectors with full score heads.
"""

from __future__ import annotations

import numpy as np


class BackendError(Exception):
    """The requested backend cannot be constructed."""


class StubDetector:
    """Fixed-output detector for tests and protocol bring-up.

    Reports one box per image at a constant confidence. Configurable via the
    model string: ``stub`` or ``stub:x0,y0,x1,y1,label,confidence``.
    """

    def __init__(self, box=(40.0, 40.0, 120.0, 120.0), label="cup", confidence=0.9):
        self.box = tuple(float(v) for v in box)
        self.label = label
        self.confidence = float(confidence)

    @classmethod
    def from_spec(cls, spec: str) -> "StubDetector":
        if spec == "stub":
            return cls()
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 6:
            raise BackendError(
                f"stub spec must be stub:x0,y0,x1,y1,label,conf, got {spec!r}"
            )
        return cls(
            box=tuple(float(v) for v in parts[:4]),
            label=parts[4],
            confidence=float(parts[5]),
        )

    def detect(self, image: np.ndarray) -> list[tuple[tuple[float, float, float, float], dict]]:
        side = min(image.shape[0], image.shape[1])
        x0, y0, x1, y1 = self.box
        x0, x1 = max(0.0, min(x0, side)), max(0.0, min(x1, side))
        y0, y1 = max(0.0, min(y0, side)), max(0.0, min(y1, side))
        if x1 <= x0 or y1 <= y0:
            return []
        return [((x0, y0, x1, y1), {self.label: self.confidence})]


class TorchvisionDetector:
    """Pretrained torchvision detection model behind the backend interface.

    Loads lazily at construction so a missing torch install or unreachable
    weight files fail the bridge at startup, not mid-run. Emits one-hot
    score maps at the model's reported top-1 confidence.
    """

    def __init__(self, model_name: str = "fasterrcnn_resnet50_fpn", device: str = "cpu"):
        try:
            import torch
            from torchvision.models import detection as tvdet
        except ImportError as exc:
            raise BackendError(f"torchvision backend unavailable: {exc}") from exc
        try:
            factory = getattr(tvdet, model_name)
            weights_enum = tvdet.__dict__.get(
                "".join(p.capitalize() for p in model_name.split("_")) + "_Weights"
            )
            weights = weights_enum.COCO_V1 if weights_enum is not None else "COCO_V1"
            self._model = factory(weights=weights).eval().to(device)
            self._categories = weights.meta["categories"] if weights_enum else None
        except Exception as exc:  # weight download, unknown model, device errors
            raise BackendError(f"cannot load {model_name!r}: {exc}") from exc
        self._torch = torch
        self._device = device

    def detect(self, image: np.ndarray) -> list[tuple[tuple[float, float, float, float], dict]]:
        torch = self._torch
        arr = np.asarray(image)
        if arr.ndim == 2:
            arr = np.stack([arr] * 3, axis=-1)
        tensor = torch.from_numpy(arr.copy()).permute(2, 0, 1).float() / 255.0
        with torch.no_grad():
            (pred,) = self._model([tensor.to(self._device)])
        out = []
        for box, label, score in zip(
            pred["boxes"].cpu().numpy(),
            pred["labels"].cpu().numpy(),
            pred["scores"].cpu().numpy(),
        ):
            name = (
                self._categories[int(label)]
                if self._categories and int(label) < len(self._categories)
                else str(int(label))
            )
            if name in ("__background__", "N/A"):
                continue
            out.append(((float(box[0]), float(box[1]), float(box[2]), float(box[3])),
                        {name: float(score)}))
        return out


def load_backend(model: str, device: str = "cpu"):
    """Backend factory for the ``--model`` flag."""
    if model == "stub" or model.startswith("stub:"):
        return StubDetector.from_spec(model)
    return TorchvisionDetector(model_name=model, device=device)
