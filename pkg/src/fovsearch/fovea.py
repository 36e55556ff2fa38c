"""Multi-scale foveated pyramid: construction, box remapping, pixel cost.

A pyramid is a stack of concentric square layers centered on a focal point.
The innermost layer has side ``base_side`` and keeps the original resolution;
each subsequent layer doubles the side length and is downsampled back to
``base_side x base_side``, so peripheral content is seen at progressively
coarser resolution. The source image is zero-padded by half the outermost
side so every layer can be cropped branch-free for any in-bounds focal point.

Conventions used throughout the package:

* points are ``(x, y)`` tuples, arrays are indexed ``[y, x]``;
* rasters are uint8 numpy arrays, ``(H, W)`` or ``(H, W, C)``;
* boxes are ``BBox(x0, y0, x1, y1)`` with a frame tag, ``"image"`` or
  ``"layer:<n>"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, OutOfBoundsError

# Named pyramid configurations (levels, base_side). All but 4x160 cover a
# 1024 x 1024 region; 4x160 covers 1280 x 1280.
PRESETS: dict[str, tuple[int, int]] = {
    "5x64": (5, 64),
    "4x128": (4, 128),
    "4x160": (4, 160),
    "3x256": (3, 256),
}


def layer_side(n: int, base_side: int) -> int:
    """Side length of layer ``n``: doubles per level, ``2**(n-1) * base_side``."""
    if n < 1:
        raise ConfigError(f"layer index must be >= 1, got {n}")
    if base_side < 1:
        raise ConfigError(f"base side must be >= 1, got {base_side}")
    return (2 ** (n - 1)) * base_side


@dataclass(frozen=True)
class FoveaConfig:
    """Pyramid parameters tied to a specific image size.

    ``base_side`` must be even (layer half-sides stay integral) and smaller
    than the shortest image side (otherwise the pyramid saves nothing).
    """

    levels: int
    base_side: int
    image_height: int
    image_width: int

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        if self.base_side < 1:
            raise ConfigError(f"base_side must be >= 1, got {self.base_side}")
        if self.base_side % 2 != 0:
            raise ConfigError(f"base_side must be even, got {self.base_side}")
        if self.image_height < 1 or self.image_width < 1:
            raise ConfigError("image dimensions must be positive")
        if self.base_side >= min(self.image_height, self.image_width):
            raise ConfigError(
                f"base_side {self.base_side} must be smaller than the shortest "
                f"image side {min(self.image_height, self.image_width)}"
            )

    @property
    def pad(self) -> int:
        """Zero-padding width on every side: half the outermost layer."""
        return layer_side(self.levels, self.base_side) // 2


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box with float corners and a coordinate-frame tag."""

    x0: float
    y0: float
    x1: float
    y1: float
    frame: str = "image"

    def __post_init__(self) -> None:
        if not (self.x0 <= self.x1 and self.y0 <= self.y1):
            raise ConfigError(f"degenerate box corners: {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def intersection_area(self, other: "BBox") -> float:
        """Overlap area with ``other``; both boxes must share a frame."""
        if self.frame != other.frame:
            raise ConfigError(f"frame mismatch: {self.frame} vs {other.frame}")
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        if w <= 0.0 or h <= 0.0:
            return 0.0
        return w * h


@dataclass(frozen=True)
class LayerFrame:
    """Placement and scale of one pyramid layer.

    ``top_left`` is the crop corner in the zero-padded image frame (always a
    valid array index); ``pad`` converts between padded and original image
    coordinates. ``scale`` is the integer downsample factor ``2**(index-1)``.
    """

    index: int
    side: int
    scale: int
    top_left: tuple[int, int]
    pad: int

    @property
    def bottom_right(self) -> tuple[int, int]:
        return (self.top_left[0] + self.side, self.top_left[1] + self.side)

    @property
    def image_box(self) -> BBox:
        """The layer's square in original-image coordinates (may overhang)."""
        x0 = self.top_left[0] - self.pad
        y0 = self.top_left[1] - self.pad
        return BBox(x0, y0, x0 + self.side, y0 + self.side, frame="image")

    @property
    def frame_tag(self) -> str:
        return f"layer:{self.index}"


def layer_frames(focal: tuple[int, int], cfg: FoveaConfig) -> list[LayerFrame]:
    """Geometry of every layer around ``focal``, without touching pixels."""
    fx, fy = focal
    if not (0 <= fx < cfg.image_width and 0 <= fy < cfg.image_height):
        raise OutOfBoundsError(
            f"focal point {focal} outside {cfg.image_width}x{cfg.image_height} image"
        )
    pad = cfg.pad
    frames = []
    for n in range(1, cfg.levels + 1):
        side = layer_side(n, cfg.base_side)
        half = side // 2
        frames.append(
            LayerFrame(
                index=n,
                side=side,
                scale=2 ** (n - 1),
                top_left=(fx + pad - half, fy + pad - half),
                pad=pad,
            )
        )
    return frames


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with output pixel centers at ``(k + 0.5) * scale - 0.5``.

    Sample positions follow the align-corners-false convention, so constant
    regions map to the same constant and integer-factor downsampling uses
    exactly representable half weights.
    """
    src = np.asarray(img, dtype=np.float64)
    in_h, in_w = src.shape[:2]

    def axis(out_n: int, in_n: int):
        pos = (np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5
        lo = np.floor(pos).astype(np.int64)
        frac = pos - lo
        return np.clip(lo, 0, in_n - 1), np.clip(lo + 1, 0, in_n - 1), frac

    y0, y1, fy = axis(out_h, in_h)
    x0, x1, fx = axis(out_w, in_w)
    if src.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    rows = src[y0] * (1.0 - fy) + src[y1] * fy
    return rows[:, x0] * (1.0 - fx) + rows[:, x1] * fx


def quantize_u8(samples: np.ndarray) -> np.ndarray:
    """Round half up and clamp to the 8-bit range."""
    return np.clip(np.floor(samples + 0.5), 0, 255).astype(np.uint8)


def build_pyramid(
    image: np.ndarray, focal: tuple[int, int], cfg: FoveaConfig
) -> list[tuple[LayerFrame, np.ndarray]]:
    """Crop and downsample all layers around ``focal``.

    Returns one ``(frame, raster)`` pair per level, innermost first. Every
    raster is ``base_side x base_side`` uint8; the innermost one is a
    bit-exact crop of the padded source, outer ones are bilinear-downsampled
    and re-quantized (round half up).
    """
    src = np.asarray(image)
    if src.dtype != np.uint8:
        raise ConfigError(f"expected uint8 raster, got {src.dtype}")
    if src.shape[:2] != (cfg.image_height, cfg.image_width):
        raise ConfigError(
            f"raster {src.shape[:2]} does not match configured size "
            f"{(cfg.image_height, cfg.image_width)}"
        )
    frames = layer_frames(focal, cfg)
    pad = cfg.pad
    pad_spec = ((pad, pad), (pad, pad)) + ((0, 0),) * (src.ndim - 2)
    padded = np.pad(src, pad_spec, mode="constant", constant_values=0)

    out = []
    for frame in frames:
        x0, y0 = frame.top_left
        crop = padded[y0 : y0 + frame.side, x0 : x0 + frame.side]
        if frame.scale == 1:
            raster = crop.copy()
        else:
            raster = quantize_u8(resize_bilinear(crop, cfg.base_side, cfg.base_side))
        out.append((frame, raster))
    return out


def remap_bbox(
    box: BBox,
    focal: tuple[int, int],
    n: int,
    base_side: int,
    image_height: int,
    image_width: int,
) -> tuple[BBox, bool]:
    """Map a layer-frame box back to image coordinates and clip.

    A layer-``n`` coordinate ``x'`` maps to ``x_c - l_n/2 + x' * 2**(n-1)``
    (same for y). The result is clipped to the image rectangle; the returned
    flag says whether clipping changed anything. A box whose clipped area is
    zero is still returned; callers discard it.
    """
    if not (box.frame == f"layer:{n}" or box.frame == "layer"):
        raise ConfigError(f"expected a layer:{n} box, got frame {box.frame!r}")
    if not (0.0 <= box.x0 and box.x1 <= base_side and 0.0 <= box.y0 and box.y1 <= base_side):
        raise ConfigError(f"layer box {box} exceeds [0, {base_side}]")
    scale = 2 ** (n - 1)
    half = layer_side(n, base_side) // 2
    fx, fy = focal
    x0 = fx - half + box.x0 * scale
    y0 = fy - half + box.y0 * scale
    x1 = fx - half + box.x1 * scale
    y1 = fy - half + box.y1 * scale
    cx0 = min(max(x0, 0.0), float(image_width))
    cy0 = min(max(y0, 0.0), float(image_height))
    cx1 = min(max(x1, 0.0), float(image_width))
    cy1 = min(max(y1, 0.0), float(image_height))
    clipped = (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1)
    return BBox(cx0, cy0, cx1, cy1, frame="image"), clipped


def image_to_layer(box: BBox, frame: LayerFrame) -> BBox:
    """Inverse of :func:`remap_bbox` placement: image box into layer coords."""
    if box.frame != "image":
        raise ConfigError(f"expected an image-frame box, got {box.frame!r}")
    origin = frame.image_box
    s = float(frame.scale)
    return BBox(
        (box.x0 - origin.x0) / s,
        (box.y0 - origin.y0) / s,
        (box.x1 - origin.x0) / s,
        (box.y1 - origin.y0) / s,
        frame=frame.frame_tag,
    )


def pixel_cost(cfg: FoveaConfig) -> tuple[int, float]:
    """Pixels handed to the detector per fixation: ``(absolute, % of image)``."""
    absolute = cfg.levels * cfg.base_side * cfg.base_side
    percent = 100.0 * absolute / (cfg.image_height * cfg.image_width)
    return absolute, percent


def write_layers(
    out_dir: str | Path,
    pyramid: list[tuple[LayerFrame, np.ndarray]],
    focal: tuple[int, int],
    cfg: FoveaConfig,
    extra: dict | None = None,
) -> Path:
    """Emit ``layer_<n>.png`` files plus a JSON manifest; returns its path.

    The manifest carries the focal point, level count, base side, and each
    layer's padded-frame corners and scale, so a detector process can remap
    its outputs without access to this library. ``extra`` entries are merged
    into the manifest top level (used by the bridge handshake).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    for frame, raster in pyramid:
        Image.fromarray(raster).save(out / f"layer_{frame.index}.png")
        layers.append(
            {
                "n": frame.index,
                "side": frame.side,
                "top_left": list(frame.top_left),
                "bottom_right": list(frame.bottom_right),
                "scale": frame.scale,
            }
        )
    manifest = {
        "focal": [int(focal[0]), int(focal[1])],
        "levels": cfg.levels,
        "base_side": cfg.base_side,
        "pad": cfg.pad,
        "image_height": cfg.image_height,
        "image_width": cfg.image_width,
        "layers": layers,
    }
    if extra:
        manifest.update(extra)
    # The manifest is the handshake trigger for external consumers, so it
    # must appear atomically, after every layer PNG is on disk.
    path = out / "manifest.json"
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2) + "\n")
    tmp.replace(path)
    return path
