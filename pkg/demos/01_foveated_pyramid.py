"""Build a multi-scale foveated pyramid around a focal point.

The pyramid crops concentric squares whose sides double per level, then
downsamples every outer level back to the base resolution. The result is a
fixed, small pixel budget per fixation regardless of image size: this script
prints the layer table and the pixel cost of each named preset, then writes
the layer PNGs plus their JSON manifest.
"""

from pathlib import Path

import numpy as np

from fovsearch import FoveaConfig, PRESETS, build_pyramid, pixel_cost, write_layers

OUT = Path(__file__).parent / "out" / "pyramid"

# A synthetic 1050x1680 "scene": smooth gradients plus a grid of bright
# blobs, so the downsampled layers stay visually interpretable.
h, w = 1050, 1680
yy, xx = np.mgrid[0:h, 0:w]
image = (96 + 64 * np.sin(xx / 90.0) * np.cos(yy / 70.0)).astype(np.uint8)
for cy in range(100, h, 200):
    for cx in range(100, w, 240):
        image[cy - 12 : cy + 12, cx - 12 : cx + 12] = 255

focal = (w // 2, h // 2)
cfg = FoveaConfig(levels=4, base_side=160, image_height=h, image_width=w)
pyramid = build_pyramid(image, focal, cfg)

print(f"focal point {focal}, {cfg.levels} levels, base side {cfg.base_side}px")
print(f"{'layer':>5} {'side':>6} {'scale':>6} {'covers (image frame)':>28}")
for frame, raster in pyramid:
    ib = frame.image_box
    print(
        f"{frame.index:>5} {frame.side:>6} {frame.scale:>6}"
        f"   ({ib.x0:.0f},{ib.y0:.0f})..({ib.x1:.0f},{ib.y1:.0f})"
    )

print("\npixel budget per fixation (vs processing the full image):")
for name in sorted(PRESETS, key=lambda p: PRESETS[p][0] * PRESETS[p][1] ** 2):
    levels, base = PRESETS[name]
    absolute, pct = pixel_cost(FoveaConfig(levels, base, h, w))
    print(f"  {name:>6}: {absolute:>7} px  = {pct:5.2f}% of {h}x{w}")

manifest = write_layers(OUT, pyramid, focal, cfg)
print(f"\nwrote {cfg.levels} layer PNGs and {manifest}")
