"""Seeded synthetic detection oracle standing in for a neural detector.

Emits per-layer detections whose hit rate and localization degrade with the
layer's downsample factor, so the full search pipeline is testable at desk
scale with no model weights. All randomness comes from counter-based streams
keyed by (seed, scene id, layer index, layer placement), so results replay
bit-identically regardless of evaluation order or parallelism.

Also owns the scene file format and the detection wire format shared with
the detector bridge.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BridgeProtocolError, ConfigError
from .fovea import BBox, LayerFrame, image_to_layer
from .semantics import ClassSet


@dataclass(frozen=True)
class SceneObject:
    label: str
    box: BBox


@dataclass(frozen=True)
class SceneSpec:
    """Ground truth for one target-present scene."""

    scene_id: str
    image_height: int
    image_width: int
    target: str
    objects: tuple[SceneObject, ...]
    image_path: str | None = None  # optional backing raster, bridge mode only


def validate_scene(scene: SceneSpec) -> None:
    """Reject scenes with out-of-bounds boxes or a missing target instance."""
    if scene.image_height < 1 or scene.image_width < 1:
        raise ConfigError(f"{scene.scene_id}: bad image dimensions")
    for obj in scene.objects:
        b = obj.box
        if b.frame != "image":
            raise ConfigError(f"{scene.scene_id}: object box not in image frame")
        if b.x0 < 0 or b.y0 < 0 or b.x1 > scene.image_width or b.y1 > scene.image_height:
            raise ConfigError(f"{scene.scene_id}: object box {b} out of bounds")
        if b.area <= 0:
            raise ConfigError(f"{scene.scene_id}: zero-area object box")
    if not any(o.label == scene.target for o in scene.objects):
        raise ConfigError(f"{scene.scene_id}: target {scene.target!r} has no instance")


@dataclass(frozen=True)
class DetectorModel:
    """Noise model for the synthetic detector.

    ``true_positive_base`` is the detection probability at full resolution;
    each doubling of the downsample factor multiplies it by
    ``2**-degradation_exponent``. Objects whose downsampled box area falls
    below ``min_visible_area`` are never detected. False positives arrive at
    a Poisson rate per layer. The true class receives ``score_concentration``
    times the score of every distractor class. Corner jitter grows linearly
    with the downsample factor.
    """

    true_positive_base: float = 0.95
    degradation_exponent: float = 0.5
    min_visible_area: float = 64.0
    false_positive_rate: float = 0.3
    score_concentration: float = 20.0
    rng_seed: int = 0
    duplicates_per_object: int = 1
    jitter_px: float = 0.25

    def __post_init__(self) -> None:
        if not (0.0 <= self.true_positive_base <= 1.0):
            raise ConfigError("true_positive_base must be a probability")
        if self.degradation_exponent < 0.0:
            raise ConfigError("degradation_exponent must be >= 0")
        if self.score_concentration <= 1.0:
            raise ConfigError("score_concentration must exceed 1")
        if self.false_positive_rate < 0.0 or self.min_visible_area < 0.0:
            raise ConfigError("rates and areas must be non-negative")
        if self.duplicates_per_object < 1:
            raise ConfigError("duplicates_per_object must be >= 1")


@dataclass
class Detection:
    """One detector output: unnormalized class scores plus its box."""

    scores: np.ndarray
    box: BBox
    source_layer: int

    @property
    def max_confidence(self) -> float:
        """Largest normalized score, the quantity thresholds act on."""
        s = self.scores
        return float(s.max() / s.sum())


def _stream(seed: int, scene_id: str, frame: LayerFrame) -> np.random.Generator:
    # Counter-based stream keyed by everything that identifies this call, so
    # two fixations of the same scene never share a random sequence.
    digest = hashlib.sha256(scene_id.encode("utf-8")).digest()
    scene_key = int.from_bytes(digest[:8], "little")
    key = [seed & 0xFFFFFFFFFFFFFFFF, scene_key, frame.index,
           frame.top_left[0], frame.top_left[1]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def _score_vector(k_true: int, classes: ClassSet, concentration: float) -> np.ndarray:
    scores = np.ones(classes.K, dtype=np.float64)
    scores[k_true] = concentration
    return scores


def _clip_layer_box(x0, y0, x1, y1, side: int, tag: str) -> BBox | None:
    x0, x1 = sorted((min(max(x0, 0.0), side), min(max(x1, 0.0), side)))
    y0, y1 = sorted((min(max(y0, 0.0), side), min(max(y1, 0.0), side)))
    if x1 - x0 <= 0.0 or y1 - y0 <= 0.0:
        return None
    return BBox(x0, y0, x1, y1, frame=tag)


def detect_layer(
    scene: SceneSpec,
    frame: LayerFrame,
    model: DetectorModel,
    classes: ClassSet,
) -> list[Detection]:
    """Synthetic detections for one layer, in layer coordinates.

    Every ground-truth object intersecting the layer's image-frame square is
    a detection candidate; its box area divided by ``scale**2`` must reach
    ``min_visible_area``, after which it is reported with the
    degradation-scaled probability. Detected boxes are mapped into layer
    coordinates and jittered. False positives follow, Poisson-counted, with
    uniform class and placement.
    """
    rng = _stream(model.rng_seed, scene.scene_id, frame)
    base = frame.side // frame.scale
    dets: list[Detection] = []

    for obj in scene.objects:
        if obj.box.intersection_area(frame.image_box) <= 0.0:
            continue
        if obj.box.area / (frame.scale**2) < model.min_visible_area:
            continue
        p_hit = model.true_positive_base * 2.0 ** (
            -model.degradation_exponent * (frame.index - 1)
        )
        k_true = classes.index(obj.label)
        for _ in range(model.duplicates_per_object):
            u = rng.random()
            jit = rng.normal(0.0, model.jitter_px * frame.scale, size=4)
            if u >= p_hit:
                continue
            lb = image_to_layer(obj.box, frame)
            box = _clip_layer_box(
                lb.x0 + jit[0], lb.y0 + jit[1], lb.x1 + jit[2], lb.y1 + jit[3],
                base, frame.frame_tag,
            )
            if box is None:
                continue
            dets.append(
                Detection(
                    scores=_score_vector(k_true, classes, model.score_concentration),
                    box=box,
                    source_layer=frame.index,
                )
            )

    for _ in range(int(rng.poisson(model.false_positive_rate))):
        k = int(rng.integers(classes.K))
        cx, cy = rng.uniform(0.0, base, size=2)
        hw, hh = rng.uniform(base / 32.0, base / 8.0, size=2)
        box = _clip_layer_box(cx - hw, cy - hh, cx + hw, cy + hh, base, frame.frame_tag)
        if box is None:
            continue
        dets.append(
            Detection(
                scores=_score_vector(k, classes, model.score_concentration),
                box=box,
                source_layer=frame.index,
            )
        )
    return dets


def filter_detections(dets: list[Detection], threshold: float = 0.01) -> list[Detection]:
    """Keep detections whose max normalized score reaches ``threshold``."""
    if not (0.0 <= threshold <= 1.0):
        raise ConfigError(f"threshold must be in [0, 1], got {threshold}")
    return [d for d in dets if d.max_confidence >= threshold]


# ---------------------------------------------------------------------------
# Scene file format


def scene_to_json(scene: SceneSpec) -> dict:
    doc = {
        "scene_id": scene.scene_id,
        "height": scene.image_height,
        "width": scene.image_width,
        "target": scene.target,
        "objects": [
            {"label": o.label, "box": [o.box.x0, o.box.y0, o.box.x1, o.box.y1]}
            for o in scene.objects
        ],
    }
    if scene.image_path is not None:
        doc["image"] = scene.image_path
    return doc


def scene_from_json(doc: dict) -> SceneSpec:
    try:
        objects = tuple(
            SceneObject(
                label=str(o["label"]),
                box=BBox(*(float(v) for v in o["box"]), frame="image"),
            )
            for o in doc["objects"]
        )
        scene = SceneSpec(
            scene_id=str(doc["scene_id"]),
            image_height=int(doc["height"]),
            image_width=int(doc["width"]),
            target=str(doc["target"]),
            objects=objects,
            image_path=doc.get("image"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scene document: {exc}") from exc
    validate_scene(scene)
    return scene


def load_scene(path: str | Path) -> SceneSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}") from exc
    return scene_from_json(doc)


def save_scene(path: str | Path, scene: SceneSpec) -> None:
    Path(path).write_text(json.dumps(scene_to_json(scene), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Detection wire format (shared with the detector bridge)


def detections_to_wire(
    scene_id: str,
    fixation_index: int,
    frame: LayerFrame,
    dets: list[Detection],
    classes: ClassSet,
) -> dict:
    """One layer's detections as a wire document (layer-frame boxes)."""
    items = []
    for d in dets:
        scores = {
            classes.labels[k]: float(v) for k, v in enumerate(d.scores) if v > 0.0
        }
        items.append({"box": [d.box.x0, d.box.y0, d.box.x1, d.box.y1], "scores": scores})
    return {
        "scene_id": scene_id,
        "fixation_index": fixation_index,
        "layer": frame.index,
        "detections": items,
    }


def parse_wire_document(
    doc: dict, classes: ClassSet, base_side: int, levels: int
) -> tuple[str, int, int, list[Detection]]:
    """Strictly validate one wire document and build layer-frame detections.

    Boxes must stay within ``[0, base_side]``; scores must name known labels
    with finite non-negative values, at least one positive. Any violation
    raises :class:`BridgeProtocolError`.
    """

    def fail(msg: str):
        raise BridgeProtocolError(f"detection document: {msg}")

    if not isinstance(doc, dict):
        fail("not a JSON object")
    for key in ("scene_id", "fixation_index", "layer", "detections"):
        if key not in doc:
            fail(f"missing field {key!r}")
    layer = doc["layer"]
    if not isinstance(layer, int) or not (1 <= layer <= levels):
        fail(f"layer index {layer!r} outside [1, {levels}]")
    if not isinstance(doc["detections"], list):
        fail("'detections' must be a list")
    dets = []
    for item in doc["detections"]:
        if not isinstance(item, dict) or "box" not in item or "scores" not in item:
            fail("detection entries need 'box' and 'scores'")
        raw = item["box"]
        if not (isinstance(raw, list) and len(raw) == 4):
            fail(f"malformed box {raw!r}")
        x0, y0, x1, y1 = (float(v) for v in raw)
        if not all(np.isfinite([x0, y0, x1, y1])):
            fail("box coordinates must be finite")
        if x0 > x1 or y0 > y1:
            fail(f"inverted box {raw!r}")
        if x0 < 0 or y0 < 0 or x1 > base_side or y1 > base_side:
            fail(f"box {raw!r} exceeds layer bounds [0, {base_side}]")
        scores = np.zeros(classes.K, dtype=np.float64)
        if not isinstance(item["scores"], dict) or not item["scores"]:
            fail("'scores' must be a non-empty label->value map")
        for label, value in item["scores"].items():
            v = float(value)
            if not np.isfinite(v) or v < 0.0:
                fail(f"score for {label!r} must be finite and non-negative")
            scores[classes.index(label)] = v  # unknown label raises ConfigError
        if not np.any(scores > 0.0):
            fail("score map has no positive entry")
        dets.append(
            Detection(scores=scores, box=BBox(x0, y0, x1, y1, frame=f"layer:{layer}"),
                      source_layer=layer)
        )
    return str(doc["scene_id"]), int(doc["fixation_index"]), layer, dets


# ---------------------------------------------------------------------------
# Synthetic scene generation (for demos, batch runs, and the test corpus)


def _scene_rng(seed: int, scene_id: str) -> np.random.Generator:
    digest = hashlib.sha256(scene_id.encode("utf-8")).digest()
    return np.random.Generator(
        np.random.Philox(
            np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF,
                                    int.from_bytes(digest[:8], "little")])
        )
    )


def random_scene(
    seed: int,
    scene_id: str,
    image_height: int = 1050,
    image_width: int = 1680,
    classes: ClassSet | None = None,
    n_distractors: int = 6,
    size_range: tuple[float, float] = (50.0, 240.0),
    margin: int = 30,
) -> SceneSpec:
    """One reproducible target-present scene, objects placed uniformly."""
    classes = classes or ClassSet.default()
    rng = _scene_rng(seed, scene_id)

    def place(label: str) -> SceneObject:
        w, h = rng.uniform(*size_range, size=2)
        w = min(w, image_width - 2 * margin)
        h = min(h, image_height - 2 * margin)
        x0 = rng.uniform(margin, image_width - margin - w)
        y0 = rng.uniform(margin, image_height - margin - h)
        return SceneObject(label=label, box=BBox(x0, y0, x0 + w, y0 + h, frame="image"))

    labels = list(classes.labels)
    target = labels[int(rng.integers(len(labels)))]
    objects = [place(target)]
    for _ in range(n_distractors):
        objects.append(place(labels[int(rng.integers(len(labels)))]))
    scene = SceneSpec(
        scene_id=scene_id,
        image_height=image_height,
        image_width=image_width,
        target=target,
        objects=tuple(objects),
    )
    validate_scene(scene)
    return scene


def benchmark_scene(
    seed: int,
    scene_id: str,
    image_height: int = 1050,
    image_width: int = 1680,
    classes: ClassSet | None = None,
    n_distractors: int = 6,
    small_range: tuple[float, float] = (32.0, 60.0),
    large_range: tuple[float, float] = (90.0, 200.0),
    small_fraction: float = 0.5,
    center_sigma: float = 0.18,
    margin: int = 30,
) -> SceneSpec:
    """A scene from the resolution-sensitive benchmark distribution.

    Object sides come from a small/large mixture: the small mode sinks below
    the visibility floor once downsampled by 8x, so coarse outer layers
    cannot carry the search on their own. Placement is center-weighted
    (Gaussian with sigma ``center_sigma`` of each image side, clipped to the
    margins), the way photographs tend to frame their subjects.
    """
    classes = classes or ClassSet.default()
    rng = _scene_rng(seed, scene_id)
    sx, sy = center_sigma * image_width, center_sigma * image_height

    def place(label: str) -> SceneObject:
        mode = small_range if rng.random() < small_fraction else large_range
        w, h = rng.uniform(*mode, size=2)
        cx = np.clip(rng.normal(image_width / 2, sx), margin + w / 2,
                     image_width - margin - w / 2)
        cy = np.clip(rng.normal(image_height / 2, sy), margin + h / 2,
                     image_height - margin - h / 2)
        return SceneObject(
            label=label,
            box=BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, frame="image"),
        )

    labels = list(classes.labels)
    target = labels[int(rng.integers(len(labels)))]
    objects = [place(target)]
    for _ in range(n_distractors):
        objects.append(place(labels[int(rng.integers(len(labels)))]))
    scene = SceneSpec(
        scene_id=scene_id,
        image_height=image_height,
        image_width=image_width,
        target=target,
        objects=tuple(objects),
    )
    validate_scene(scene)
    return scene


def benchmark_corpus(seed: int, count: int, prefix: str = "scene", **kwargs) -> list[SceneSpec]:
    """``count`` benchmark scenes with zero-padded sequential ids."""
    return [benchmark_scene(seed, f"{prefix}_{i:04d}", **kwargs) for i in range(count)]
