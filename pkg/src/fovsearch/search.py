"""Search episode engine: foveate, detect, fuse, select, inhibit, repeat.

An episode starts at the image center, terminates when the gaze lands inside
a target instance (oracle) or the fixation budget runs out, and records the
resulting scanpath. Detections come either from the in-process synthetic
detector or, in bridge mode, from an external process speaking the layer
PNG + manifest / detections JSON + done.json file handshake.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BridgeProtocolError, BridgeTimeoutError, ConfigError, SearchExhaustedError
from .fovea import FoveaConfig, LayerFrame, build_pyramid, layer_frames, remap_bbox, write_layers
from .semantics import (
    ClassSet,
    GridGeometry,
    apply_ior,
    deposit_detection,
    expectation_map,
    grid_to_json,
    init_beliefs,
    select_gaze,
)
from .simdet import (
    Detection,
    DetectorModel,
    SceneSpec,
    detect_layer,
    filter_detections,
    parse_wire_document,
)


@dataclass(frozen=True)
class Fixation:
    px: tuple[int, int]
    cell: tuple[int, int]
    label: str


@dataclass
class Scanpath:
    scene_id: str
    target: str
    fixations: list[Fixation]
    found: bool
    found_at: int | None
    exhausted: bool = False
    subject: str | None = None


@dataclass(frozen=True)
class BridgeHandle:
    """File-handshake endpoint for an external detector process."""

    work_dir: Path
    timeout: float = 120.0
    poll: float = 0.02


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything one episode needs beyond the scene itself.

    ``max_fixations`` bounds post-start fixations. ``confidence_tau``, when
    set, additionally stops the episode once the target-class expectation
    reaches tau somewhere; by default only the oracle terminates the search.
    """

    levels: int = 4
    base_side: int = 160
    grid_shape: tuple[int, int] = (20, 32)  # (Y, X)
    max_fixations: int = 6
    threshold: float = 0.01
    detector: DetectorModel | BridgeHandle = field(default_factory=DetectorModel)
    classes: ClassSet = field(default_factory=ClassSet.default)
    min_overlap_frac: float = 0.0
    confidence_tau: float | None = None

    def __post_init__(self) -> None:
        if self.max_fixations < 1:
            raise ConfigError("max_fixations must be >= 1")
        if self.confidence_tau is not None and not (0.0 < self.confidence_tau <= 1.0):
            raise ConfigError("confidence_tau must lie in (0, 1]")

    def fovea_for(self, scene: SceneSpec) -> FoveaConfig:
        return FoveaConfig(self.levels, self.base_side, scene.image_height, scene.image_width)

    def grid_for(self, scene: SceneSpec) -> GridGeometry:
        return GridGeometry(*self.grid_shape, scene.image_height, scene.image_width)


def cell_center(cell: tuple[int, int], geom: GridGeometry) -> tuple[int, int]:
    """Center-most pixel of a cell: floor of the real-valued center."""
    x0, y0, x1, y1 = geom.cell_bounds(cell)
    return (int((x0 + x1) / 2.0), int((y0 + y1) / 2.0))


def oracle_hit(px: tuple[int, int], scene: SceneSpec) -> bool:
    """True iff the pixel lies inside (inclusive) a target-class box."""
    x, y = px
    return any(
        o.label == scene.target
        and o.box.x0 <= x <= o.box.x1
        and o.box.y0 <= y <= o.box.y1
        for o in scene.objects
    )


def fixated_label(px: tuple[int, int], scene: SceneSpec) -> str:
    """Label of the smallest ground-truth box containing the pixel."""
    x, y = px
    best = None
    for o in scene.objects:
        if o.box.x0 <= x <= o.box.x1 and o.box.y0 <= y <= o.box.y1:
            if best is None or o.box.area < best.box.area:
                best = o
    return best.label if best is not None else "background"


def _fusion_order(per_layer: list[tuple[LayerFrame, list[Detection]]]) -> list[tuple[LayerFrame, Detection]]:
    # Innermost layer first; within a layer, descending max normalized score
    # (stable). The update rule is order-dependent, so this order is pinned.
    ordered = []
    for frame, dets in sorted(per_layer, key=lambda fd: fd[0].index):
        ranked = sorted(dets, key=lambda d: -d.max_confidence)
        ordered.extend((frame, d) for d in ranked)
    return ordered


def _sim_detect(scene, frames, detector, classes):
    return [(f, detect_layer(scene, f, detector, classes)) for f in frames]


def run_episode(
    scene: SceneSpec,
    cfg: EpisodeConfig,
    collect_trace: bool = False,
) -> Scanpath | tuple[Scanpath, list[dict]]:
    """Run one search episode and return its scanpath.

    One iteration per fixation: inhibit the fixated cell, gather per-layer
    detections, confidence-filter, remap each box to the image frame
    (dropping boxes whose clipped area is zero), fuse in pinned order, then
    stop on an oracle hit or shift the gaze to the argmax cell. With
    ``collect_trace`` also returns one belief snapshot per fixation.
    """
    fcfg = cfg.fovea_for(scene)
    geom = cfg.grid_for(scene)
    grid = init_beliefs(geom, cfg.classes)
    target_k = cfg.classes.index(scene.target)
    sim_mode = isinstance(cfg.detector, DetectorModel)

    px = (scene.image_width // 2, scene.image_height // 2)
    cell = geom.cell_of_pixel(px)
    fixations: list[Fixation] = []
    traces: list[dict] = []
    found = False
    found_at: int | None = None
    exhausted = False

    for t in range(cfg.max_fixations + 1):
        fixations.append(Fixation(px=px, cell=cell, label=fixated_label(px, scene)))
        apply_ior(grid, cell)

        if sim_mode:
            frames = layer_frames(px, fcfg)
            per_layer = _sim_detect(scene, frames, cfg.detector, cfg.classes)
        else:
            per_layer = _bridge_detect(scene, px, t, fcfg, cfg)

        fused = []
        for frame, dets in per_layer:
            remapped = []
            for det in filter_detections(dets, cfg.threshold):
                box, _ = remap_bbox(
                    det.box, px, frame.index, cfg.base_side,
                    scene.image_height, scene.image_width,
                )
                if box.area > 0.0:
                    remapped.append(Detection(det.scores, box, det.source_layer))
            fused.append((frame, remapped))

        for _, det in _fusion_order(fused):
            deposit_detection(grid, det, geom, cfg.min_overlap_frac)

        if collect_trace:
            traces.append({"t": t, "px": list(px), "cell": list(cell), **grid_to_json(grid)})

        if oracle_hit(px, scene):
            found = True
            found_at = t
            break
        if cfg.confidence_tau is not None:
            if float(expectation_map(grid, target_k).max()) >= cfg.confidence_tau:
                break
        if t == cfg.max_fixations:
            break
        try:
            cell = select_gaze(grid, target_k)
        except SearchExhaustedError:
            exhausted = True
            break
        px = cell_center(cell, geom)

    path = Scanpath(
        scene_id=scene.scene_id,
        target=scene.target,
        fixations=fixations,
        found=found,
        found_at=found_at,
        exhausted=exhausted,
    )
    return (path, traces) if collect_trace else path


def run_random_episode(scene: SceneSpec, cfg: EpisodeConfig, seed: int) -> Scanpath:
    """Uniform-random gaze baseline under the same oracle, IOR, and budget."""
    geom = cfg.grid_for(scene)
    digest = hashlib.sha256(scene.scene_id.encode("utf-8")).digest()
    rng = np.random.Generator(
        np.random.Philox(
            np.random.SeedSequence(
                [seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little"), 0xBA5E]
            )
        )
    )
    grid = init_beliefs(geom, cfg.classes)
    px = (scene.image_width // 2, scene.image_height // 2)
    cell = geom.cell_of_pixel(px)
    fixations: list[Fixation] = []
    found = False
    found_at = None
    exhausted = False
    for t in range(cfg.max_fixations + 1):
        fixations.append(Fixation(px=px, cell=cell, label=fixated_label(px, scene)))
        apply_ior(grid, cell)
        if oracle_hit(px, scene):
            found = True
            found_at = t
            break
        if t == cfg.max_fixations:
            break
        open_cells = np.argwhere(~grid.ior)  # rows of (cy, cx)
        if open_cells.shape[0] == 0:
            exhausted = True
            break
        cy, cx = open_cells[int(rng.integers(open_cells.shape[0]))]
        cell = (int(cx), int(cy))
        px = cell_center(cell, geom)
    return Scanpath(scene.scene_id, scene.target, fixations, found, found_at, exhausted)


# ---------------------------------------------------------------------------
# Scanpath persistence (JSON lines, one episode per line)


def scanpath_to_json(path: Scanpath) -> dict:
    doc: dict = {
        "scene_id": path.scene_id,
        "target": path.target,
        "found": path.found,
    }
    if path.found_at is not None:
        doc["found_at"] = path.found_at
    doc["fixations"] = [
        {"px": list(f.px), "cell": list(f.cell), "label": f.label}
        for f in path.fixations
    ]
    if path.exhausted:
        doc["exhausted"] = True
    if path.subject is not None:
        doc["subject"] = path.subject
    return doc


def scanpath_from_json(doc: dict) -> Scanpath:
    try:
        fixations = [
            Fixation(
                px=(int(f["px"][0]), int(f["px"][1])),
                cell=(int(f["cell"][0]), int(f["cell"][1])) if "cell" in f else (0, 0),
                label=str(f.get("label", "background")),
            )
            for f in doc["fixations"]
        ]
        return Scanpath(
            scene_id=str(doc["scene_id"]),
            target=str(doc["target"]),
            fixations=fixations,
            found=bool(doc["found"]),
            found_at=int(doc["found_at"]) if doc.get("found_at") is not None else None,
            exhausted=bool(doc.get("exhausted", False)),
            subject=str(doc["subject"]) if "subject" in doc else None,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed scanpath record: {exc}") from exc


def write_scanpaths_jsonl(path: str | Path, paths: list[Scanpath]) -> None:
    with open(path, "w") as fh:
        for p in paths:
            fh.write(json.dumps(scanpath_to_json(p), separators=(",", ":")) + "\n")


def load_scanpaths_jsonl(path: str | Path) -> list[Scanpath]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(scanpath_from_json(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Bridge mode: hand each fixation's layers to an external detector process


def _bridge_detect(
    scene: SceneSpec,
    px: tuple[int, int],
    fixation_index: int,
    fcfg: FoveaConfig,
    cfg: EpisodeConfig,
) -> list[tuple[LayerFrame, list[Detection]]]:
    handle: BridgeHandle = cfg.detector
    raster = _scene_raster(scene)
    pyramid = build_pyramid(raster, px, fcfg)
    job_dir = Path(handle.work_dir) / f"{scene.scene_id}_fix{fixation_index:03d}"
    write_layers(
        job_dir, pyramid, px, fcfg,
        extra={"scene_id": scene.scene_id, "fixation_index": fixation_index},
    )
    done = job_dir / "done.json"
    deadline = time.monotonic() + handle.timeout
    while not done.exists():
        if time.monotonic() > deadline:
            raise BridgeTimeoutError(f"no done.json in {job_dir} after {handle.timeout}s")
        time.sleep(handle.poll)
    docs = json.loads((job_dir / "detections.json").read_text())
    if not isinstance(docs, list) or len(docs) != fcfg.levels:
        raise BridgeProtocolError(
            f"expected {fcfg.levels} per-layer documents, got "
            f"{len(docs) if isinstance(docs, list) else type(docs).__name__}"
        )
    by_layer: dict[int, list[Detection]] = {}
    for doc in docs:
        sid, fidx, layer, dets = parse_wire_document(
            doc, cfg.classes, cfg.base_side, fcfg.levels
        )
        if sid != scene.scene_id or fidx != fixation_index:
            raise BridgeProtocolError(
                f"document for ({sid}, {fidx}) delivered to ({scene.scene_id}, {fixation_index})"
            )
        if layer in by_layer:
            raise BridgeProtocolError(f"duplicate document for layer {layer}")
        by_layer[layer] = dets
    frames = [frame for frame, _ in pyramid]
    if sorted(by_layer) != [f.index for f in frames]:
        raise BridgeProtocolError(f"layer set {sorted(by_layer)} does not match manifest")
    return [(frame, by_layer[frame.index]) for frame in frames]


def _scene_raster(scene: SceneSpec) -> np.ndarray:
    if scene.image_path is not None:
        from PIL import Image

        arr = np.asarray(Image.open(scene.image_path).convert("RGB"))
        if arr.shape[:2] != (scene.image_height, scene.image_width):
            raise ConfigError(
                f"{scene.scene_id}: raster {arr.shape[:2]} does not match scene dims"
            )
        return arr
    # No backing image: feed a blank raster so the handshake still runs.
    return np.zeros((scene.image_height, scene.image_width), dtype=np.uint8)
