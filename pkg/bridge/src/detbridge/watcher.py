"""Job discovery and processing over the file handshake.

The engine drops one directory per fixation: ``layer_<n>.png`` files plus a
``manifest.json`` naming the layers. The bridge answers with
``detections.json`` (a list of per-layer documents in the shared wire
format, boxes in layer coordinates) and then a ``done.json`` marker. A job
with an existing marker is never reprocessed, so re-delivery is a no-op.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class JobError(Exception):
    """The job directory violates the handshake contract."""


@dataclass
class BridgeJob:
    """One fixation's worth of work, as found on disk."""

    job_dir: Path
    manifest: dict
    layer_paths: list[Path]

    @property
    def base_side(self) -> int:
        return int(self.manifest["base_side"])


def read_job(job_dir: Path) -> BridgeJob:
    """Load and validate a job directory against its manifest."""
    manifest_path = job_dir / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise JobError(f"unreadable manifest in {job_dir}: {exc}") from exc
    for key in ("levels", "base_side", "layers"):
        if key not in manifest:
            raise JobError(f"manifest in {job_dir} lacks {key!r}")
    layers = manifest["layers"]
    if len(layers) != int(manifest["levels"]):
        raise JobError(f"manifest lists {len(layers)} layers for levels={manifest['levels']}")
    layer_paths = []
    for layer in layers:
        path = job_dir / f"layer_{layer['n']}.png"
        if not path.exists():
            raise JobError(f"missing {path.name} in {job_dir}")
        layer_paths.append(path)
    return BridgeJob(job_dir=job_dir, manifest=manifest, layer_paths=layer_paths)


def _clip_box(box, side: float):
    x0, y0, x1, y1 = box
    x0, x1 = sorted((min(max(x0, 0.0), side), min(max(x1, 0.0), side)))
    y0, y1 = sorted((min(max(y0, 0.0), side), min(max(y1, 0.0), side)))
    if x1 <= x0 or y1 <= y0:
        return None
    return [x0, y0, x1, y1]


def process_job(job: BridgeJob, backend, threshold: float) -> list[dict]:
    """Run the backend on every layer and build the per-layer documents.

    A failing inference yields an empty detection list plus an ``error``
    field for that layer instead of sinking the whole job.
    """
    scene_id = job.manifest.get("scene_id", "")
    fixation_index = int(job.manifest.get("fixation_index", 0))
    side = float(job.base_side)
    docs = []
    for layer, path in zip(job.manifest["layers"], job.layer_paths):
        doc = {
            "scene_id": scene_id,
            "fixation_index": fixation_index,
            "layer": int(layer["n"]),
            "detections": [],
        }
        try:
            image = np.asarray(Image.open(path))
            raw = backend.detect(image)
        except Exception as exc:
            doc["error"] = f"{type(exc).__name__}: {exc}"
            docs.append(doc)
            continue
        for box, scores in raw:
            best = max(scores.values(), default=0.0)
            if best < threshold:
                continue
            clipped = _clip_box(box, side)
            if clipped is None:
                continue
            doc["detections"].append({"box": clipped, "scores": dict(scores)})
        docs.append(doc)
    return docs


def _write_atomic(path: Path, payload: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload)
    tmp.replace(path)


def answer_job(job_dir: Path, backend, threshold: float) -> None:
    """Produce detections.json then the done.json marker for one job."""
    try:
        docs = process_job(read_job(job_dir), backend, threshold)
        status = {"status": "ok", "layers": len(docs)}
    except JobError as exc:
        docs = []
        status = {"status": "error", "error": str(exc)}
    _write_atomic(job_dir / "detections.json", json.dumps(docs))
    _write_atomic(job_dir / "done.json", json.dumps(status))


def pending_jobs(work_dir: Path) -> list[Path]:
    """Job directories with a manifest but no done marker, oldest name first."""
    dirs = set()
    for manifest in work_dir.glob("*/manifest.json"):
        dirs.add(manifest.parent)
    if (work_dir / "manifest.json").exists():
        dirs.add(work_dir)
    return sorted(d for d in dirs if not (d / "done.json").exists())


def serve(
    work_dir: str | Path,
    backend,
    threshold: float = 0.01,
    once: bool = False,
    poll: float = 0.05,
    stop_event: threading.Event | None = None,
) -> int:
    """Single-consumer loop; returns the number of jobs answered.

    With ``once`` the loop waits for the first pending job, answers it, and
    returns. Otherwise it runs until ``stop_event`` is set.
    """
    work = Path(work_dir)
    if not work.is_dir():
        raise JobError(f"work directory {work} does not exist")
    answered = 0
    while stop_event is None or not stop_event.is_set():
        for job_dir in pending_jobs(work):
            answer_job(job_dir, backend, threshold)
            answered += 1
            if once:
                return answered
        time.sleep(poll)
    return answered
