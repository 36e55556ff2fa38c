"""Drive the engine against an external detector over the file handshake.

In bridge mode the engine writes each fixation's layer PNGs plus a JSON
manifest into a job directory, then blocks until `done.json` appears and
reads the per-layer detections back. Here a stub responder thread plays the
detector role, answering every manifest with one fixed box; the real bridge
package does the same with an actual model behind it.
"""

import json
import tempfile
import threading
import time
from pathlib import Path

from fovsearch import BBox, BridgeHandle, EpisodeConfig, SceneObject, SceneSpec, run_episode

scene = SceneSpec(
    scene_id="bridge-demo",
    image_height=1050,
    image_width=1680,
    target="cup",
    objects=(SceneObject("cup", BBox(1200, 700, 1330, 830, frame="image")),),
)


def stub_detector(work_dir: Path, stop: threading.Event) -> None:
    served = set()
    while not stop.is_set():
        for manifest_path in sorted(work_dir.glob("*/manifest.json")):
            job = manifest_path.parent
            if job in served:
                continue
            try:
                manifest = json.loads(manifest_path.read_text())
            except (OSError, json.JSONDecodeError):
                continue
            docs = [
                {
                    "scene_id": manifest["scene_id"],
                    "fixation_index": manifest["fixation_index"],
                    "layer": layer["n"],
                    "detections": [
                        {"box": [60.0, 60.0, 100.0, 100.0], "scores": {"cup": 0.9}}
                    ],
                }
                for layer in manifest["layers"]
            ]
            (job / "detections.json").write_text(json.dumps(docs))
            (job / "done.json").write_text('{"status": "ok"}')
            served.add(job)
            print(f"  [stub] answered {job.name}")
        time.sleep(0.01)


with tempfile.TemporaryDirectory() as tmp:
    work_dir = Path(tmp)
    stop = threading.Event()
    thread = threading.Thread(target=stub_detector, args=(work_dir, stop))
    thread.start()
    try:
        cfg = EpisodeConfig(
            max_fixations=3,
            detector=BridgeHandle(work_dir=work_dir, timeout=30.0),
        )
        path = run_episode(scene, cfg)
    finally:
        stop.set()
        thread.join()

print(f"\nepisode over the bridge: {len(path.fixations)} fixations, found={path.found}")
for t, fix in enumerate(path.fixations):
    print(f"  f{t}: px={fix.px} cell={fix.cell}")
print("\n(the stub always reports the same box, so the gaze circles its cells)")
