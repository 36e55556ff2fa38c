"""Run one full search episode and watch the gaze move.

The loop per fixation: foveate, detect on every layer (synthetic detector
here), confidence-filter, remap layer boxes to the image frame, fuse into
the belief grid, stop if the gaze sits on the target, otherwise inhibit the
fixated cell block and jump to the cell with the highest target expectation.
"""

import numpy as np

from fovsearch import (
    DetectorModel,
    EpisodeConfig,
    benchmark_scene,
    run_episode,
    run_random_episode,
)

scene = benchmark_scene(seed=21, scene_id="walkthrough")
print(f"scene {scene.scene_id}: {len(scene.objects)} objects, target = {scene.target!r}")
for obj in scene.objects:
    marker = " <-- target" if obj.label == scene.target else ""
    b = obj.box
    print(f"  {obj.label:<14} ({b.x0:6.1f},{b.y0:6.1f})..({b.x1:6.1f},{b.y1:6.1f}){marker}")

cfg = EpisodeConfig(
    levels=4,
    base_side=160,
    max_fixations=6,
    detector=DetectorModel(rng_seed=21),
)
path, traces = run_episode(scene, cfg, collect_trace=True)

target_k = cfg.classes.index(scene.target)
print(f"\nscanpath ({'found' if path.found else 'not found'}"
      + (f" at fixation {path.found_at}" if path.found else "") + "):")
for t, fix in enumerate(path.fixations):
    beta = np.asarray(traces[t]["beta"]).reshape(*cfg.grid_shape, cfg.classes.K)
    emap = beta[:, :, target_k] / beta.sum(axis=2)
    print(
        f"  f{t}: px={fix.px} cell={fix.cell} fixated={fix.label!r}"
        f"  max E[target]={emap.max():.4f}"
    )

random_path = run_random_episode(scene, cfg, seed=5)
print(
    f"\nuniform-random gaze on the same scene: "
    f"{'found at ' + str(random_path.found_at) if random_path.found else 'not found'}"
    f" in {len(random_path.fixations)} fixations"
)
