"""Compare the named pyramid presets on the same scene corpus.

Larger base sides buy sharper peripheral layers at a higher pixel cost; the
ordering of cumulative performance across presets, and the gap to the
uniform-random gaze baseline, mirror the trade-off this package is built to
measure. Expect a couple of minutes of output-free crunching on slow boxes.
"""

from fovsearch import (
    DetectorModel,
    EpisodeConfig,
    FoveaConfig,
    PRESETS,
    benchmark_corpus,
    pixel_cost,
    run_episode,
    run_random_episode,
)

N_SCENES = 120
scenes = benchmark_corpus(seed=21, count=N_SCENES, prefix="abl")

print(f"{N_SCENES} scenes, budget 6 fixations, default synthetic detector\n")
print(f"{'preset':>7} {'pixels/fixation':>16} {'% of image':>11} {'success@6':>10}")

for name in sorted(PRESETS, key=lambda p: PRESETS[p][0] * PRESETS[p][1] ** 2):
    levels, base = PRESETS[name]
    cfg = EpisodeConfig(levels=levels, base_side=base,
                        detector=DetectorModel(rng_seed=77))
    found = sum(run_episode(s, cfg).found for s in scenes)
    absolute, pct = pixel_cost(FoveaConfig(levels, base, 1050, 1680))
    print(f"{name:>7} {absolute:>16} {pct:>10.2f}% {found / N_SCENES:>10.3f}")

baseline_cfg = EpisodeConfig()
random_found = sum(run_random_episode(s, baseline_cfg, 77).found for s in scenes)
print(f"{'random':>7} {'-':>16} {'-':>11} {random_found / N_SCENES:>10.3f}")
