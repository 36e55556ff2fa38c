"""Batch episodes, scanpath files, and the four comparison metrics.

Two seeds search the same scenes, standing in for a model and a reference
cohort. Scanpaths are compared as token strings (grid cells for SS/FED,
fixated labels for SemSS/SemFED), and the cumulative performance curve
counts how many episodes had found the target within t fixations.
"""

from pathlib import Path

from fovsearch import (
    DetectorModel,
    EpisodeConfig,
    GridGeometry,
    benchmark_corpus,
    cumulative_performance,
    run_episode,
    scanpath_pair_metrics,
    write_scanpaths_jsonl,
)
from fovsearch.metrics import write_cumulative_csv

OUT = Path(__file__).parent / "out" / "metrics"
OUT.mkdir(parents=True, exist_ok=True)

scenes = benchmark_corpus(seed=8, count=40, prefix="demo")
geom = GridGeometry(20, 32, 1050, 1680)

runs = {}
for name, seed in (("model", 101), ("reference", 202)):
    cfg = EpisodeConfig(detector=DetectorModel(rng_seed=seed))
    runs[name] = [run_episode(s, cfg) for s in scenes]
    write_scanpaths_jsonl(OUT / f"{name}.jsonl", runs[name])
    found = sum(p.found for p in runs[name])
    print(f"{name}: found {found}/{len(scenes)} targets within 6 fixations")

print("\nper-scene metrics, model vs reference (first five scenes):")
print(f"{'scene':>10} {'SS':>6} {'FED':>6} {'SemSS':>6} {'SemFED':>7}")
totals = {"SS": 0.0, "FED": 0.0, "SemSS": 0.0, "SemFED": 0.0}
for a, b in zip(runs["model"], runs["reference"]):
    scores = scanpath_pair_metrics(a, b, geom)
    for key, val in scores.as_dict().items():
        totals[key] += val
    if a.scene_id in {s.scene_id for s in scenes[:5]}:
        print(f"{a.scene_id:>10} {scores.ss:6.3f} {scores.fed:6.1f}"
              f" {scores.semss:6.3f} {scores.semfed:7.1f}")

n = len(scenes)
print("\nmeans over all scenes: "
      + ", ".join(f"{k}={v / n:.3f}" for k, v in totals.items()))

curve = cumulative_performance(runs["model"], max_fixations=6)
print("\ncumulative performance (model):")
for t, ratio in enumerate(curve):
    print(f"  within {t} fixations: {ratio:.2f}  " + "#" * int(40 * ratio))
write_cumulative_csv(OUT / "cumulative_model.csv", curve)
print(f"\nwrote {OUT}/model.jsonl, reference.jsonl, cumulative_model.csv")
