"""Scanpath comparison metrics and aggregate performance curves.

Scanpaths are compared as token strings, the start fixation dropped and the
rest truncated to a fixed length (6 by default). Spatial tokens are grid-cell
indices; semantic tokens are the fixated-object labels. Similarity comes
from global alignment (match-counting), dissimilarity from Levenshtein edit
distance; the Sem- variants run the same algorithms on label tokens.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .errors import ConfigError
from .semantics import GridGeometry
from .search import Scanpath

TRUNCATE_DEFAULT = 6


def tokenize_spatial(path: Scanpath, geom: GridGeometry, max_len: int = TRUNCATE_DEFAULT) -> list[int]:
    """Grid-cell token per post-start fixation, truncated to ``max_len``.

    Cells are recomputed from the fixation pixel so externally recorded
    scanpaths (arbitrary pixels) tokenize consistently; the linear token is
    ``cy * X + cx``. Repeated cells are kept as repeated tokens.
    """
    tokens = []
    for fix in path.fixations[1:]:
        cx, cy = geom.cell_of_pixel(fix.px)
        tokens.append(cy * geom.X + cx)
    return tokens[:max_len]


def tokenize_semantic(path: Scanpath, max_len: int = TRUNCATE_DEFAULT) -> list[str]:
    """Fixated-object label per post-start fixation (``"background"`` when none)."""
    return [fix.label for fix in path.fixations[1:]][:max_len]


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, sym_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, sym_b in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (0 if sym_a == sym_b else 1),
            )
        prev = cur
    return prev[len(b)]


def sequence_score(
    a: Sequence[Hashable],
    b: Sequence[Hashable],
    match: float = 1.0,
    mismatch: float = 0.0,
    gap: float = 0.0,
    normalization: str = "max",
) -> float:
    """Normalized global-alignment score.

    Dynamic program over all global alignments, maximizing the summed
    match/mismatch/gap scores (defaults count matches). Normalization "max"
    divides by the longer length; "sum" divides by the mean length. Two
    empty sequences score 1 by convention, empty vs non-empty scores 0.
    """
    if normalization not in ("max", "sum"):
        raise ConfigError(f"unknown normalization {normalization!r}")
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 1.0
    denom = float(max(la, lb)) if normalization == "max" else (la + lb) / 2.0
    score = np.zeros((la + 1, lb + 1))
    score[:, 0] = gap * np.arange(la + 1)
    score[0, :] = gap * np.arange(lb + 1)
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            diag = score[i - 1, j - 1] + (match if a[i - 1] == b[j - 1] else mismatch)
            score[i, j] = max(diag, score[i - 1, j] + gap, score[i, j - 1] + gap)
    return float(score[la, lb]) / denom


@dataclass(frozen=True)
class PairScores:
    ss: float
    fed: float
    semss: float
    semfed: float

    def as_dict(self) -> dict[str, float]:
        return {"SS": self.ss, "FED": self.fed, "SemSS": self.semss, "SemFED": self.semfed}


def scanpath_pair_metrics(
    a: Scanpath,
    b: Scanpath,
    geom: GridGeometry,
    max_len: int = TRUNCATE_DEFAULT,
    normalization: str = "max",
) -> PairScores:
    """All four pairwise metrics between two scanpaths."""
    sa, sb = tokenize_spatial(a, geom, max_len), tokenize_spatial(b, geom, max_len)
    ma, mb = tokenize_semantic(a, max_len), tokenize_semantic(b, max_len)
    return PairScores(
        ss=sequence_score(sa, sb, normalization=normalization),
        fed=float(edit_distance(sa, sb)),
        semss=sequence_score(ma, mb, normalization=normalization),
        semfed=float(edit_distance(ma, mb)),
    )


def cumulative_performance(paths: list[Scanpath], max_fixations: int | None = None) -> np.ndarray:
    """Fraction of episodes whose target was found within t fixations.

    Entry ``t`` counts paths with ``found_at <= t``; indices run from 0 to
    the largest post-start budget observed (or ``max_fixations``).
    """
    if not paths:
        raise ConfigError("cumulative performance needs at least one scanpath")
    if max_fixations is None:
        max_fixations = max(len(p.fixations) - 1 for p in paths)
        max_fixations = max(
            max_fixations,
            max((p.found_at for p in paths if p.found_at is not None), default=0),
        )
    hits = np.array(
        [p.found_at for p in paths if p.found and p.found_at is not None], dtype=np.int64
    )
    ts = np.arange(max_fixations + 1)
    return (hits[None, :] <= ts[:, None]).sum(axis=1) / len(paths)


@dataclass
class ConsistencyReport:
    """Within-cohort agreement: metric means over all subject pairs per scene."""

    means: dict[str, float]
    n_scenes: int
    n_pairs: int
    n_excluded: int


def human_consistency(
    paths_by_scene: dict[str, list[Scanpath]],
    geom_by_scene: dict[str, GridGeometry],
    max_len: int = TRUNCATE_DEFAULT,
) -> ConsistencyReport:
    """Average pairwise metrics across subjects, per scene then over scenes.

    Scenes with fewer than two scanpaths are excluded and counted.
    """
    per_scene: list[dict[str, float]] = []
    n_pairs = 0
    n_excluded = 0
    for scene_id in sorted(paths_by_scene):
        paths = paths_by_scene[scene_id]
        if len(paths) < 2:
            n_excluded += 1
            continue
        geom = geom_by_scene[scene_id]
        pair_vals = [
            scanpath_pair_metrics(a, b, geom, max_len).as_dict()
            for a, b in combinations(paths, 2)
        ]
        n_pairs += len(pair_vals)
        per_scene.append(
            {m: float(np.mean([pv[m] for pv in pair_vals])) for m in pair_vals[0]}
        )
    if not per_scene:
        return ConsistencyReport(means={}, n_scenes=0, n_pairs=0, n_excluded=n_excluded)
    means = {m: float(np.mean([sc[m] for sc in per_scene])) for m in per_scene[0]}
    return ConsistencyReport(
        means=means, n_scenes=len(per_scene), n_pairs=n_pairs, n_excluded=n_excluded
    )


@dataclass
class EvalReport:
    """Model-vs-reference means plus the model's cumulative curve."""

    means: dict[str, float]
    n_scenes: int
    n_pairs: int
    n_unmatched: int
    cumulative: np.ndarray


def evaluate_model(
    model_paths: list[Scanpath],
    reference_paths: list[Scanpath],
    geom_for: "callable",
    max_len: int = TRUNCATE_DEFAULT,
) -> EvalReport:
    """Compare one model scanpath per scene against all reference scanpaths.

    ``geom_for(scene_id)`` supplies the tokenization grid. Scenes present on
    only one side are skipped and counted in ``n_unmatched``.
    """
    by_scene_model: dict[str, list[Scanpath]] = {}
    for p in model_paths:
        by_scene_model.setdefault(p.scene_id, []).append(p)
    by_scene_ref: dict[str, list[Scanpath]] = {}
    for p in reference_paths:
        by_scene_ref.setdefault(p.scene_id, []).append(p)

    shared = sorted(set(by_scene_model) & set(by_scene_ref))
    n_unmatched = len(set(by_scene_model) ^ set(by_scene_ref))
    per_scene = []
    n_pairs = 0
    for scene_id in shared:
        geom = geom_for(scene_id)
        vals = [
            scanpath_pair_metrics(m, r, geom, max_len).as_dict()
            for m in by_scene_model[scene_id]
            for r in by_scene_ref[scene_id]
        ]
        n_pairs += len(vals)
        per_scene.append({k: float(np.mean([v[k] for v in vals])) for k in vals[0]})
    means = (
        {k: float(np.mean([sc[k] for sc in per_scene])) for k in per_scene[0]}
        if per_scene
        else {}
    )
    cumulative = (
        cumulative_performance([p for p in model_paths if p.scene_id in set(shared)])
        if shared
        else np.zeros(1)
    )
    return EvalReport(
        means=means,
        n_scenes=len(shared),
        n_pairs=n_pairs,
        n_unmatched=n_unmatched,
        cumulative=cumulative,
    )


def write_metrics_csv(path: str | Path, means: dict[str, float], n_pairs: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "n_pairs"])
        for metric in sorted(means):
            writer.writerow([metric, f"{means[metric]:.6f}", n_pairs])


def write_cumulative_csv(path: str | Path, ratios: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "ratio"])
        for t, ratio in enumerate(ratios):
            writer.writerow([t, f"{ratio:.6f}"])
