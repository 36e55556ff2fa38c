"""Dirichlet belief grid: fusion of detections and greedy gaze selection.

Each cell of a ``Y x X`` grid holds one Dirichlet parameter vector over the
``K`` recognizable classes. Detections deposit their (unnormalized) score
vectors into every cell their box overlaps; the per-cell categorical
expectation ``beta_k / sum(beta)`` then drives a greedy argmax over
non-inhibited cells to pick the next fixation. Inhibition of return marks a
3x3 block around every fixated cell for the rest of the episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OutOfBoundsError, SearchExhaustedError
from .fovea import BBox

# The 80 object categories shared by the stock detection checkpoints; used
# as the default class set wherever a scene does not name its own.
COCO80_LABELS: tuple[str, ...] = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
    "truck", "boat", "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag",
    "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon",
    "bowl", "banana", "apple", "sandwich", "orange", "broccoli", "carrot",
    "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
    "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
)


@dataclass(frozen=True)
class ClassSet:
    """The detector's label vocabulary; scores index into it positionally."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 2:
            raise ConfigError("a class set needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("class labels must be unique")

    @property
    def K(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown class label {label!r}") from None

    @classmethod
    def default(cls) -> "ClassSet":
        return cls(COCO80_LABELS)


@dataclass(frozen=True)
class GridGeometry:
    """A ``Y x X`` lattice of equal rectangular cells over the image."""

    Y: int
    X: int
    image_height: int
    image_width: int

    def __post_init__(self) -> None:
        if self.Y < 1 or self.X < 1:
            raise ConfigError("grid must have at least one cell per axis")
        if self.image_height < 1 or self.image_width < 1:
            raise ConfigError("image dimensions must be positive")

    @property
    def cell_width(self) -> float:
        return self.image_width / self.X

    @property
    def cell_height(self) -> float:
        return self.image_height / self.Y

    def cell_bounds(self, cell: tuple[int, int]) -> tuple[float, float, float, float]:
        """Pixel rectangle ``(x0, y0, x1, y1)`` of cell ``(cx, cy)``."""
        cx, cy = cell
        if not (0 <= cx < self.X and 0 <= cy < self.Y):
            raise OutOfBoundsError(f"cell {cell} outside {self.X}x{self.Y} grid")
        return (
            cx * self.cell_width,
            cy * self.cell_height,
            (cx + 1) * self.cell_width,
            (cy + 1) * self.cell_height,
        )

    def cell_of_pixel(self, px: tuple[float, float]) -> tuple[int, int]:
        """Cell containing a pixel; coordinates clamp onto the grid edge."""
        cx = int(px[0] // self.cell_width)
        cy = int(px[1] // self.cell_height)
        return (min(max(cx, 0), self.X - 1), min(max(cy, 0), self.Y - 1))


@dataclass
class BeliefGrid:
    """Per-cell Dirichlet parameters plus the episode's inhibition mask.

    Single-writer state: one search episode mutates one grid. ``beta`` has
    shape ``(Y, X, K)`` and stays strictly positive; ``ior`` is boolean.
    """

    beta: np.ndarray
    ior: np.ndarray
    zero_area_warnings: int = field(default=0)

    @property
    def Y(self) -> int:
        return self.beta.shape[0]

    @property
    def X(self) -> int:
        return self.beta.shape[1]

    @property
    def K(self) -> int:
        return self.beta.shape[2]


def init_beliefs(geom: GridGeometry, classes: ClassSet) -> BeliefGrid:
    """Maximum-entropy start: every parameter 1, nothing inhibited."""
    return BeliefGrid(
        beta=np.ones((geom.Y, geom.X, classes.K), dtype=np.float64),
        ior=np.zeros((geom.Y, geom.X), dtype=bool),
    )


def _check_scores(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise ConfigError(f"score vector must be 1-D, got shape {s.shape}")
    if not np.all(np.isfinite(s)) or np.any(s < 0.0):
        raise ConfigError("scores must be finite and non-negative")
    if not np.any(s > 0.0):
        raise ConfigError("score vector must have at least one positive entry")
    return s


def kaplan_update(beta: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Fold one score vector into a Dirichlet parameter vector.

    With ``D = sum_j beta_j * s_j``::

        beta_k' = beta_k * (1 + s_k / D) / (1 + min_i(s_i) / D)

    The rule is invariant to rescaling ``scores`` and leaves ``beta``
    unchanged for uniform scores. Rejects all-zero score vectors.
    """
    b = np.asarray(beta, dtype=np.float64)
    s = _check_scores(scores)
    if b.shape != s.shape:
        raise ConfigError(f"shape mismatch: beta {b.shape} vs scores {s.shape}")
    if np.any(b <= 0.0):
        raise ConfigError("Dirichlet parameters must be strictly positive")
    # (b * s).sum() rather than a dot product: the batched deposit reduces
    # along the same axis with the same pairwise algorithm, so both paths
    # stay bit-identical.
    denom = float((b * s).sum())
    return b * (1.0 + s / denom) / (1.0 + float(s.min()) / denom)


def overlapped_cells(
    box: BBox, geom: GridGeometry, min_overlap_frac: float = 0.0
) -> list[tuple[int, int]]:
    """Cells whose rectangle overlaps ``box`` with positive area.

    ``min_overlap_frac`` optionally requires the intersection to cover at
    least that fraction of the cell's own area (0 keeps the plain
    strictly-positive-overlap predicate).
    """
    if box.frame != "image":
        raise ConfigError(f"expected an image-frame box, got {box.frame!r}")
    cw, ch = geom.cell_width, geom.cell_height
    cx_lo = max(0, int(np.floor(box.x0 / cw)))
    cx_hi = min(geom.X - 1, int(np.ceil(box.x1 / cw)) - 1)
    cy_lo = max(0, int(np.floor(box.y0 / ch)))
    cy_hi = min(geom.Y - 1, int(np.ceil(box.y1 / ch)) - 1)
    floor_area = min_overlap_frac * cw * ch
    cells = []
    for cy in range(cy_lo, cy_hi + 1):
        for cx in range(cx_lo, cx_hi + 1):
            w = min(box.x1, (cx + 1) * cw) - max(box.x0, cx * cw)
            h = min(box.y1, (cy + 1) * ch) - max(box.y0, cy * ch)
            area = w * h
            if w > 0.0 and h > 0.0 and area > 0.0 and area >= floor_area:
                cells.append((cx, cy))
    return cells


def deposit_detection(
    grid: BeliefGrid,
    det,
    geom: GridGeometry,
    min_overlap_frac: float = 0.0,
) -> BeliefGrid:
    """Apply ``det.scores`` to every cell overlapped by ``det.box``.

    ``det`` only needs ``box`` (image frame, clipped) and ``scores``
    attributes. A zero-area box is a counted no-op. The same full score
    vector goes to every overlapped cell; the per-cell updates are
    independent, so they are computed in one vectorized pass that matches
    :func:`kaplan_update` elementwise.
    """
    box: BBox = det.box
    if box.area <= 0.0:
        grid.zero_area_warnings += 1
        return grid
    s = _check_scores(det.scores)
    if s.shape[0] != grid.K:
        raise ConfigError(f"score length {s.shape[0]} != grid K {grid.K}")
    cells = overlapped_cells(box, geom, min_overlap_frac)
    if not cells:
        return grid
    xs = np.array([c[0] for c in cells])
    ys = np.array([c[1] for c in cells])
    b = grid.beta[ys, xs]  # (M, K)
    denom = (b * s).sum(axis=1)  # (M,)
    grid.beta[ys, xs] = (
        b * (1.0 + s[None, :] / denom[:, None]) / (1.0 + float(s.min()) / denom)[:, None]
    )
    return grid


def expectation(grid: BeliefGrid, cell: tuple[int, int], k: int) -> float:
    """Posterior categorical mean of class ``k`` in ``cell``."""
    cx, cy = cell
    if not (0 <= cx < grid.X and 0 <= cy < grid.Y):
        raise OutOfBoundsError(f"cell {cell} outside {grid.X}x{grid.Y} grid")
    b = grid.beta[cy, cx]
    return float(b[k] / b.sum())


def expectation_map(grid: BeliefGrid, k: int) -> np.ndarray:
    """Class-``k`` expectation for every cell, shape ``(Y, X)``."""
    return grid.beta[:, :, k] / grid.beta.sum(axis=2)


def select_gaze(grid: BeliefGrid, k: int) -> tuple[int, int]:
    """Greedy argmax of class-``k`` expectation over non-inhibited cells.

    Ties break row-major (smallest y, then smallest x). Raises
    :class:`SearchExhaustedError` once every cell is inhibited.
    """
    if grid.ior.all():
        raise SearchExhaustedError("all grid cells are inhibited")
    emap = np.where(grid.ior, -np.inf, expectation_map(grid, k))
    flat = int(np.argmax(emap))
    cy, cx = divmod(flat, grid.X)
    return (cx, cy)


def apply_ior(grid: BeliefGrid, cell: tuple[int, int]) -> BeliefGrid:
    """Inhibit the 3x3 block around ``cell`` (clipped at the grid border)."""
    cx, cy = cell
    if not (0 <= cx < grid.X and 0 <= cy < grid.Y):
        raise OutOfBoundsError(f"cell {cell} outside {grid.X}x{grid.Y} grid")
    grid.ior[max(cy - 1, 0) : cy + 2, max(cx - 1, 0) : cx + 2] = True
    return grid


def grid_to_json(grid: BeliefGrid) -> dict:
    """Snapshot for debugging/plotting: row-major beta and 0/1 ior lists."""
    return {
        "Y": grid.Y,
        "X": grid.X,
        "K": grid.K,
        "beta": [float(v) for v in grid.beta.ravel()],
        "ior": [int(v) for v in grid.ior.ravel()],
    }


def grid_from_json(doc: dict) -> BeliefGrid:
    y, x, k = int(doc["Y"]), int(doc["X"]), int(doc["K"])
    beta = np.asarray(doc["beta"], dtype=np.float64).reshape(y, x, k)
    ior = np.asarray(doc["ior"], dtype=np.int64).reshape(y, x).astype(bool)
    if np.any(beta <= 0.0):
        raise ConfigError("belief snapshot contains non-positive parameters")
    return BeliefGrid(beta=beta, ior=ior)
