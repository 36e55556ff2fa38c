"""Fuse detection scores into a Dirichlet belief grid.

Each grid cell keeps one Dirichlet parameter vector over the known classes;
an observation folds in multiplicatively, normalized so that uniform scores
change nothing and rescaled scores change nothing. Repeated evidence for one
class drives that cell's categorical expectation up monotonically.
"""

import numpy as np

from fovsearch import (
    BBox,
    ClassSet,
    Detection,
    GridGeometry,
    deposit_detection,
    expectation,
    init_beliefs,
    kaplan_update,
    select_gaze,
)

# --- the update rule on a single parameter vector -------------------------
beta = np.array([1.0, 1.0])
scores = np.array([1.0, 0.0])
print("flat prior        ", beta, "-> expectation", beta / beta.sum())
beta = kaplan_update(beta, scores)
print("after S=(1,0)     ", beta, "-> expectation", beta / beta.sum())

print("uniform scores are a no-op:   ", kaplan_update(beta, np.array([3.0, 3.0])))
print("rescaling S leaves it alone:  ", kaplan_update(beta, 1000.0 * scores))

print("\nrepeated evidence concentrates belief:")
beta = np.ones(5)
scores = np.array([0.0, 0.0, 4.0, 0.0, 0.0])
for step in range(6):
    beta = kaplan_update(beta, scores)
    print(f"  round {step + 1}: E[class 2] = {beta[2] / beta.sum():.3f}")

# --- the same rule driven through the grid --------------------------------
classes = ClassSet(("bottle", "cup", "bowl", "chair"))
geom = GridGeometry(Y=6, X=8, image_height=600, image_width=800)
grid = init_beliefs(geom, classes)

cup_scores = np.array([1.0, 12.0, 1.0, 1.0])
det = Detection(
    scores=cup_scores,
    box=BBox(310, 210, 390, 280, frame="image"),
    source_layer=1,
)
deposit_detection(grid, det, geom)

print("\nE[cup] per cell after one detection near the grid center:")
for cy in range(geom.Y):
    row = " ".join(
        f"{expectation(grid, (cx, cy), classes.index('cup')):.3f}"
        for cx in range(geom.X)
    )
    print(" ", row)

print("next fixation (greedy argmax):", select_gaze(grid, classes.index("cup")))
