"""Foveated visual search: multi-scale pyramids, Dirichlet belief fusion,
greedy gaze selection, and scanpath metrics."""

from .errors import (
    BridgeProtocolError,
    BridgeTimeoutError,
    ConfigError,
    FovSearchError,
    OutOfBoundsError,
    SearchExhaustedError,
)
from .fovea import (
    BBox,
    FoveaConfig,
    LayerFrame,
    PRESETS,
    build_pyramid,
    image_to_layer,
    layer_frames,
    layer_side,
    pixel_cost,
    remap_bbox,
    resize_bilinear,
    write_layers,
)
from .metrics import (
    cumulative_performance,
    edit_distance,
    human_consistency,
    scanpath_pair_metrics,
    sequence_score,
    tokenize_semantic,
    tokenize_spatial,
)
from .search import (
    BridgeHandle,
    EpisodeConfig,
    Fixation,
    Scanpath,
    cell_center,
    fixated_label,
    load_scanpaths_jsonl,
    oracle_hit,
    run_episode,
    run_random_episode,
    write_scanpaths_jsonl,
)
from .semantics import (
    BeliefGrid,
    COCO80_LABELS,
    ClassSet,
    GridGeometry,
    apply_ior,
    deposit_detection,
    expectation,
    expectation_map,
    grid_from_json,
    grid_to_json,
    init_beliefs,
    kaplan_update,
    overlapped_cells,
    select_gaze,
)
from .simdet import (
    Detection,
    DetectorModel,
    SceneObject,
    SceneSpec,
    benchmark_corpus,
    benchmark_scene,
    detect_layer,
    detections_to_wire,
    filter_detections,
    load_scene,
    parse_wire_document,
    random_scene,
    save_scene,
    scene_from_json,
    scene_to_json,
)

__version__ = "0.1.0"
