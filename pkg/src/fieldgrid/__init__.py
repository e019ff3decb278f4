"""Field instance extraction and accuracy assessment from segmentation masks."""

__version__ = "0.1.0"

from .edges import pseudoprobability, scharr_magnitude, scharr_pseudoprobability
from .extract import MaskTriple, ThresholdSet, extract, extract_cutoff, extract_watershed, vectorize
from .fusion import WindowPrediction, consensus, mosaic_windows, sliding_window_predict, window_origins
from .labels import FieldPolygon, LabelSet, make_boundary_mask, make_distance_labels, make_labels, rasterize_polygons
from .losses import multitask_loss, tanimoto, tanimoto_dual, tanimoto_dual_grad
from .metrics import object_metrics, pixel_metrics, wilcoxon_signed_rank
from .optimize import (
    Candidate,
    optimize_extent_threshold,
    optimize_instance_thresholds,
    pareto_front,
    search_thresholds,
    select_threshold,
)
from .raster import Raster, connected_components, euclidean_distance_transform, region_stats, standardize
from .synth import SceneSpec, degrade, generate_scene

__all__ = [
    "Candidate",
    "FieldPolygon",
    "LabelSet",
    "MaskTriple",
    "Raster",
    "SceneSpec",
    "ThresholdSet",
    "WindowPrediction",
    "connected_components",
    "consensus",
    "degrade",
    "euclidean_distance_transform",
    "extract",
    "extract_cutoff",
    "extract_watershed",
    "generate_scene",
    "make_boundary_mask",
    "make_distance_labels",
    "make_labels",
    "mosaic_windows",
    "multitask_loss",
    "object_metrics",
    "optimize_extent_threshold",
    "optimize_instance_thresholds",
    "pareto_front",
    "pixel_metrics",
    "pseudoprobability",
    "rasterize_polygons",
    "region_stats",
    "scharr_magnitude",
    "scharr_pseudoprobability",
    "search_thresholds",
    "select_threshold",
    "sliding_window_predict",
    "standardize",
    "tanimoto",
    "tanimoto_dual",
    "tanimoto_dual_grad",
    "vectorize",
    "wilcoxon_signed_rank",
    "window_origins",
]
