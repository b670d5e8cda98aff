"""Objectness heatmaps, GrabCut localization and box utilities backed by a C++ core."""

from ._core import (
    MasonError,
    bicubic_upscale,
    box_iou,
    fit_gmm,
    generate_proposals,
    grabcut,
    largest_region_bbox,
    localize,
    mask_iou,
    max_flow,
    mean_iou,
    normalize,
    objectness,
    read_feature_stack,
    recall_at,
    stratify,
    sum_activations,
    write_feature_stack,
)

__all__ = [
    "MasonError",
    "bicubic_upscale",
    "box_iou",
    "fit_gmm",
    "generate_proposals",
    "grabcut",
    "largest_region_bbox",
    "localize",
    "mask_iou",
    "max_flow",
    "mean_iou",
    "normalize",
    "objectness",
    "read_feature_stack",
    "recall_at",
    "stratify",
    "sum_activations",
    "write_feature_stack",
]
