"""Grid detector, target assignment and box decoding."""

from sparsedet.detector.assign import TargetAssignment, assign_targets, cxcywh_to_xyxy
from sparsedet.detector.checkpoint import Checkpoint, CheckpointNotFoundError, load_checkpoint, save_checkpoint
from sparsedet.detector.decode import decode_boxes, side_distances, two_bin_logits
from sparsedet.detector.network import GridDetector, GridGeometry, PredictionGrid, ShapeMismatchError

__all__ = [
    "Checkpoint",
    "CheckpointNotFoundError",
    "GridDetector",
    "GridGeometry",
    "PredictionGrid",
    "ShapeMismatchError",
    "TargetAssignment",
    "assign_targets",
    "cxcywh_to_xyxy",
    "decode_boxes",
    "load_checkpoint",
    "save_checkpoint",
    "side_distances",
    "two_bin_logits",
]
