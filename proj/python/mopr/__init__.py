"""Full-body motion reconstruction from head and hand tracking signals."""

from mopr._core import (
    MoprError,
    MotionClip,
    MotionPrior,
    SequenceModel,
    Skeleton,
    SparseEncoder,
    align_pelvis,
    fid,
    fk_positions,
    mpjpe_cm,
    mpjve_cm_per_s,
    rot6d_decode,
    rot6d_encode,
    slice_clip,
    synth_classes,
    synth_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "MoprError",
    "MotionClip",
    "MotionPrior",
    "SequenceModel",
    "Skeleton",
    "SparseEncoder",
    "align_pelvis",
    "fid",
    "fk_positions",
    "mpjpe_cm",
    "mpjve_cm_per_s",
    "rot6d_decode",
    "rot6d_encode",
    "slice_clip",
    "synth_classes",
    "synth_dataset",
]
