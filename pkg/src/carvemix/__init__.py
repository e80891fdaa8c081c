"""Lesion-aware synthesis of annotated 3D volumes.

Combines pairs of annotated volumes three ways: carving a lesion-shaped
region from a donor into a host (with a matching annotation), and the
mixup/cutmix blending baselines. Ships an exact signed Euclidean distance
transform, deterministic NIfTI I/O, and a seeded offline dataset generator.
"""

from .baselines import CutMixSpec, MixupSpec, cutmix_pair, mixup_pair
from .carve import CarveSpec, carve_roi, carvemix_pair, lambda_bounds, sample_lambda
from .distance import (
    DistanceUnits,
    SignedDistanceField,
    brute_force_signed_distance,
    min_distance,
    signed_distance,
)
from .errors import (
    CarveMixError,
    ConfigError,
    CorruptHeader,
    DegenerateLesion,
    EmptyMask,
    EmptyROI,
    FullMask,
    GridTooLarge,
    IoError,
    NoEligibleDonor,
    NonBinaryLabel,
    NonFiniteData,
    ShapeMismatch,
    SpacingMismatch,
    UnsupportedDatatype,
)
from .generator import (
    GenerationConfig,
    GenerationManifest,
    RosterEntry,
    build_roster,
    dataset_stats,
    derive_sample_seed,
    generate_dataset,
    validate_roster,
)
from .grid import (
    AnnotatedSample,
    GridShape,
    LabelMask,
    SoftLabelMask,
    Spacing,
    Volume3D,
    elementwise_mix,
    elementwise_mix_labels,
)
from .nifti import read_mask, read_volume, write_mask, write_soft_mask, write_volume

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSample",
    "CarveMixError",
    "CarveSpec",
    "ConfigError",
    "CorruptHeader",
    "CutMixSpec",
    "DegenerateLesion",
    "DistanceUnits",
    "EmptyMask",
    "EmptyROI",
    "FullMask",
    "GenerationConfig",
    "GenerationManifest",
    "GridShape",
    "GridTooLarge",
    "IoError",
    "LabelMask",
    "MixupSpec",
    "NoEligibleDonor",
    "NonBinaryLabel",
    "NonFiniteData",
    "RosterEntry",
    "ShapeMismatch",
    "SignedDistanceField",
    "SoftLabelMask",
    "Spacing",
    "SpacingMismatch",
    "UnsupportedDatatype",
    "Volume3D",
    "brute_force_signed_distance",
    "build_roster",
    "carve_roi",
    "carvemix_pair",
    "cutmix_pair",
    "dataset_stats",
    "derive_sample_seed",
    "elementwise_mix",
    "elementwise_mix_labels",
    "generate_dataset",
    "lambda_bounds",
    "min_distance",
    "mixup_pair",
    "read_mask",
    "read_volume",
    "sample_lambda",
    "signed_distance",
    "validate_roster",
    "write_mask",
    "write_soft_mask",
    "write_volume",
]
