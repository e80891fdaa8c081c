"""In-process bindings for training pipelines.

Five functions mirroring the core operations, taking caller-owned contiguous
3-D numeric buffers (plus a spacing triple) instead of the core's domain
types, so a data loader can augment without shelling out to the CLI.

Contracts:
  * buffers are validated at the boundary (3-D, contiguous, binary labels)
    and are NEVER mutated; conforming float32/uint8 inputs are wrapped
    without copying;
  * seeds are explicit arguments -- ambient RNG state is never consulted;
  * results are bit-identical to the CLI outputs for the same seed and
    inputs, and safe to call from multiple threads.
"""

from __future__ import annotations

import numpy as np

from carvemix import (
    AnnotatedSample,
    DistanceUnits,
    GenerationConfig,
    LabelMask,
    NonBinaryLabel,
    Volume3D,
    build_roster,
    carvemix_pair,
    cutmix_pair,
    generate_dataset,
    mixup_pair,
    signed_distance,
)
from carvemix.baselines import DEFAULT_MIXUP_ALPHA

__version__ = "0.1.0"

__all__ = [
    "bind_carvemix",
    "bind_cutmix",
    "bind_generate_dataset",
    "bind_mixup",
    "bind_signed_distance",
]

_UNITS = {"voxel": DistanceUnits.VOXEL, "mm": DistanceUnits.MM}


def _units(value) -> DistanceUnits:
    if isinstance(value, DistanceUnits):
        return value
    try:
        return _UNITS[value]
    except KeyError:
        raise ValueError(f"units must be 'voxel' or 'mm', got {value!r}") from None


def _check_view(arr, name: str) -> np.ndarray:
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be a numpy array, got {type(arr).__name__}")
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3-D, got ndim={arr.ndim}")
    if not arr.flags.c_contiguous:
        raise ValueError(f"{name} must be C-contiguous")
    if arr.dtype.kind not in "uif":
        raise TypeError(f"{name} must be numeric, got dtype={arr.dtype}")
    return arr


def _image(arr, spacing, name: str) -> Volume3D:
    arr = _check_view(arr, name)
    return Volume3D.from_array(arr, spacing)


def _label(arr, spacing, name: str) -> LabelMask:
    arr = _check_view(arr, name)
    if not np.logical_or(arr == 0, arr == 1).all():
        bad = np.unique(arr[np.logical_and(arr != 0, arr != 1)])[:8]
        raise NonBinaryLabel(f"{name} contains values other than 0/1, e.g. {bad.tolist()}")
    return LabelMask.from_array(arr, spacing)


def _sample(image, label, spacing, tag: str) -> AnnotatedSample:
    return AnnotatedSample(
        image=_image(image, spacing, f"{tag} image"),
        label=_label(label, spacing, f"{tag} label"),
        id=tag,
    )


def bind_carvemix(
    donor_image,
    donor_label,
    host_image,
    host_label,
    seed: int,
    units="voxel",
    spacing=(1.0, 1.0, 1.0),
    lam: float | None = None,
):
    """Carve the donor lesion into the host; returns (image, label, record).

    The image comes back float32, the label uint8, both freshly allocated.
    `lam` forces the carve threshold instead of sampling it.
    """
    donor = _sample(donor_image, donor_label, spacing, "donor")
    host = _sample(host_image, host_label, spacing, "host")
    rng = np.random.default_rng(seed)
    image, label, spec = carvemix_pair(donor, host, rng, units=_units(units), lam=lam, seed=seed)
    record = {"method": "carvemix", "seed": seed}
    record.update(spec.to_record())
    return image.data, label.data, record


def bind_mixup(
    a_image,
    a_label,
    b_image,
    b_label,
    seed: int,
    alpha: float = DEFAULT_MIXUP_ALPHA,
    spacing=(1.0, 1.0, 1.0),
    lam: float | None = None,
):
    """Blend two samples; returns (image, soft label, record), both float32."""
    a = _sample(a_image, a_label, spacing, "a")
    b = _sample(b_image, b_label, spacing, "b")
    rng = np.random.default_rng(seed)
    image, label, spec = mixup_pair(a, b, alpha, rng, lam=lam, seed=seed)
    record = {"method": "mixup", "seed": seed}
    record.update(spec.to_record())
    return image.data, label.data, record


def bind_cutmix(
    a_image,
    a_label,
    b_image,
    b_label,
    seed: int,
    spacing=(1.0, 1.0, 1.0),
):
    """Paste a random cube of `a` into `b`; returns (image, soft label, record)."""
    a = _sample(a_image, a_label, spacing, "a")
    b = _sample(b_image, b_label, spacing, "b")
    rng = np.random.default_rng(seed)
    image, label, spec = cutmix_pair(a, b, rng, seed=seed)
    record = {"method": "cutmix", "seed": seed}
    record.update(spec.to_record())
    return image.data, label.data, record


def bind_signed_distance(label, spacing=(1.0, 1.0, 1.0), units="voxel"):
    """Signed distance field of a binary buffer; returns (float64 array, minimum)."""
    mask = _label(label, spacing, "label")
    field = signed_distance(mask, _units(units))
    return field.data, field.d_min


def bind_generate_dataset(
    images_dir,
    labels_dir,
    output_dir,
    method: str = "carvemix",
    count: int = 0,
    master_seed: int = 0,
    units="voxel",
    alpha: float = DEFAULT_MIXUP_ALPHA,
    workers: int | None = None,
    allow_self_pairs: bool = True,
) -> list[dict]:
    """Run the offline batch generator; returns the manifest records."""
    config = GenerationConfig(
        method=method,
        count=count,
        master_seed=master_seed,
        output_dir=str(output_dir),
        images_dir=str(images_dir),
        labels_dir=str(labels_dir),
        units=_units(units),
        alpha=alpha,
        workers=workers,
        allow_self_pairs=allow_self_pairs,
    )
    roster = build_roster(images_dir, labels_dir)
    return list(generate_dataset(config, roster))
