"""Voxel-grid data model and the elementwise pair-combination operations.

All arrays are kept C-contiguous with index order (x, y, z); files serialize
with x varying fastest, so hashes of written outputs are stable across runs.
Types are treated as immutable after construction and are safe to share
across threads; the operations below are pure functions.

Images are required to share a grid shape only. They are expected, not
verified, to be co-registered: combining un-registered pairs is legal but
anatomically meaningless.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, SpacingMismatch

SPACING_RTOL = 1e-5


@dataclass(frozen=True)
class GridShape:
    """Voxel counts per axis."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise ValueError(f"{name} must be a positive integer, got {n!r}")
            object.__setattr__(self, name, int(n))
        if self.nx * self.ny * self.nz > sys.maxsize:
            raise ValueError("voxel count exceeds addressable range")

    @property
    def voxels(self) -> int:
        return self.nx * self.ny * self.nz

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)


@dataclass(frozen=True)
class Spacing:
    """Physical voxel edge lengths in millimeters; anisotropy is allowed."""

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        for name in ("sx", "sy", "sz"):
            s = float(getattr(self, name))
            if not (s > 0.0) or not np.isfinite(s):
                raise ValueError(f"{name} must be strictly positive, got {s!r}")
            object.__setattr__(self, name, s)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sx, self.sy, self.sz)


def spacings_close(a: Spacing, b: Spacing, rtol: float = SPACING_RTOL) -> bool:
    return all(
        abs(x - y) <= rtol * max(abs(x), abs(y))
        for x, y in zip(a.as_tuple(), b.as_tuple())
    )


def _conform(data, dtype, shape: GridShape, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=dtype)
    if arr.ndim != 3:
        raise ValueError(f"{what} data must be 3-D, got ndim={arr.ndim}")
    if arr.shape != shape.as_tuple():
        raise ValueError(
            f"{what} data shape {arr.shape} does not match grid {shape.as_tuple()}"
        )
    return arr


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Scalar intensity grid in float32 with spacing and an opaque header payload."""

    shape: GridShape
    spacing: Spacing
    data: np.ndarray
    meta: bytes | None = None

    def __post_init__(self):
        object.__setattr__(self, "data", _conform(self.data, np.float32, self.shape, "volume"))

    @classmethod
    def from_array(cls, data, spacing=(1.0, 1.0, 1.0), meta: bytes | None = None) -> "Volume3D":
        arr = np.asarray(data)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3-D, got ndim={arr.ndim}")
        sp = spacing if isinstance(spacing, Spacing) else Spacing(*spacing)
        return cls(GridShape(*arr.shape), sp, arr, meta)


@dataclass(frozen=True, eq=False)
class LabelMask:
    """Binary annotation grid aligned with a Volume3D; 1 = lesion, 0 = background."""

    shape: GridShape
    spacing: Spacing
    data: np.ndarray
    meta: bytes | None = None

    def __post_init__(self):
        raw = np.asarray(self.data)
        if not np.logical_or(raw == 0, raw == 1).all():
            bad = np.unique(raw[np.logical_and(raw != 0, raw != 1)])
            raise ValueError(f"label values must be exactly 0 or 1, found {bad[:8]}")
        object.__setattr__(self, "data", _conform(raw, np.uint8, self.shape, "label"))

    @classmethod
    def from_array(cls, data, spacing=(1.0, 1.0, 1.0), meta: bytes | None = None) -> "LabelMask":
        arr = np.asarray(data)
        if arr.ndim != 3:
            raise ValueError(f"label data must be 3-D, got ndim={arr.ndim}")
        sp = spacing if isinstance(spacing, Spacing) else Spacing(*spacing)
        return cls(GridShape(*arr.shape), sp, arr, meta)

    @property
    def foreground_voxels(self) -> int:
        return int(np.count_nonzero(self.data))


@dataclass(frozen=True, eq=False)
class SoftLabelMask:
    """Fractional annotation grid in [0, 1], produced by the blending baselines."""

    shape: GridShape
    spacing: Spacing
    data: np.ndarray
    meta: bytes | None = None

    def __post_init__(self):
        arr = _conform(self.data, np.float32, self.shape, "soft label")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"soft label values must lie in [0, 1], found range [{lo}, {hi}]")
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True, eq=False)
class AnnotatedSample:
    """An image and its annotation, sharing one grid."""

    image: Volume3D
    label: LabelMask
    id: str = ""

    def __post_init__(self):
        if self.image.shape != self.label.shape:
            raise ShapeMismatch(
                f"sample {self.id!r}: image grid {self.image.shape.as_tuple()} "
                f"!= label grid {self.label.shape.as_tuple()}"
            )
        if not spacings_close(self.image.spacing, self.label.spacing):
            raise SpacingMismatch(
                f"sample {self.id!r}: image spacing {self.image.spacing.as_tuple()} "
                f"!= label spacing {self.label.spacing.as_tuple()}"
            )


def _check_pair(a, b, mask):
    if a.shape != b.shape or a.shape != mask.shape:
        raise ShapeMismatch(
            f"grids differ: {a.shape.as_tuple()} / {b.shape.as_tuple()} / {mask.shape.as_tuple()}"
        )
    if not spacings_close(a.spacing, b.spacing) or not spacings_close(a.spacing, mask.spacing):
        raise SpacingMismatch(
            f"spacings differ: {a.spacing.as_tuple()} / {b.spacing.as_tuple()} / {mask.spacing.as_tuple()}"
        )


def elementwise_mix(a: Volume3D, b: Volume3D, mask: LabelMask) -> Volume3D:
    """Combine two images voxelwise: take `a` where mask is 1, `b` elsewhere.

    Every output voxel is copied bit-exactly from exactly one input; there is
    no intensity blending. Spacing and header payload are inherited from `b`,
    the image supplying the surrounding anatomy.
    """
    _check_pair(a, b, mask)
    out = np.where(mask.data != 0, a.data, b.data)
    return Volume3D(b.shape, b.spacing, out, meta=b.meta)


def elementwise_mix_labels(a: LabelMask, b: LabelMask, mask: LabelMask) -> LabelMask:
    """Combine two annotations voxelwise under the same selection mask.

    The output stays strictly binary: each voxel is `a`'s label inside the
    mask and `b`'s label outside.
    """
    _check_pair(a, b, mask)
    out = np.where(mask.data != 0, a.data, b.data)
    return LabelMask(b.shape, b.spacing, out, meta=b.meta)
