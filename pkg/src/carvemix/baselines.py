"""Mixup and CutMix pair-combination baselines, extended voxelwise to 3D.

Mixup blends image and annotation with one Beta-distributed weight. CutMix
pastes a random cube from one image into the other and blends the whole
annotation with a single global weight equal to the cube's volume fraction;
it deliberately does NOT use the per-voxel contributor's label, since that
behavior is the point of comparison. Both emit fractional annotations as
SoftLabelMask, serialized in floating point; consumers decide how to train
on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatch, SpacingMismatch
from .grid import AnnotatedSample, SoftLabelMask, Volume3D, spacings_close

DEFAULT_MIXUP_ALPHA = 0.2


@dataclass(frozen=True)
class MixupSpec:
    alpha: float
    lam: float
    rng_seed: int | None = None

    def to_record(self) -> dict:
        return {"lambda": self.lam, "alpha": self.alpha}


@dataclass(frozen=True)
class CutMixSpec:
    cube_origin: tuple[int, int, int]
    cube_extent: tuple[int, int, int]
    lam_eff: float
    rng_seed: int | None = None

    def to_record(self) -> dict:
        return {
            "lambda": self.lam_eff,
            "cube_origin": list(self.cube_origin),
            "cube_extent": list(self.cube_extent),
        }


def _check_sample_pair(a: AnnotatedSample, b: AnnotatedSample):
    if a.image.shape != b.image.shape:
        raise ShapeMismatch(
            f"grids differ: {a.image.shape.as_tuple()} / {b.image.shape.as_tuple()}"
        )
    if not spacings_close(a.image.spacing, b.image.spacing):
        raise SpacingMismatch(
            f"spacings differ: {a.image.spacing.as_tuple()} / {b.image.spacing.as_tuple()}"
        )


def mixup_pair(
    a: AnnotatedSample,
    b: AnnotatedSample,
    alpha: float,
    rng: np.random.Generator,
    lam: float | None = None,
    seed: int | None = None,
) -> tuple[Volume3D, SoftLabelMask, MixupSpec]:
    """Convex combination of two samples with weight lam ~ Beta(alpha, alpha).

    Image and annotation are blended voxelwise with the same weight; the
    annotation becomes fractional. `lam` forces the weight for testing.
    """
    _check_sample_pair(a, b)
    if not (alpha > 0.0):
        raise ConfigError(f"mixup alpha must be positive, got {alpha}")
    if lam is None:
        lam = float(rng.beta(alpha, alpha))
    lam = float(lam)
    image = (lam * a.image.data.astype(np.float64) + (1.0 - lam) * b.image.data.astype(np.float64)).astype(np.float32)
    label = (lam * a.label.data.astype(np.float64) + (1.0 - lam) * b.label.data.astype(np.float64)).astype(np.float32)
    vol = Volume3D(b.image.shape, b.image.spacing, image, meta=b.image.meta)
    soft = SoftLabelMask(b.label.shape, b.label.spacing, label, meta=b.label.meta)
    return vol, soft, MixupSpec(alpha=float(alpha), lam=lam, rng_seed=seed)


def _draw_cube(shape, r: float, centers) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    # Cube edge per axis = extent * r^(1/3), so the expected volume fraction
    # matches the drawn r; clipping to the grid happens afterwards.
    edge_scale = r ** (1.0 / 3.0)
    origin = []
    extent = []
    for n, c in zip(shape, centers):
        e = int(n * edge_scale)
        lo_raw = c - e // 2
        hi_raw = lo_raw + e
        lo = max(lo_raw, 0)
        hi = min(hi_raw, n)
        origin.append(lo)
        extent.append(max(0, hi - lo))
    return tuple(origin), tuple(extent)


def cutmix_pair(
    a: AnnotatedSample,
    b: AnnotatedSample,
    rng: np.random.Generator,
    r: float | None = None,
    cube: tuple[tuple[int, int, int], tuple[int, int, int]] | None = None,
    seed: int | None = None,
) -> tuple[Volume3D, SoftLabelMask, CutMixSpec]:
    """Paste a random cube of `a` into `b`; blend annotations globally.

    The target volume fraction r ~ Beta(1, 1) sets the cube edge lengths,
    the center is uniform over the grid, and the cube is clipped to bounds.
    The annotation weight is recomputed from the clipped cube's actual voxel
    fraction. `r` or an explicit `cube` (origin, extent) force the geometry
    for testing.
    """
    _check_sample_pair(a, b)
    shape = a.image.shape.as_tuple()
    if cube is None:
        if r is None:
            r = float(rng.beta(1.0, 1.0))
        centers = tuple(int(rng.integers(0, n)) for n in shape)
        origin, extent = _draw_cube(shape, float(r), centers)
    else:
        origin, extent = (tuple(int(v) for v in cube[0]), tuple(int(v) for v in cube[1]))
        for o, e, n in zip(origin, extent, shape):
            if o < 0 or e < 0 or o + e > n:
                raise ConfigError(f"cube {origin}+{extent} exceeds grid {shape}")

    inside = np.zeros(shape, dtype=bool)
    sl = tuple(slice(o, o + e) for o, e in zip(origin, extent))
    inside[sl] = True

    total = a.image.shape.voxels
    lam_eff = int(np.prod([e for e in extent], dtype=np.int64)) / total

    image = np.where(inside, a.image.data, b.image.data)
    label = (
        lam_eff * a.label.data.astype(np.float64)
        + (1.0 - lam_eff) * b.label.data.astype(np.float64)
    ).astype(np.float32)
    vol = Volume3D(b.image.shape, b.image.spacing, image, meta=b.image.meta)
    soft = SoftLabelMask(b.label.shape, b.label.spacing, label, meta=b.label.meta)
    spec = CutMixSpec(cube_origin=origin, cube_extent=extent, lam_eff=float(lam_eff), rng_seed=seed)
    return vol, soft, spec
