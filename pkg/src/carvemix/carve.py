"""Carve-and-paste combination of an annotated pair.

The donor's lesion geometry drives everything: its signed distance field is
thresholded at a randomly drawn level to cut a region of interest, which then
replaces the corresponding voxels (image and annotation) of the host.

The threshold is drawn from an even mixture of two uniforms whose bounds
adapt to the lesion depth: with a = |d_min|, the lower branch covers
[-a/2, 0) and the upper branch [0, a), so the carved region ranges from a
strict subset of the lesion to a dilated superset. The branch is chosen by a
fair coin first, then one uniform draw; 0 belongs to the upper branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import DistanceUnits, SignedDistanceField, signed_distance
from .errors import DegenerateLesion, EmptyROI
from .grid import AnnotatedSample, LabelMask, Volume3D, elementwise_mix, elementwise_mix_labels


@dataclass(frozen=True)
class CarveSpec:
    """Provenance record for one carve: threshold, its bounds, and the donors."""

    lam: float
    lam_lower: float
    lam_upper: float
    units: DistanceUnits
    rng_seed: int | None = None
    donor_id: str = ""
    host_id: str = ""

    def to_record(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_l": self.lam_lower,
            "lambda_u": self.lam_upper,
            "units": self.units.value,
        }


def lambda_bounds(d_min: float) -> tuple[float, float]:
    """Adaptive threshold bounds (-|d_min|/2, |d_min|) for a lesion of depth |d_min|."""
    if not (d_min < 0.0):
        raise DegenerateLesion(f"distance-field minimum must be negative, got {d_min}")
    a = abs(d_min)
    return (-0.5 * a, a)


def sample_lambda(d_min: float, rng: np.random.Generator) -> float:
    """Draw a carve threshold from the half/half mixture of uniforms.

    Fair coin for the branch, then uniform on [-|d_min|/2, 0) or [0, |d_min|).
    """
    lam_lower, lam_upper = lambda_bounds(d_min)
    if rng.random() < 0.5:
        return float(rng.uniform(lam_lower, 0.0))
    return float(rng.uniform(0.0, lam_upper))


def carve_roi(field: SignedDistanceField, lam: float) -> LabelMask:
    """Sublevel set {field <= lam} as a binary mask.

    At lam = 0 this is exactly the source annotation. For lam drawn from the
    adaptive bounds the set always contains the deepest lesion voxel, so an
    empty result signals a caller bug and raises.
    """
    sel = field.data <= lam
    if not sel.any():
        raise EmptyROI(f"threshold {lam} selects no voxel (field minimum {field.d_min})")
    return LabelMask(field.shape, field.spacing, sel.astype(np.uint8))


def carvemix_pair(
    donor: AnnotatedSample,
    host: AnnotatedSample,
    rng: np.random.Generator,
    units: DistanceUnits = DistanceUnits.VOXEL,
    lam: float | None = None,
    seed: int | None = None,
) -> tuple[Volume3D, LabelMask, CarveSpec]:
    """Generate one synthetic sample by carving the donor lesion into the host.

    Computes the donor's signed distance field, draws the threshold (unless
    `lam` forces one for debugging), cuts the region of interest and pastes
    donor voxels (image and annotation) over the host. Output voxels each
    originate from exactly one input and the annotation stays binary.
    `seed` is recorded in the returned CarveSpec; it never seeds anything here.
    """
    field = signed_distance(donor.label, units)
    lam_lower, lam_upper = lambda_bounds(field.d_min)
    if lam is None:
        lam = sample_lambda(field.d_min, rng)
    roi = carve_roi(field, float(lam))
    image = elementwise_mix(donor.image, host.image, roi)
    label = elementwise_mix_labels(donor.label, host.label, roi)
    spec = CarveSpec(
        lam=float(lam),
        lam_lower=lam_lower,
        lam_upper=lam_upper,
        units=units,
        rng_seed=seed,
        donor_id=donor.id,
        host_id=host.id,
    )
    return image, label, spec
