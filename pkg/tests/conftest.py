import gzip
import struct

import numpy as np
import pytest

from carvemix import AnnotatedSample, LabelMask, Volume3D

NIFTI_CODES = {"uint8": 2, "int16": 4, "int32": 8, "float32": 16, "float64": 64}
NIFTI_NPDT = {"uint8": "u1", "int16": "i2", "int32": "i4", "float32": "f4", "float64": "f8"}


def craft_nifti(
    data,
    dtype,
    spacing=(1.0, 1.0, 1.0),
    endian="<",
    scl=(0.0, 0.0),
    fourth_dim=None,
    magic=b"n+1\x00",
    datatype_code=None,
    descrip=b"",
):
    """Independent NIfTI-1 writer: packs header fields at their standard offsets."""
    arr = np.asarray(data).astype(endian + NIFTI_NPDT[dtype])
    nx, ny, nz = arr.shape
    hdr = bytearray(348)
    struct.pack_into(endian + "i", hdr, 0, 348)
    ndim = 3 if fourth_dim is None else 4
    dims = [ndim, nx, ny, nz, fourth_dim if fourth_dim is not None else 1, 1, 1, 1]
    struct.pack_into(endian + "8h", hdr, 40, *dims)
    struct.pack_into(endian + "h", hdr, 70, datatype_code or NIFTI_CODES[dtype])
    struct.pack_into(endian + "h", hdr, 72, arr.dtype.itemsize * 8)
    struct.pack_into(endian + "8f", hdr, 76, 1.0, *spacing, 0, 0, 0, 0)
    struct.pack_into(endian + "f", hdr, 108, 352.0)
    struct.pack_into(endian + "2f", hdr, 112, *scl)
    hdr[148 : 148 + len(descrip)] = descrip
    hdr[344:348] = magic
    return bytes(hdr) + b"\x00" * 4 + arr.tobytes(order="F")


def put_file(tmp_path, payload, name="f.nii"):
    p = tmp_path / name
    if name.endswith(".gz"):
        p.write_bytes(gzip.compress(payload))
    else:
        p.write_bytes(payload)
    return p


def random_mixed_mask(rng, shape, p=0.3):
    """Random binary array guaranteed to contain both classes."""
    m = (rng.random(shape) < p).astype(np.uint8)
    if not m.any():
        m.flat[int(rng.integers(0, m.size))] = 1
    if m.all():
        m.flat[int(rng.integers(0, m.size))] = 0
    return m


def make_sample(rng, shape=(8, 8, 8), spacing=(1.0, 1.0, 1.0), lesion=True, sample_id=""):
    img = Volume3D.from_array(rng.normal(size=shape).astype(np.float32), spacing)
    if lesion:
        lbl = random_mixed_mask(rng, shape)
    else:
        lbl = np.zeros(shape, np.uint8)
    return AnnotatedSample(
        image=img, label=LabelMask.from_array(lbl, spacing), id=sample_id
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
