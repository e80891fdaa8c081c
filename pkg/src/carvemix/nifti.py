"""Single-file NIfTI-1 reading and writing for volumes and annotations.

Only the subset this pipeline needs: magic "n+1" (no .hdr/.img pairs, no
NIfTI-2), voxel datatypes uint8/int16/int32/float32/float64, 3-D grids plus
4-D grids with a singleton trailing dimension. Headers are accepted in
either byte order and always written little-endian. The full 348-byte header
travels opaquely as `meta` so affine/orientation fields survive a
read-modify-write cycle.

Writing is deterministic: fixed field layout, gzip with zeroed mtime and a
fixed compression level, so identical inputs re-serialize byte-identically.
"""

from __future__ import annotations

import gzip

import numpy as np

from .errors import CorruptHeader, IoError, NonBinaryLabel, NonFiniteData, UnsupportedDatatype
from .grid import GridShape, LabelMask, SoftLabelMask, Spacing, Volume3D

HEADER_SIZE = 348
VOX_OFFSET = 352
GZIP_LEVEL = 6
MASK_TOL = 1e-6

_FIELDS = [
    ("sizeof_hdr", "i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "i4"),
    ("session_error", "i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "i2", (8,)),
    ("intent_p1", "f4"),
    ("intent_p2", "f4"),
    ("intent_p3", "f4"),
    ("intent_code", "i2"),
    ("datatype", "i2"),
    ("bitpix", "i2"),
    ("slice_start", "i2"),
    ("pixdim", "f4", (8,)),
    ("vox_offset", "f4"),
    ("scl_slope", "f4"),
    ("scl_inter", "f4"),
    ("slice_end", "i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "f4"),
    ("cal_min", "f4"),
    ("slice_duration", "f4"),
    ("toffset", "f4"),
    ("glmax", "i4"),
    ("glmin", "i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "i2"),
    ("sform_code", "i2"),
    ("quatern_b", "f4"),
    ("quatern_c", "f4"),
    ("quatern_d", "f4"),
    ("qoffset_x", "f4"),
    ("qoffset_y", "f4"),
    ("qoffset_z", "f4"),
    ("srow_x", "f4", (4,)),
    ("srow_y", "f4", (4,)),
    ("srow_z", "f4", (4,)),
    ("intent_name", "S16"),
    ("magic", "S4"),
]


def _header_dtype(byteorder: str) -> np.dtype:
    fields = []
    for spec in _FIELDS:
        name, fmt = spec[0], spec[1]
        fmt = fmt if fmt.startswith("S") else byteorder + fmt
        fields.append((name, fmt) if len(spec) == 2 else (name, fmt, spec[2]))
    return np.dtype(fields)


HDR_LE = _header_dtype("<")
HDR_BE = _header_dtype(">")
assert HDR_LE.itemsize == HEADER_SIZE

# NIfTI-1 datatype code -> numpy dtype (little-endian forms).
DTYPE_BY_CODE = {
    2: np.dtype("<u1"),
    4: np.dtype("<i2"),
    8: np.dtype("<i4"),
    16: np.dtype("<f4"),
    64: np.dtype("<f8"),
}
CODE_FLOAT32 = 16
CODE_UINT8 = 2


def _is_gz(path) -> bool:
    return str(path).endswith(".gz")


def _read_bytes(path) -> bytes:
    try:
        opener = gzip.open if _is_gz(path) else open
        with opener(path, "rb") as fh:
            return fh.read()
    except (OSError, EOFError, gzip.BadGzipFile) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, payload: bytes):
    try:
        if _is_gz(path):
            with open(path, "wb") as fh:
                with gzip.GzipFile(
                    filename="", mode="wb", fileobj=fh, compresslevel=GZIP_LEVEL, mtime=0
                ) as gz:
                    gz.write(payload)
        else:
            with open(path, "wb") as fh:
                fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_header(raw: bytes, path):
    if len(raw) < HEADER_SIZE:
        raise CorruptHeader(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=HDR_LE)[0]
    swapped = False
    if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
        hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=HDR_BE)[0]
        swapped = True
        if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
            raise CorruptHeader(f"{path}: field sizeof_hdr is not {HEADER_SIZE} in either byte order")
    if bytes(hdr["magic"]) != b"n+1":
        raise CorruptHeader(f"{path}: field magic is {bytes(hdr['magic'])!r}, expected b'n+1' (single-file)")
    return hdr, swapped


def _decode(path) -> tuple[np.ndarray, Spacing, bytes]:
    """Shared read path: raw voxel array (float64, scaled), spacing, header payload."""
    raw = _read_bytes(path)
    hdr, swapped = _parse_header(raw, path)

    ndim = int(hdr["dim"][0])
    if ndim not in (3, 4):
        raise CorruptHeader(f"{path}: field dim[0] must be 3 or 4, got {ndim}")
    if ndim == 4 and int(hdr["dim"][4]) != 1:
        raise CorruptHeader(f"{path}: field dim[4] must be 1 for 4-D files, got {int(hdr['dim'][4])}")
    nx, ny, nz = (int(hdr["dim"][k]) for k in (1, 2, 3))
    if min(nx, ny, nz) < 1:
        raise CorruptHeader(f"{path}: field dim has non-positive extent ({nx}, {ny}, {nz})")

    code = int(hdr["datatype"])
    if code not in DTYPE_BY_CODE:
        raise UnsupportedDatatype(f"{path}: field datatype code {code} is outside the supported subset")
    dt = DTYPE_BY_CODE[code]
    if swapped:
        dt = dt.newbyteorder(">")

    pix = [float(hdr["pixdim"][k]) for k in (1, 2, 3)]
    if any(not np.isfinite(p) or p <= 0 for p in pix):
        raise CorruptHeader(f"{path}: field pixdim must be positive, got {pix}")
    spacing = Spacing(*pix)

    offset = int(hdr["vox_offset"])
    if offset < HEADER_SIZE:
        raise CorruptHeader(f"{path}: field vox_offset {offset} precedes the header end")
    nbytes = nx * ny * nz * dt.itemsize
    if len(raw) < offset + nbytes:
        raise CorruptHeader(f"{path}: voxel payload truncated ({len(raw) - offset} of {nbytes} bytes)")

    flat = np.frombuffer(raw, dtype=dt, count=nx * ny * nz, offset=offset)
    arr = np.ascontiguousarray(flat.reshape((nx, ny, nz), order="F"), dtype=np.float64)

    slope = float(hdr["scl_slope"])
    inter = float(hdr["scl_inter"])
    if slope != 0.0 and (slope != 1.0 or inter != 0.0):
        arr = arr * slope + inter

    if swapped:
        hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=HDR_BE)[0].astype(HDR_LE)
    meta = hdr.tobytes()
    return arr, spacing, meta


def read_volume(path) -> Volume3D:
    """Read an intensity volume, applying any scale factors, as float32."""
    arr, spacing, meta = _decode(path)
    if np.isnan(arr).any():
        raise NonFiniteData(f"{path}: voxel data contains NaN")
    return Volume3D.from_array(arr.astype(np.float32), spacing, meta=meta)


def read_mask(path) -> LabelMask:
    """Read a binary annotation; values must round-trip to exactly {0, 1}."""
    arr, spacing, meta = _decode(path)
    rounded = np.rint(arr)
    ok = (np.abs(arr - rounded) <= MASK_TOL) & ((rounded == 0) | (rounded == 1))
    if not ok.all():
        bad = arr[~ok]
        sample = np.unique(bad[np.isfinite(bad)])[:8].tolist()
        if np.isnan(bad).any():
            sample.append(float("nan"))
        raise NonBinaryLabel(f"{path}: {bad.size} voxels are not 0/1, e.g. {sample}")
    return LabelMask.from_array(rounded.astype(np.uint8), spacing, meta=meta)


def _build_header(meta: bytes | None, shape: GridShape, spacing: Spacing, code: int) -> bytes:
    if meta is not None and len(meta) == HEADER_SIZE:
        hdr = np.frombuffer(meta, dtype=HDR_LE).copy()[0]
    else:
        hdr = np.zeros((), dtype=HDR_LE)[()]
        hdr["sizeof_hdr"] = HEADER_SIZE
        hdr["regular"] = b"r"
        hdr["pixdim"][0] = 1.0
        hdr["xyzt_units"] = 2  # millimeters
    hdr["dim"][:] = (3, shape.nx, shape.ny, shape.nz, 1, 1, 1, 1)
    hdr["pixdim"][1:4] = spacing.as_tuple()
    hdr["datatype"] = code
    hdr["bitpix"] = DTYPE_BY_CODE[code].itemsize * 8
    hdr["vox_offset"] = VOX_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0
    hdr["magic"] = b"n+1"
    return hdr.tobytes()


def encode_volume(v: Volume3D) -> bytes:
    """Serialize to uncompressed NIfTI-1 bytes (float32, x fastest)."""
    header = _build_header(v.meta, v.shape, v.spacing, CODE_FLOAT32)
    return header + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + v.data.tobytes(order="F")


def encode_mask(m: LabelMask) -> bytes:
    header = _build_header(m.meta, m.shape, m.spacing, CODE_UINT8)
    return header + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + m.data.tobytes(order="F")


def encode_soft_mask(s: SoftLabelMask) -> bytes:
    header = _build_header(s.meta, s.shape, s.spacing, CODE_FLOAT32)
    return header + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + s.data.tobytes(order="F")


def write_volume(path, v: Volume3D):
    """Write as float32, gzipped iff the path ends in .gz."""
    _write_bytes(path, encode_volume(v))


def write_mask(path, m: LabelMask):
    """Write as uint8, gzipped iff the path ends in .gz."""
    _write_bytes(path, encode_mask(m))


def write_soft_mask(path, s: SoftLabelMask):
    """Write as float32, gzipped iff the path ends in .gz."""
    _write_bytes(path, encode_soft_mask(s))


def gzip_bytes(payload: bytes) -> bytes:
    """Deterministic gzip (fixed level, no name, zero mtime)."""
    import io

    buf = io.BytesIO()
    with gzip.GzipFile(filename="", mode="wb", fileobj=buf, compresslevel=GZIP_LEVEL, mtime=0) as gz:
        gz.write(payload)
    return buf.getvalue()
