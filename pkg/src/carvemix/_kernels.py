"""Hot kernels for the separable squared-distance transform.

Two interchangeable backends compute the identical quantity

    out[i0,i1,i2] = min over sources s of sum_ax (w_ax * (i_ax - s_ax))**2

as three passes, one per axis, each solving the 1-D recurrence
out[i] = min_j (g[j] + w^2 (i-j)^2) exactly.

* ``numba``: per-line lower envelope of parabolas, O(n) per line. Default.
* ``numpy``: vectorized naive minimization, O(n^2) per line. Fallback for
  environments without a working numba; exact but slower.

Selected by the CARVEMIX_BACKEND environment variable ("numba" | "numpy").
With unit weights both backends produce bit-identical integer-valued
float64 outputs; with anisotropic weights they may differ at ulp level
because the squared terms are accumulated in a different order.
"""

import os

import numpy as np

ENV_BACKEND = "CARVEMIX_BACKEND"
INF = np.inf

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def active_backend() -> str:
    """Resolve the backend from the environment, falling back if numba is absent."""
    backend = os.environ.get(ENV_BACKEND, "numba").strip().lower()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"{ENV_BACKEND} must be 'numba' or 'numpy', got {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        return "numpy"
    return backend


@njit(cache=True, nogil=True)
def _envelope_line(f, n, w, out, v, z):
    # Lower envelope of the parabolas y(x) = f[q] + (x - w*q)^2 over one line.
    # Entries with f[q] == inf contribute no parabola. k == -1: empty hull.
    k = -1
    s = 0.0
    for q in range(n):
        fq = f[q]
        if fq == INF:
            continue
        xq = w * q
        gq = fq + xq * xq
        while k >= 0:
            p = v[k]
            xp = w * p
            s = (gq - (f[p] + xp * xp)) / (2.0 * (xq - xp))
            if s <= z[k]:
                k -= 1
            else:
                break
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -INF
        else:
            k += 1
            v[k] = q
            z[k] = s
        z[k + 1] = INF
    if k < 0:
        for i in range(n):
            out[i] = INF
        return
    j = 0
    for i in range(n):
        xi = w * i
        while z[j + 1] < xi:
            j += 1
        p = v[j]
        dx = xi - w * p
        out[i] = f[p] + dx * dx


@njit(cache=True, nogil=True)
def _edt3_numba(d2, wx, wy, wz):
    n0, n1, n2 = d2.shape
    nmax = max(n0, max(n1, n2))
    f = np.empty(nmax, np.float64)
    out = np.empty(nmax, np.float64)
    v = np.empty(nmax, np.int64)
    z = np.empty(nmax + 1, np.float64)
    # Pass along axis 2 (contiguous).
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                f[i2] = d2[i0, i1, i2]
            _envelope_line(f, n2, wz, out, v, z)
            for i2 in range(n2):
                d2[i0, i1, i2] = out[i2]
    # Passes along axes 1 and 0: innermost loop over i2 so consecutive lines
    # touch adjacent memory and fetched cache lines are reused.
    for i0 in range(n0):
        for i2 in range(n2):
            for i1 in range(n1):
                f[i1] = d2[i0, i1, i2]
            _envelope_line(f, n1, wy, out, v, z)
            for i1 in range(n1):
                d2[i0, i1, i2] = out[i1]
    for i1 in range(n1):
        for i2 in range(n2):
            for i0 in range(n0):
                f[i0] = d2[i0, i1, i2]
            _envelope_line(f, n0, wx, out, v, z)
            for i0 in range(n0):
                d2[i0, i1, i2] = out[i0]


def _edt_axis_numpy(g: np.ndarray, w: float) -> np.ndarray:
    # g: (m, n), lines along the last axis. Naive exact minimization.
    m, n = g.shape
    idx = np.arange(n, dtype=np.float64)
    out = np.full((m, n), INF)
    for j in range(n):
        col = g[:, j]
        finite = col != INF
        if not finite.any():
            continue
        d = w * (idx - j)
        np.minimum(out, col[:, None] + (d * d)[None, :], out=out)
    return out


def _edt3_numpy(d2, wx, wy, wz):
    n0, n1, n2 = d2.shape
    d2[...] = _edt_axis_numpy(d2.reshape(n0 * n1, n2), wz).reshape(d2.shape)
    moved = np.ascontiguousarray(np.moveaxis(d2, 1, 2))
    moved[...] = _edt_axis_numpy(moved.reshape(n0 * n2, n1), wy).reshape(moved.shape)
    d2[...] = np.moveaxis(moved, 2, 1)
    moved = np.ascontiguousarray(np.moveaxis(d2, 0, 2))
    moved[...] = _edt_axis_numpy(moved.reshape(n1 * n2, n0), wx).reshape(moved.shape)
    d2[...] = np.moveaxis(moved, 2, 0)


def squared_edt(sources: np.ndarray, weights, backend: str | None = None) -> np.ndarray:
    """Squared distance from every voxel to the nearest True voxel in `sources`.

    `weights` are per-axis step lengths. Returns float64; exact integers when
    all weights are 1.
    """
    if backend is None:
        backend = active_backend()
    d2 = np.where(sources, 0.0, INF)
    wx, wy, wz = (float(w) for w in weights)
    if backend == "numba":
        _edt3_numba(d2, wx, wy, wz)
    else:
        _edt3_numpy(d2, wx, wy, wz)
    return d2
