"""Hot loops of the diamond scheme.

Two interchangeable backends fill a block of grid rows:

* ``numba``: sequential row-by-row recurrence compiled with ``@njit``.
* ``numpy``: vectorised anti-diagonal sweep (all nodes with equal i+j are
  independent), evaluated with the same floating point expression so both
  backends agree bit for bit.

The backend is chosen with the environment variable ``RPDECAY_BACKEND``
(``numba`` or ``numpy``) and can be switched at runtime with
:func:`set_backend`.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

NO_DIAG = -(1 << 40)

_BACKEND = os.environ.get("RPDECAY_BACKEND", "numba").strip().lower() or "numba"
if _BACKEND not in ("numba", "numpy"):
    raise ValueError(f"RPDECAY_BACKEND must be 'numba' or 'numpy', got {_BACKEND!r}")
if _BACKEND == "numba" and numba is None:  # pragma: no cover
    _BACKEND = "numpy"


def backend():
    return _BACKEND


def set_backend(name):
    global _BACKEND
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:  # pragma: no cover
        raise ValueError("numba is not installed")
    _BACKEND = name


def _fill_diag_py(psi, cdiag, off, diag):
    nb, nv = psi.shape
    for b in range(nb - 1):
        d = b + 1 + diag
        jstart = 0
        if d >= 0:
            for j in range(min(d + 1, nv)):
                psi[b + 1, j] = 0.0
            jstart = d
        for j in range(jstart, nv - 1):
            c = cdiag[off - b + j]
            t = psi[b + 1, j] + psi[b, j + 1]
            psi[b + 1, j + 1] = t - psi[b, j] - c * t


def _fill_full_py(psi, cc, diag):
    nb, nv = psi.shape
    for b in range(nb - 1):
        d = b + 1 + diag
        jstart = 0
        if d >= 0:
            for j in range(min(d + 1, nv)):
                psi[b + 1, j] = 0.0
            jstart = d
        for j in range(jstart, nv - 1):
            c = cc[b, j]
            t = psi[b + 1, j] + psi[b, j + 1]
            psi[b + 1, j + 1] = t - psi[b, j] - c * t


if numba is not None:
    _fill_diag_nb = numba.njit(cache=True, nogil=True)(_fill_diag_py)
    _fill_full_nb = numba.njit(cache=True, nogil=True)(_fill_full_py)
else:  # pragma: no cover
    _fill_diag_nb = _fill_diag_py
    _fill_full_nb = _fill_full_py


def _antidiagonal_fill(psi, cblock, diag):
    """Fill rows 1.. of ``psi`` in place; ``cblock[b, j]`` is the cell coefficient."""
    nb, nv = psi.shape
    flat = psi.reshape(-1)
    cflat = np.ascontiguousarray(cblock).reshape(-1) if cblock.ndim == 2 else None
    ncol = nv - 1
    reflect = diag > NO_DIAG // 2
    if reflect:
        for b in range(1, nb):
            if b + diag >= 0:
                psi[b, 0] = 0.0
    for s in range(2, (nb - 1) + (nv - 1) + 1):
        b_lo = max(1, s - (nv - 1))
        b_hi = min(nb - 1, s - 1)
        if b_lo > b_hi:
            continue
        b = np.arange(b_lo, b_hi + 1)
        j = s - b
        node = b * nv + j
        west = flat[node - 1]
        east = flat[node - nv]
        south = flat[node - nv - 1]
        c = cflat[(b - 1) * ncol + (j - 1)]
        t = west + east
        flat[node] = t - south - c * t
        if reflect:
            outside = j <= b + diag
            if outside.any():
                flat[node[outside]] = 0.0


def fill_rows_diag(psi, cdiag, off, diag=NO_DIAG, backend=None):
    """Static background: cell (b, j) of the block uses ``cdiag[off - b + j]``.

    ``psi`` has shape (B+1, Nv); row 0 and column 0 must be set on entry.
    """
    be = backend or _BACKEND
    if be == "numba":
        _fill_diag_nb(psi, cdiag, off, diag)
        return psi
    nb, nv = psi.shape
    lo = off - (nb - 2)
    if lo < 0 or off + nv - 2 >= cdiag.shape[0]:
        raise IndexError("diagonal coefficient table too short for block")
    win = np.lib.stride_tricks.sliding_window_view(cdiag, nv - 1)
    cblock = win[lo : off + 1][::-1]
    _antidiagonal_fill(psi, cblock, diag)
    return psi


def fill_rows_full(psi, cc, diag=NO_DIAG, backend=None):
    """General background: ``cc`` has shape (B, Nv-1) with one coefficient per cell."""
    be = backend or _BACKEND
    if be == "numba":
        _fill_full_nb(psi, np.ascontiguousarray(cc), diag)
        return psi
    _antidiagonal_fill(psi, cc, diag)
    return psi
