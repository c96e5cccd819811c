"""Batched circuit evolution kernels.

A compiled circuit is a flat gate table (see ``ParamCircuit.compiled``):

    kinds   (G,)      0 = Pauli rotation, 1 = fixed gate
    pidx    (G,)      parameter column feeding each rotation (-1 for fixed)
    perm    (G, d)    row r of P @ U is phase[g, r] * U[perm[g, r]]
    phase   (G, d)    complex phase of that row
    fixed   (G, d, d) embedded fixed-gate matrices (zeros for rotations)

Pauli-string generators act as signed permutations, so a rotation
exp(-i t P / 2) updates U with one gather instead of a dense matmul.

The numba path is used unless ``VQAGRAD_DISABLE_NUMBA`` is set to a truthy
value or numba cannot be imported.  Both paths produce the same numbers up to
floating-point rounding.
"""
from __future__ import annotations

import os

import numpy as np

ROTATION = 0
FIXED = 1


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def evolve_batch_numpy(kinds, pidx, perm, phase, fixed, thetas):
    thetas = np.asarray(thetas, dtype=np.float64)
    batch = thetas.shape[0]
    d = perm.shape[1]
    out = np.broadcast_to(np.eye(d, dtype=np.complex128), (batch, d, d)).copy()
    for g in range(kinds.shape[0]):
        if kinds[g] == ROTATION:
            half = 0.5 * thetas[:, pidx[g]]
            c = np.cos(half)[:, None, None]
            s = np.sin(half)[:, None, None]
            pu = phase[g][None, :, None] * out[:, perm[g], :]
            out = c * out - 1j * s * pu
        else:
            out = np.matmul(fixed[g], out)
    return out


try:
    if _flag("VQAGRAD_DISABLE_NUMBA"):
        raise ImportError("numba disabled by VQAGRAD_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    HAVE_NUMBA = False
    evolve_batch_numba = None
else:
    HAVE_NUMBA = True

    @njit(cache=True, nogil=True)
    def _evolve_into(kinds, pidx, perm, phase, fixed, thetas, out):
        batch = thetas.shape[0]
        d = perm.shape[1]
        tmp = np.empty((d, d), dtype=np.complex128)
        for b in range(batch):
            u = out[b]
            for r in range(d):
                for k in range(d):
                    u[r, k] = 1.0 if r == k else 0.0
            for g in range(kinds.shape[0]):
                if kinds[g] == 0:
                    half = 0.5 * thetas[b, pidx[g]]
                    c = np.cos(half)
                    ms = -1j * np.sin(half)
                    for r in range(d):
                        src = perm[g, r]
                        ph = ms * phase[g, r]
                        for k in range(d):
                            tmp[r, k] = c * u[r, k] + ph * u[src, k]
                else:
                    # embedded gates are sparse; skip zero entries
                    for r in range(d):
                        for k in range(d):
                            tmp[r, k] = 0j
                        for m in range(d):
                            f = fixed[g, r, m]
                            if f != 0:
                                for k in range(d):
                                    tmp[r, k] += f * u[m, k]
                for r in range(d):
                    for k in range(d):
                        u[r, k] = tmp[r, k]

    def evolve_batch_numba(kinds, pidx, perm, phase, fixed, thetas):
        thetas = np.ascontiguousarray(thetas, dtype=np.float64)
        d = perm.shape[1]
        out = np.empty((thetas.shape[0], d, d), dtype=np.complex128)
        _evolve_into(kinds, pidx, perm, phase, fixed, thetas, out)
        return out


BACKEND = "numba" if HAVE_NUMBA else "numpy"


def evolve_batch(kinds, pidx, perm, phase, fixed, thetas):
    """Return the stack of circuit unitaries, one per row of ``thetas``."""
    if HAVE_NUMBA:
        return evolve_batch_numba(kinds, pidx, perm, phase, fixed, thetas)
    return evolve_batch_numpy(kinds, pidx, perm, phase, fixed, thetas)
