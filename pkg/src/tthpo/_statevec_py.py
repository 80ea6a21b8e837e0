"""NumPy statevector kernels — the portable fallback backend.

Shared kernel contract (both backends implement exactly this):

* ``psi`` is a C-contiguous complex128 array of shape (batch, 2**n) holding
  one statevector per row; all kernels mutate it in place.
* Qubit ``w`` maps to bit (n-1-w) of the amplitude index, so qubit 0 is the
  most significant bit and neighbouring amplitudes differ in the last qubit.
* ``angles`` carries one rotation angle per batch row, which lets the same
  kernel serve per-sample encoding rotations and shared variational ones
  (callers broadcast a scalar to the batch).

Wire indices are validated by the caller; kernels assume they are in range.
"""

from __future__ import annotations

from functools import lru_cache
from math import sqrt

import numpy as np

AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2

_INV_SQRT2 = 1.0 / sqrt(2.0)


def _paired_view(psi: np.ndarray, wire: int) -> np.ndarray:
    """View (batch, blocks, 2, stride) splitting amplitudes on ``wire``."""
    batch, dim = psi.shape
    n = dim.bit_length() - 1
    stride = 1 << (n - 1 - wire)
    return psi.reshape(batch, dim // (2 * stride), 2, stride)


def apply_h(psi: np.ndarray, wire: int) -> None:
    """Hadamard on ``wire`` for every row of ``psi``."""
    v = _paired_view(psi, wire)
    lo = v[:, :, 0, :].copy()
    hi = v[:, :, 1, :]
    v[:, :, 0, :] = (lo + hi) * _INV_SQRT2
    v[:, :, 1, :] = (lo - hi) * _INV_SQRT2


def apply_rot(psi: np.ndarray, wire: int, axis: int, angles: np.ndarray) -> None:
    """Rotation exp(-i * angle/2 * P_axis) on ``wire``, one angle per row."""
    half = 0.5 * np.asarray(angles, dtype=np.float64)
    c = np.cos(half)[:, None, None]
    s = np.sin(half)[:, None, None]
    v = _paired_view(psi, wire)
    lo = v[:, :, 0, :].copy()
    hi = v[:, :, 1, :]
    if axis == AXIS_X:
        v[:, :, 0, :] = c * lo - 1j * s * hi
        v[:, :, 1, :] = -1j * s * lo + c * hi
    elif axis == AXIS_Y:
        v[:, :, 0, :] = c * lo - s * hi
        v[:, :, 1, :] = s * lo + c * hi
    elif axis == AXIS_Z:
        v[:, :, 0, :] = (c - 1j * s) * lo
        v[:, :, 1, :] = (c + 1j * s) * hi
    else:
        raise ValueError(f"unknown rotation axis code {axis}")


@lru_cache(maxsize=256)
def _cnot_indices(n: int, control: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    control_bit = 1 << (n - 1 - control)
    target_bit = 1 << (n - 1 - target)
    lo = idx[(idx & control_bit != 0) & (idx & target_bit == 0)]
    return lo, lo + target_bit


def apply_cnot(psi: np.ndarray, control: int, target: int) -> None:
    """CNOT with the given control/target on every row."""
    n = psi.shape[1].bit_length() - 1
    lo, hi = _cnot_indices(n, control, target)
    tmp = psi[:, lo].copy()
    psi[:, lo] = psi[:, hi]
    psi[:, hi] = tmp


def expect_x(psi: np.ndarray, wire: int) -> np.ndarray:
    """<X_wire> per row: 2 * Re sum conj(amp_0) * amp_1 over split pairs."""
    v = _paired_view(psi, wire)
    return 2.0 * np.sum(
        np.real(np.conj(v[:, :, 0, :]) * v[:, :, 1, :]), axis=(1, 2)
    )
