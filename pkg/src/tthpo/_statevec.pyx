# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython statevector kernels — the compiled backend.

Same contract as ``_statevec_py`` (see its module docstring): in-place
complex128 kernels over (batch, 2**n) rows, qubit w on bit (n-1-w), one
angle per row for rotations.  The loops below are the training hot path —
parameter-shift gradients re-run the circuit hundreds of times per batch.
"""

from libc.math cimport cos, sin, sqrt

import numpy as np

AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2

cdef double _INV_SQRT2 = 1.0 / sqrt(2.0)


cdef inline Py_ssize_t _stride_for(Py_ssize_t dim, int wire):
    cdef int n = 0
    cdef Py_ssize_t d = dim
    while d > 1:
        d >>= 1
        n += 1
    return (<Py_ssize_t> 1) << (n - 1 - wire)


def apply_h(double complex[:, ::1] psi, int wire):
    """Hadamard on ``wire`` for every row of ``psi``."""
    cdef Py_ssize_t batch = psi.shape[0], dim = psi.shape[1]
    cdef Py_ssize_t stride = _stride_for(dim, wire)
    cdef Py_ssize_t blocks = dim // (2 * stride)
    cdef Py_ssize_t b, blk, base, off, i0, i1
    cdef double complex lo, hi
    with nogil:
        for b in range(batch):
            for blk in range(blocks):
                base = blk * 2 * stride
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    lo = psi[b, i0]
                    hi = psi[b, i1]
                    psi[b, i0] = (lo + hi) * _INV_SQRT2
                    psi[b, i1] = (lo - hi) * _INV_SQRT2


def apply_rot(double complex[:, ::1] psi, int wire, int axis, double[::1] angles):
    """Rotation exp(-i * angle/2 * P_axis) on ``wire``, one angle per row."""
    cdef Py_ssize_t batch = psi.shape[0], dim = psi.shape[1]
    cdef Py_ssize_t stride = _stride_for(dim, wire)
    cdef Py_ssize_t blocks = dim // (2 * stride)
    cdef Py_ssize_t b, blk, base, off, i0, i1
    cdef double c, s
    cdef double complex lo, hi, phase_lo, phase_hi, imag_s
    if axis not in (AXIS_X, AXIS_Y, AXIS_Z):
        raise ValueError(f"unknown rotation axis code {axis}")
    with nogil:
        for b in range(batch):
            c = cos(0.5 * angles[b])
            s = sin(0.5 * angles[b])
            if axis == 2:  # Z: diagonal phases
                phase_lo.real = c
                phase_lo.imag = -s
                phase_hi.real = c
                phase_hi.imag = s
                for blk in range(blocks):
                    base = blk * 2 * stride
                    for off in range(stride):
                        i0 = base + off
                        i1 = i0 + stride
                        psi[b, i0] = phase_lo * psi[b, i0]
                        psi[b, i1] = phase_hi * psi[b, i1]
            elif axis == 0:  # X
                imag_s.real = 0.0
                imag_s.imag = s
                for blk in range(blocks):
                    base = blk * 2 * stride
                    for off in range(stride):
                        i0 = base + off
                        i1 = i0 + stride
                        lo = psi[b, i0]
                        hi = psi[b, i1]
                        psi[b, i0] = c * lo - imag_s * hi
                        psi[b, i1] = c * hi - imag_s * lo
            else:  # Y
                for blk in range(blocks):
                    base = blk * 2 * stride
                    for off in range(stride):
                        i0 = base + off
                        i1 = i0 + stride
                        lo = psi[b, i0]
                        hi = psi[b, i1]
                        psi[b, i0] = c * lo - s * hi
                        psi[b, i1] = s * lo + c * hi


def apply_cnot(double complex[:, ::1] psi, int control, int target):
    """CNOT with the given control/target on every row."""
    cdef Py_ssize_t batch = psi.shape[0], dim = psi.shape[1]
    cdef Py_ssize_t cbit = _stride_for(dim, control)
    cdef Py_ssize_t tbit = _stride_for(dim, target)
    cdef Py_ssize_t b, i
    cdef double complex tmp
    with nogil:
        for b in range(batch):
            for i in range(dim):
                if (i & cbit) != 0 and (i & tbit) == 0:
                    tmp = psi[b, i]
                    psi[b, i] = psi[b, i + tbit]
                    psi[b, i + tbit] = tmp


def expect_x(double complex[:, ::1] psi, int wire):
    """<X_wire> per row: 2 * Re sum conj(amp_0) * amp_1 over split pairs."""
    cdef Py_ssize_t batch = psi.shape[0], dim = psi.shape[1]
    cdef Py_ssize_t stride = _stride_for(dim, wire)
    cdef Py_ssize_t blocks = dim // (2 * stride)
    cdef Py_ssize_t b, blk, base, off, i0, i1
    cdef double acc
    out = np.empty(batch, dtype=np.float64)
    cdef double[::1] out_view = out
    with nogil:
        for b in range(batch):
            acc = 0.0
            for blk in range(blocks):
                base = blk * 2 * stride
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    acc += 2.0 * (
                        psi[b, i0].real * psi[b, i1].real
                        + psi[b, i0].imag * psi[b, i1].imag
                    )
            out_view[b] = acc
    return out
