"""Exact statevector simulation of the variational quantum layer.

Circuit family: a Hadamard wall prepares |+...+>, the input vector is
angle-encoded with one RY per qubit, then ``depth`` variational layers run —
each a ring of CNOTs (control i, target (i+1) mod n, ascending; skipped for
a single qubit) followed by one parametrized rotation per qubit whose axis
cycles through the schedule (default x, y, z by layer).  The readout is the
per-qubit X expectation, so the layer maps R^n -> [-1, 1]^n with n*depth
trainable angles.

Gradients use the parameter-shift rule, exact for these gates: every
rotation parameter (variational angles and the encoded inputs alike) gets
(f(p + pi/2) - f(p - pi/2)) / 2, evaluated on the whole batch at once.

Two interchangeable kernel backends exist: a compiled Cython extension and
a NumPy fallback.  Import picks the compiled one when present; set
``TTHPO_KERNELS=python`` or ``=compiled`` to force a choice (forcing
``compiled`` raises if the extension is missing rather than silently
downgrading).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

_AXIS_CODES = {"x": 0, "y": 1, "z": 2}

MAX_QUBITS = 16  # 2**16 complex amplitudes per row = 1 MiB; the sane cap


def load_backend(name: str):
    """Import a kernel backend by name: 'compiled' or 'python'."""
    if name == "compiled":
        from . import _statevec

        return _statevec
    if name == "python":
        from . import _statevec_py

        return _statevec_py
    raise ValueError(f"unknown kernel backend {name!r}")


def _select_backend():
    forced = os.environ.get("TTHPO_KERNELS", "").strip().lower()
    if forced:
        return load_backend(forced), forced
    try:
        return load_backend("compiled"), "compiled"
    except ImportError:
        return load_backend("python"), "python"


_K, _BACKEND_NAME = _select_backend()


def backend_name() -> str:
    """Which kernel backend this process is running on."""
    return _BACKEND_NAME


class WireOutOfRange(IndexError):
    """A gate addressed a qubit index outside the register."""


class ShapeMismatch(ValueError):
    """Input or parameter vector has the wrong length for the layer."""


@dataclass(frozen=True)
class QuantumLayerSpec:
    """Layer shape: ``qubits`` (n) and ``depth`` (q) variational layers.

    ``axis_schedule`` lists rotation axes applied per layer, cycled when
    depth exceeds its length.
    """

    qubits: int
    depth: int
    axis_schedule: tuple[str, ...] = ("x", "y", "z")

    def __post_init__(self) -> None:
        if not (1 <= self.qubits <= MAX_QUBITS):
            raise ValueError(
                f"qubits must be in 1..{MAX_QUBITS}, got {self.qubits}"
            )
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if not self.axis_schedule:
            raise ValueError("axis_schedule must not be empty")
        for axis in self.axis_schedule:
            if axis not in _AXIS_CODES:
                raise ValueError(f"unknown rotation axis {axis!r}")

    @property
    def n_params(self) -> int:
        """Trainable angle count: one rotation per qubit per layer."""
        return self.qubits * self.depth

    def layer_axis(self, layer: int) -> str:
        return self.axis_schedule[layer % len(self.axis_schedule)]


# --------------------------------------------------------- single-state API


@dataclass
class StateVector:
    """A single n-qubit state; amplitudes indexed with qubit 0 as the most
    significant bit."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size & (amps.size - 1) or amps.size < 2:
            raise ShapeMismatch(
                f"amplitude count must be a power of two >= 2, got {amps.shape}"
            )
        self.amplitudes = amps

    @classmethod
    def zero(cls, qubits: int) -> "StateVector":
        """|0...0> on ``qubits`` wires."""
        if not (1 <= qubits <= MAX_QUBITS):
            raise ValueError(f"qubits must be in 1..{MAX_QUBITS}, got {qubits}")
        amps = np.zeros(1 << qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    @property
    def qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_wire(wire: int, qubits: int) -> int:
    if not (0 <= wire < qubits):
        raise WireOutOfRange(f"wire {wire} outside register of {qubits} qubits")
    return int(wire)


def apply_gate(
    state: StateVector,
    gate: str,
    wires: tuple[int, ...] | int,
    angle: float | None = None,
) -> StateVector:
    """Apply one named gate ('h', 'rx', 'ry', 'rz', 'cnot'); returns a new
    state, leaving the input untouched."""
    if isinstance(wires, int):
        wires = (wires,)
    name = gate.lower()
    amps = state.amplitudes.copy()
    psi = amps[np.newaxis, :]
    n = state.qubits
    if name == "cnot":
        if len(wires) != 2:
            raise ShapeMismatch("cnot takes (control, target)")
        control, target = (_check_wire(w, n) for w in wires)
        if control == target:
            raise ShapeMismatch("cnot control and target must differ")
        if angle is not None:
            raise ShapeMismatch("cnot takes no angle")
        _K.apply_cnot(psi, control, target)
    elif name == "h":
        if len(wires) != 1:
            raise ShapeMismatch("h acts on one wire")
        if angle is not None:
            raise ShapeMismatch("h takes no angle")
        _K.apply_h(psi, _check_wire(wires[0], n))
    elif name in ("rx", "ry", "rz"):
        if len(wires) != 1:
            raise ShapeMismatch(f"{name} acts on one wire")
        if angle is None or not np.isfinite(angle):
            raise ShapeMismatch(f"{name} needs a finite angle")
        _K.apply_rot(
            psi,
            _check_wire(wires[0], n),
            _AXIS_CODES[name[1]],
            np.array([float(angle)]),
        )
    else:
        raise ValueError(f"unknown gate {gate!r}")
    return StateVector(amps)


# ----------------------------------------------------------- batched layer


def _validate_batch(spec: QuantumLayerSpec, x: np.ndarray, theta: np.ndarray):
    if x.ndim != 2 or x.shape[1] != spec.qubits:
        raise ShapeMismatch(
            f"inputs must be (batch, {spec.qubits}), got {x.shape}"
        )
    if theta.shape != (spec.n_params,):
        raise ShapeMismatch(
            f"theta must have length {spec.n_params} (= qubits * depth), "
            f"got {theta.shape}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(theta))):
        raise ValueError("non-finite angle fed to the quantum layer")


def _run_circuit(
    spec: QuantumLayerSpec, x: np.ndarray, theta: np.ndarray
) -> np.ndarray:
    batch = x.shape[0]
    n = spec.qubits
    psi = np.zeros((batch, 1 << n), dtype=np.complex128)
    psi[:, 0] = 1.0
    for w in range(n):
        _K.apply_h(psi, w)
    for w in range(n):
        _K.apply_rot(psi, w, _AXIS_CODES["y"], np.ascontiguousarray(x[:, w]))
    shared = np.empty(batch, dtype=np.float64)
    for layer in range(spec.depth):
        if n > 1:
            for w in range(n):
                _K.apply_cnot(psi, w, (w + 1) % n)
        axis = _AXIS_CODES[spec.layer_axis(layer)]
        for w in range(n):
            shared.fill(theta[layer * n + w])
            _K.apply_rot(psi, w, axis, shared)
    return psi


def forward_batch(spec: QuantumLayerSpec, x, theta) -> np.ndarray:
    """Per-qubit X expectations, shape (batch, n)."""
    x = np.asarray(x, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    _validate_batch(spec, x, theta)
    psi = _run_circuit(spec, x, theta)
    out = np.empty((x.shape[0], spec.qubits), dtype=np.float64)
    for w in range(spec.qubits):
        out[:, w] = _K.expect_x(psi, w)
    return out


def forward(spec: QuantumLayerSpec, x, theta) -> np.ndarray:
    """Single-sample forward pass, shape (n,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch(f"forward expects a vector, got shape {x.shape}")
    return forward_batch(spec, x[np.newaxis, :], theta)[0]


def gradient_batch(spec: QuantumLayerSpec, x, theta):
    """Parameter-shift Jacobians for every row.

    Returns ``(d_theta, d_x)`` with shapes (batch, n, n*depth) and
    (batch, n, n): derivatives of each X expectation with respect to every
    variational angle and every encoded input.
    """
    x = np.asarray(x, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    _validate_batch(spec, x, theta)
    batch, n = x.shape
    d_theta = np.empty((batch, n, spec.n_params), dtype=np.float64)
    for p in range(spec.n_params):
        shifted = theta.copy()
        shifted[p] = theta[p] + 0.5 * np.pi
        plus = forward_batch(spec, x, shifted)
        shifted[p] = theta[p] - 0.5 * np.pi
        minus = forward_batch(spec, x, shifted)
        d_theta[:, :, p] = 0.5 * (plus - minus)
    d_x = np.empty((batch, n, n), dtype=np.float64)
    for i in range(n):
        shifted = x.copy()
        shifted[:, i] = x[:, i] + 0.5 * np.pi
        plus = forward_batch(spec, shifted, theta)
        shifted[:, i] = x[:, i] - 0.5 * np.pi
        minus = forward_batch(spec, shifted, theta)
        d_x[:, :, i] = 0.5 * (plus - minus)
    return d_theta, d_x


def gradient(spec: QuantumLayerSpec, x, theta):
    """Single-sample Jacobians: (n, n*depth) for theta and (n, n) for x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch(f"gradient expects a vector, got shape {x.shape}")
    d_theta, d_x = gradient_batch(spec, x[np.newaxis, :], theta)
    return d_theta[0], d_x[0]
