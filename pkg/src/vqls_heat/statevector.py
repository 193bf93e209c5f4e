"""Dense statevector simulation.

Qubit 0 is the most significant bit of a basis index: on three qubits,
``X`` on every qubit maps ``|000>`` to index 7 and ``H`` on qubit 0 of
``|00>`` populates indices 0 and 2.

The array-level helpers (``apply_gate_array`` and friends) act on the last
axis of an ndarray, so a stack of states can be pushed through one gate in a
single call.  The public functions wrap them for :class:`Statevector`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pauli as _pauli
from .errors import SizeError

MAX_QUBITS = 12
NORM_TOL = 1e-10

SINGLE_QUBIT_KINDS = ("H", "X", "Y", "Z", "S", "Sdg", "Ry")
TWO_QUBIT_KINDS = ("CZ", "CNOT")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS + ("ControlledPauliString",)

_SQRT1_2 = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    For ``ControlledPauliString`` the first target is the control and the
    remaining targets are the qubits the letters of ``pauli`` act on.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    pauli: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{self.kind} targets must be distinct, got {self.targets}")
        if any(t < 0 for t in self.targets):
            raise IndexError(f"negative qubit index in {self.targets}")
        if self.kind in SINGLE_QUBIT_KINDS and len(self.targets) != 1:
            raise ValueError(f"{self.kind} takes exactly one target")
        if self.kind in TWO_QUBIT_KINDS and len(self.targets) != 2:
            raise ValueError(f"{self.kind} takes exactly two targets")
        if self.kind == "Ry":
            if self.angle is None:
                raise ValueError("Ry requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        if self.kind == "ControlledPauliString":
            if self.pauli is None:
                raise ValueError("ControlledPauliString requires a pauli string")
            _pauli.validate_string(self.pauli, len(self.targets) - 1)

    def check(self, n_qubits: int) -> None:
        bad = [t for t in self.targets if t >= n_qubits]
        if bad:
            raise IndexError(f"{self.kind} targets {bad} out of range for {n_qubits} qubits")

    def adjoint(self) -> "Gate":
        if self.kind == "Ry":
            return Gate("Ry", self.targets, angle=-self.angle)
        if self.kind == "S":
            return Gate("Sdg", self.targets)
        if self.kind == "Sdg":
            return Gate("S", self.targets)
        return self  # every other kind is Hermitian

    def shifted(self, offset: int) -> "Gate":
        return Gate(self.kind, tuple(t + offset for t in self.targets), self.angle, self.pauli)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            g.check(self.n_qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.adjoint() for g in reversed(self.gates)))

    def embedded(self, offset: int, n_total: int) -> "Circuit":
        """Same gates acting on qubits ``offset..offset+n_qubits-1`` of a larger register."""
        return Circuit(n_total, tuple(g.shifted(offset) for g in self.gates))

    def then(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise SizeError("cannot concatenate circuits on different qubit counts")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def is_real(self) -> bool:
        """True when every gate has a real matrix."""
        for g in self.gates:
            if g.kind in ("Y", "S", "Sdg"):
                return False
            if g.kind == "ControlledPauliString" and g.pauli.count("Y") % 2:
                return False
        return True


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise SizeError(f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> "Statevector":
        v = np.asarray(vec, dtype=complex)
        n = v.shape[0].bit_length() - 1
        if v.ndim != 1 or (1 << n) != v.shape[0] or n < 1:
            raise SizeError(f"vector length {v.shape} is not a power of two")
        if normalize:
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError("cannot normalise the zero vector")
            v = v / norm
        return cls(n, v)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_qubits(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


def init_zero_state(n: int) -> Statevector:
    _check_qubits(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1
    return Statevector(n, amps)


# ---------------------------------------------------------------------------
# array-level kernels


def apply_1q_array(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix on qubit ``q``; ``mat`` may carry leading batch axes
    matching those of ``amps``."""
    batch = amps.shape[:-1]
    view = amps.reshape(batch + (2**q, 2, 2 ** (n - q - 1)))
    a0 = view[..., 0, :]
    a1 = view[..., 1, :]
    m = np.asarray(mat)
    if m.ndim == 2:
        out0 = m[0, 0] * a0 + m[0, 1] * a1
        out1 = m[1, 0] * a0 + m[1, 1] * a1
    else:
        ex = (Ellipsis, None, None)
        out0 = m[..., 0, 0][ex] * a0 + m[..., 0, 1][ex] * a1
        out1 = m[..., 1, 0][ex] * a0 + m[..., 1, 1][ex] * a1
    return np.stack((out0, out1), axis=-2).reshape(amps.shape)


def apply_ry_array(amps: np.ndarray, n: int, q: int, theta) -> np.ndarray:
    """Ry on qubit ``q``; ``theta`` is a scalar or one angle per leading batch row."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    batch = amps.shape[:-1]
    view = amps.reshape(batch + (2**q, 2, 2 ** (n - q - 1)))
    if theta.ndim:
        c = c.reshape(c.shape + (1,) * (view.ndim - 1 - c.ndim))
        s = s.reshape(s.shape + (1,) * (view.ndim - 1 - s.ndim))
    a0 = view[..., 0, :]
    a1 = view[..., 1, :]
    return np.stack((c * a0 - s * a1, s * a0 + c * a1), axis=-2).reshape(amps.shape)


def _bit(n: int, q: int) -> int:
    return 1 << (n - 1 - q)


def cz_signs(n: int, a: int, b: int) -> np.ndarray:
    k = np.arange(2**n)
    both = ((k & _bit(n, a)) != 0) & ((k & _bit(n, b)) != 0)
    return np.where(both, -1.0, 1.0)


def _controlled_pauli_array(amps: np.ndarray, n: int, control: int,
                            p: str, qubits: tuple[int, ...]) -> np.ndarray:
    xmask, phase = _pauli.pauli_action(p, n, qubits)
    k = np.arange(2**n)
    on = (k & _bit(n, control)) != 0
    src = np.where(on, k ^ xmask, k)
    ph = np.where(on, phase[src], 1)
    return ph * amps[..., src]


def apply_gate_array(amps: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    gate.check(n)
    kind = gate.kind
    if kind == "Ry":
        return apply_ry_array(amps, n, gate.targets[0], gate.angle)
    if kind in _FIXED:
        return apply_1q_array(amps, n, gate.targets[0], _FIXED[kind])
    if kind == "CZ":
        return amps * cz_signs(n, *gate.targets)
    if kind == "CNOT":
        return _controlled_pauli_array(amps, n, gate.targets[0], "X", gate.targets[1:])
    return _controlled_pauli_array(amps, n, gate.targets[0], gate.pauli, gate.targets[1:])


def apply_circuit_array(amps: np.ndarray, circuit: Circuit, adjoint: bool = False) -> np.ndarray:
    gates = circuit.adjoint().gates if adjoint else circuit.gates
    for g in gates:
        amps = apply_gate_array(amps, circuit.n_qubits, g)
    return amps


# ---------------------------------------------------------------------------
# Statevector-level operations


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return Statevector(state.n_qubits, apply_gate_array(state.amplitudes, state.n_qubits, gate))


def apply_circuit(state: Statevector, circuit: Circuit, adjoint: bool = False) -> Statevector:
    """Apply ``circuit`` (or its adjoint: reversed, each gate conjugate-transposed)."""
    if circuit.n_qubits != state.n_qubits:
        raise SizeError(f"circuit on {circuit.n_qubits} qubits applied to "
                        f"{state.n_qubits}-qubit state")
    return Statevector(state.n_qubits,
                       apply_circuit_array(state.amplitudes, circuit, adjoint=adjoint))


def apply_pauli_string(state: Statevector, p: str) -> Statevector:
    _pauli.validate_string(p, state.n_qubits)
    return Statevector(state.n_qubits, _pauli.apply_to_array(p, state.amplitudes))


def inner_product(a: Statevector, b: Statevector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise SizeError(f"inner product of {a.n_qubits}- and {b.n_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def sample_counts(state: Statevector, shots: int, seed) -> dict[int, int]:
    """Multinomial histogram of ``shots`` computational-basis measurements.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`
    (an int, a ``SeedSequence`` or a ``Generator``).
    """
    counts = sample_count_array(state.probabilities, shots, seed)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def sample_count_array(probs: np.ndarray, shots: int, seed) -> np.ndarray:
    if int(shots) != shots or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots}")
    p = np.clip(np.asarray(probs, dtype=float), 0, None)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(shots), p)


def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense 2**n x 2**n unitary of ``gate`` (test oracle; small n only)."""
    eye = np.eye(2**n, dtype=complex)
    return apply_gate_array(eye.T, n, gate).T
