"""Pauli strings and the decomposition of dense matrices into weighted Pauli sums.

Strings are plain ``str`` objects over ``"IXYZ"``; character ``q`` acts on
qubit ``q`` and qubit 0 is the most significant bit of a basis index, so
``pauli_matrix("XZ") == kron(X, Z)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import hadamard

from .errors import SizeError

PAULI_LETTERS = "IXYZ"
MAX_DENSE_QUBITS = 8
DEFAULT_TOLERANCE = 1e-12

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a, b) -> (phase, letter) with sigma_a sigma_b = phase * sigma_letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def validate_string(p: str, n: int | None = None) -> str:
    if not p or any(ch not in PAULI_LETTERS for ch in p):
        raise ValueError(f"invalid Pauli string {p!r}")
    if n is not None and len(p) != n:
        raise SizeError(f"Pauli string {p!r} has length {len(p)}, expected {n}")
    return p


@lru_cache(maxsize=4096)
def _action(p: str, n_total: int, qubits: tuple[int, ...]) -> tuple[int, np.ndarray]:
    xmask = 0
    zmask = 0
    n_y = 0
    for ch, q in zip(p, qubits):
        bit = 1 << (n_total - 1 - q)
        if ch in "XY":
            xmask |= bit
        if ch in "YZ":
            zmask |= bit
        n_y += ch == "Y"
    k = np.arange(2**n_total)
    parity = np.zeros(k.shape, dtype=np.int64)
    z = k & zmask
    while np.any(z):
        parity ^= z & 1
        z = z >> 1
    phase = (1j**n_y) * (1 - 2 * parity)
    phase.setflags(write=False)
    return xmask, phase


def pauli_action(p: str, n_total: int | None = None,
                 qubits: tuple[int, ...] | None = None) -> tuple[int, np.ndarray]:
    """Return ``(xmask, phase)`` such that ``P|k> = phase[k] |k ^ xmask>``.

    ``qubits`` lists which register qubits the letters act on; by default the
    string covers the whole register.
    """
    if n_total is None:
        n_total = len(p)
    if qubits is None:
        qubits = tuple(range(len(p)))
    return _action(p, n_total, tuple(qubits))


def apply_to_array(p: str, amps: np.ndarray, n_total: int | None = None,
                   qubits: tuple[int, ...] | None = None) -> np.ndarray:
    """Apply a Pauli string to the last axis of ``amps`` (batch axes allowed)."""
    n_total = n_total if n_total is not None else len(p)
    xmask, phase = pauli_action(p, n_total, qubits)
    src = np.arange(amps.shape[-1]) ^ xmask
    return phase[src] * amps[..., src]


def pauli_matrix(p: str) -> np.ndarray:
    """Dense Kronecker product of the single-qubit matrices, qubit 0 leftmost."""
    validate_string(p)
    if len(p) > MAX_DENSE_QUBITS:
        raise SizeError(f"dense Pauli matrices are capped at {MAX_DENSE_QUBITS} qubits")
    out = np.ones((1, 1), dtype=complex)
    for ch in p:
        out = np.kron(out, _SINGLE[ch])
    return out


def multiply_strings(p: str, q: str) -> tuple[complex, str]:
    """Return ``(phase, r)`` with ``P @ Q == phase * R``."""
    validate_string(p)
    validate_string(q)
    if len(p) != len(q):
        raise SizeError(f"cannot multiply strings of length {len(p)} and {len(q)}")
    phase: complex = 1
    letters = []
    for a, b in zip(p, q):
        ph, ch = _PRODUCT[a, b]
        phase *= ph
        letters.append(ch)
    return complex(phase), "".join(letters)


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    string: str


@dataclass(frozen=True)
class PauliDecomposition:
    """A matrix written as ``sum_m c_m A_m`` over distinct Pauli strings."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        strings = [t.string for t in self.terms]
        if len(set(strings)) != len(strings):
            raise ValueError("duplicate Pauli strings in decomposition")
        for s in strings:
            validate_string(s, self.n_qubits)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def strings(self) -> list[str]:
        return [t.string for t in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=complex)

    def is_real(self, tol: float = 1e-12) -> bool:
        """True when every term is a real multiple of a real matrix (even number of Y)."""
        for t in self.terms:
            c = t.coefficient * (1j ** t.string.count("Y"))
            if abs(c.imag) > tol:
                return False
        return True

    def scaled(self, s: complex) -> "PauliDecomposition":
        return PauliDecomposition(self.n_qubits,
                                  tuple(PauliTerm(s * t.coefficient, t.string) for t in self.terms))

    def as_dict(self) -> dict:
        return {
            "n": self.n_qubits,
            "terms": [{"string": t.string, "re": float(np.real(t.coefficient)),
                       "im": float(np.imag(t.coefficient))} for t in self.terms],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PauliDecomposition":
        terms = tuple(PauliTerm(complex(t["re"], t.get("im", 0.0)), t["string"])
                      for t in data["terms"])
        return cls(int(data["n"]), terms)

    @classmethod
    def from_json(cls, text: str) -> "PauliDecomposition":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_terms(cls, pairs) -> "PauliDecomposition":
        """Build from ``(coefficient, string)`` pairs, merging repeated strings."""
        acc: dict[str, complex] = {}
        for c, s in pairs:
            acc[s] = acc.get(s, 0) + complex(c)
        if not acc:
            raise ValueError("empty decomposition")
        n = len(next(iter(acc)))
        return cls(n, tuple(PauliTerm(c, s) for s, c in acc.items()))


def _string_from_masks(x: int, z: int, n: int) -> str:
    letters = []
    for q in range(n):
        bit = 1 << (n - 1 - q)
        letters.append("IZXY"[bool(x & bit) * 2 + bool(z & bit)])
    return "".join(letters)


def _dimension_to_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise SizeError(f"matrix dimension {dim} is not a power of two >= 2")
    return n


def decompose(matrix, tolerance: float = DEFAULT_TOLERANCE) -> PauliDecomposition:
    """Pauli decomposition with coefficients ``Tr(A_m A) / 2**n``.

    Every string is a permutation-with-phase operator, so its trace against
    ``A`` only touches the ``2**n`` entries ``A[k, k ^ xmask]``; the sign
    pattern from the Z/Y part is a Walsh-Hadamard transform over ``k``.
    Terms are ordered by (X-mask, Z-mask) and keep ``|c| > tolerance``.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SizeError(f"expected a square matrix, got shape {a.shape}")
    n = _dimension_to_qubits(a.shape[0])
    if n > MAX_DENSE_QUBITS:
        raise SizeError(f"decomposition is capped at {MAX_DENSE_QUBITS} qubits")
    dim = a.shape[0]
    k = np.arange(dim)
    gathered = a[k[None, :], k[None, :] ^ k[:, None]]  # [x, k] -> A[k, k ^ x]
    raw = gathered @ hadamard(dim).astype(float) / dim  # [x, z]
    terms = []
    for x in range(dim):
        for z in range(dim):
            if abs(raw[x, z]) <= tolerance:
                continue
            s = _string_from_masks(x, z, n)
            # P|k> = i^{#Y} (-1)^{|k & z|} |k ^ x>, so Tr(P A) carries i^{#Y}
            c = raw[x, z] * (1j ** s.count("Y"))
            terms.append(PauliTerm(complex(c.real + 0.0, c.imag + 0.0), s))
    return PauliDecomposition(n, tuple(terms))


def reconstruct(d: PauliDecomposition) -> np.ndarray:
    """Dense ``sum_m c_m A_m``."""
    if d.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(f"dense reconstruction is capped at {MAX_DENSE_QUBITS} qubits")
    dim = 2**d.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    k = np.arange(dim)
    for t in d.terms:
        xmask, phase = pauli_action(t.string)
        out[k ^ xmask, k] += t.coefficient * phase
    return out
