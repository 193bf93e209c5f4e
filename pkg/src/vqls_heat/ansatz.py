"""Fixed-structure hardware-efficient ansatz: Ry rotations interleaved with CZ bricks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SizeError
from .statevector import Circuit, Gate, Statevector, apply_circuit, cz_signs, init_zero_state


LAYOUTS = ("pairs", "columns")


def default_layers(n_qubits: int) -> int:
    return 4 if n_qubits <= 5 else 6


@dataclass(frozen=True)
class AnsatzSpec:
    """Ry column on every qubit, then ``layers`` repetitions of an entangling block.

    ``"pairs"`` (default): two sub-layers, over the pairs (0,1),(2,3),... and
    then (1,2),(3,4),...; each puts a CZ on every pair followed by an Ry on
    both qubits of the pair, so ``param_count == n + 2 * layers * (n - 1)``.

    ``"columns"``: CZ on the even pairs, CZ on the odd pairs, then one Ry
    column on all qubits, so ``param_count == n * (layers + 1)``.  This
    family is cheaper but cannot represent general real states.

    Parameters are consumed in gate order.
    """

    n_qubits: int
    layers: int
    layout: str = "pairs"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("the ansatz needs at least 2 qubits for its CZ entanglers")
        if self.layers < 1:
            raise ValueError("the ansatz needs at least one layer")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")

    @property
    def param_count(self) -> int:
        return self.n_qubits + sum(len(qubits) for _, qubits, _ in self._blocks)

    def sublayer_pairs(self) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        n = self.n_qubits
        return ([(a, a + 1) for a in range(0, n - 1, 2)],
                [(a, a + 1) for a in range(1, n - 1, 2)])

    @cached_property
    def _blocks(self) -> list[tuple[list[tuple[int, int]], list[int], np.ndarray]]:
        """One layer as ``(cz pairs, rotated qubits, folded CZ signs)`` blocks, repeated."""
        n = self.n_qubits
        even, odd = self.sublayer_pairs()
        if self.layout == "pairs":
            layer = [(pairs, [q for pair in pairs for q in pair]) for pairs in (even, odd)]
        else:
            layer = [(even + odd, list(range(n)))]
        blocks = []
        for pairs, qubits in layer:
            signs = np.ones(2**n)
            for a, b in pairs:
                signs = signs * cz_signs(n, a, b)
            blocks.append((pairs, qubits, signs))
        return blocks * self.layers

    def circuit(self, params) -> Circuit:
        params = self._check(params)
        n = self.n_qubits
        gates = [Gate("Ry", (q,), angle=params[q]) for q in range(n)]
        i = n
        for pairs, qubits, _ in self._blocks:
            gates.extend(Gate("CZ", pair) for pair in pairs)
            for q in qubits:
                gates.append(Gate("Ry", (q,), angle=params[i]))
                i += 1
        return Circuit(n, tuple(gates))

    def as_dict(self) -> dict:
        return {"n": self.n_qubits, "layers": self.layers, "param_count": self.param_count,
                "layout": self.layout}

    def _check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.ndim == 0 or params.shape[-1] != self.param_count:
            raise SizeError(f"expected {self.param_count} parameters, got shape {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ValueError("ansatz parameters must be finite")
        return params


def build_ansatz(n: int, layers: int | None = None, layout: str = "pairs") -> AnsatzSpec:
    return AnsatzSpec(n, default_layers(n) if layers is None else layers, layout)


def ansatz_state(spec: AnsatzSpec, params) -> Statevector:
    """``V(params)|0...0>`` through the general gate-by-gate simulator."""
    return apply_circuit(init_zero_state(spec.n_qubits), spec.circuit(params))


def ansatz_states(spec: AnsatzSpec, params) -> np.ndarray:
    """Real amplitudes of ``V(params)|0>`` for a ``(batch, param_count)`` stack.

    Same circuit as :func:`ansatz_state`, in real arithmetic with each CZ
    sub-layer folded into one sign vector.
    """
    params = spec._check(params)
    single = params.ndim == 1
    params = np.atleast_2d(params)
    n = spec.n_qubits
    cos, sin = np.cos(params / 2), np.sin(params / 2)
    amps = np.zeros((params.shape[0], 2**n))
    amps[:, 0] = 1.0
    for q in range(n):
        _rotate_inplace(amps, n, q, cos[:, q], sin[:, q])
    i = n
    for _, qubits, signs in spec._blocks:
        amps *= signs
        for q in qubits:
            _rotate_inplace(amps, n, q, cos[:, i], sin[:, i])
            i += 1
    return amps[0] if single else amps


def _rotate_inplace(amps: np.ndarray, n: int, q: int, c: np.ndarray, s: np.ndarray) -> None:
    view = amps.reshape(amps.shape[0], 2**q, 2, 2 ** (n - q - 1))
    c = c[:, None, None]
    s = s[:, None, None]
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    view[:, :, 0, :] = c * a0 - s * a1
    a1 *= c
    a1 += s * a0
