import math

import numpy as np
import pytest

from vqls_heat.pauli import PauliDecomposition, PauliTerm, pauli_matrix, reconstruct
from vqls_heat.problems import LinearProblem
from vqls_heat.statevector import Circuit, Gate, Statevector, ry_matrix


def random_state(n: int, rng: np.random.Generator) -> Statevector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(n, v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


SQ = {
    "H": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
}
P0 = np.diag([1, 0])
P1 = np.diag([0, 1])


def kron_all(mats):
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out


def embed(n, ops):
    """Dense operator with ``ops[q]`` on qubit q (qubit 0 leftmost)."""
    return kron_all([ops.get(q, np.eye(2)) for q in range(n)])


def dense_oracle(gate: Gate, n: int) -> np.ndarray:
    t = gate.targets
    if gate.kind == "Ry":
        return embed(n, {t[0]: ry_matrix(gate.angle)})
    if gate.kind in SQ:
        return embed(n, {t[0]: SQ[gate.kind]})
    if gate.kind == "CZ":
        return embed(n, {t[0]: P0}) + embed(n, {t[0]: P1, t[1]: SQ["Z"]})
    if gate.kind == "CNOT":
        return embed(n, {t[0]: P0}) + embed(n, {t[0]: P1, t[1]: SQ["X"]})
    ops = {q: pauli_matrix(ch) for q, ch in zip(t[1:], gate.pauli)}
    return embed(n, {t[0]: P0}) + embed(n, {t[0]: P1, **ops})


ALL_KINDS = ["H", "X", "Y", "Z", "S", "Sdg", "Ry", "CZ", "CNOT", "ControlledPauliString"]


def random_gate(n, rng, kinds=None):
    kind = rng.choice(kinds or ALL_KINDS)
    qubits = [int(q) for q in rng.permutation(n)]
    if kind == "Ry":
        return Gate("Ry", (qubits[0],), angle=rng.uniform(-7, 7))
    if kind in ("CZ", "CNOT"):
        return Gate(kind, tuple(qubits[:2]))
    if kind == "ControlledPauliString":
        k = int(rng.integers(1, n))
        letters = "".join(rng.choice(list("IXYZ"), size=k))
        return Gate(kind, tuple(qubits[: k + 1]), pauli=letters)
    return Gate(kind, (qubits[0],))


def random_circuit(n, rng, length=12, kinds=None):
    return Circuit(n, tuple(random_gate(n, rng, kinds) for _ in range(length)))


def dense_circuit(circuit: Circuit) -> np.ndarray:
    """Unitary of ``circuit`` as a product of Kronecker-built gate matrices."""
    out = np.eye(2**circuit.n_qubits, dtype=complex)
    for g in circuit.gates:
        out = dense_oracle(g, circuit.n_qubits) @ out
    return out


def random_problem(n, rng, terms=None, real=False):
    """Random Pauli-sum operator with a random preparation circuit.

    The operator need not be Hermitian; ``real=True`` keeps every overlap real.
    """
    letters = list("IXZ") if real else list("IXYZ")
    count = int(rng.integers(1, 6)) if terms is None else terms
    strings = {"".join(rng.choice(letters, size=n)) for _ in range(count)}
    coeffs = rng.normal(size=len(strings))
    if not real:
        coeffs = coeffs + 1j * rng.normal(size=len(strings))
    d = PauliDecomposition(n, tuple(PauliTerm(complex(c), s) for c, s in zip(coeffs, sorted(strings))))
    kinds = ["H", "X", "Ry", "CZ", "CNOT"] if real else None
    prep = random_circuit(n, rng, length=8, kinds=kinds)
    b = dense_circuit(prep)[:, 0]
    return LinearProblem(n, d, reconstruct(d), prep, b, "random")


# one "PASS/FAIL criterion N" line per acceptance check, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
