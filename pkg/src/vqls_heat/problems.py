"""Linear-system instances: the c0-family test matrices and finite-difference heat problems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, SingularMatrixError, SizeError
from .pauli import PauliDecomposition, decompose, reconstruct
from .statevector import Circuit, Gate, Statevector

SINGULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LinearProblem:
    n_qubits: int
    decomposition: PauliDecomposition
    dense_matrix: np.ndarray
    b_prep: Circuit
    b_raw: np.ndarray
    label: str
    meta: dict | None = None

    @property
    def is_real(self) -> bool:
        return (self.decomposition.is_real() and self.b_prep.is_real()
                and not np.iscomplexobj(self.dense_matrix))

    @property
    def b_state(self) -> np.ndarray:
        return self.b_raw / np.linalg.norm(self.b_raw)


@dataclass(frozen=True)
class BoundarySpec:
    t_bottom: float = 0.0
    t_top: float = 1.0

    def __post_init__(self):
        if self.t_bottom == 0 and self.t_top == 0:
            raise ValueError("boundary temperatures are both zero: right-hand side vanishes")


def _problem(n, matrix, b_prep, b_raw, label, meta=None, decomposition=None):
    if decomposition is None:
        decomposition = decompose(matrix)
    matrix = np.asarray(matrix)
    b_raw = np.asarray(b_raw, dtype=float)
    b_raw.setflags(write=False)
    matrix.setflags(write=False)
    return LinearProblem(n, decomposition, matrix, b_prep, b_raw, label, meta or {})


def build_test_instance(c0: float, n: int) -> LinearProblem:
    """``c0 * I + 0.2 * X0 Z1 + 0.2 * X0`` with ``|b> = H^{(x)n}|0>``."""
    if n < 2:
        raise SizeError("the test instance needs n >= 2")
    if abs(c0) in (0.0, 0.4):
        raise ValueError(f"c0={c0} makes the matrix singular; |c0| must avoid 0 and 0.4")
    rest = "I" * (n - 2)
    decomposition = PauliDecomposition.from_terms([
        (c0, "I" * n),
        (0.2, "XZ" + rest),
        (0.2, "XI" + rest),
    ])
    matrix = reconstruct(decomposition).real
    b_prep = Circuit(n, tuple(Gate("H", (q,)) for q in range(n)))
    meta = {"family": "test", "c0": float(c0), "n": n}
    return _problem(n, matrix, b_prep, np.ones(2**n), f"test:c0={c0:g},n={n}", meta, decomposition)


def dirichlet_matrix(size: int) -> np.ndarray:
    return 2 * np.eye(size) - np.eye(size, k=1) - np.eye(size, k=-1)


def periodic_matrix(size: int) -> np.ndarray:
    m = dirichlet_matrix(size)
    m[0, -1] -= 1
    m[-1, 0] -= 1
    return m


def _two_point_prep(n_total: int, qubits: list[int], t_first: float, t_last: float) -> list[Gate]:
    """Gates preparing ``t_first |0..0> + t_last |1..1>`` (normalised) on ``qubits``."""
    # Ry(2 pi) = -I restores the sign of a negative single amplitude
    if t_first == 0:
        flip = [Gate("Ry", (qubits[-1],), angle=2 * np.pi)] if t_last < 0 else []
        return [Gate("X", (q,)) for q in qubits] + flip
    if t_last == 0:
        return [Gate("Ry", (qubits[-1],), angle=2 * np.pi)] if t_first < 0 else []
    lead = qubits[-1]
    gates = [Gate("Ry", (lead,), angle=2 * np.arctan2(t_last, t_first))]
    gates.extend(Gate("CNOT", (lead, q)) for q in reversed(qubits[:-1]))
    return gates


def laplacian_1d(n: int, boundary: BoundarySpec | None = None) -> LinearProblem:
    """``tridiag(-1, 2, -1)`` on ``N = 2**n`` interior points; boundary
    temperatures folded into the first and last right-hand-side entries."""
    if not 2 <= n <= 8:
        raise SizeError(f"heat1d supports 2 <= n <= 8, got {n}")
    boundary = boundary or BoundarySpec()
    size = 2**n
    b_raw = np.zeros(size)
    b_raw[0] += boundary.t_bottom
    b_raw[-1] += boundary.t_top
    b_prep = Circuit(n, tuple(_two_point_prep(n, list(range(n)), boundary.t_bottom, boundary.t_top)))
    meta = {"family": "heat1d", "n": n, "t_bottom": boundary.t_bottom, "t_top": boundary.t_top}
    return _problem(n, dirichlet_matrix(size), b_prep, b_raw, f"heat1d:n={n}", meta)


def laplacian_2d(n_per_dim: int, boundary: BoundarySpec | None = None,
                 lateral: str = "dirichlet") -> LinearProblem:
    """Five-point Laplacian on an ``N x N`` interior grid, ``N = 2**n_per_dim``.

    Unknowns are ordered ``(j - 1) * N + (i - 1)`` with ``j`` the y index,
    so the first ``n_per_dim`` qubits address rows.  Bottom/top rows carry
    the Dirichlet temperatures.  ``lateral`` sets the left/right walls:
    ``"dirichlet"`` (held at zero; the operator then has 15 Pauli terms at
    N=8 and 31 at N=16) or ``"periodic"``.
    """
    if not 1 <= n_per_dim <= 4:
        raise SizeError(f"heat2d supports 1 <= n_per_dim <= 4, got {n_per_dim}")
    if lateral not in ("dirichlet", "periodic"):
        raise ValueError(f"lateral boundary must be 'dirichlet' or 'periodic', got {lateral!r}")
    boundary = boundary or BoundarySpec()
    size = 2**n_per_dim
    n = 2 * n_per_dim
    along_y = dirichlet_matrix(size)
    along_x = dirichlet_matrix(size) if lateral == "dirichlet" else periodic_matrix(size)
    eye = np.eye(size)
    matrix = np.kron(along_y, eye) + np.kron(eye, along_x)
    b_raw = np.zeros(size * size)
    b_raw[:size] += boundary.t_bottom
    b_raw[-size:] += boundary.t_top
    y_qubits = list(range(n_per_dim))
    gates = _two_point_prep(n, y_qubits, boundary.t_bottom, boundary.t_top)
    gates += [Gate("H", (q,)) for q in range(n_per_dim, n)]
    meta = {"family": "heat2d", "npd": n_per_dim, "lateral": lateral,
            "t_bottom": boundary.t_bottom, "t_top": boundary.t_top}
    label = f"heat2d:npd={n_per_dim}" + ("" if lateral == "dirichlet" else ",lateral=periodic")
    return _problem(n, matrix, Circuit(n, tuple(gates)), b_raw, label, meta)


def synthesize_b_prep(b) -> Circuit:
    """Preparation circuit for the structured right-hand sides we support:
    a single basis vector, a constant vector, or ``u e_0 + v e_{N-1}``."""
    b = np.asarray(b, dtype=float)
    size = b.shape[0]
    n = size.bit_length() - 1
    if (1 << n) != size or n < 1:
        raise SizeError(f"right-hand side length {size} is not a power of two")
    nz = np.flatnonzero(np.abs(b) > 1e-14)
    if nz.size == 0:
        raise ValueError("right-hand side is zero")
    if nz.size == 1:
        k = int(nz[0])
        gates = [Gate("X", (q,)) for q in range(n) if k >> (n - 1 - q) & 1]
        if b[k] < 0:
            gates.append(Gate("Ry", (0,), angle=2 * np.pi))
        return Circuit(n, tuple(gates))
    if np.allclose(b, b[0]):
        gates = [Gate("H", (q,)) for q in range(n)]
        if b[0] < 0:
            gates.append(Gate("Ry", (0,), angle=2 * np.pi))
        return Circuit(n, tuple(gates))
    if set(nz.tolist()) == {0, size - 1}:
        return Circuit(n, tuple(_two_point_prep(n, list(range(n)), b[0], b[-1])))
    raise ValueError("no preparation circuit for this right-hand side; only basis vectors, "
                     "constant vectors and two-point (first/last) vectors are supported. "
                     "Use a structured preset (test:, heat1d:, heat2d:) instead")


def custom_problem(matrix, b, label: str = "custom") -> LinearProblem:
    a = np.asarray(matrix)
    if np.iscomplexobj(a) and np.allclose(a.imag, 0):
        a = a.real
    circuit = synthesize_b_prep(b)
    if a.shape != (len(b), len(b)):
        raise SizeError(f"matrix shape {a.shape} does not match right-hand side length {len(b)}")
    return _problem(circuit.n_qubits, a, circuit, b, label, {"family": "custom"})


def classical_solve(problem: LinearProblem) -> np.ndarray:
    """Direct LU solve (partial pivoting) of ``A x = b_raw``."""
    a = problem.dense_matrix
    if condition_number(problem) > 1 / np.finfo(float).eps:
        raise SingularMatrixError("matrix is singular to machine precision")
    return np.linalg.solve(a, problem.b_raw)


def condition_number(problem: LinearProblem) -> float:
    sv = np.linalg.svd(problem.dense_matrix, compute_uv=False)
    if sv[-1] < SINGULAR_TOL:
        raise SingularMatrixError(f"smallest singular value {sv[-1]:.3e} below {SINGULAR_TOL}")
    return float(sv[0] / sv[-1])


def _amplitudes(x_hat) -> np.ndarray:
    return x_hat.amplitudes if isinstance(x_hat, Statevector) else np.asarray(x_hat)


def rescale_solution(x_hat, problem: LinearProblem) -> np.ndarray:
    """Real multiple ``s * x_hat`` minimising ``||s A x_hat - b_raw||``."""
    x = _amplitudes(x_hat)
    if np.iscomplexobj(x):
        # strip a global phase before taking the real part
        k = np.argmax(np.abs(x))
        x = (x * np.exp(-1j * np.angle(x[k]))).real
    ax = problem.dense_matrix @ x
    denom = float(ax @ ax)
    if np.sqrt(denom) < 1e-12:
        raise DegenerateStateError("A x_hat vanishes; cannot rescale")
    return float(ax @ problem.b_raw) / denom * x


def fidelity(x_hat, reference) -> float:
    """``|<x_hat|r>|^2`` for normalised vectors; insensitive to phase and sign."""
    r = np.asarray(reference)
    rn = np.linalg.norm(r)
    if rn == 0:
        raise ValueError("reference vector is zero")
    x = _amplitudes(x_hat)
    return float(abs(np.vdot(x / np.linalg.norm(x), r / rn)) ** 2)


def parse_label(label: str) -> LinearProblem:
    """Build a problem from ``test:c0=1,n=3``, ``heat1d:n=3`` or ``heat2d:npd=3``.

    Heat labels also accept ``t1=``/``t2=`` boundary temperatures and heat2d
    accepts ``lateral=periodic``.
    """
    family, _, rest = label.partition(":")
    opts: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"malformed option {item!r} in label {label!r}")
            opts[key.strip()] = value.strip()

    def take(key, cast, default=None):
        if key in opts:
            return cast(opts.pop(key))
        if default is None:
            raise ValueError(f"label {label!r} is missing {key}=")
        return default

    if family == "test":
        problem = build_test_instance(take("c0", float), take("n", int))
    elif family in ("heat1d", "heat2d"):
        boundary = BoundarySpec(take("t1", float, 0.0), take("t2", float, 1.0))
        if family == "heat1d":
            problem = laplacian_1d(take("n", int), boundary)
        else:
            problem = laplacian_2d(take("npd", int), boundary, take("lateral", str, "dirichlet"))
    else:
        raise ValueError(f"unknown problem family {family!r} in label {label!r}")
    if opts:
        raise ValueError(f"unused options {sorted(opts)} in label {label!r}")
    return problem
