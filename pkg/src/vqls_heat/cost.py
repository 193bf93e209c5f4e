"""Global and local VQLS cost functions.

Both costs are built from the overlaps

    u[m, m', l] = <0| V^dag A_m'^dag U Z_l U^dag A_m V |0>,     l = 0..n-1
    u[m, m', -1] = <0| V^dag A_m'^dag A_m V |0>

weighted by ``c_m conj(c_m')``.  ``mode`` selects how the overlaps are
obtained: exactly from statevectors, or estimated from simulated Hadamard
tests with a finite number of shots.

u-tables are arrays of shape ``(n + 1, M, M)`` indexed ``[l + 1, m, m']``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzSpec, ansatz_state, ansatz_states
from .errors import DegenerateStateError
from .pauli import apply_to_array
from .problems import LinearProblem
from .statevector import (
    Circuit,
    Gate,
    apply_circuit,
    apply_circuit_array,
    apply_pauli_string,
    inner_product,
    sample_count_array,
)

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class CostMode:
    """``shots=None`` is the exact statevector path; otherwise every overlap is
    a Hadamard-test estimate with ``shots`` samples derived from ``seed``.

    ``real_only`` skips imaginary-part circuits; ``None`` decides from the
    problem (real Pauli strings and a real preparation circuit).
    """

    shots: int | None = None
    seed: int = 0
    real_only: bool | None = None

    def __post_init__(self):
        if self.shots is not None and (int(self.shots) != self.shots or self.shots < 1):
            raise ValueError(f"shot count must be a positive integer, got {self.shots}")

    @classmethod
    def analytic(cls) -> "CostMode":
        return cls()

    @classmethod
    def with_shots(cls, shots: int, seed: int = 0, real_only: bool | None = None) -> "CostMode":
        return cls(int(shots), seed, real_only)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "CostMode":
        """``"analytic"`` or ``"shots:<count>"``."""
        if text == "analytic":
            return cls()
        kind, _, count = text.partition(":")
        if kind != "shots" or not count:
            raise ValueError(f"cost mode must be 'analytic' or 'shots:<count>', got {text!r}")
        return cls(int(count), seed)

    @property
    def is_analytic(self) -> bool:
        return self.shots is None

    def describe(self) -> str:
        return "analytic" if self.is_analytic else f"shots:{self.shots}"

    def reseeded(self, seed: int) -> "CostMode":
        return CostMode(self.shots, seed, self.real_only)


@dataclass(frozen=True, eq=False)
class CostEvaluation:
    value: float
    mode: CostMode
    numerator: float
    denominator: float
    u_table: np.ndarray | None = None

    def u(self, m: int, m_prime: int, l: int) -> complex:
        return complex(self.u_table[l + 1, m, m_prime])


def _real_overlaps(problem: LinearProblem) -> bool:
    # every overlap is real when all strings are real matrices and U is real
    return all(s.count("Y") % 2 == 0 for s in problem.decomposition.strings) and problem.b_prep.is_real()


def _z_signs(n: int) -> np.ndarray:
    """Row ``l + 1`` holds the eigenvalues of ``Z_l`` on each basis index; row 0 is ones."""
    k = np.arange(2**n)
    rows = [np.ones(2**n)]
    rows += [1.0 - 2.0 * ((k >> (n - 1 - l)) & 1) for l in range(n)]
    return np.array(rows)


def _check_indices(problem: LinearProblem, m: int, m_prime: int, l: int) -> None:
    M = len(problem.decomposition)
    if not (0 <= m < M and 0 <= m_prime < M):
        raise IndexError(f"term indices ({m}, {m_prime}) out of range for {M} terms")
    if not -1 <= l < problem.n_qubits:
        raise IndexError(f"qubit index l={l} out of range [-1, {problem.n_qubits - 1}]")


def _check_spec(problem: LinearProblem, spec: AnsatzSpec) -> None:
    if spec.n_qubits != problem.n_qubits:
        raise ValueError(f"ansatz has {spec.n_qubits} qubits, problem has {problem.n_qubits}")


# ---------------------------------------------------------------------------
# analytic overlaps


def u_coefficient_analytic(problem: LinearProblem, spec: AnsatzSpec, params,
                           m: int, m_prime: int, l: int) -> complex:
    """Exact ``u[m, m', l]`` via ``<A_m' x| U Z_l U^dag |A_m x>``."""
    _check_indices(problem, m, m_prime, l)
    _check_spec(problem, spec)
    strings = problem.decomposition.strings
    x = ansatz_state(spec, params)
    psi = apply_pauli_string(x, strings[m])
    phi = apply_pauli_string(x, strings[m_prime])
    if l >= 0:
        n = problem.n_qubits
        z = "I" * l + "Z" + "I" * (n - l - 1)
        psi = apply_circuit(psi, problem.b_prep, adjoint=True)
        psi = apply_circuit(apply_pauli_string(psi, z), problem.b_prep)
    return inner_product(phi, psi)


def _term_states(problem: LinearProblem, states: np.ndarray) -> np.ndarray:
    """``U^dag A_m |x>`` for every term: shape ``(..., M, 2**n)``."""
    psi = np.stack([apply_to_array(s, states) for s in problem.decomposition.strings], axis=-2)
    return apply_circuit_array(psi.astype(complex), problem.b_prep, adjoint=True)


def u_tables_analytic(problem: LinearProblem, spec: AnsatzSpec, params) -> np.ndarray:
    """Exact u-tables for one parameter vector ``(n+1, M, M)`` or a batch ``(B, n+1, M, M)``."""
    _check_spec(problem, spec)
    w = _term_states(problem, ansatz_states(spec, params))
    z = _z_signs(problem.n_qubits)
    # u[l, m, p] = sum_k conj(w[p, k]) z[l, k] w[m, k]; U is unitary so row 0 is <A_p x|A_m x>
    return np.einsum("...pk,lk,...mk->...lmp", w.conj(), z, w, optimize=True)


def weighted_sums(u_table: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """``S_l = sum_{m,m'} u[l, m, m'] c_m conj(c_m')`` for every ``l`` (index ``l + 1``)."""
    c = np.asarray(coefficients)
    return np.einsum("...lmp,m,p->...l", u_table, c, c.conj())


_OPERATORS: "weakref.WeakKeyDictionary[LinearProblem, tuple]" = weakref.WeakKeyDictionary()


def _operators(problem: LinearProblem) -> tuple[np.ndarray, np.ndarray]:
    """Row-stacked images of the basis: ``A|k>`` and ``U^dag A|k>``."""
    cached = _OPERATORS.get(problem)
    if cached is None:
        eye = np.eye(2**problem.n_qubits)
        rows = sum(t.coefficient * apply_to_array(t.string, eye) for t in problem.decomposition.terms)
        rotated = apply_circuit_array(np.asarray(rows, dtype=complex), problem.b_prep, adjoint=True)
        cached = _OPERATORS[problem] = (rows, rotated)
    return cached


def numerator_denominator(problem: LinearProblem, spec: AnsatzSpec, params) -> tuple:
    """Batched exact ``(sum_l S_l, S_-1, |<b|Phi>|^2)``.

    The c-weighted double sum over terms factorises through
    ``|Phi> = sum_m c_m A_m |x>``, so this never forms the u-table; it is
    the hot path of the optimizer and agrees with :func:`weighted_sums`.
    """
    _check_spec(problem, spec)
    x = ansatz_states(spec, params)
    rows, rotated_rows = _operators(problem)
    phi = x @ rows
    rotated = x @ rotated_rows
    denom = np.sum(np.abs(phi) ** 2, axis=-1)
    weights = _z_signs(problem.n_qubits)[1:].sum(axis=0)
    numer = np.sum(weights * np.abs(rotated) ** 2, axis=-1)
    overlap = np.abs(rotated[..., 0]) ** 2
    return numer, denom, overlap


def local_from_sums(numer, denom, n: int):
    return 0.5 - numer / (2 * n * denom)


# ---------------------------------------------------------------------------
# Hadamard tests


def _controlled(string: str, n: int) -> Gate:
    return Gate("ControlledPauliString", (0,) + tuple(range(1, n + 1)), pauli=string)


def _z_string(n: int, l: int) -> str:
    return "I" * l + "Z" + "I" * (n - l - 1)


def hadamard_test_tail(problem: LinearProblem, m: int, m_prime: int, l: int,
                       imag: bool = False) -> Circuit:
    """Gates after ``H(ancilla)`` and ``V`` in the u-coefficient Hadamard test.

    Only ``A_m``, ``Z_l`` and ``A_m'^dag`` are controlled; ``U`` and
    ``U^dag`` act unconditionally and cancel on the ancilla-0 branch.
    """
    _check_indices(problem, m, m_prime, l)
    n = problem.n_qubits
    strings = problem.decomposition.strings
    u = problem.b_prep.embedded(1, n + 1)
    gates = [_controlled(strings[m], n)]
    if l >= 0:
        gates += list(u.adjoint().gates)
        gates.append(_controlled(_z_string(n, l), n))
        gates += list(u.gates)
    gates.append(_controlled(strings[m_prime], n))  # Pauli strings are self-adjoint
    if imag:
        gates.append(Gate("Sdg", (0,)))
    gates.append(Gate("H", (0,)))
    return Circuit(n + 1, tuple(gates))


def hadamard_test_circuit(problem: LinearProblem, spec: AnsatzSpec, params,
                          m: int, m_prime: int, l: int, imag: bool = False) -> Circuit:
    """Full ``(n+1)``-qubit circuit; the ancilla is qubit 0."""
    n = problem.n_qubits
    head = Circuit(n + 1, (Gate("H", (0,)),)).then(spec.circuit(params).embedded(1, n + 1))
    return head.then(hadamard_test_tail(problem, m, m_prime, l, imag))


def projector_test_tail(problem: LinearProblem, m: int, m_prime: int, imag: bool = False) -> Circuit:
    """Tail of the test estimating ``<x|A_m'^dag U|0><0|U^dag A_m|x>``.

    The ancilla-1 branch receives ``A_m`` and the ancilla-0 branch ``A_m'``;
    after ``U^dag`` and the closing ``H`` the ancilla parity restricted to
    system outcome ``0...0`` has the desired mean.
    """
    _check_indices(problem, m, m_prime, -1)
    n = problem.n_qubits
    strings = problem.decomposition.strings
    gates = [_controlled(strings[m], n), Gate("X", (0,)),
             _controlled(strings[m_prime], n), Gate("X", (0,))]
    gates += list(problem.b_prep.embedded(1, n + 1).adjoint().gates)
    if imag:
        gates.append(Gate("Sdg", (0,)))
    gates.append(Gate("H", (0,)))
    return Circuit(n + 1, tuple(gates))


def _plus_tensor(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x, x]).astype(complex) / np.sqrt(2)


def _ancilla_parity(state: np.ndarray, shots: int, seed) -> float:
    counts = sample_count_array(np.abs(state) ** 2, shots, seed)
    half = counts.shape[0] // 2
    return (counts[:half].sum() - counts[half:].sum()) / shots


def _split_shots(shots: int, imag: bool) -> tuple[int, int]:
    if not imag:
        return shots, 0
    return max(1, (shots + 1) // 2), max(1, shots // 2)


def _seeds(seed, *key) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        [int(seed) & 0xFFFFFFFF] + [int(k) for k in key])
    re_seed, im_seed = base.spawn(2)
    return re_seed, im_seed


def _estimate(x: np.ndarray, tail_re: Circuit, tail_im: Circuit | None, shots: int, seed) -> complex:
    start = _plus_tensor(x)
    re_shots, im_shots = _split_shots(shots, tail_im is not None)
    re_seed, im_seed = seed
    re = _ancilla_parity(apply_circuit_array(start, tail_re), re_shots, re_seed)
    im = 0.0
    if tail_im is not None:
        im = _ancilla_parity(apply_circuit_array(start, tail_im), im_shots, im_seed)
    return complex(re, im)


def u_coefficient_hadamard(problem: LinearProblem, spec: AnsatzSpec, params,
                           m: int, m_prime: int, l: int, shots: int, seed,
                           imag: bool = True) -> complex:
    """Hadamard-test estimate of ``u[m, m', l]``.

    ``shots`` are split between the real-part circuit and the ``S^dag``
    variant for the imaginary part; ``imag=False`` spends them all on the
    real part and reports zero imaginary part.
    """
    if int(shots) != shots or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots}")
    _check_spec(problem, spec)
    x = ansatz_states(spec, params)
    tail_re = hadamard_test_tail(problem, m, m_prime, l)
    tail_im = hadamard_test_tail(problem, m, m_prime, l, imag=True) if imag else None
    return _estimate(x, tail_re, tail_im, int(shots), _seeds(seed, m, m_prime, l + 1))


def u_table_hadamard(problem: LinearProblem, spec: AnsatzSpec, params, mode: CostMode) -> np.ndarray:
    """All u-coefficients from Hadamard tests, each with ``mode.shots`` shots.

    Only ``m' <= m`` is measured; the rest follow from ``u[m', m] = conj(u[m, m'])``.
    Each coefficient draws from its own ``SeedSequence`` keyed on
    ``(seed, l, m, m')`` so evaluation order never changes results.
    """
    _check_spec(problem, spec)
    n = problem.n_qubits
    M = len(problem.decomposition)
    real_only = _real_overlaps(problem) if mode.real_only is None else mode.real_only
    x = ansatz_states(spec, params)
    table = np.zeros((n + 1, M, M), dtype=complex)
    for l in range(-1, n):
        for m in range(M):
            for mp in range(m + 1):
                want_imag = not real_only and m != mp
                tail_re = hadamard_test_tail(problem, m, mp, l)
                tail_im = hadamard_test_tail(problem, m, mp, l, imag=True) if want_imag else None
                est = _estimate(x, tail_re, tail_im, mode.shots, _seeds(mode.seed, m, mp, l + 1))
                table[l + 1, m, mp] = est
                table[l + 1, mp, m] = np.conj(est)
    return table


def projector_table_hadamard(problem: LinearProblem, spec: AnsatzSpec, params,
                             mode: CostMode) -> np.ndarray:
    """Estimates of ``<x|A_m'^dag U|0><0|U^dag A_m|x>`` as an ``(M, M)`` table."""
    M = len(problem.decomposition)
    real_only = _real_overlaps(problem) if mode.real_only is None else mode.real_only
    x = ansatz_states(spec, params)
    n = problem.n_qubits
    table = np.zeros((M, M), dtype=complex)
    sys_zero = 2**n
    for m in range(M):
        for mp in range(m + 1):
            want_imag = not real_only and m != mp
            start = _plus_tensor(x)
            re_shots, im_shots = _split_shots(mode.shots, want_imag)
            re_seed, im_seed = _seeds(mode.seed, m, mp, 1000)
            parts = []
            for tail_imag, shots, seed in ((False, re_shots, re_seed), (True, im_shots, im_seed)):
                if tail_imag and not want_imag:
                    parts.append(0.0)
                    continue
                out = apply_circuit_array(start, projector_test_tail(problem, m, mp, tail_imag))
                counts = sample_count_array(np.abs(out) ** 2, shots, seed)
                parts.append((counts[0] - counts[sys_zero]) / shots)
            est = complex(parts[0], parts[1])
            table[m, mp] = est
            table[mp, m] = np.conj(est)
    return table


# ---------------------------------------------------------------------------
# cost assembly


def u_table(problem: LinearProblem, spec: AnsatzSpec, params, mode: CostMode | None = None) -> np.ndarray:
    mode = mode or CostMode()
    if mode.is_analytic:
        return u_tables_analytic(problem, spec, params)
    return u_table_hadamard(problem, spec, params, mode)


def _denominator_guard(denom: float) -> None:
    if not denom > DEGENERATE_TOL:
        raise DegenerateStateError(f"<Phi|Phi> = {denom:.3e}: A|x> is numerically null")


def norm_phi_squared(problem: LinearProblem, spec: AnsatzSpec, params,
                     mode: CostMode | None = None) -> float:
    """``<Phi|Phi> = sum_{m,m'} u[m, m', -1] c_m conj(c_m')``."""
    mode = mode or CostMode()
    table = u_table(problem, spec, params, mode)
    return float(weighted_sums(table[:1], problem.decomposition.coefficients)[0].real)


def local_cost(problem: LinearProblem, spec: AnsatzSpec, params,
               mode: CostMode | None = None) -> CostEvaluation:
    """``C = 1/2 - (1/2n) sum_l S_l / S_-1`` with the u-table recorded."""
    mode = mode or CostMode()
    table = u_table(problem, spec, params, mode)
    sums = weighted_sums(table, problem.decomposition.coefficients).real
    numer, denom = float(sums[1:].sum()), float(sums[0])
    _denominator_guard(denom)
    value = float(local_from_sums(numer, denom, problem.n_qubits))
    return CostEvaluation(value, mode, numer, denom, table)


def global_cost(problem: LinearProblem, spec: AnsatzSpec, params,
                mode: CostMode | None = None) -> CostEvaluation:
    """``C_p = 1 - |<b|Phi>|^2 / <Phi|Phi>``; ``numerator`` is ``|<b|Phi>|^2``."""
    mode = mode or CostMode()
    c = np.asarray(problem.decomposition.coefficients)
    if mode.is_analytic:
        _check_spec(problem, spec)
        w = _term_states(problem, ansatz_states(spec, params))
        table = np.einsum("pk,mk->mp", w.conj(), w)[None]
        beta = w[:, 0]  # <b|A_m|x>
        overlap = float(abs(np.dot(c, beta)) ** 2)
    else:
        table = u_table_hadamard(problem, spec, params, mode)[:1]
        proj = projector_table_hadamard(problem, spec, params, mode)
        overlap = float(np.einsum("mp,m,p->", proj, c, c.conj()).real)
    denom = float(weighted_sums(table, c)[0].real)
    _denominator_guard(denom)
    return CostEvaluation(1.0 - overlap / denom, mode, overlap, denom, table)
