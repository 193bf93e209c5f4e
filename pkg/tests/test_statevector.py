import math

import numpy as np
import pytest

from vqls_heat.errors import SizeError
from vqls_heat.pauli import pauli_matrix
from vqls_heat.statevector import (
    Circuit,
    Gate,
    Statevector,
    apply_circuit,
    apply_gate,
    apply_pauli_string,
    init_zero_state,
    inner_product,
    sample_counts,
)

from conftest import SQ, dense_oracle, random_circuit, random_gate, random_state

class TestInitZeroState:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_basis_zero(self, n):
        amps = init_zero_state(n).amplitudes
        expected = np.zeros(2**n)
        expected[0] = 1
        np.testing.assert_array_equal(amps, expected)

    @pytest.mark.parametrize("n", [0, 13])
    def test_out_of_range(self, n):
        with pytest.raises(SizeError):
            init_zero_state(n)

    def test_amplitudes_read_only(self):
        with pytest.raises(ValueError):
            init_zero_state(2).amplitudes[0] = 0


class TestApplyGate:
    def test_hadamard_on_zero(self):
        out = apply_gate(init_zero_state(1), Gate("H", (0,)))
        np.testing.assert_allclose(out.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_ry_zero_is_identity(self, rng):
        psi = random_state(3, rng)
        out = apply_gate(psi, Gate("Ry", (1,), angle=0.0))
        np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)

    def test_ry_matrix_convention(self):
        out = apply_gate(init_zero_state(1), Gate("Ry", (0,), angle=0.8))
        np.testing.assert_allclose(out.amplitudes, [math.cos(0.4), math.sin(0.4)], atol=1e-15)

    def test_x_everywhere_reaches_index_7(self):
        psi = init_zero_state(3)
        for q in range(3):
            psi = apply_gate(psi, Gate("X", (q,)))
        assert np.argmax(np.abs(psi.amplitudes)) == 7
        assert abs(psi.amplitudes[7]) == pytest.approx(1.0)

    def test_qubit_zero_is_most_significant(self):
        out = apply_gate(init_zero_state(2), Gate("X", (0,)))
        assert out.amplitudes[2] == 1

    def test_bad_target(self):
        with pytest.raises(IndexError):
            apply_gate(init_zero_state(2), Gate("X", (2,)))

    def test_gate_validation(self):
        with pytest.raises(ValueError):
            Gate("CZ", (0,))
        with pytest.raises(ValueError):
            Gate("Ry", (0,))
        with pytest.raises(ValueError):
            Gate("CNOT", (1, 1))

    @pytest.mark.parametrize("kind", ["H", "X", "Y", "Z", "S", "Sdg"])
    def test_single_qubit_dense(self, kind, rng):
        psi = random_state(1, rng)
        out = apply_gate(psi, Gate(kind, (0,))).amplitudes
        np.testing.assert_allclose(out, SQ[kind] @ psi.amplitudes, atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_dense_oracle_equivalence(self, n, rng):
        for _ in range(60):
            gate = random_gate(n, rng)
            psi = random_state(n, rng)
            out = apply_gate(psi, gate).amplitudes
            np.testing.assert_allclose(out, dense_oracle(gate, n) @ psi.amplitudes, atol=1e-12)

    def test_norm_preserved(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 6))
            psi = random_state(n, rng)
            out = apply_gate(psi, random_gate(n, rng))
            assert abs(out.norm() - 1) < 1e-10


class TestApplyCircuit:
    def test_empty(self, rng):
        psi = random_state(2, rng)
        out = apply_circuit(psi, Circuit(2))
        np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)

    def test_hh_is_identity(self):
        c = Circuit(1, (Gate("H", (0,)), Gate("H", (0,))))
        np.testing.assert_allclose(apply_circuit(init_zero_state(1), c).amplitudes, [1, 0], atol=1e-12)

    def test_uniform_superposition(self):
        c = Circuit(3, tuple(Gate("H", (q,)) for q in range(3)))
        np.testing.assert_allclose(apply_circuit(init_zero_state(3), c).amplitudes,
                                   np.full(8, 1 / math.sqrt(8)), atol=1e-15)

    def test_qubit_mismatch(self):
        with pytest.raises(SizeError):
            apply_circuit(init_zero_state(2), Circuit(3))

    def test_adjoint_round_trip(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 6))
            c = random_circuit(n, rng)
            psi = random_state(n, rng)
            back = apply_circuit(apply_circuit(psi, c), c, adjoint=True)
            np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-10)


class TestPauliString:
    def test_identity(self, rng):
        psi = random_state(3, rng)
        np.testing.assert_allclose(apply_pauli_string(psi, "III").amplitudes, psi.amplitudes)

    def test_z_on_plus(self):
        plus = Statevector(1, np.array([1, 1]) / math.sqrt(2))
        np.testing.assert_allclose(apply_pauli_string(plus, "Z").amplitudes,
                                   np.array([1, -1]) / math.sqrt(2))

    def test_xz_on_01(self):
        psi = Statevector(2, [0, 1, 0, 0])
        out = apply_pauli_string(psi, "XZ").amplitudes
        np.testing.assert_allclose(out, pauli_matrix("XZ") @ psi.amplitudes)
        np.testing.assert_allclose(out, [0, 0, 0, -1])

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            apply_pauli_string(init_zero_state(2), "XYZ")

    def test_matches_dense(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 5))
            p = "".join(rng.choice(list("IXYZ"), size=n))
            psi = random_state(n, rng)
            np.testing.assert_allclose(apply_pauli_string(psi, p).amplitudes,
                                       pauli_matrix(p) @ psi.amplitudes, atol=1e-14)


class TestInnerProduct:
    def test_normalised(self, rng):
        psi = random_state(3, rng)
        assert inner_product(psi, psi) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert inner_product(Statevector(1, [1, 0]), Statevector(1, [0, 1])) == 0

    def test_plus_zero(self):
        plus = Statevector(1, np.array([1, 1]) / math.sqrt(2))
        assert inner_product(plus, init_zero_state(1)) == pytest.approx(1 / math.sqrt(2))

    def test_conjugate_linear_first(self):
        a = Statevector(1, [1j, 0])
        b = Statevector(1, [1, 0])
        assert inner_product(a, b) == pytest.approx(-1j)

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            inner_product(init_zero_state(1), init_zero_state(2))


class TestSampling:
    def test_deterministic_outcome(self):
        assert sample_counts(init_zero_state(2), 100, seed=1) == {0: 100}

    def test_binomial_statistics(self):
        plus = Statevector(1, np.array([1, 1]) / math.sqrt(2))
        counts = sample_counts(plus, 10**6, seed=5)
        for k in (0, 1):
            assert abs(counts[k] - 5e5) < 5 * 500

    def test_seed_determinism(self, rng):
        psi = random_state(3, rng)
        assert sample_counts(psi, 1000, seed=42) == sample_counts(psi, 1000, seed=42)

    def test_counts_sum(self, rng):
        psi = random_state(4, rng)
        assert sum(sample_counts(psi, 1234, seed=0).values()) == 1234

    def test_zero_shots(self):
        with pytest.raises(ValueError):
            sample_counts(init_zero_state(1), 0, seed=0)

    def test_tv_distance_shrinks(self, rng):
        psi = random_state(3, rng)
        p = psi.probabilities

        def tv(shots):
            vals = []
            for s in range(20):
                counts = sample_counts(psi, shots, seed=s)
                emp = np.zeros(8)
                for k, c in counts.items():
                    emp[k] = c / shots
                vals.append(0.5 * np.abs(emp - p).sum())
            return np.mean(vals)

        dists = [tv(250 * 4**i) for i in range(4)]
        assert all(b < a for a, b in zip(dists, dists[1:]))
        # quadrupling shots should roughly halve the distance
        ratios = np.array(dists[1:]) / np.array(dists[:-1])
        assert np.all((ratios > 0.3) & (ratios < 0.75))
