import numpy as np
import pytest

from vqls_heat.ansatz import AnsatzSpec, ansatz_state, ansatz_states, build_ansatz, default_layers
from vqls_heat.errors import SizeError
from vqls_heat.problems import classical_solve, laplacian_1d
from vqls_heat.statevector import Gate


def gate_list(spec, params):
    return [(g.kind, g.targets) for g in spec.circuit(params).gates]


class TestLayout:
    def test_two_qubit_single_layer(self):
        spec = build_ansatz(2, 1)
        assert gate_list(spec, np.zeros(spec.param_count)) == [
            ("Ry", (0,)), ("Ry", (1,)), ("CZ", (0, 1)), ("Ry", (0,)), ("Ry", (1,))]

    @pytest.mark.parametrize("n, layers, count", [(3, 1, 6), (4, 2, 12), (5, 3, 20)])
    def test_column_counts(self, n, layers, count):
        assert build_ansatz(n, layers, "columns").param_count == count

    @pytest.mark.parametrize("n, layers", [(2, 1), (3, 2), (4, 4), (5, 4), (6, 6)])
    def test_pair_counts(self, n, layers):
        assert build_ansatz(n, layers).param_count == n + 2 * layers * (n - 1)

    def test_pairs_sequence(self):
        spec = build_ansatz(3, 1)
        assert gate_list(spec, np.zeros(spec.param_count)) == [
            ("Ry", (0,)), ("Ry", (1,)), ("Ry", (2,)),
            ("CZ", (0, 1)), ("Ry", (0,)), ("Ry", (1,)),
            ("CZ", (1, 2)), ("Ry", (1,)), ("Ry", (2,))]

    def test_columns_sequence_skips_unpaired_qubit(self):
        spec = build_ansatz(3, 1, "columns")
        assert gate_list(spec, np.zeros(6)) == [
            ("Ry", (0,)), ("Ry", (1,)), ("Ry", (2,)),
            ("CZ", (0, 1)), ("CZ", (1, 2)),
            ("Ry", (0,)), ("Ry", (1,)), ("Ry", (2,))]

    def test_parameters_in_gate_order(self):
        spec = build_ansatz(3, 2)
        params = np.arange(spec.param_count, dtype=float)
        angles = [g.angle for g in spec.circuit(params).gates if g.kind == "Ry"]
        assert angles == list(params)

    def test_default_depth(self):
        assert default_layers(3) == 4 and default_layers(5) == 4 and default_layers(6) == 6
        assert build_ansatz(4).layers == 4

    @pytest.mark.parametrize("n, layers", [(1, 1), (3, 0)])
    def test_bad_shape(self, n, layers):
        with pytest.raises(ValueError):
            AnsatzSpec(n, layers)

    def test_bad_layout(self):
        with pytest.raises(ValueError):
            AnsatzSpec(3, 1, "ladder")

    def test_serialised(self):
        assert build_ansatz(3, 2).as_dict() == {"n": 3, "layers": 2, "param_count": 11, "layout": "pairs"}


class TestState:
    @pytest.mark.parametrize("layout", ["pairs", "columns"])
    def test_zero_params(self, layout):
        spec = build_ansatz(3, 2, layout)
        out = ansatz_state(spec, np.zeros(spec.param_count)).amplitudes
        np.testing.assert_allclose(out, np.eye(8)[0], atol=1e-15)

    def test_single_rotation(self):
        spec = build_ansatz(2, 1)
        out = ansatz_state(spec, [np.pi, 0, 0, 0]).amplitudes
        assert abs(abs(out[2]) - 1) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            ansatz_state(build_ansatz(3, 1), np.zeros(3))

    def test_non_finite(self):
        spec = build_ansatz(2, 1)
        with pytest.raises(ValueError):
            ansatz_state(spec, [np.nan, 0, 0, 0, 0])

    @pytest.mark.parametrize("layout", ["pairs", "columns"])
    def test_real_and_normalised(self, layout, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            spec = build_ansatz(n, int(rng.integers(1, 4)), layout)
            out = ansatz_state(spec, rng.uniform(-10, 10, spec.param_count)).amplitudes
            assert np.max(np.abs(out.imag)) < 1e-12
            assert abs(np.linalg.norm(out) - 1) < 1e-10

    def test_two_pi_periodicity_up_to_sign(self, rng):
        spec = build_ansatz(4, 2)
        for _ in range(50):
            params = rng.uniform(0, 2 * np.pi, spec.param_count)
            shifted = params.copy()
            shifted[rng.integers(spec.param_count)] += 2 * np.pi
            a = ansatz_state(spec, params).amplitudes
            b = ansatz_state(spec, shifted).amplitudes
            assert abs(abs(np.vdot(a, b)) - 1) < 1e-10
            assert np.allclose(a, b) or np.allclose(a, -b)

    @pytest.mark.parametrize("layout", ["pairs", "columns"])
    def test_batched_matches_simulator(self, layout, rng):
        spec = build_ansatz(5, 2, layout)
        batch = rng.uniform(0, 2 * np.pi, (7, spec.param_count))
        fast = ansatz_states(spec, batch)
        for row, amps in zip(batch, fast):
            np.testing.assert_allclose(amps, ansatz_state(spec, row).amplitudes.real, atol=1e-12)
        np.testing.assert_allclose(ansatz_states(spec, batch[0]), fast[0], atol=0)

    def test_circuit_uses_only_ry_and_cz(self):
        spec = build_ansatz(4, 2)
        assert {g.kind for g in spec.circuit(np.ones(spec.param_count)).gates} == {"Ry", "CZ"}
        assert all(isinstance(g, Gate) for g in spec.circuit(np.ones(spec.param_count)).gates)


def test_pairs_layout_reaches_the_heat_ramp():
    """Constructive check: the ramp is representable, so fitting it directly succeeds."""
    from scipy.optimize import minimize

    spec = build_ansatz(3, 2)
    target = classical_solve(laplacian_1d(3))
    target /= np.linalg.norm(target)
    best = min(minimize(lambda p: 1 - (ansatz_states(spec, p) @ target) ** 2,
                        np.random.default_rng(s).uniform(0, 2 * np.pi, spec.param_count),
                        method="BFGS").fun for s in range(3))
    assert best < 1e-8
