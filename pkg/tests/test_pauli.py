import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqls_heat.errors import SizeError
from vqls_heat.pauli import (
    PauliDecomposition,
    PauliTerm,
    apply_to_array,
    decompose,
    multiply_strings,
    pauli_matrix,
    reconstruct,
)
from vqls_heat.problems import dirichlet_matrix

LETTERS = "IXYZ"
UNITS = (1, -1, 1j, -1j)


def all_strings(n):
    return ["".join(p) for p in itertools.product(LETTERS, repeat=n)]


def trace_oracle(a):
    """Brute force: c_P = Tr(P A) / 2^n over every string, with dense P."""
    n = int(np.log2(a.shape[0]))
    return {p: np.trace(pauli_matrix(p) @ a) / 2**n for p in all_strings(n)}


def random_hermitian(n, rng):
    m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    return (m + m.conj().T) / 2


strings = st.integers(1, 4).flatmap(lambda n: st.text(LETTERS, min_size=n, max_size=n))


@st.composite
def matrices(draw, real=False, symmetric=False):
    n = draw(st.integers(1, 3))
    dim = 2**n
    elems = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
    re = np.array(draw(st.lists(elems, min_size=dim * dim, max_size=dim * dim))).reshape(dim, dim)
    if real:
        a = re
    else:
        im = np.array(draw(st.lists(elems, min_size=dim * dim, max_size=dim * dim))).reshape(dim, dim)
        a = re + 1j * im
    if symmetric:
        a = (a + a.T) / 2
    return a


class TestPauliMatrix:
    def test_identity(self):
        np.testing.assert_array_equal(pauli_matrix("I"), np.eye(2))

    def test_y(self):
        np.testing.assert_array_equal(pauli_matrix("Y"), [[0, -1j], [1j, 0]])

    def test_xz_entries(self):
        expected = np.zeros((4, 4))
        expected[0, 2], expected[1, 3], expected[2, 0], expected[3, 1] = 1, -1, 1, -1
        np.testing.assert_array_equal(pauli_matrix("XZ"), expected)

    def test_cap(self):
        with pytest.raises(SizeError):
            pauli_matrix("I" * 9)

    def test_invalid_letter(self):
        with pytest.raises(ValueError):
            pauli_matrix("XA")

    @given(strings)
    def test_hermitian_and_involutory(self, p):
        m = pauli_matrix(p)
        np.testing.assert_array_equal(m, m.conj().T)
        np.testing.assert_allclose(m @ m, np.eye(m.shape[0]), atol=1e-15)

    @given(strings, st.integers(0, 2**32 - 1))
    def test_permutation_action_matches_dense(self, p, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=2 ** len(p)) + 1j * rng.normal(size=2 ** len(p))
        np.testing.assert_allclose(apply_to_array(p, v), pauli_matrix(p) @ v, atol=1e-13)


class TestMultiply:
    def test_involution(self):
        assert multiply_strings("X", "X") == (1, "I")

    def test_xy(self):
        assert multiply_strings("X", "Y") == (1j, "Z")

    def test_two_qubit(self):
        phase, r = multiply_strings("XZ", "XI")
        assert (phase, r) == (1, "IZ")
        np.testing.assert_allclose(pauli_matrix("XZ") @ pauli_matrix("XI"), phase * pauli_matrix(r))

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            multiply_strings("XZ", "X")

    @given(st.integers(1, 4).flatmap(
        lambda n: st.tuples(*[st.text(LETTERS, min_size=n, max_size=n)] * 2)))
    def test_dense_product(self, pair):
        p, q = pair
        phase, r = multiply_strings(p, q)
        assert phase in UNITS
        np.testing.assert_allclose(pauli_matrix(p) @ pauli_matrix(q), phase * pauli_matrix(r), atol=1e-14)

    def test_associativity(self, rng):
        for _ in range(50):
            p, q, r = ("".join(rng.choice(list(LETTERS), size=3)) for _ in range(3))
            a1, pq = multiply_strings(p, q)
            a2, left = multiply_strings(pq, r)
            b1, qr = multiply_strings(q, r)
            b2, right = multiply_strings(p, qr)
            assert left == right
            assert a1 * a2 == pytest.approx(b1 * b2)


class TestDecompose:
    def test_identity(self):
        for n in (1, 2, 3):
            d = decompose(np.eye(2**n))
            assert d.strings == ["I" * n]
            assert d.coefficients[0] == 1.0

    def test_test_matrix(self):
        a = pauli_matrix("II") + 0.2 * pauli_matrix("XZ") + 0.2 * pauli_matrix("XI")
        d = decompose(a)
        assert dict(zip(d.strings, d.coefficients)) == pytest.approx({"II": 1.0, "XZ": 0.2, "XI": 0.2})

    def test_laplacian_golden(self):
        d = decompose(dirichlet_matrix(8))
        expected = {
            "III": 2.0, "XXX": -0.25, "XYY": 0.25, "YXY": -0.25, "YYX": -0.25,
            "IXX": -0.5, "IYY": -0.5, "IIX": -1.0,
        }
        got = dict(zip(d.strings, d.coefficients))
        assert set(got) == set(expected)
        for s, c in expected.items():
            assert abs(got[s] - c) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_trace_oracle(self, n, rng):
        for _ in range(5):
            a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
            oracle = trace_oracle(a)
            got = dict(zip(decompose(a).strings, decompose(a).coefficients))
            for p, c in oracle.items():
                assert abs(got.get(p, 0) - c) < 1e-12

    def test_pruning(self):
        a = np.eye(4) + 1e-13 * pauli_matrix("ZZ")
        assert decompose(a).strings == ["II"]
        assert set(decompose(a, tolerance=1e-14).strings) == {"II", "ZZ"}

    @pytest.mark.parametrize("shape", [(3, 3), (4, 2), (1, 1), (6, 6)])
    def test_bad_shapes(self, shape):
        with pytest.raises(SizeError):
            decompose(np.ones(shape))

    def test_round_trip_random_hermitian(self, rng):
        a = random_hermitian(3, rng)
        np.testing.assert_allclose(reconstruct(decompose(a)), a, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(matrices())
    def test_round_trip(self, a):
        np.testing.assert_allclose(reconstruct(decompose(a)), a, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(matrices())
    def test_parseval(self, a):
        d = decompose(a, tolerance=0.0)
        lhs = np.sum(np.abs(d.coefficients) ** 2) * 2**d.n_qubits
        assert lhs == pytest.approx(np.linalg.norm(a, "fro") ** 2, rel=1e-8, abs=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(matrices(real=True, symmetric=True))
    def test_real_symmetric_gives_real_coefficients(self, a):
        d = decompose(a)
        assert np.all(np.abs(d.coefficients.imag) < 1e-12)

    def test_no_duplicates(self, rng):
        d = decompose(random_hermitian(3, rng))
        assert len(set(d.strings)) == len(d.strings)


class TestDecompositionType:
    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            PauliDecomposition(1, (PauliTerm(1, "X"), PauliTerm(2, "X")))

    def test_length_checked(self):
        with pytest.raises(SizeError):
            PauliDecomposition(2, (PauliTerm(1, "X"),))

    def test_from_terms_merges(self):
        d = PauliDecomposition.from_terms([(1, "XZ"), (0.5, "XZ"), (2, "II")])
        assert dict(zip(d.strings, d.coefficients)) == {"XZ": 1.5, "II": 2}

    def test_json_schema_and_round_trip(self, rng):
        d = decompose(random_hermitian(2, rng))
        data = json.loads(d.to_json())
        assert set(data) == {"n", "terms"}
        assert all(set(t) == {"string", "re", "im"} for t in data["terms"])
        back = PauliDecomposition.from_json(d.to_json())
        assert back.strings == d.strings
        np.testing.assert_array_equal(back.coefficients, d.coefficients)

    def test_no_negative_zero_in_json(self):
        assert "-0.0" not in decompose(dirichlet_matrix(8)).to_json()
