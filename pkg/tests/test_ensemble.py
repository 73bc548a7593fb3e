import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaselab.ensemble import (
    COMPLEX,
    REAL,
    SIGN,
    TORUS,
    EnsembleFormatError,
    MeasurementEnsemble,
    ProjectiveVector,
    b_map,
    canonicalize,
    ensemble_from_dict,
    ensemble_to_dict,
    fractional_dft_3,
    fractional_dft_stack,
    hermitian_basis,
    identity_ensemble,
    injective_3x8_example,
    intensity_map,
    lift,
    load_ensemble,
    projective_distance,
    root_intensity_map,
    save_ensemble,
    super_analysis_operator,
)

from conftest import random_ensemble, random_vector

R2 = 1 / math.sqrt(2)


@pytest.fixture
def tri_c(three_vectors):
    return MeasurementEnsemble(three_vectors, COMPLEX)


class TestMeasurementEnsemble:
    def test_field_inferred_from_dtype(self):
        assert MeasurementEnsemble(np.eye(2)).field == REAL
        assert MeasurementEnsemble(np.eye(2) * 1j).field == COMPLEX

    def test_matrix_is_read_only(self):
        Phi = MeasurementEnsemble(np.eye(2))
        with pytest.raises(ValueError):
            Phi.matrix[0, 0] = 5

    def test_does_not_alias_input(self):
        a = np.eye(2)
        Phi = MeasurementEnsemble(a)
        a[0, 0] = 7
        assert Phi.matrix[0, 0] == 1

    @pytest.mark.parametrize(
        "matrix, field",
        [
            (np.zeros((0, 3)), None),
            (np.array([[1.0, np.nan]]), None),
            (np.array([[1.0, np.inf]]), None),
            (np.array([[1 + 1j]]), REAL),
            (np.eye(2), "quaternion"),
            (np.zeros((2, 2, 2)), None),
        ],
    )
    def test_rejects_invalid(self, matrix, field):
        with pytest.raises(ValueError):
            MeasurementEnsemble(matrix, field)

    def test_real_field_accepts_zero_imaginary_part(self):
        Phi = MeasurementEnsemble(np.eye(2) + 0j, REAL)
        assert Phi.matrix.dtype == float

    def test_shape_accessors(self):
        Phi = injective_3x8_example()
        assert (Phi.M, Phi.N) == (3, 8)
        assert len(Phi.columns) == 8


class TestMaps:
    def test_intensity_of_one_i(self, tri_c):
        np.testing.assert_allclose(intensity_map(np.array([1, 1j]), tri_c), [1, 1, 2], atol=1e-15)
        np.testing.assert_allclose(intensity_map(np.array([1, -1j]), tri_c), [1, 1, 2], atol=1e-15)

    @pytest.mark.parametrize("fn", [intensity_map, root_intensity_map])
    def test_zero_input(self, fn, tri_c):
        assert np.all(fn(np.zeros(2), tri_c) == 0)

    def test_identity_picks_coordinates(self):
        Phi = identity_ensemble(2)
        np.testing.assert_array_equal(intensity_map(np.array([1.0, 0.0]), Phi), [1, 0])
        np.testing.assert_array_equal(root_intensity_map(np.array([3.0, 0.0]), Phi), [3, 0])

    def test_root_intensity(self, tri_c):
        np.testing.assert_allclose(root_intensity_map(np.array([1, 1j]), tri_c), [1, 1, math.sqrt(2)])

    def test_b_map_follows_inner_product_convention(self, tri_c):
        # <(1, i), (1, 1)> = 1 + i, squared = 2i
        np.testing.assert_allclose(b_map(np.array([1, 1j]), tri_c), [1, -1, 2j], atol=1e-15)

    def test_b_map_zero(self, tri_c):
        assert np.all(b_map(np.zeros(2), tri_c) == 0)

    @pytest.mark.parametrize("bad", [np.zeros(3), np.zeros((3, 2))])
    def test_dimension_mismatch(self, bad, tri_c):
        with pytest.raises(ValueError):
            intensity_map(bad, tri_c)

    def test_field_mismatch(self):
        with pytest.raises(ValueError):
            intensity_map(np.array([1, 1j]), identity_ensemble(2))

    def test_batched_columns(self, rng):
        Phi = random_ensemble(rng, 3, 5, COMPLEX)
        X = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        out = intensity_map(X, Phi)
        for k in range(4):
            np.testing.assert_allclose(out[:, k], intensity_map(X[:, k], Phi))

    @pytest.mark.parametrize("field", [REAL, COMPLEX])
    def test_gauge_invariance(self, field, rng):
        for _ in range(200):
            Phi = random_ensemble(rng, 4, 7, field)
            x = random_vector(rng, 4, field)
            c = np.exp(1j * rng.uniform(0, 2 * np.pi)) if field == COMPLEX else rng.choice([-1.0, 1.0])
            a, b = intensity_map(x, Phi), intensity_map(c * x, Phi)
            assert np.max(np.abs(a - b)) <= 1e-12 * np.max(a)

    def test_b_map_sign_invariance(self, rng):
        for _ in range(200):
            Phi = random_ensemble(rng, 3, 6, COMPLEX)
            x = random_vector(rng, 3, COMPLEX)
            a, b = b_map(x, Phi), b_map(-x, Phi)
            assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


class TestLift:
    @pytest.mark.parametrize(
        "x, expected",
        [
            ([1, 0], [[1, 0], [0, 0]]),
            ([0, 0], [[0, 0], [0, 0]]),
            ([1, 1j], [[1, -1j], [1j, 1]]),
        ],
    )
    def test_examples(self, x, expected):
        np.testing.assert_array_equal(lift(np.array(x)), np.array(expected))

    def test_hermitian_psd_rank_one(self, rng):
        x = random_vector(rng, 4, COMPLEX)
        L = lift(x)
        np.testing.assert_array_equal(L, L.conj().T)
        ev = np.linalg.eigvalsh(L)
        assert ev[0] > -1e-12 and np.sum(ev > 1e-10 * ev[-1]) == 1


class TestProjective:
    @pytest.mark.parametrize(
        "x, y, d",
        [([1, 0], [-1, 0], 0.0), ([1, 0], [0, 1], math.sqrt(2)), ([2, 0], [1, 0], 1.0)],
    )
    def test_distance_examples(self, x, y, d):
        assert projective_distance(np.array(x, float), np.array(y, float)) == pytest.approx(d, abs=1e-15)

    def test_distance_accepts_projective_vectors(self):
        d = projective_distance(ProjectiveVector(np.array([2.0, 0])), ProjectiveVector(np.array([1.0, 0])))
        assert d == 1.0

    def test_torus_rejected(self):
        v = ProjectiveVector(np.array([1, 1j]), TORUS)
        with pytest.raises(ValueError):
            projective_distance(v, v)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            projective_distance(np.zeros(2), np.zeros(3))

    def test_metric_axioms(self, rng):
        for _ in range(1000):
            x, y, z = (rng.standard_normal(3) for _ in range(3))
            dxy, dyz, dxz = projective_distance(x, y), projective_distance(y, z), projective_distance(x, z)
            assert dxy == pytest.approx(projective_distance(y, x), abs=1e-15)
            assert dxz <= dxy + dyz + 1e-12
            assert projective_distance(x, -x) == 0

    def test_equality_modulo_group(self):
        assert ProjectiveVector(np.array([1.0, 2.0])) == ProjectiveVector(np.array([-1.0, -2.0]))
        assert ProjectiveVector(np.array([1.0, 2.0])) != ProjectiveVector(np.array([1.0, -2.0]))
        z = np.array([1 + 2j, 3j])
        assert ProjectiveVector(z, TORUS) == ProjectiveVector(np.exp(0.7j) * z, TORUS)
        assert ProjectiveVector(z, TORUS) != ProjectiveVector(z.conj(), TORUS)

    def test_sign_group_requires_real(self):
        with pytest.raises(ValueError):
            ProjectiveVector(np.array([1j, 0]), SIGN)


class TestCanonicalize:
    @pytest.mark.parametrize(
        "x, expected",
        [
            ([1j, 0], [1, 0]),
            ([1.0, -2.0], [-1.0, 2.0]),
            ([1 + 1j, 1 + 1j], [math.sqrt(2), math.sqrt(2)]),
        ],
    )
    def test_examples(self, x, expected):
        np.testing.assert_allclose(canonicalize(np.array(x)), expected, atol=1e-15)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            canonicalize(np.zeros(3))

    def test_last_entry_real_positive(self, rng):
        x = random_vector(rng, 4, COMPLEX)
        c = canonicalize(x)
        assert c[-1].imag == 0 and c[-1].real > 0

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False), min_size=1, max_size=5),
        st.floats(0, 2 * np.pi),
    )
    def test_idempotent_and_gauge_invariant(self, entries, t):
        x = np.array(entries, dtype=complex)
        if np.max(np.abs(x)) < 1e-6:
            return
        x[np.abs(x) < 1e-6] = 0
        c = canonicalize(x)
        np.testing.assert_allclose(canonicalize(c), c, rtol=1e-12, atol=0)
        np.testing.assert_allclose(canonicalize(np.exp(1j * t) * x), c, rtol=0, atol=1e-12 * np.linalg.norm(x))


class TestHermitianBasis:
    def test_m1(self):
        B = hermitian_basis(1)
        np.testing.assert_array_equal(B.elements, [[[1]]])

    def test_m2_basis_elements(self):
        expected = [
            [[1, 0], [0, 1]],
            [[0, 0], [0, 1]],
            [[0, R2], [R2, 0]],
            [[0, 1j * R2], [-1j * R2, 0]],
        ]
        np.testing.assert_allclose(hermitian_basis(2).elements, expected, atol=1e-15)

    @pytest.mark.parametrize("M", [1, 2, 3, 5])
    def test_independent_and_self_adjoint(self, M):
        B = hermitian_basis(M)
        assert len(B.elements) == M * M
        for E in B.elements:
            np.testing.assert_array_equal(E, E.conj().T)
        assert np.linalg.matrix_rank(B.change_of_coordinates) == M * M

    def test_coordinates_roundtrip(self, rng):
        B = hermitian_basis(3)
        X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        H = X + X.conj().T
        np.testing.assert_allclose(B.to_matrix(B.coordinates(H)), H, atol=1e-12)

    def test_coordinates_of_e1_lift(self):
        # E11 = (E11 + E22) - E22
        np.testing.assert_allclose(hermitian_basis(2).coordinates(lift(np.array([1, 0]))), [1, -1, 0, 0], atol=1e-15)

    def test_rejects_m0(self):
        with pytest.raises(ValueError):
            hermitian_basis(0)


class TestSuperAnalysisOperator:
    def test_row_is_hs_pairing_with_basis(self):
        op = super_analysis_operator(MeasurementEnsemble(np.array([[1.0], [0.0]]), COMPLEX))
        np.testing.assert_allclose(op.matrix, [[1, 0, 0, 0]], atol=1e-15)

    def test_3x8_nullity_one(self):
        op = super_analysis_operator(injective_3x8_example())
        assert op.matrix.shape == (8, 9)
        mats, _ = op.nullspace()
        assert mats.shape[0] == 1

    def test_basis_dimension_mismatch(self):
        with pytest.raises(ValueError):
            super_analysis_operator(injective_3x8_example(), hermitian_basis(2))

    def test_apply_matches_hs_pairing(self, rng):
        Phi = random_ensemble(rng, 3, 5, COMPLEX)
        op = super_analysis_operator(Phi)
        X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        H = X + X.conj().T
        direct = [np.trace(np.outer(p, p.conj()).conj().T @ H).real for p in Phi.columns]
        np.testing.assert_allclose(op.apply(H), direct, atol=1e-12)

    @pytest.mark.parametrize("field", [REAL, COMPLEX])
    def test_lift_identity(self, field, rng):
        for _ in range(500):
            M = int(rng.integers(1, 7))
            N = int(rng.integers(1, 12))
            Phi = random_ensemble(rng, M, N, field)
            x = random_vector(rng, M, field) * rng.uniform(0.1, 10)
            got = super_analysis_operator(Phi).apply(lift(x))
            want = intensity_map(x, Phi)
            tol = 1e-10 * (1 + np.linalg.norm(x) ** 2 * np.linalg.norm(Phi.matrix, axis=0) ** 2)
            assert np.all(np.abs(got - want) <= tol)


class TestFractionalDFT:
    def test_identity_at_zero(self):
        np.testing.assert_allclose(fractional_dft_3(0), np.eye(3), atol=1e-15)

    def test_order_one_is_conjugated_unitary_dft(self):
        w = np.exp(2j * np.pi / 3)
        F = np.array([[w ** (j * k) for k in range(3)] for j in range(3)]) / math.sqrt(3)
        np.testing.assert_allclose(fractional_dft_3(1), F, atol=1e-14)

    @pytest.mark.parametrize("branch", ["principal", "alternate"])
    def test_semigroup(self, branch):
        grid = np.linspace(-1.5, 1.5, 7)
        for a in grid:
            for b in grid:
                np.testing.assert_allclose(
                    fractional_dft_3(a, branch) @ fractional_dft_3(b, branch),
                    fractional_dft_3(a + b, branch),
                    atol=1e-9,
                )

    @pytest.mark.parametrize("a", [0.25, 0.5, 1.3])
    def test_unitary(self, a):
        F = fractional_dft_3(a)
        np.testing.assert_allclose(F @ F.conj().T, np.eye(3), atol=1e-14)

    def test_branches_agree_at_integers(self):
        for a in (-2, -1, 0, 1, 2, 3):
            np.testing.assert_allclose(fractional_dft_3(a), fractional_dft_3(a, "alternate"), atol=1e-14)

    def test_stack_shape(self):
        Phi = fractional_dft_stack()
        assert (Phi.M, Phi.N, Phi.field) == (3, 12, COMPLEX)

    def test_unknown_branch(self):
        with pytest.raises(ValueError):
            fractional_dft_3(0.5, "sideways")


class TestEnsembleIO:
    @pytest.mark.parametrize(
        "Phi",
        [injective_3x8_example(), identity_ensemble(3), MeasurementEnsemble(np.array([[0.1, 1 / 3], [2e-300, -7.5]]))],
        ids=["3x8", "identity", "awkward-floats"],
    )
    def test_roundtrip_bit_exact(self, Phi, tmp_path):
        p = tmp_path / "e.json"
        save_ensemble(Phi, p)
        back = load_ensemble(p)
        assert back.field == Phi.field
        np.testing.assert_array_equal(back.matrix, Phi.matrix)

    def test_real_bare_numbers(self):
        d = {"field": "real", "M": 2, "N": 1, "columns": [[1, 2.5]]}
        np.testing.assert_array_equal(ensemble_from_dict(d).matrix, [[1], [2.5]])

    def test_complex_pairs_written(self):
        d = ensemble_to_dict(MeasurementEnsemble(np.array([[1j]])))
        assert d["columns"] == [[[0.0, 1.0]]]

    @pytest.mark.parametrize(
        "payload",
        [
            {"field": "real", "M": 1, "N": 1, "columns": [[[0, 1]]]},
            {"field": "real", "M": 1, "N": 0, "columns": []},
            {"field": "real", "M": 2, "N": 2, "columns": [[1, 2], [3]]},
            {"field": "real", "M": 1, "N": 2, "columns": [[1]]},
            {"field": "real", "M": 1, "N": 1},
            {"field": "octonion", "M": 1, "N": 1, "columns": [[1]]},
            {"field": "complex", "M": 1, "N": 1, "columns": [[[1, 2, 3]]]},
            {"field": "complex", "M": 1, "N": 1, "columns": [["x"]]},
            {"field": "real", "M": True, "N": 1, "columns": [[1]]},
            [1, 2],
        ],
    )
    def test_malformed(self, payload):
        with pytest.raises(EnsembleFormatError):
            ensemble_from_dict(payload)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(EnsembleFormatError):
            load_ensemble(p)

    def test_nonfinite_rejected(self, tmp_path):
        p = tmp_path / "nan.json"
        p.write_text(json.dumps({"field": "real", "M": 1, "N": 1, "columns": [[float("nan")]]}))
        with pytest.raises(EnsembleFormatError):
            load_ensemble(p)
