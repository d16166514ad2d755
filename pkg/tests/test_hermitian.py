import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhverify import (DimensionError, DomainError, HermitianMatrix, Interval, NotHermitianError,
                      apply_function, decompose, jacobi_eigh, loewner_leq, operator_norm, spectrum_in)
from hhverify.functions import const, exp, identity, neg_abs, square, ScalarFunction
from hhverify.hermitian import ConvergenceError

from conftest import random_matrix

H = HermitianMatrix


class TestConstruction:
    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            H([[1.0, 2.0], [0.0, 1.0]])

    def test_accepts_rounding_level_asymmetry(self):
        A = H([[1.0, 2.0 + 1e-14j], [2.0, 1.0]])
        assert A.dim == 2

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            H(np.zeros((2, 3)))

    def test_scalar_input_is_one_by_one(self):
        assert H(2.5).dim == 1

    def test_immutable(self):
        A = H.identity(2)
        with pytest.raises(ValueError):
            A.data[0, 0] = 3.0

    def test_exchange_round_trip(self, rng):
        A = random_matrix(3, rng)
        rec = A.to_dict()
        assert rec["n"] == 3 and len(rec["re"]) == 3 and len(rec["im"][0]) == 3
        assert H.from_dict(rec) == A

    def test_exchange_validates_hermiticity(self):
        with pytest.raises(NotHermitianError):
            H.from_dict({"n": 2, "re": [[0, 1], [0, 0]], "im": [[0, 0], [0, 0]]})

    def test_exchange_validates_shape(self):
        with pytest.raises(DimensionError):
            H.from_dict({"n": 3, "re": [[0, 1], [1, 0]], "im": [[0, 0], [0, 0]]})


class TestDecompose:
    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_identity(self, method):
        d = decompose(H.identity(3), method)
        np.testing.assert_allclose(d.eigenvalues, [1, 1, 1])
        np.testing.assert_allclose(d.eigenvectors.conj().T @ d.eigenvectors, np.eye(3), atol=1e-14)

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_diagonal_sorted(self, method):
        np.testing.assert_allclose(decompose(H.diag([3, 1]), method).eigenvalues, [1, 3])

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    @pytest.mark.parametrize("n", [1, 2, 5, 8, 16])
    def test_reconstruction_and_unitarity(self, rng, method, n):
        A = random_matrix(n, rng)
        d = decompose(A, method)
        assert np.linalg.norm(d.reconstruct() - A.data, 2) <= 1e-10 * (1 + A.norm)
        assert np.max(np.abs(d.eigenvectors.conj().T @ d.eigenvectors - np.eye(n))) <= 1e-10
        assert np.all(np.diff(d.eigenvalues) >= 0)

    def test_deterministic(self, rng):
        A = random_matrix(6, rng)
        d1, d2 = decompose(A, "jacobi"), decompose(A, "jacobi")
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.eigenvectors, d2.eigenvectors)

    def test_jacobi_agrees_with_lapack(self, rng):
        A = random_matrix(12, rng)
        np.testing.assert_allclose(decompose(A, "jacobi").eigenvalues, decompose(A, "lapack").eigenvalues,
                                   atol=1e-12)

    def test_jacobi_degenerate_spectrum(self, rng):
        from hhverify.invex import random_unitary
        u = random_unitary(5, rng)
        X = (u * np.array([1.0, 1.0, 1.0, -2.0, -2.0])) @ u.conj().T
        w, v, _ = jacobi_eigh(0.5 * (X + X.conj().T))
        np.testing.assert_allclose(np.sort(w), [-2, -2, 1, 1, 1], atol=1e-12)

    def test_jacobi_sweep_cap(self, rng):
        A = random_matrix(6, rng)
        with pytest.raises(ConvergenceError):
            jacobi_eigh(A.data, max_sweeps=1)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            decompose(H.identity(2), "qr")


class TestApplyFunction:
    def test_identity_function(self, rng):
        A = random_matrix(5, rng)
        assert apply_function(identity(), A).allclose(A, 1e-12 * (1 + A.norm))

    def test_square_diagonal(self):
        assert apply_function(square(), H.diag([1, 2])).allclose(H.diag([1, 4]), 1e-14)

    def test_square_against_matrix_product(self):
        A = H([[2.0, 1.0], [1.0, 2.0]])
        expected = A.matmul(A)
        np.testing.assert_allclose(expected, [[5, 4], [4, 5]])
        assert apply_function(square(), A).allclose(expected, 1e-13)

    def test_eigenvalues_are_mapped(self, rng):
        A = random_matrix(4, rng)
        np.testing.assert_allclose(apply_function(exp(), A).eigenvalues, np.sort(np.exp(A.eigenvalues)),
                                   rtol=1e-12)

    def test_domain_violation_names_eigenvalue(self):
        f = identity(Interval.closed(0, 1))
        with pytest.raises(DomainError, match="eigenvalue 2"):
            apply_function(f, H.diag([0.5, 2.0]))


class TestLoewner:
    def test_reflexive(self, rng):
        A = random_matrix(4, rng)
        v = loewner_leq(A, A)
        assert v.holds and v.min_eigenvalue == 0.0

    def test_diagonal(self):
        v = loewner_leq(H.diag([1, 2]), H.diag([2, 3]))
        assert v.holds and v.min_eigenvalue == pytest.approx(1.0)

    def test_incomparable(self):
        A, B = H.diag([0, 2]), H.diag([1, 1])
        # B - A = diag(1, -1)
        assert not loewner_leq(A, B).holds and loewner_leq(A, B).min_eigenvalue == pytest.approx(-1)
        assert not loewner_leq(B, A).holds and loewner_leq(B, A).min_eigenvalue == pytest.approx(-1)

    def test_tolerance_scales(self):
        v = loewner_leq(H.diag([1, 2]), H.diag([2, 3]), scale_tol=1e-6)
        assert v.tolerance == pytest.approx(1e-6 * (1 + 2 + 3))

    def test_explicit_tolerance(self):
        v = loewner_leq(H.diag([1.0]), H.diag([1.0 - 1e-7]), tolerance=1e-6)
        assert v.holds and v.tolerance == 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            loewner_leq(H.identity(2), H.identity(3))

    def test_agrees_with_rayleigh_sampling(self, rng):
        A, B = random_matrix(3, rng), random_matrix(3, rng)
        v = loewner_leq(A, B)
        xs = rng.standard_normal((2000, 3)) + 1j * rng.standard_normal((2000, 3))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
        gap = (B - A).quad_many(xs)
        assert np.min(gap) >= v.min_eigenvalue - 1e-12


class TestNormAndSpectrum:
    def test_zero(self):
        assert operator_norm(H.zeros(3)) == 0.0

    def test_diag(self):
        assert operator_norm(H.diag([-3, 2])) == 3.0

    def test_rayleigh_oracle(self, rng):
        A = random_matrix(6, rng)
        xs = rng.standard_normal((1000, 6)) + 1j * rng.standard_normal((1000, 6))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
        rayleigh = np.max(np.abs(A.quad_many(xs)))
        assert rayleigh <= operator_norm(A) + 1e-8

    def test_spectrum_in_examples(self):
        assert spectrum_in(H.diag([1, 2]), Interval.closed(1, 2))
        assert not spectrum_in(H.diag([1, 2]), Interval.open(1, 2), 1e-9)
        assert spectrum_in(H.diag([0.5, 1.5]), Interval.open(0, 2), 0.1)
        assert not spectrum_in(H.diag([0.05, 1.5]), Interval.open(0, 2), 0.1)

    def test_negative_margin_rejected(self):
        with pytest.raises(ValueError):
            spectrum_in(H.identity(1), Interval.closed(0, 2), -1.0)


class TestIntervals:
    def test_intersect(self):
        iv = Interval(-np.inf, -1.0, True, False).intersect(Interval.closed(-3, 3))
        assert (iv.lo, iv.hi, iv.lo_open, iv.hi_open) == (-3, -1, False, False)

    def test_disjoint(self):
        with pytest.raises(DomainError):
            Interval.closed(0, 1).intersect(Interval.closed(2, 3))

    def test_unbounded_sampling(self):
        with pytest.raises(DomainError):
            Interval.real_line().sampling_bounds()


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_calculus_positivity(seed, n):
    rng = np.random.default_rng(seed)
    A = random_matrix(n, rng)
    c = rng.uniform(-3, 3)
    f = ScalarFunction("shifted_square", lambda t: (t - c) ** 2)
    assert loewner_leq(H.zeros(n), apply_function(f, A)).holds


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_calculus_monotone(seed, n):
    rng = np.random.default_rng(seed)
    A = random_matrix(n, rng)
    f, g = neg_abs(), identity()
    # -|t| <= t everywhere
    assert loewner_leq(apply_function(f, A), apply_function(g, A)).holds


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_calculus_multiplicative_and_linear(seed, n):
    rng = np.random.default_rng(seed)
    A = random_matrix(n, rng)
    f, g = exp(), square()
    prod = ScalarFunction("exp*square", lambda t: np.exp(t) * t ** 2)
    tol = 1e-9 * (1 + A.norm ** 2)
    fa, ga = apply_function(f, A), apply_function(g, A)
    np.testing.assert_allclose(apply_function(prod, A).data, fa.matmul(ga), atol=tol * 10)
    alpha, beta = rng.uniform(-2, 2, size=2)
    lin = ScalarFunction("lin", lambda t: alpha * np.exp(t) + beta * t ** 2)
    assert apply_function(lin, A).allclose(alpha * fa + beta * ga, tol * 10)


@settings(max_examples=30, deadline=None)
@given(seeds, dims)
def test_norm_of_function_is_sup_on_spectrum(seed, n):
    A = random_matrix(n, np.random.default_rng(seed))
    f = const(0.5)
    assert operator_norm(apply_function(exp(), A)) == pytest.approx(np.max(np.exp(A.eigenvalues)), rel=1e-12)
    assert operator_norm(apply_function(f, A)) == pytest.approx(0.5, rel=1e-12)
