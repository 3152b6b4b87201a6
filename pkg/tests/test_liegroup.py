from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from margulis import linalg
from margulis.errors import NotLoxodromic
from margulis.liegroup import (
    ModelSpec,
    ad_lie,
    ad_matrix,
    adjoint_rep,
    basis,
    from_coords,
    group_element,
    is_loxodromic,
    jordan_decompose,
    jordan_projection,
    one_parameter,
    pi0,
    random_group_element,
    random_loxodromic,
    to_coords,
    weight_table,
)

E = np.array([[0.0, 1.0], [0.0, 0.0]])
F = E.T
H = np.diag([1.0, -1.0])
ROT = np.array([[0.0, -1.0], [1.0, 0.0]])
U = np.array([[1.0, 1.0], [0.0, 1.0]])


def conj(g, X):
    return g @ X @ np.linalg.inv(g)


class TestModel:
    def test_dims(self):
        m = ModelSpec(3)
        assert (m.rep_dim, m.zero_weight_dim) == (8, 2)

    @pytest.mark.parametrize("bad", [1, 0, 2.5])
    def test_rejects_small_n(self, bad):
        with pytest.raises(ValueError):
            ModelSpec(bad)

    def test_rejects_family(self):
        with pytest.raises(ValueError):
            ModelSpec(2, "adjoint_so")

    def test_group_element_flips_odd_det(self):
        g = group_element(-np.eye(3))
        assert np.allclose(g, np.eye(3))

    def test_group_element_rejects(self):
        with pytest.raises(ValueError):
            group_element(2 * np.eye(2))
        with pytest.raises(ValueError):
            group_element(np.diag([1.0, -1.0]))


class TestCoordinates:
    def test_basis_order(self):
        B = basis(2)
        assert np.array_equal(B[0], E) and np.array_equal(B[1], F) and np.array_equal(B[2], H)

    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_round_trip(self, n, seed):
        v = np.random.default_rng(seed).normal(size=n * n - 1)
        X = from_coords(v, n)
        assert abs(np.trace(X)) < 1e-12
        assert np.allclose(to_coords(X), v)

    def test_coordinates_expand_in_basis(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=8)
        assert np.allclose(from_coords(v), sum(c * B for c, B in zip(v, basis(3))))


class TestLoxodromic:
    def test_identity(self):
        assert not is_loxodromic(np.eye(2))

    def test_diag(self):
        assert is_loxodromic(np.diag([2.0, 0.5]))

    def test_rotation(self):
        assert not is_loxodromic(ROT)

    def test_gap_tolerance(self):
        eps = 1e-7
        g = np.diag([np.exp(eps), np.exp(-eps)])
        assert not is_loxodromic(g, 1e-6) and is_loxodromic(g, 1e-8)


class TestJordanProjection:
    def test_identity(self):
        assert np.allclose(jordan_projection(np.eye(2)), [0, 0])

    def test_diag(self):
        assert np.allclose(jordan_projection(np.diag([2.0, 0.5])), [np.log(2), -np.log(2)])

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = random_group_element(2, rng)
            assert np.allclose(jordan_projection(conj(u, np.diag([2.0, 0.5]))), [np.log(2), -np.log(2)])

    def test_sums_to_zero(self):
        rng = np.random.default_rng(2)
        for n in (2, 3, 4, 5):
            assert abs(jordan_projection(random_group_element(n, rng)).sum()) < 1e-9


class TestJordanDecompose:
    def test_diagonal(self):
        fr = jordan_decompose(np.diag([4.0, 1.0, 0.25]))
        assert np.allclose(np.abs(fr.h), np.eye(3))
        assert fr.signs == (1, 1, 1)
        assert np.allclose(fr.jd, np.log([4, 1, 0.25]))

    def test_negative_pattern(self):
        fr = jordan_decompose(np.diag([-2.0, -0.5]))
        assert fr.signs == (-1, -1)
        assert np.allclose(fr.jd, [np.log(2), -np.log(2)])

    def test_conjugated(self):
        g = conj(U, np.diag([2.0, 0.5]))
        fr = jordan_decompose(g)
        assert np.allclose(fr.jd, [np.log(2), -np.log(2)])
        for j in range(2):
            col, ref = fr.h[:, j], U[:, j]
            assert abs(abs(col @ ref) - np.linalg.norm(col) * np.linalg.norm(ref)) < 1e-12
        assert np.allclose(fr.reconstruct(), g)

    def test_conventions(self):
        rng = np.random.default_rng(3)
        for n in (2, 3, 4):
            fr = jordan_decompose(random_loxodromic(n, rng))
            assert abs(np.linalg.det(fr.h) - 1) < 1e-9
            assert np.all(np.diff(fr.jd) < 0)
            assert np.prod(fr.signs) == 1
            for j in range(n - 1):
                col = fr.h[:, j]
                assert abs(np.linalg.norm(col) - 1) < 1e-12
                assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0

    def test_not_loxodromic(self):
        with pytest.raises(NotLoxodromic):
            jordan_decompose(ROT)

    def test_complex_pair_is_not_loxodromic(self):
        # a conjugate pair shares its modulus, so the gap test rejects it first
        g = np.zeros((4, 4))
        g[0, 0], g[3, 3] = 2.0, 0.5
        g[1:3, 1:3] = np.array([[0.6, -0.8], [0.8, 0.6]])
        with pytest.raises(NotLoxodromic):
            jordan_decompose(g)

    def test_frame_ambiguity(self):
        rng = np.random.default_rng(4)
        for n in (2, 3, 4):
            g = random_loxodromic(n, rng)
            fr = jordan_decompose(g)
            for _ in range(20):
                scales = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(-2, 2, n))
                assert np.allclose(fr.rescaled(scales).reconstruct(), g, rtol=1e-8, atol=1e-8 * np.abs(g).max())

    def test_loxodromic_reality(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 4):
            count = 0
            while count < 500:
                g = random_group_element(n, rng)
                if not is_loxodromic(g, 1e-6):
                    continue
                count += 1
                vals = np.linalg.eigvals(g)
                assert np.all(np.abs(vals.imag) <= 1e-8 * np.abs(vals))


class TestAdjoint:
    def test_identity(self):
        for n in (2, 3):
            assert np.allclose(ad_matrix(np.eye(n)), np.eye(n * n - 1))

    def test_diag_example(self):
        g = np.diag([2.0, 0.5])
        Ad = adjoint_rep(g)
        assert np.allclose(Ad, np.diag([4.0, 0.25, 1.0]))
        # independent: conjugate the basis matrices directly
        assert np.allclose(conj(g, E), 4 * E) and np.allclose(conj(g, F), F / 4) and np.allclose(conj(g, H), H)

    def test_matches_direct_conjugation(self):
        rng = np.random.default_rng(6)
        for n in (2, 3, 4):
            g = random_group_element(n, rng)
            X = from_coords(rng.normal(size=n * n - 1), n)
            assert np.allclose(from_coords(ad_matrix(g) @ to_coords(X), n), conj(g, X))

    def test_homomorphism(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 4):
            g, h = random_group_element(n, rng), random_group_element(n, rng)
            assert np.allclose(ad_matrix(g @ h), ad_matrix(g) @ ad_matrix(h))

    def test_exact_matches_float(self):
        rng = np.random.default_rng(8)
        for n in (2, 3, 4):
            g = random_group_element(n, rng)
            exact = ad_matrix(g, exact=True)
            assert exact.dtype == object and isinstance(exact[0, 0], Fraction)
            assert np.allclose(linalg.to_float(exact), ad_matrix(g), atol=1e-12)

    def test_exact_diag(self):
        assert np.array_equal(ad_matrix(np.diag([2.0, 0.5]), exact=True), linalg.exact(np.diag([4.0, 0.25, 1.0])))

    def test_exact_homomorphism_is_exact(self):
        rng = np.random.default_rng(9)
        g = random_group_element(3, rng)
        gi = linalg.to_float(linalg.exact_inverse(g))
        # g^-1 rounded is not the exact inverse, but Ad of g composed with Ad of g's exact inverse is I
        prod = ad_matrix(g, exact=True).dot(_exact_ad_of_inverse(g))
        assert all(v == (1 if i == j else 0) for (i, j), v in np.ndenumerate(prod))
        assert np.allclose(gi @ g, np.eye(3))

    def test_unit_eigenspace_dimension(self):
        rng = np.random.default_rng(10)
        for n in (2, 3, 4):
            for _ in range(20):
                ed = linalg.eigen_decompose(ad_matrix(random_loxodromic(n, rng)))
                assert np.sum(np.abs(ed.values - 1) < 1e-6) == n - 1

    def test_ma_fixing(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 4):
            signs = rng.choice([-1.0, 1.0], n)
            if np.prod(signs) < 0:
                signs[0] *= -1
            a = rng.normal(size=n)
            c = np.diag(signs * np.exp(a - a.mean()))
            X = np.diag(np.concatenate([rng.normal(size=n - 1), [0.0]]))
            X -= np.trace(X) / n * np.eye(n)
            v = to_coords(X)
            assert np.max(np.abs(ad_matrix(c) @ v - v)) <= 1e-12

    def test_one_parameter(self):
        rng = np.random.default_rng(12)
        for n in (2, 3, 4):
            for _ in range(10):
                a = rng.normal(size=n)
                a -= a.mean()
                t = rng.uniform(-1, 1)
                lhs = ad_matrix(one_parameter(a, t))
                rhs = expm(t * ad_lie(np.diag(a)))
                assert np.max(np.abs(lhs - rhs)) <= 1e-8 * max(1.0, np.abs(rhs).max())


def _exact_ad_of_inverse(g):
    n = g.shape[0]
    from margulis.liegroup import _coord_maps

    C, V = _coord_maps(n)
    gq = linalg.exact(g)
    gi = linalg.exact_inverse(gq)
    K = np.kron(gi, gq.T)
    return C.astype(int).astype(object).dot(K).dot(V.astype(int).astype(object))


class TestPi0:
    def test_h(self):
        assert np.allclose(pi0(H), [1.0])

    def test_e(self):
        assert np.allclose(pi0(E), [0.0])

    def test_linear(self):
        assert np.allclose(pi0(H + E), [1.0])

    def test_coords_and_matrix_agree(self):
        rng = np.random.default_rng(13)
        for n in (2, 3, 4):
            X = from_coords(rng.normal(size=n * n - 1), n)
            assert np.allclose(pi0(X), pi0(to_coords(X)))

    def test_offdiagonal_is_complement(self):
        rng = np.random.default_rng(14)
        X = from_coords(rng.normal(size=8), 3)
        D = from_coords(np.concatenate([np.zeros(6), pi0(X)]), 3)
        assert np.allclose(D, np.diag(np.diag(X)))


class TestWeights:
    def test_n2(self):
        wt = weight_table(ModelSpec(2))
        vals = wt.evaluate([1.0, -1.0])
        assert sorted(vals) == [-2.0, 2.0] and wt.zero_multiplicity == 1

    def test_n3_count(self):
        wt = weight_table(ModelSpec(3))
        assert len(wt.weights) == 6 and wt.zero_multiplicity == 2 and wt.dim == 8

    def test_counts(self):
        for n in range(2, 7):
            wt = weight_table(ModelSpec(n))
            assert len(wt.weights) == n * n - n and wt.dim == n * n - 1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_adjoint_of_torus_is_diagonal(self, n, seed):
        a = np.random.default_rng(seed).normal(size=n)
        a -= a.mean()
        wt = weight_table(ModelSpec(n))
        Ad = ad_matrix(expm(np.diag(a)))
        want = np.concatenate([np.exp(wt.evaluate(a)), np.ones(n - 1)])
        assert np.allclose(Ad, np.diag(want), rtol=1e-10, atol=1e-10 * want.max())


class TestGenerators:
    def test_random_group_element(self):
        rng = np.random.default_rng(15)
        for n in (2, 3, 4):
            g = random_group_element(n, rng)
            assert abs(np.linalg.det(g) - 1) < 1e-9

    def test_random_loxodromic(self):
        rng = np.random.default_rng(16)
        for n in (2, 3, 4):
            g = random_loxodromic(n, rng)
            assert is_loxodromic(g) and abs(np.linalg.det(g) - 1) < 1e-9
