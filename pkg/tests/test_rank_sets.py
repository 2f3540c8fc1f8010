import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from preserver_lab.matrix_core import (
    Tolerances, char_poly, eigenvalues, exact_rank, poly_from_roots, poly_mul, rank, x_power,
)
from preserver_lab.rank_sets import (
    DegenerateEpsilonError, DiagonalStratumSpec, JordanSpec, RankStratumSpec, lambda_matrix,
    perturb_jordan_to_generic, random_invertible, sample_commuting_pair, sample_diagonal,
    sample_diagonalizable_rank_k, sample_exact_rank, sample_mixed, sample_nilpotent,
    sample_stratified,
)

TOL = Tolerances()


def nonzero_distinct(b, atol=TOL.spec_atol):
    vals = [v for v, _ in eigenvalues(b, TOL).eigenvalues if abs(v) > atol]
    mult = [m for v, m in eigenvalues(b, TOL).eigenvalues if abs(v) > atol]
    return len(vals), all(m == 1 for m in mult)


class TestLambda:
    def test_values(self):
        np.testing.assert_array_equal(lambda_matrix(3, 2), np.diag([1, 2, 0]))
        np.testing.assert_array_equal(lambda_matrix(3, 3), np.diag([1, 2, 3]))

    def test_ranks(self):
        for n in range(1, 9):
            for k in range(1, n + 1):
                assert rank(lambda_matrix(n, k)) == k

    def test_bad_k(self):
        with pytest.raises(ValueError):
            lambda_matrix(3, 4)


class TestSamplers:
    def test_random_invertible_condition(self):
        for seed in range(20):
            assert np.linalg.cond(random_invertible(5, seed)) <= 100 * (1 + 1e-9)

    def test_exact_rank(self):
        assert rank(sample_exact_rank(RankStratumSpec(4, 2), 3)) == 2
        assert rank(sample_exact_rank(RankStratumSpec(3, 3), 3)) == 3

    def test_exact_rank_singular_values(self):
        # frozen oracle: two singular values below the cutoff, three well above it
        rng = np.random.default_rng(5)
        for _ in range(1000):
            s = np.linalg.svd(sample_exact_rank(RankStratumSpec(5, 3), rng), compute_uv=False)
            assert np.sum(s <= TOL.rank_rtol * s[0]) == 2
            assert s[2] / s[0] > 1e-6

    def test_determinism(self):
        a = sample_exact_rank(RankStratumSpec(4, 2), 11)
        b = sample_exact_rank(RankStratumSpec(4, 2), 11)
        np.testing.assert_array_equal(a, b)

    def test_diagonal_zero_set(self):
        d = sample_diagonal(DiagonalStratumSpec(4, 2, frozenset({0, 3})), 1)
        assert d[0, 0] == 0 and d[3, 3] == 0 and d[1, 1] != 0 and d[2, 2] != 0

    def test_diagonal_spec_checks(self):
        with pytest.raises(ValueError):
            DiagonalStratumSpec(4, 2, frozenset({0}))

    def test_diagonalizable_spectrum(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = sample_diagonalizable_rank_k(5, 3, rng)
            spec = eigenvalues(a, TOL)
            assert spec.multiplicity(0, TOL.spec_atol) == 2
            assert nonzero_distinct(a) == (3, True)
            # char poly factors as x^{n-k} prod(x - lambda_i)
            nz = [v for v, _ in spec.eigenvalues if abs(v) > 1e-7]
            oracle = poly_mul(x_power(2), poly_from_roots(nz))
            assert np.max(np.abs(char_poly(a) - oracle)) < 1e-8

    def test_diagonalizable_is_not_central(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = sample_diagonalizable_rank_k(4, 2, rng)
            b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            assert np.linalg.norm(a @ b - b @ a) > 1e-3

    def test_nilpotent(self):
        rng = np.random.default_rng(4)
        for r in range(0, 4):
            x = sample_nilpotent(4, r, rng)
            assert rank(x) == r
            assert np.linalg.norm(np.linalg.matrix_power(x, 4)) < 1e-8 * (1 + np.linalg.norm(x)) ** 4

    def test_mixed(self):
        rng = np.random.default_rng(5)
        for r in (2, 3):
            x = sample_mixed(5, r, rng)
            spec = eigenvalues(x, TOL)
            assert rank(x) == r
            assert spec.multiplicity(0, TOL.spec_atol) > 5 - r  # nontrivial nilpotent part

    def test_stratified_ranks(self):
        for n in (3, 4, 5, 6):
            for k in range(1, n):
                for i in range(3 * k * 4):
                    kind, r, x = sample_stratified(n, k, i, np.random.default_rng([n, k, i]))
                    assert rank(x) == r <= k

    def test_stratified_covers_kinds(self):
        kinds = {sample_stratified(4, 2, i, i)[0] for i in range(8)}
        assert kinds == {"diagonalizable", "exact", "nilpotent", "mixed"}

    def test_commuting_pair(self):
        for seed in range(20):
            x, y = sample_commuting_pair(4, 2, seed)
            assert np.linalg.norm(x @ y - y @ x) <= 1e-9 * (1 + np.linalg.norm(x) * np.linalg.norm(y))
            assert rank(x) <= 2 and rank(y) <= 2
            x, y = sample_commuting_pair(4, 2, seed, same=True)
            np.testing.assert_array_equal(x, y)


class TestJordanSpec:
    def test_matrix_and_rank(self):
        j = JordanSpec(((5, 2), (0, 1)))
        np.testing.assert_array_equal(j.matrix(), [[5, 1, 0], [0, 5, 0], [0, 0, 0]])
        assert j.n == 3 and j.rank == 2

    def test_json_round_trip(self):
        j = JordanSpec(((1 + 2j, 2), (0, 3)))
        assert JordanSpec.from_json(json.loads(json.dumps(j.to_json()))) == j

    def test_malformed_json(self):
        with pytest.raises(ValueError):
            JordanSpec.from_json({"blocks": [{"eig": [1, 0]}]})
        with pytest.raises(ValueError):
            JordanSpec(((0, 0),))


class TestPerturbation:
    def test_single_nilpotent_block(self):
        j = JordanSpec(((0, 3),))
        b = perturb_jordan_to_generic(j, 0.1)
        d = np.diag(b)
        assert d[0] != 0 and d[1] != 0 and d[0] != d[1] and d[2] == 0
        assert b[0, 1] == 1 and b[1, 2] == 1
        assert exact_rank(b) == 2

    def test_jordan_five_plus_zero(self):
        j = JordanSpec(((5, 2), (0, 1)))
        b = perturb_jordan_to_generic(j, 0.01)
        assert exact_rank(b) == 2
        roots = np.sort_complex(np.roots(poly_from_roots(np.diag(b))[::-1]))
        d = np.diag(b)
        assert abs(d[0] - 5) <= 0.01 and abs(d[1] - 5) <= 0.01 and d[0] != d[1] and d[2] == 0
        np.testing.assert_allclose(np.sort_complex(d), roots, atol=1e-6)

    def test_diagonal_input(self):
        j = JordanSpec(((1, 1), (2, 1), (0, 1)))
        b = perturb_jordan_to_generic(j, 0.05)
        assert np.max(np.abs(b - j.matrix())) <= 0.05
        assert exact_rank(b) == 2

    def test_off_diagonal_untouched(self):
        j = JordanSpec(((0, 2), (3j, 2), (0, 1)))
        a, b = j.matrix(), perturb_jordan_to_generic(j, 0.1)
        off = ~np.eye(j.n, dtype=bool)
        np.testing.assert_array_equal(a[off], b[off])

    def test_degenerate_epsilon(self):
        with pytest.raises(DegenerateEpsilonError):
            perturb_jordan_to_generic(JordanSpec(((1.0, 3),)), 5e-324)
        with pytest.raises(ValueError):
            perturb_jordan_to_generic(JordanSpec(((0, 2),)), 0.0)

    def test_density_proxy(self):
        # B_j -> A with every B_j in the generic stratum
        rng = np.random.default_rng(9)
        for _ in range(10):
            blocks = []
            n = 0
            while n < 5:
                size = int(rng.integers(1, 6 - n))
                eig = 0 if rng.uniform() < 0.5 else complex(*rng.normal(size=2))
                blocks.append((eig, size))
                n += size
            j = JordanSpec(tuple(blocks))
            dists = []
            for p in range(1, 7):
                b = perturb_jordan_to_generic(j, 10.0 ** -p)
                assert exact_rank(b) == j.rank
                d = np.diag(b)
                nz = d[d != 0]
                assert len(nz) == j.rank and len(set(nz.tolist())) == j.rank
                dists.append(np.max(np.abs(b - j.matrix())))
            assert all(x > y for x, y in zip(dists, dists[1:]))
            assert dists[-1] <= 1e-6


jordan_specs = st.lists(
    st.tuples(st.sampled_from([0, 1, -2, 1j, 0.5 - 0.5j, 3]), st.integers(1, 3)),
    min_size=1, max_size=4,
).filter(lambda bl: sum(s for _, s in bl) <= 6).map(lambda bl: JordanSpec(tuple(bl)))


@settings(max_examples=60, deadline=None)
@given(jordan_specs, st.sampled_from([1e-1, 1e-3, 1e-5]))
def test_perturbation_preserves_rank_exactly(j, eps):
    b = perturb_jordan_to_generic(j, eps)
    assert exact_rank(b) == exact_rank(j.matrix()) == j.rank
    assert np.max(np.abs(b - j.matrix())) <= eps
