import itertools

import numpy as np
import pytest

from preserver_lab.matrix_core import (
    Tolerances, char_poly, eigenvalues, is_nilpotent, matrix_unit, poly_distance, poly_mul,
    poly_pow, rank, spectrum_subset, x_power,
)
from preserver_lab.predicates import FAIL, HYPOTHESES, INCONCLUSIVE_PASS, PASS, Budget, full_hypothesis_report
from preserver_lab.rank_sets import sample_stratified
from preserver_lab.zoo import (
    ZOO_NAMES, block_embed, constant_nilpotent, inner, nilpotent_flip, petek_semrl_2x2,
    scaling_map, slot_fill_nilpotent, trace_reflect, transpose_inner, unit_phase,
    varying_conjugator, verdict_matches, zoo_catalog, zoo_entry,
)

TOL = Tolerances()
E = matrix_unit


def rank_le_k(n, k, count, seed):
    return [sample_stratified(n, k, i, np.random.default_rng([seed, i]))[2] for i in range(count)]


class TestConjugations:
    def test_identity_and_transpose(self):
        x = np.arange(9).reshape(3, 3)
        np.testing.assert_array_equal(inner(np.eye(3), 3, 2)(x), x)
        np.testing.assert_array_equal(transpose_inner(np.eye(3), 3, 2)(x), x.T)
        np.testing.assert_array_equal(transpose_inner(np.eye(3), 3, 2)(E(3, 0, 1)), E(3, 1, 0))

    def test_rank_and_char_poly(self, well_conditioned):
        phi = inner(well_conditioned(4, 1), 4, 2)
        for x in rank_le_k(4, 2, 100, 0):
            y = phi(x)
            assert rank(y) == rank(x)
            assert np.max(np.abs(char_poly(y) - char_poly(x))) < 1e-8

    def test_singular_t(self):
        with pytest.raises(np.linalg.LinAlgError):
            inner(np.diag([1, 1, 0]), 3, 2)


class TestCounterexamples:
    def test_trace_reflect_sets(self):
        phi = trace_reflect(3)
        for x in rank_le_k(3, 1, 200, 1):
            sx, sy = eigenvalues(x, TOL), eigenvalues(phi(x), TOL)
            assert spectrum_subset(sy, sx, TOL) and spectrum_subset(sx, sy, TOL)

    def test_scaling(self):
        y = scaling_map(3, 2)(E(3, 0, 0))
        np.testing.assert_array_equal(y, 2 * E(3, 0, 0))

    def test_varying_conjugator(self):
        phi = varying_conjugator(3, 2)
        x = E(3, 1, 2) + 3 * E(3, 2, 2)
        np.testing.assert_array_equal(phi(x), x)
        for x in rank_le_k(3, 2, 50, 2):
            assert spectrum_subset(eigenvalues(phi(x), TOL), eigenvalues(x, TOL), TOL)

    def test_nilpotent_flip(self):
        phi = nilpotent_flip(3, 2)
        np.testing.assert_array_equal(phi(E(3, 0, 1)), -E(3, 0, 1))
        np.testing.assert_array_equal(phi(E(3, 0, 0)), E(3, 0, 0))

    def test_constant(self):
        phi = constant_nilpotent(3, 2)
        for x in rank_le_k(3, 2, 5, 3):
            np.testing.assert_array_equal(phi(x), E(3, 0, 1))


class TestPetekSemrl:
    def test_displayed_values(self):
        phi = petek_semrl_2x2()
        np.testing.assert_allclose(phi(np.ones((2, 2))), [[1, 1j], [-1j, 1]], atol=1e-12)
        total = phi(np.array([[1, 1], [0, 0]])) + phi(np.array([[0, 0], [1, 1]]))
        np.testing.assert_allclose(total, [[1, -1], [1, 1]], atol=1e-12)

    def test_b_zero_branch(self):
        x = np.array([[2, 0], [3 - 1j, 0]])
        np.testing.assert_array_equal(petek_semrl_2x2()(x), x)

    def test_unit_phase(self):
        assert abs(unit_phase(0) - (-1)) < 1e-15
        assert abs(unit_phase(1) - 1j) < 1e-15
        assert abs(abs(unit_phase(7.3)) - 1) < 1e-15

    def test_spectra_preserved(self):
        phi = petek_semrl_2x2()
        rng = np.random.default_rng(0)
        for _ in range(1000):
            u = rng.normal(size=2) + 1j * rng.normal(size=2)
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            x = np.outer(u, v)
            y = phi(x)
            ex = np.sort_complex(np.linalg.eigvals(x))
            ey = np.sort_complex(np.linalg.eigvals(y))
            assert np.max(np.abs(ex - ey)) <= 1e-10 * (1 + np.linalg.norm(x))


class TestBlockEmbed:
    def test_identity_case(self):
        x = np.arange(9).reshape(3, 3)
        np.testing.assert_array_equal(block_embed(3, 2, 1, 3)(x), x)

    def test_slot_fill(self):
        out = slot_fill_nilpotent(np.array([[1, 2], [3, 4]]), 4)
        expect = np.zeros((4, 4))
        expect[0, 1:] = [1, 2, 3]
        expect[1, 2] = 4
        np.testing.assert_array_equal(out, expect)

    def test_p_zero_nilpotent_injective(self):
        phi = block_embed(2, 1, 0, 4)
        xs = rank_le_k(2, 1, 100, 4)
        ys = [phi(x) for x in xs]
        assert all(is_nilpotent(y, TOL) for y in ys)
        for a, b in itertools.combinations(range(100), 2):
            assert np.linalg.norm(ys[a] - ys[b]) > 0

    def test_dimension_errors(self):
        with pytest.raises(ValueError):
            block_embed(3, 2, 2, 5)
        with pytest.raises(ValueError):
            block_embed(3, 2, 0, 4)

    @pytest.mark.parametrize("n,k,p,m", [
        (n, k, p, m) for n in (1, 2, 3) for k in range(1, n + 1) for m in range(1, 13)
        for p in range(0, m // n + 1) if p > 0 or (m * (m - 1)) // 2 >= n * n
    ])
    def test_char_poly_law(self, n, k, p, m):
        phi = block_embed(n, k, p, m)
        for x in rank_le_k(n, k, 100, 10 * m + p):
            kx = char_poly(x)
            target = poly_mul(poly_pow(kx, p), x_power(m - p * n))
            assert poly_distance(char_poly(phi(x)), target) <= 1e-8 * (1 + np.max(np.abs(kx)))


class TestCatalog:
    def test_length_and_provenance(self):
        cat = zoo_catalog()
        assert len(cat) >= 9
        assert [e.name for e in cat[:9]] == list(ZOO_NAMES)
        assert all(e.provenance for e in cat)
        assert all(set(e.expected_profile) == set(HYPOTHESES) for e in cat)

    def test_counterexample_profiles_distinct(self):
        names = ["petek-semrl-2x2", "scaling-map", "varying-conjugator", "nilpotent-flip",
                 "constant-nilpotent"]
        profiles = {tuple(sorted(zoo_entry(nm).expected_profile.items())) for nm in names}
        assert len(profiles) == 5

    def test_unknown(self):
        with pytest.raises(KeyError):
            zoo_entry("nope")

    def test_verdict_matches(self):
        assert verdict_matches(PASS, INCONCLUSIVE_PASS)
        assert not verdict_matches(FAIL, PASS)
        assert not verdict_matches(INCONCLUSIVE_PASS, PASS)

    @pytest.mark.parametrize("n", [3, 4])
    def test_conformance(self, n):
        for seed in range(2):
            for e in zoo_catalog(n, 2, seed):
                rep = full_hypothesis_report(e.map, Budget(40, 25, 8), seed)
                assert e.matches(rep.verdicts), (e.name, e.mismatches(rep.verdicts))
                if e.expected_p is not None:
                    assert rep.p_result.p == e.expected_p, e.name
