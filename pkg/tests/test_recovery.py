import numpy as np
import pytest

from preserver_lab.matrix_core import Tolerances, matrix_unit
from preserver_lab.predicates import BlackBoxMap, Budget
from preserver_lab.rank_sets import random_invertible
from preserver_lab.recovery import (
    CERTIFICATION_SAMPLES, RecoveryFailure, classify_map, codomain_escape, gauge_distance, gauge_normalize,
    recover_conjugator,
)
from preserver_lab.zoo import (
    constant_nilpotent, inner, nilpotent_flip, scaling_map, trace_reflect, transpose_inner,
    varying_conjugator,
)

TOL = Tolerances()


class Counting(BlackBoxMap):
    def __init__(self, phi):
        super().__init__(phi.n, phi.k, phi.m, phi.func, phi.label)
        self.calls = 0

    def eval(self, x):
        self.calls += 1
        return super().eval(x)

    __call__ = eval


def t0(n, seed):
    return random_invertible(n, np.random.default_rng([seed, 7]))


class TestGauge:
    def test_normalize(self):
        t, scale, pos = gauge_normalize(np.array([[1, -4j], [2, 1]]))
        assert pos == (0, 1) and scale == -4j and t[0, 1] == 1

    def test_distance(self):
        a = t0(3, 0)
        assert gauge_distance((2 - 3j) * a, a) < 1e-15
        assert gauge_distance(a + 0.1 * np.eye(3), a) > 1e-3


class TestRecover:
    @pytest.mark.parametrize("transpose", [False, True])
    def test_inner_n4_k2(self, transpose):
        t = t0(4, 1)
        phi = (transpose_inner if transpose else inner)(t, 4, 2)
        rec = recover_conjugator(phi, TOL)
        assert rec.transpose_flag is transpose
        assert gauge_distance(rec.T, t) <= 1e-8
        assert rec.certification_residual <= 1e-8
        assert np.max(np.abs(rec.T)) == pytest.approx(1.0)

    def test_identity(self):
        rec = recover_conjugator(BlackBoxMap(3, 2, 3, lambda x: x, "id"), TOL)
        assert not rec.transpose_flag
        assert gauge_distance(rec.T, np.eye(3)) < 1e-14
        assert rec.certification_residual <= 1e-10

    def test_transpose_identity(self):
        rec = recover_conjugator(transpose_inner(np.eye(3), 3, 1), TOL)
        assert rec.transpose_flag
        assert gauge_distance(rec.T, np.eye(3)) < 1e-14

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_probe_budget(self, n):
        phi = Counting(inner(t0(n, n), n, n - 1))
        rec = recover_conjugator(phi, TOL)
        assert phi.calls == (2 * n - 1) + 1 + CERTIFICATION_SAMPLES == rec.evaluations

    def test_gauge_invariance(self):
        rng = np.random.default_rng(3)
        for i in range(10):
            t = t0(4, i)
            c = complex(*rng.normal(size=2))
            a = recover_conjugator(inner(t, 4, 2), TOL).T
            b = recover_conjugator(inner(c * t, 4, 2), TOL).T
            assert gauge_distance(a, b) <= 1e-10

    def test_conjugation_equivariance(self):
        for i in range(10):
            t, s = t0(4, i), t0(4, 100 + i)
            s_inv, t_inv = np.linalg.inv(s), np.linalg.inv(t)
            composed = BlackBoxMap(4, 2, 4, lambda x: s @ (t @ x @ t_inv) @ s_inv, "composed")
            a = recover_conjugator(inner(s @ t, 4, 2), TOL).T
            b = recover_conjugator(composed, TOL).T
            assert gauge_distance(a, b) <= 1e-10

    def test_flag_discrimination(self):
        rng = np.random.default_rng(11)
        for i in range(30):
            n = int(rng.integers(3, 6))
            t = t0(n, 1000 + i)
            t_inv = np.linalg.inv(t)
            e12 = matrix_unit(n, 0, 1)
            a, b = t @ e12 @ t_inv, t @ e12.T @ t_inv
            rel = np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b))
            assert rel > 10 * TOL.residual_rtol

    def test_preconditions(self):
        with pytest.raises(ValueError):
            recover_conjugator(inner(np.eye(2), 2, 1), TOL)
        with pytest.raises(ValueError):
            recover_conjugator(inner(np.eye(3), 3, 3), TOL)


class TestFailureStages:
    def test_trace_reflect_idempotent(self):
        with pytest.raises(RecoveryFailure) as err:
            recover_conjugator(trace_reflect(3), TOL)
        assert err.value.stage == "idempotent-structure"
        np.testing.assert_array_equal(err.value.witness[1], np.diag([0, 1, 1]))

    def test_scaling_idempotent(self):
        with pytest.raises(RecoveryFailure) as err:
            recover_conjugator(scaling_map(3, 2), TOL)
        assert err.value.stage == "idempotent-structure"

    def test_probe_rank(self):
        def phi(x):
            return x if np.count_nonzero(x) == 1 else np.zeros_like(x)
        with pytest.raises(RecoveryFailure) as err:
            recover_conjugator(BlackBoxMap(3, 1, 3, phi, "units-only"), TOL)
        assert err.value.stage == "probe-rank"

    def test_flag_ambiguity(self):
        def phi(x):
            # diagonal part unchanged, off-diagonal part symmetrised
            return np.diag(np.diag(x)) + (x - np.diag(np.diag(x)) + (x - np.diag(np.diag(x))).T) / 2
        with pytest.raises(RecoveryFailure) as err:
            recover_conjugator(BlackBoxMap(3, 2, 3, phi, "sym"), TOL)
        assert err.value.stage == "flag-ambiguity"

    def test_certification(self):
        with pytest.raises(RecoveryFailure) as err:
            recover_conjugator(varying_conjugator(3, 2), TOL)
        assert err.value.stage == "certification"
        d = err.value.to_dict()
        assert d["stage"] == "certification" and len(d["witness"]) == 2

    def test_unknown_stage(self):
        with pytest.raises(ValueError):
            RecoveryFailure("nowhere", "x")


class TestClassify:
    def test_inner(self):
        c = classify_map(inner(t0(3, 5), 3, 2), Budget(30, 20, 4))
        assert c.verdict == "inner" and c.recovered.certification_residual <= 1e-8

    def test_transpose(self):
        assert classify_map(transpose_inner(t0(3, 6), 3, 1), Budget(30, 20, 4)).verdict == "transpose-inner"

    def test_trace_reflect(self):
        c = classify_map(trace_reflect(3), Budget(30, 20, 4))
        assert c.verdict == "recovery-failed" and c.failure.stage == "idempotent-structure"

    @pytest.mark.parametrize("make,failed", [
        (scaling_map, "spectrum_shrinking"),
        (varying_conjugator, "commutativity_preserving"),
        (nilpotent_flip, "continuity_probe"),
        (constant_nilpotent, "injective_probe"),
    ])
    def test_hypothesis_violations(self, make, failed):
        c = classify_map(make(4, 2), Budget(30, 20, 8))
        assert c.verdict == "hypothesis-violation"
        assert c.detail == "failed: " + failed

    def test_codomain_escape(self):
        lift = np.eye(4) - matrix_unit(4, 0, 0)
        esc = codomain_escape(BlackBoxMap(4, 2, 4, lambda x: x + lift, "lift"), 10, 0, TOL)
        assert esc is not None and np.linalg.matrix_rank(esc[1]) > 2
        assert codomain_escape(inner(t0(4, 1), 4, 2), 30, 0, TOL) is None

    def test_to_json(self):
        c = classify_map(trace_reflect(3), Budget(10, 10, 2))
        assert '"verdict": "recovery-failed"' in c.to_json()
