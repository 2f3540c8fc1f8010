"""Reconstruct T (and the transpose flag) for maps of the form T(.)T^-1 or T(.)^tT^-1.

Only rank-one probes are used, so the procedure is legal on M_n^{<=k} for
every k >= 1.  T is determined up to a nonzero scalar; it is returned with its
largest-magnitude entry equal to 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .matrix_core import DEFAULT_TOL, Tolerances, matrix_to_json, matrix_unit, rank
from .predicates import (
    FAIL, Budget, BlackBoxMap, HypothesisReport, child_rng, evaluate_all,
    full_hypothesis_report,
)
from .rank_sets import sample_stratified

STAGES = ("probe-rank", "idempotent-structure", "frame-assembly", "flag-ambiguity", "certification")
CERTIFICATION_SAMPLES = 50
CONJUGATION_HYPOTHESES = ("spectrum_shrinking", "commutativity_preserving",
                      "injective_probe", "continuity_probe")


class RecoveryFailure(Exception):
    def __init__(self, stage: str, diagnostic: str, witness=()):
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        super().__init__(f"[{stage}] {diagnostic}")
        self.stage = stage
        self.diagnostic = diagnostic
        self.witness = list(witness)

    def to_dict(self):
        return {"status": "failure", "stage": self.stage, "diagnostic": self.diagnostic,
                "witness": [matrix_to_json(w) for w in self.witness]}


@dataclass
class RecoveredConjugation:
    T: np.ndarray
    transpose_flag: bool
    certification_residual: float
    normalization: dict = field(default_factory=dict)
    evaluations: int = 0

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        return self.T @ (x.T if self.transpose_flag else x) @ np.linalg.inv(self.T)

    def to_dict(self):
        return {"status": "recovered", "transpose_flag": self.transpose_flag,
                "certification_residual": float(self.certification_residual),
                "T": matrix_to_json(self.T),
                "normalization": {key: ([v.real, v.imag] if isinstance(v, complex) else v)
                                  for key, v in self.normalization.items()},
                "evaluations": self.evaluations}


def gauge_normalize(t):
    """Divide by the largest-magnitude entry (lowest flat index on ties)."""
    t = np.asarray(t, dtype=np.complex128)
    idx = int(np.argmax(np.abs(t).ravel()))
    scale = complex(t.ravel()[idx])
    return t / scale, scale, np.unravel_index(idx, t.shape)


def gauge_distance(t, t0) -> float:
    """min over tau of ||t/tau - t0||_F / ||t0||_F (least squares in 1/tau)."""
    t = np.asarray(t, dtype=np.complex128)
    t0 = np.asarray(t0, dtype=np.complex128)
    c = np.vdot(t, t0) / np.vdot(t, t)
    return float(np.linalg.norm(c * t - t0) / np.linalg.norm(t0))


def _relative(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))


def certification_inputs(n: int, k: int, seed: int, count: int = CERTIFICATION_SAMPLES) -> list:
    """Mixed strata: generic, nilpotent, mixed and lower-rank points of M_n^{<=k}."""
    return [sample_stratified(n, k, i, np.random.default_rng([seed, 42, i]))[2] for i in range(count)]


def recover_conjugator(phi: BlackBoxMap, tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                       workers: int = 1) -> RecoveredConjugation:
    """Raises :class:`RecoveryFailure` naming the stage that broke."""
    n, k = phi.n, phi.k
    if phi.m != n:
        raise ValueError(f"recovery needs m == n, got m={phi.m}, n={n}")
    if n < 3 or not 1 <= k < n:
        raise ValueError(f"recovery needs n >= 3 and 1 <= k < n, got n={n}, k={k}")
    evals = 0

    # images of the diagonal matrix units
    units = [matrix_unit(n, i, i) for i in range(n)]
    p_imgs = evaluate_all(phi, units, workers)
    evals += n
    for i, pi in enumerate(p_imgs):
        r = rank(pi, tol)
        if r != 1:
            raise RecoveryFailure("idempotent-structure",
                                  f"phi(E_{i + 1}{i + 1}) has rank {r}, expected 1", [units[i], pi])
        scale = 1.0 + np.linalg.norm(pi) ** 2
        if np.linalg.norm(pi @ pi - pi) > tol.residual_rtol * scale:
            raise RecoveryFailure("idempotent-structure",
                                  f"phi(E_{i + 1}{i + 1}) is not idempotent", [units[i], pi])

    p1 = p_imgs[0]
    col = int(np.argmax(np.linalg.norm(p1, axis=0)))
    t1 = p1[:, col].copy()
    # s1^t is the row of P_1 through the pivot, scaled so s1^t t1 = 1
    piv = int(np.argmax(np.abs(t1)))
    s1 = p1[piv, :].copy()
    s1 = s1 / (s1 @ t1)

    probes = []
    for i in range(1, n):
        v = np.zeros(n, dtype=np.complex128)
        v[0] = v[i] = 1.0
        probes.append(np.outer(v, v))
    a_imgs = evaluate_all(phi, probes, workers)
    evals += n - 1
    for probe, a in zip(probes, a_imgs):
        r = rank(a, tol)
        if r != 1:
            raise RecoveryFailure("probe-rank", f"rank-one probe mapped to rank {r}", [probe, a])

    cols, rows = [t1], [s1]
    for a in a_imgs:
        cols.append(a @ t1 - t1)
        rows.append(s1 @ a - s1)
    t = np.column_stack(cols)
    s = np.vstack(rows)
    frame_err = float(np.linalg.norm(s @ t - np.eye(n)))
    if frame_err > tol.residual_rtol * np.linalg.cond(t):
        raise RecoveryFailure("frame-assembly",
                              f"dual frame mismatch ||S T - I||_F = {frame_err:.3e}", [t, s])
    if rank(t, tol) != n:
        raise RecoveryFailure("frame-assembly", "assembled T is singular", [t])
    t_inv = np.linalg.inv(t)

    e12 = matrix_unit(n, 0, 1)
    img = phi(e12)
    evals += 1
    d_plain = _relative(img, t @ e12 @ t_inv)
    d_trans = _relative(img, t @ e12.T @ t_inv)
    win, lose = min(d_plain, d_trans), max(d_plain, d_trans)
    if win > tol.residual_rtol or lose < 10 * tol.residual_rtol:
        raise RecoveryFailure("flag-ambiguity",
                              f"distances to T E12 T^-1 and T E21 T^-1: {d_plain:.3e}, {d_trans:.3e}",
                              [e12, img])
    flag = d_trans < d_plain

    xs = certification_inputs(n, k, seed)
    ys = evaluate_all(phi, xs, workers)
    evals += len(xs)
    residual, worst = 0.0, None
    for x, y in zip(xs, ys):
        pred = t @ (x.T if flag else x) @ t_inv
        res = float(np.linalg.norm(y - pred) / (1.0 + np.linalg.norm(x)))
        if res > residual:
            residual, worst = res, (x, y)
    if residual > tol.residual_rtol:
        raise RecoveryFailure("certification",
                              f"max relative deviation {residual:.3e} exceeds {tol.residual_rtol:.1e}",
                              list(worst))

    t_norm, scale, pos = gauge_normalize(t)
    return RecoveredConjugation(
        t_norm, bool(flag), residual,
        {"gauge": "largest-entry-one", "position": [int(pos[0]), int(pos[1])], "divided_by": scale},
        evals)


# -- classification pipeline ----------------------------------------------------------

@dataclass
class Classification:
    verdict: str  # inner | transpose-inner | hypothesis-violation | recovery-failed | codomain-violation
    report: HypothesisReport
    recovered: RecoveredConjugation | None = None
    failure: RecoveryFailure | None = None
    detail: str = ""

    def to_dict(self):
        return {"tool_version": __version__, "verdict": self.verdict, "detail": self.detail,
                "report": self.report.to_dict(),
                "recovered": self.recovered.to_dict() if self.recovered else None,
                "failure": self.failure.to_dict() if self.failure else None}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def codomain_escape(phi: BlackBoxMap, samples: int, seed: int, tol: Tolerances):
    """First sampled X whose image has rank > k, or None."""
    for i in range(samples):
        x = sample_stratified(phi.n, phi.k, i, child_rng(seed, "spectrum", i))[2]
        y = phi(x)
        if rank(y, tol) > phi.k:
            return x, y
    return None


def classify_map(phi: BlackBoxMap, budget: Budget = Budget(), seed: int = 0,
                 tol: Tolerances = DEFAULT_TOL) -> Classification:
    """Hypothesis report, then recovery when the hypotheses survive sampling.

    Images escaping M_n^{<=k} are reported as ``codomain-violation`` only for
    2 <= k <= n-2, where the conclusion is not known to hold; for k = n-1 the
    singular-matrix corollary covers M_n-valued maps, and for k = 1 recovery
    is still attempted (and is expected to fail, e.g. for X -> Tr(X) I - X).
    """
    if phi.m != phi.n:
        raise ValueError("classify_map needs m == n")
    report = full_hypothesis_report(phi, budget, seed, tol)
    failed = [h for h in CONJUGATION_HYPOTHESES if report.verdicts[h] == FAIL]
    if failed:
        return Classification("hypothesis-violation", report, detail="failed: " + ", ".join(failed))
    if 2 <= phi.k <= phi.n - 2:
        esc = codomain_escape(phi, budget.samples, seed, tol)
        if esc is not None:
            return Classification("codomain-violation", report,
                                  detail=f"image of rank {rank(esc[1], tol)} > k = {phi.k}")
    try:
        rec = recover_conjugator(phi, tol, seed)
    except RecoveryFailure as exc:
        return Classification("recovery-failed", report, failure=exc, detail=exc.stage)
    return Classification("transpose-inner" if rec.transpose_flag else "inner", report, recovered=rec)
