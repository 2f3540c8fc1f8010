"""Sampling-based checks of preserver hypotheses on black-box matrix maps.

Each checker returns a :class:`CheckResult`; :func:`full_hypothesis_report`
bundles them.  Injectivity and continuity can only ever be falsified by
sampling, so their positive verdict is ``"inconclusive-pass"``.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from threading import Lock
from typing import Callable

import numpy as np

from . import __version__
from .matrix_core import (
    DEFAULT_TOL, Tolerances, as_matrix, char_poly, commutator_norm, commutes,
    eigenvalues, is_nilpotent, matrix_to_json, matrix_unit, poly_distance,
    poly_mul, poly_pow, rank, spectrum_subset, x_power,
)
from .rank_sets import (
    JordanSpec, lambda_matrix, nonzero_values, perturb_jordan_to_generic,
    random_invertible, random_partition, sample_commuting_pair,
    sample_diagonalizable_rank_k, sample_stratified, DiagonalStratumSpec,
    sample_diagonal,
)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
INCONCLUSIVE_PASS = "inconclusive-pass"

HYPOTHESES = (
    "spectrum_shrinking",
    "char_poly_preserving",
    "commutativity_preserving",
    "injective_probe",
    "continuity_probe",
)

MAX_WITNESSES = 3


class MapContractError(ValueError):
    pass


class BlackBoxMap:
    """An evaluatable map from M_n^{<=k} into M_m.

    ``exclusive`` maps (e.g. subprocess plugins) are never evaluated from
    more than one thread at a time.
    """

    def __init__(self, n: int, k: int, m: int, func: Callable, label: str,
                 exclusive: bool = False):
        if n < 1 or m < 1 or not 1 <= k <= n:
            raise ValueError(f"bad map dimensions n={n}, k={k}, m={m}")
        self.n, self.k, self.m = n, k, m
        self.func = func
        self.label = label
        self.exclusive = exclusive
        self._lock = Lock()

    def eval(self, x) -> np.ndarray:
        x = as_matrix(x, square=True)
        if x.shape != (self.n, self.n):
            raise MapContractError(f"{self.label}: input shape {x.shape}, expected {(self.n, self.n)}")
        if self.exclusive:
            with self._lock:
                y = self.func(x)
        else:
            y = self.func(x)
        try:
            y = as_matrix(y)
        except ValueError as exc:
            raise MapContractError(f"{self.label}: invalid output ({exc})") from exc
        if y.shape != (self.m, self.m):
            raise MapContractError(f"{self.label}: output shape {y.shape}, expected {(self.m, self.m)}")
        return y

    __call__ = eval

    def __repr__(self):
        return f"BlackBoxMap({self.label!r}, n={self.n}, k={self.k}, m={self.m})"


def evaluate_all(phi: BlackBoxMap, inputs, workers: int = 1) -> list:
    """Evaluate in input order; threads only for non-exclusive maps."""
    if workers > 1 and not phi.exclusive and len(inputs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(phi.eval, inputs))
    return [phi.eval(x) for x in inputs]


_STREAMS = {"spectrum": 1, "commute": 2, "charpoly": 3, "inject": 4,
            "continuity": 5, "p-confirm": 6, "fuzz": 7}


def child_rng(seed: int, stream: str, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), _STREAMS[stream], int(index)])


# -- report types -----------------------------------------------------------------

@dataclass
class Witness:
    inputs: list
    outputs: list
    quantity: str
    value: float

    def to_dict(self):
        return {"inputs": [matrix_to_json(x) for x in self.inputs],
                "outputs": [matrix_to_json(y) for y in self.outputs],
                "quantity": self.quantity, "value": float(self.value)}


@dataclass
class CheckResult:
    name: str
    verdict: str
    witnesses: list = field(default_factory=list)
    samples: int = 0
    failures: int = 0
    seed: int = 0
    note: str = ""

    def to_dict(self):
        return {"name": self.name, "verdict": self.verdict, "samples": self.samples,
                "failures": self.failures, "seed": self.seed, "note": self.note,
                "witnesses": [w.to_dict() for w in self.witnesses]}


def _finish(name, witnesses, failures, samples, seed, ok_verdict=PASS, note=""):
    verdict = FAIL if failures else ok_verdict
    return CheckResult(name, verdict, witnesses[:MAX_WITNESSES], samples, failures, seed, note)


@dataclass
class PExponentResult:
    p: object  # int or "undetermined"
    residual: float
    probe: np.ndarray
    table: dict = field(default_factory=dict)
    confirmed: bool = False
    note: str = ""

    @property
    def determined(self) -> bool:
        return self.p != "undetermined"

    def to_dict(self):
        return {"p": self.p, "residual": float(self.residual), "confirmed": self.confirmed,
                "table": {str(k): float(v) for k, v in self.table.items()},
                "probe": matrix_to_json(self.probe), "note": self.note}


@dataclass(frozen=True)
class Budget:
    samples: int = 60
    pairs: int = 40
    paths: int = 8

    def to_dict(self):
        return {"samples": self.samples, "pairs": self.pairs, "paths": self.paths}


@dataclass
class HypothesisReport:
    label: str
    n: int
    k: int
    m: int
    seed: int
    budget: Budget
    checks: dict
    p_result: PExponentResult | None
    dimension_count: dict

    @property
    def verdicts(self) -> dict:
        return {name: self.checks[name].verdict for name in HYPOTHESES}

    @property
    def witnesses(self) -> list:
        return [w for name in HYPOTHESES for w in self.checks[name].witnesses]

    def failed(self) -> list:
        return [name for name, v in self.verdicts.items() if v == FAIL]

    def to_dict(self):
        return {
            "tool_version": __version__,
            "map": self.label,
            "dimensions": {"n": self.n, "k": self.k, "m": self.m},
            "seed": self.seed,
            "budget": self.budget.to_dict(),
            "verdicts": self.verdicts,
            "p_exponent": self.p_result.to_dict() if self.p_result else None,
            "dimension_count": self.dimension_count,
            "checks": {name: self.checks[name].to_dict() for name in HYPOTHESES},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# -- individual checks --------------------------------------------------------------

def _spectrum_gap(sy, sx) -> float:
    return max(min(abs(v - w) for w in sx.values) for v in sy.values)


def domain_samples(phi: BlackBoxMap, count: int, seed: int, stream: str) -> list:
    n, k = phi.n, phi.k
    xs = [lambda_matrix(n, k)]
    if n >= 2:
        xs.append(matrix_unit(n, 0, 1))
    for i in range(count - len(xs)):
        xs.append(sample_stratified(n, k, i, child_rng(seed, stream, i))[2])
    return xs[:max(count, 1)]


def check_spectrum_shrinking(phi: BlackBoxMap, samples: int = 60, seed: int = 0,
                             tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> CheckResult:
    xs = domain_samples(phi, samples, seed, "spectrum")
    ys = evaluate_all(phi, xs, workers)
    witnesses, failures = [], 0
    for x, y in zip(xs, ys):
        sx, sy = eigenvalues(x, tol), eigenvalues(y, tol)
        if not spectrum_subset(sy, sx, tol):
            failures += 1
            witnesses.append(Witness([x], [y], "max distance from sp(phi(X)) to sp(X)",
                                     _spectrum_gap(sy, sx)))
    return _finish("spectrum_shrinking", witnesses, failures, len(xs), seed)


def commuting_pairs(n: int, k: int, count: int, seed: int) -> list:
    """Structured pairs (E_ii, D), (Lambda, D) then simultaneously diagonalised pairs."""
    pairs = []
    lam = lambda_matrix(n, k)
    for i in range(n):
        rng = child_rng(seed, "commute", 10_000 + i)
        r = int(rng.integers(1, k + 1))
        d = sample_diagonal(DiagonalStratumSpec(n, r, require_distinct_nonzero=False), rng)
        pairs.append((matrix_unit(n, i, i), d))
        pairs.append((lam, d))
    for i in range(count):
        pairs.append(sample_commuting_pair(n, k, child_rng(seed, "commute", i)))
    return pairs


def check_commutativity_preserving(phi: BlackBoxMap, pairs: int = 40, seed: int = 0,
                                   tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> CheckResult:
    ps = commuting_pairs(phi.n, phi.k, pairs, seed)
    flat_in = [x for pair in ps for x in pair]
    flat_out = evaluate_all(phi, flat_in, workers)
    witnesses, failures = [], 0
    for i, (x, y) in enumerate(ps):
        fx, fy = flat_out[2 * i], flat_out[2 * i + 1]
        if not commutes(fx, fy, tol):
            failures += 1
            witnesses.append(Witness([x, y], [fx, fy], "||[phi(X), phi(Y)]||_F",
                                     commutator_norm(fx, fy)))
    return _finish("commutativity_preserving", witnesses, failures, len(ps), seed)


def check_char_poly_preserving(phi: BlackBoxMap, samples: int = 60, seed: int = 0,
                               tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> CheckResult:
    if phi.m != phi.n:
        raise MapContractError(f"char-poly preservation needs m == n, got m={phi.m}, n={phi.n}")
    xs = domain_samples(phi, samples, seed, "charpoly")
    ys = evaluate_all(phi, xs, workers)
    witnesses, failures = [], 0
    for x, y in zip(xs, ys):
        cx, cy = char_poly(x), char_poly(y)
        gap = poly_distance(cy, cx)
        if gap > tol.residual_rtol * (1.0 + np.max(np.abs(cx))):
            failures += 1
            witnesses.append(Witness([x], [y], "max |coeff(k_phi(X)) - coeff(k_X)|", gap))
    return _finish("char_poly_preserving", witnesses, failures, len(xs), seed)


def injectivity_inputs(phi: BlackBoxMap, samples: int, seed: int) -> list:
    n, k = phi.n, phi.k
    xs = [np.zeros((n, n), dtype=np.complex128)]
    xs += [matrix_unit(n, i, j) for i in range(n) for j in range(n)]
    for i in range(samples):
        kind, _, x = sample_stratified(n, k, i, child_rng(seed, "inject", i))
        xs.append(x)
        if kind == "nilpotent":
            xs.append(-x)
        elif i % 3 == 0:
            xs.append(x.T)
    return [as_matrix(x) for x in xs]


def probe_injectivity(phi: BlackBoxMap, samples: int = 60, seed: int = 0,
                      tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> CheckResult:
    xs = injectivity_inputs(phi, samples, seed)
    ys = evaluate_all(phi, xs, workers)
    norms = [np.linalg.norm(y) for y in ys]
    witnesses, failures = [], 0
    for i, j in combinations(range(len(xs)), 2):
        if np.linalg.norm(xs[i] - xs[j]) <= 10 * tol.spec_atol:
            continue
        d = np.linalg.norm(ys[i] - ys[j])
        if d <= tol.residual_rtol * (1.0 + max(norms[i], norms[j])):
            failures += 1
            if len(witnesses) < MAX_WITNESSES:
                witnesses.append(Witness([xs[i], xs[j]], [ys[i], ys[j]],
                                         "||phi(X) - phi(Y)||_F for X != Y", d))
    return _finish("injective_probe", witnesses, failures, len(xs), seed, INCONCLUSIVE_PASS,
                   note="sampling cannot certify injectivity")


def continuity_path(n: int, k: int, index: int, seed: int):
    """A rank-fixed pencil t -> X(t), t in [0, 1], anchored at t = 0.

    Even indices: S (D0 + t D1) S^-1 with D1 supported on D0's support.
    Odd indices: S (N + t Delta) S^-1 with N nilpotent and Delta the diagonal
    perturbation that keeps the rank, so X(0) is a nilpotent limit point.
    """
    rng = child_rng(seed, "continuity", index)
    s = random_invertible(n, rng)
    s_inv = np.linalg.inv(s)
    r = int(rng.integers(1, k + 1))
    if index % 2 == 1 and r <= n - 1:
        sizes = random_partition(n, n - r, rng)
        spec = JordanSpec(tuple((0.0, size) for size in sizes))
        base = spec.matrix()
        direction = perturb_jordan_to_generic(spec, 1.0) - base
        kind = "nilpotent-limit"
    else:
        zeros = rng.choice(n, size=n - r, replace=False)
        d0 = np.ones(n, dtype=np.complex128)
        d0[zeros] = 0
        d1 = d0 * nonzero_values(n, rng)
        d0 = d0 * nonzero_values(n, rng)
        base, direction = np.diag(d0), np.diag(d1)
        kind = "diagonal"
    return kind, (lambda t: as_matrix(s @ (base + t * direction) @ s_inv))


def probe_continuity(phi: BlackBoxMap, paths: int = 8, seed: int = 0,
                     tol: Tolerances = DEFAULT_TOL, workers: int = 1,
                     h0: float = 1e-2, levels: int = 3) -> CheckResult:
    """Zoom into each path's anchor over dyadic windows [0, h0 / 2^L].

    A continuous map's oscillation over the window must shrink by at least a
    factor 2 between the first and last level; a jump keeps it constant.
    """
    witnesses, failures = [], 0
    for p in range(paths):
        kind, path = continuity_path(phi.n, phi.k, p, seed)
        oscillations, anchor_out = [], None
        pts_in, pts_out = [], []
        for level in range(levels):
            h = h0 / 2 ** level
            xs = [path(h * i / 4) for i in range(5)]
            ys = evaluate_all(phi, xs, workers)
            anchor_out = ys[0]
            osc = max(np.linalg.norm(a - b) for a, b in combinations(ys, 2))
            oscillations.append(osc)
            pts_in.append(xs[1])
            pts_out.append(ys[1])
        floor = tol.residual_rtol * (1.0 + np.linalg.norm(anchor_out))
        if oscillations[0] <= floor:
            continue
        ratio = oscillations[0] / max(oscillations[-1], np.finfo(float).tiny)
        if ratio < 2.0:
            failures += 1
            witnesses.append(Witness(
                [path(0.0), pts_in[-1]], [anchor_out, pts_out[-1]],
                f"oscillation ratio over {levels} dyadic levels on {kind} path", ratio))
    return _finish("continuity_probe", witnesses, failures, paths, seed, INCONCLUSIVE_PASS,
                   note="sampling cannot certify continuity")


# -- p exponent ---------------------------------------------------------------------

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def p_probe(n: int, k: int) -> np.ndarray:
    """diag(lambda_1..lambda_k, 0..0) with lambda_j = prime_j / prime_k * e^i."""
    lam = np.array(_PRIMES[:k], dtype=float) / _PRIMES[k - 1] * np.exp(1j)
    d = np.zeros(n, dtype=np.complex128)
    d[:k] = lam
    return as_matrix(np.diag(d))


def p_law_target(nonzero_part, p: int, m: int, k: int) -> np.ndarray:
    """x^(m - p k) q^p, where q is the monic degree-k factor carrying the nonzero eigenvalues.

    Equals k_X^p x^(m - p n) whenever p n <= m; for p n > m it is the same
    identity read after cancelling powers of x.
    """
    return poly_mul(x_power(m - p * k), poly_pow(nonzero_part, p))


def _relative_gap(c, target) -> float:
    return poly_distance(c, target) / (1.0 + float(np.max(np.abs(target))))


def estimate_p(phi: BlackBoxMap, tol: Tolerances = DEFAULT_TOL, seed: int = 0,
               confirm: int = 10) -> PExponentResult:
    n, k, m = phi.n, phi.k, phi.m
    probe = p_probe(n, k)
    c = char_poly(phi(probe))
    q = char_poly(probe)[n - k:]
    table = {p: _relative_gap(c, p_law_target(q, p, m, k)) for p in range(m // k + 1)}
    order = sorted(table, key=lambda p: (table[p], p))
    best = order[0]
    runner = table[order[1]] if len(order) > 1 else np.inf
    bound = tol.residual_rtol
    if table[best] > bound or runner <= 10 * bound:
        return PExponentResult("undetermined", table[best], probe, table,
                               note="no candidate separates from the rest")
    worst = 0.0
    for i in range(confirm):
        x = sample_diagonalizable_rank_k(n, k, child_rng(seed, "p-confirm", i))
        qx = char_poly(x)[n - k:]
        worst = max(worst, _relative_gap(char_poly(phi(x)), p_law_target(qx, best, m, k)))
    if worst > 1e3 * bound:
        return PExponentResult("undetermined", worst, probe, table,
                               note=f"p={best} fits the probe but not the confirmation points")
    return PExponentResult(best, table[best], probe, table, confirmed=True)


# -- aggregate ----------------------------------------------------------------------

def dimension_count(n: int, k: int, m: int) -> dict:
    domain = k * (2 * n - k)
    cone = m * m - m
    return {"domain_dim": domain, "nilpotent_cone_dim": cone,
            "injective_nilpotent_excluded": domain > cone}


def full_hypothesis_report(phi: BlackBoxMap, budget: Budget = Budget(), seed: int = 0,
                           tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> HypothesisReport:
    checks = {
        "spectrum_shrinking": check_spectrum_shrinking(phi, budget.samples, seed, tol, workers),
        "commutativity_preserving": check_commutativity_preserving(phi, budget.pairs, seed, tol, workers),
        "injective_probe": probe_injectivity(phi, budget.samples, seed, tol, workers),
        "continuity_probe": probe_continuity(phi, budget.paths, seed, tol, workers),
    }
    if phi.m == phi.n:
        checks["char_poly_preserving"] = check_char_poly_preserving(phi, budget.samples, seed, tol, workers)
    else:
        checks["char_poly_preserving"] = CheckResult(
            "char_poly_preserving", INCONCLUSIVE, seed=seed, note="not applicable: m != n")
    p_result = estimate_p(phi, tol, seed)
    return HypothesisReport(phi.label, phi.n, phi.k, phi.m, seed, budget, checks, p_result,
                            dimension_count(phi.n, phi.k, phi.m))


def nilpotent_valued(phi: BlackBoxMap, samples: int = 60, seed: int = 0,
                     tol: Tolerances = DEFAULT_TOL) -> bool:
    return all(is_nilpotent(y, tol) for y in evaluate_all(phi, domain_samples(phi, samples, seed, "spectrum")))


# -- fuzzing with shrinking ---------------------------------------------------------

@dataclass
class FuzzResult:
    hypothesis: str
    found: bool
    trials: int
    witness: Witness | None = None
    original: Witness | None = None
    shrink_steps: int = 0

    def to_dict(self):
        return {"hypothesis": self.hypothesis, "found": self.found, "trials": self.trials,
                "shrink_steps": self.shrink_steps,
                "witness": self.witness.to_dict() if self.witness else None,
                "original": self.original.to_dict() if self.original else None}


def _simplifications(v: complex):
    """Candidate replacements for one entry, simplest first; never ``v`` itself."""
    seen = {v}
    for cand in (0j, 1 + 0j, -1 + 0j, complex(round(v.real), round(v.imag)),
                 complex(round(v.real), 0), complex(round(v.real, 1), round(v.imag, 1))):
        if cand not in seen and _cost(cand) < _cost(v):
            seen.add(cand)
            yield cand


def _cost(v: complex) -> tuple:
    # strict order so shrinking terminates
    digits = len(repr(v.real)) + len(repr(v.imag))
    return (v != 0, v.imag != 0, v != complex(round(v.real), round(v.imag)), digits, abs(v))


def _shrink(params: dict, fails: Callable, valid: Callable, max_rounds: int = 20):
    """Greedy entrywise simplification of parameter arrays while ``fails`` holds."""
    steps = 0
    for _ in range(max_rounds):
        changed = False
        for name in params:
            arr = params[name]
            for idx in np.ndindex(arr.shape):
                for cand in _simplifications(complex(arr[idx])):
                    trial = {key: val.copy() for key, val in params.items()}
                    trial[name][idx] = cand
                    if valid(trial) and fails(trial):
                        params = trial
                        steps += 1
                        changed = True
                        break
                arr = params[name]
        if not changed:
            break
    return params, steps


def fuzz(phi: BlackBoxMap, hypothesis: str, trials: int = 200, seed: int = 0,
         tol: Tolerances = DEFAULT_TOL) -> FuzzResult:
    """Random search for a violation of one hypothesis, then shrink the witness.

    Single-input hypotheses shrink the input matrix directly (staying inside
    M_n^{<=k}); commutativity witnesses are parametrised as (S, d1, d2) with
    X = S diag(d1) S^-1, Y = S diag(d2) S^-1 and shrink those parameters, so
    every shrunk pair still commutes exactly.
    """
    n, k = phi.n, phi.k

    if hypothesis == "commutativity_preserving":
        def build(pr):
            s_inv = np.linalg.inv(pr["S"])
            return (as_matrix(pr["S"] @ np.diag(pr["d1"]) @ s_inv),
                    as_matrix(pr["S"] @ np.diag(pr["d2"]) @ s_inv))

        def violation(pr):
            x, y = build(pr)
            fx, fy = phi(x), phi(y)
            return None if commutes(fx, fy, tol) else Witness([x, y], [fx, fy], "||[phi(X), phi(Y)]||_F",
                                                               commutator_norm(fx, fy))

        def valid(pr):
            return (np.count_nonzero(pr["d1"]) <= k and np.count_nonzero(pr["d2"]) <= k
                    and np.linalg.cond(pr["S"]) < 1e6)

        def draw(rng):
            s = random_invertible(n, rng)
            d = [sample_diagonal(DiagonalStratumSpec(n, int(rng.integers(1, k + 1)),
                                                     require_distinct_nonzero=False), rng) for _ in range(2)]
            return {"S": s.astype(np.complex128), "d1": np.diag(d[0]).copy(), "d2": np.diag(d[1]).copy()}

        def simplest_first(pr):
            # try the diagonal version of the pair before entrywise shrinking
            trial = {key: val.copy() for key, val in pr.items()}
            trial["S"] = np.eye(n, dtype=np.complex128)
            return trial if violation(trial) else pr
    elif hypothesis in ("spectrum_shrinking", "char_poly_preserving"):
        def violation(pr):
            x = as_matrix(pr["X"])
            y = phi(x)
            if hypothesis == "spectrum_shrinking":
                sx, sy = eigenvalues(x, tol), eigenvalues(y, tol)
                if spectrum_subset(sy, sx, tol):
                    return None
                return Witness([x], [y], "max distance from sp(phi(X)) to sp(X)", _spectrum_gap(sy, sx))
            cx, cy = char_poly(x), char_poly(y)
            gap = poly_distance(cy, cx)
            if gap <= tol.residual_rtol * (1.0 + np.max(np.abs(cx))):
                return None
            return Witness([x], [y], "max |coeff(k_phi(X)) - coeff(k_X)|", gap)

        def valid(pr):
            return rank(pr["X"], tol) <= k

        def draw(rng):
            return {"X": np.array(sample_stratified(n, k, int(rng.integers(0, 4 * k)), rng)[2])}

        def simplest_first(pr):
            return pr
    else:
        raise ValueError(f"fuzzing supports spectrum_shrinking, char_poly_preserving and "
                         f"commutativity_preserving, not {hypothesis!r}")

    for t in range(trials):
        params = draw(child_rng(seed, "fuzz", t))
        original = violation(params)
        if original is None:
            continue
        params = simplest_first(params)
        params, steps = _shrink(params, lambda pr: violation(pr) is not None, valid)
        return FuzzResult(hypothesis, True, t + 1, violation(params), original, steps)
    return FuzzResult(hypothesis, False, trials)
