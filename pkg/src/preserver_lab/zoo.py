"""Concrete maps: the inner forms, their classical counterexamples, and block embeddings."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .matrix_core import DEFAULT_TOL, Tolerances, as_matrix, is_nilpotent, matrix_unit
from .predicates import FAIL, HYPOTHESES, INCONCLUSIVE, INCONCLUSIVE_PASS, PASS, BlackBoxMap
from .rank_sets import random_invertible


def _checked_inverse(t, n):
    t = as_matrix(t, square=True)
    if t.shape != (n, n):
        raise ValueError(f"T must be {n}x{n}, got {t.shape}")
    if np.linalg.cond(t) > 1e12:
        raise np.linalg.LinAlgError("T is numerically singular")
    return t, np.linalg.inv(t)


def inner(t, n: int, k: int) -> BlackBoxMap:
    t, t_inv = _checked_inverse(t, n)
    return BlackBoxMap(n, k, n, lambda x: t @ x @ t_inv, "inner")


def transpose_inner(t, n: int, k: int) -> BlackBoxMap:
    t, t_inv = _checked_inverse(t, n)
    return BlackBoxMap(n, k, n, lambda x: t @ x.T @ t_inv, "transpose-inner")


def trace_reflect(n: int) -> BlackBoxMap:
    """X -> Tr(X) I - X on rank <= 1 matrices."""
    eye = np.eye(n, dtype=np.complex128)
    return BlackBoxMap(n, 1, n, lambda x: np.trace(x) * eye - x, "trace-reflect")


def scaling_map(n: int, k: int) -> BlackBoxMap:
    return BlackBoxMap(n, k, n, lambda x: 2 * x, "scaling-map")


def varying_conjugator(n: int, k: int) -> BlackBoxMap:
    """X -> f(X) X f(X)^-1 with the unipotent f(X) = I + X_11 E_12."""
    if n < 2:
        raise ValueError("varying_conjugator needs n >= 2")
    e12 = matrix_unit(n, 0, 1)
    eye = np.eye(n, dtype=np.complex128)

    def phi(x):
        a = x[0, 0]
        return (eye + a * e12) @ x @ (eye - a * e12)

    return BlackBoxMap(n, k, n, phi, "varying-conjugator")


def nilpotent_flip(n: int, k: int, tol: Tolerances = DEFAULT_TOL) -> BlackBoxMap:
    return BlackBoxMap(n, k, n, lambda x: -x if is_nilpotent(x, tol) else x, "nilpotent-flip")


def constant_nilpotent(n: int, k: int) -> BlackBoxMap:
    if n < 2:
        raise ValueError("constant_nilpotent needs n >= 2")
    e12 = matrix_unit(n, 0, 1)
    return BlackBoxMap(n, k, n, lambda x: e12, "constant-nilpotent")


def unit_phase(t: float) -> complex:
    """e^{i pi / (t + 1)}, the circle-valued weight of the 2x2 example."""
    return cmath.exp(1j * cmath.pi / (t + 1))


def petek_semrl_2x2() -> BlackBoxMap:
    def phi(x):
        a, b, c, d = x[0, 0], x[0, 1], x[1, 0], x[1, 1]
        if b == 0:
            return np.array([[a, 0], [c, d]], dtype=np.complex128)
        f = unit_phase(abs(c / b))
        return np.array([[a, b * f], [c * f.conjugate(), d]], dtype=np.complex128)

    return BlackBoxMap(2, 1, 2, phi, "petek-semrl-2x2")


def slot_fill_nilpotent(x, r: int) -> np.ndarray:
    """Strictly upper-triangular r x r matrix with X's entries laid row by row
    into the slots above the diagonal (surplus slots stay zero, surplus
    entries are dropped)."""
    out = np.zeros((r, r), dtype=np.complex128)
    rows, cols = np.triu_indices(r, 1)
    vals = np.asarray(x).ravel()
    count = min(len(rows), len(vals))
    out[rows[:count], cols[:count]] = vals[:count]
    return out


def block_embed(n: int, k: int, p: int, m: int, injective: bool | None = None) -> BlackBoxMap:
    """X -> diag(X, ..., X [p copies], psi(X)) with psi the slot-filling nilpotent.

    With p = 0 the map is injective only if psi is, i.e. r(r-1)/2 >= n^2 for
    r = m - p n; ``injective`` defaults to requiring that when p = 0.
    """
    r = m - p * n
    if p < 0 or r < 0:
        raise ValueError(f"need p >= 0 and m >= p n, got n={n}, p={p}, m={m}")
    if injective is None:
        injective = p == 0
    if injective and p == 0 and r * (r - 1) // 2 < n * n:
        raise ValueError(f"p = 0 injective embedding needs r(r-1)/2 >= n^2, got r={r}")

    def phi(x):
        out = np.zeros((m, m), dtype=np.complex128)
        for i in range(p):
            out[i * n:(i + 1) * n, i * n:(i + 1) * n] = x
        if r:
            out[p * n:, p * n:] = slot_fill_nilpotent(x, r)
        return out

    return BlackBoxMap(n, k, m, phi, f"block-embed(p={p})")


# -- catalog --------------------------------------------------------------------------

@dataclass
class ZooEntry:
    name: str
    map: BlackBoxMap
    expected_profile: dict
    provenance: str
    expected_p: object = None
    notes: str = ""

    def matches(self, verdicts: dict) -> bool:
        return all(verdict_matches(self.expected_profile[h], verdicts[h]) for h in HYPOTHESES)

    def mismatches(self, verdicts: dict) -> dict:
        return {h: (self.expected_profile[h], verdicts[h]) for h in HYPOTHESES
                if not verdict_matches(self.expected_profile[h], verdicts[h])}


def verdict_matches(expected: str, observed: str) -> bool:
    if expected == PASS:
        return observed in (PASS, INCONCLUSIVE_PASS)
    return expected == observed


def _profile(spectrum=PASS, charpoly=PASS, commute=PASS, inject=PASS, cont=PASS) -> dict:
    return {"spectrum_shrinking": spectrum, "char_poly_preserving": charpoly,
            "commutativity_preserving": commute, "injective_probe": inject,
            "continuity_probe": cont}


ZOO_NAMES = (
    "inner", "transpose-inner", "trace-reflect", "scaling-map", "varying-conjugator",
    "nilpotent-flip", "constant-nilpotent", "petek-semrl-2x2", "block-embed",
)


def _block_embed_entry(n, k, p, m):
    phi = block_embed(n, k, p, m, injective=False if p == 0 else None)
    r = m - p * n
    profile = _profile(
        spectrum=PASS if k < n or r == 0 else FAIL,
        charpoly=(PASS if p == 1 else FAIL) if m == n else INCONCLUSIVE,
        # psi of size >= 3 has non-commuting images
        commute=FAIL if r >= 3 else PASS,
        inject=PASS if p >= 1 or r * (r - 1) // 2 >= n * n else FAIL,
    )
    return ZooEntry("block-embed", phi, profile,
                    "block-diagonal embedding diag(X,...,X, psi(X)) realising a chosen p",
                    expected_p=p)


def zoo_entry(name: str, n: int = 3, k: int = 2, seed: int = 0, p: int = 2,
              m: int | None = None, tol: Tolerances = DEFAULT_TOL) -> ZooEntry:
    """Build one catalog entry.  ``p`` and ``m`` only matter for block-embed."""
    if name == "inner":
        t = random_invertible(n, np.random.default_rng([seed, 101]))
        return ZooEntry(name, inner(t, n, k), _profile(), "X -> T X T^-1 (Jordan automorphism)", 1)
    if name == "transpose-inner":
        t = random_invertible(n, np.random.default_rng([seed, 102]))
        return ZooEntry(name, transpose_inner(t, n, k), _profile(),
                        "X -> T X^t T^-1 (Jordan anti-automorphism)", 1)
    if name == "trace-reflect":
        return ZooEntry(name, trace_reflect(n), _profile(charpoly=FAIL),
                        "X -> Tr(X) I - X on rank <= 1: spectrum and commutativity preserving, not inner",
                        n - 1, notes="domain is k = 1 regardless of the requested k")
    if name == "scaling-map":
        return ZooEntry(name, scaling_map(n, k), _profile(spectrum=FAIL, charpoly=FAIL),
                        "X -> 2X: drops spectrum shrinking", "undetermined")
    if name == "varying-conjugator":
        return ZooEntry(name, varying_conjugator(n, k), _profile(commute=FAIL),
                        "X -> f(X) X f(X)^-1, f(X) = I + X_11 E_12: drops commutativity", 1)
    if name == "nilpotent-flip":
        return ZooEntry(name, nilpotent_flip(n, k, tol), _profile(cont=FAIL),
                        "X -> -X on nilpotents, X otherwise: drops continuity", 1)
    if name == "constant-nilpotent":
        return ZooEntry(name, constant_nilpotent(n, k), _profile(charpoly=FAIL, inject=FAIL),
                        "X -> E_12: drops injectivity", 0)
    if name == "petek-semrl-2x2":
        return ZooEntry(name, petek_semrl_2x2(), _profile(),
                        "2x2 injective continuous spectrum and commutativity preserver, not inner", 1,
                        notes="fixed at n = 2, k = 1")
    if name == "block-embed":
        if m is None:
            m = p * n + (0 if p else _min_nilpotent_size(n))
        return _block_embed_entry(n, k, p, m)
    raise KeyError(f"unknown zoo map {name!r}; known: {', '.join(ZOO_NAMES)}")


def _min_nilpotent_size(n):
    r = 1
    while r * (r - 1) // 2 < n * n:
        r += 1
    return r


def zoo_catalog(n: int = 3, k: int = 2, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> list:
    """Every zoo map at the given size, plus a p = 0 block embedding."""
    entries = [zoo_entry(name, n, k, seed, tol=tol) for name in ZOO_NAMES]
    entries.append(zoo_entry("block-embed", n, k, seed, p=0, tol=tol))
    entries[-1].name = "block-embed-nilpotent"
    return entries
