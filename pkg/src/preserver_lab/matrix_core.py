"""Dense complex matrix primitives: characteristic polynomials, spectra, rank.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_matrix`
validates and normalises anything matrix-like.  All functions are pure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every check.

    rank_rtol
        singular values below ``rank_rtol * sigma_max`` count as zero.
    spec_atol
        eigenvalues closer than this are the same point of the spectrum.
    residual_rtol
        relative Frobenius radius used when certifying matrix identities.
    """

    rank_rtol: float = 1e-9
    spec_atol: float = 1e-7
    residual_rtol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rtol", "spec_atol", "residual_rtol"):
            v = getattr(self, name)
            if not (v >= 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be a finite nonnegative number, got {v!r}")

    def to_dict(self):
        return {"rank_rtol": self.rank_rtol, "spec_atol": self.spec_atol,
                "residual_rtol": self.residual_rtol}


DEFAULT_TOL = Tolerances()


def as_matrix(a, square: bool = False) -> np.ndarray:
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"expected a nonempty 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixFormatError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    """E_ij with zero-based indices."""
    e = np.zeros((n, n), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def _same_shape_square(x, y):
    x = as_matrix(x, square=True)
    y = as_matrix(y, square=True)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    return x, y


# -- characteristic polynomial ------------------------------------------------

def char_poly(a) -> np.ndarray:
    """Coefficients of det(xI - A), lowest degree first; ``coeffs[n] == 1``.

    Faddeev-LeVerrier trace recurrence run on ``A / s`` with ``s`` a power of
    two near ``max|a_ij|``, then rescaled exactly.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    amax = float(np.max(np.abs(a)))
    if amax == 0.0:
        coeffs = np.zeros(n + 1, dtype=np.complex128)
        coeffs[n] = 1.0
        return coeffs
    s = 2.0 ** int(np.round(np.log2(amax)))
    b = a / s
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    coeffs[n] = 1.0
    eye = np.eye(n, dtype=np.complex128)
    m = eye.copy()
    for j in range(1, n + 1):
        bm = b @ m
        c = -np.trace(bm) / j
        coeffs[n - j] = c
        m = bm + c * eye
    # c_{n-j}(A) = c_{n-j}(A/s) * s^j
    coeffs[:n] *= s ** np.arange(n, 0, -1, dtype=float)
    return coeffs


def poly_from_roots(roots: Iterable[complex]) -> np.ndarray:
    """Monic polynomial with the given roots, lowest degree first."""
    p = np.array([1.0], dtype=np.complex128)
    for r in roots:
        p = np.convolve(p, np.array([-r, 1.0], dtype=np.complex128))
    return p


def poly_mul(p, q) -> np.ndarray:
    return np.convolve(np.asarray(p, dtype=np.complex128), np.asarray(q, dtype=np.complex128))


def poly_pow(p, e: int) -> np.ndarray:
    out = np.array([1.0], dtype=np.complex128)
    for _ in range(e):
        out = poly_mul(out, p)
    return out


def x_power(e: int) -> np.ndarray:
    out = np.zeros(e + 1, dtype=np.complex128)
    out[e] = 1.0
    return out


def poly_distance(p, q) -> float:
    """Max-coefficient distance, padding the shorter polynomial with zeros."""
    p = np.asarray(p, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    size = max(len(p), len(q))
    pp = np.zeros(size, dtype=np.complex128)
    qq = np.zeros(size, dtype=np.complex128)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return float(np.max(np.abs(pp - qq)))


# -- spectra ---------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues with algebraic multiplicities, sorted by (re, im)."""

    eigenvalues: tuple  # of (complex, int)

    @property
    def values(self) -> list:
        return [v for v, _ in self.eigenvalues]

    @property
    def size(self) -> int:
        return sum(m for _, m in self.eigenvalues)

    def multiset(self) -> list:
        return [v for v, m in self.eigenvalues for _ in range(m)]

    def multiplicity(self, value: complex, atol: float) -> int:
        return sum(m for v, m in self.eigenvalues if abs(v - value) <= atol)

    def to_dict(self):
        return {"eigenvalues": [{"value": [v.real, v.imag], "multiplicity": m}
                                for v, m in self.eigenvalues]}


def merge_eigenvalues(values: Sequence[complex], atol: float) -> Spectrum:
    """Single-linkage clustering: merge pairs in ascending distance while < atol."""
    vals = sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag))
    groups = [[v] for v in vals]
    while True:
        centers = [complex(np.mean(g)) for g in groups]
        best = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                d = abs(centers[i] - centers[j])
                if d <= atol and (best is None or d < best[0]):
                    best = (d, i, j)
        if best is None:
            break
        _, i, j = best
        groups[i] = groups[i] + groups[j]
        del groups[j]
    out = []
    for g in groups:
        c = complex(np.mean(g))
        # snap tiny parts so exact zeros print as zeros
        c = complex(0.0 if abs(c.real) <= atol * 1e-3 else c.real,
                    0.0 if abs(c.imag) <= atol * 1e-3 else c.imag)
        out.append((c, len(g)))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return Spectrum(tuple(out))


def _is_triangular(a) -> bool:
    return not np.any(np.tril(a, -1)) or not np.any(np.triu(a, 1))


def raw_eigenvalues(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues as a flat array (with repetitions).

    The zero eigenvalue is split off exactly by unitary null-space deflation
    (a rank-revealing staircase) before LAPACK sees the rest, so defective
    nilpotent parts come back as exact zeros instead of ``eps**(1/s)`` clouds.
    Triangular input returns its diagonal.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if _is_triangular(a):
        return np.array(np.diag(a))
    scale = np.linalg.norm(a, 2)
    if scale == 0.0:
        return np.zeros(n, dtype=np.complex128)
    cutoff = tol.rank_rtol * scale
    zeros = 0
    b = np.array(a)
    while b.shape[0] > 0:
        u, s, vh = np.linalg.svd(b)
        null = int(np.sum(s <= cutoff))
        if null == 0:
            break
        # reversed so null directions come first
        v = vh.conj().T[:, ::-1]
        c = v.conj().T @ b @ v
        zeros += null
        b = c[null:, null:]
    rest = np.zeros(0, dtype=np.complex128)
    if b.shape[0] > 0:
        try:
            rest = np.linalg.eigvals(b)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigenvalue iteration failed: {exc}",
                                   partial={"zero_multiplicity": zeros}) from exc
    return np.concatenate([np.zeros(zeros, dtype=np.complex128), rest])


def eigenvalues(a, tol: Tolerances = DEFAULT_TOL) -> Spectrum:
    return merge_eigenvalues(raw_eigenvalues(a, tol), tol.spec_atol)


def spectrum_subset(s1: Spectrum, s2: Spectrum, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Set containment, multiplicities ignored."""
    return all(any(abs(v - w) <= tol.spec_atol for w in s2.values) for v in s1.values)


def is_nilpotent(a, tol: Tolerances = DEFAULT_TOL) -> bool:
    return all(abs(v) <= tol.spec_atol for v in eigenvalues(a, tol).values)


# -- rank -------------------------------------------------------------------------

def rank(a, tol: Tolerances = DEFAULT_TOL) -> int:
    a = as_matrix(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_rtol * s[0]))


def exact_rank(a) -> int:
    """Rank over Q(i) of the exact binary values stored in ``a``.

    Every float is a dyadic rational, so converting through ``Fraction`` is
    lossless and the elimination is exact.
    """
    from sympy import QQ_I
    from sympy.polys.matrices import DomainMatrix

    a = as_matrix(a)
    rows = [[QQ_I(Fraction(z.real), Fraction(z.imag)) for z in row] for row in a]
    return int(DomainMatrix(rows, a.shape, QQ_I).rank())


# -- relations --------------------------------------------------------------------

def _relation_bound(x, y, tol):
    return tol.residual_rtol * (1.0 + np.linalg.norm(x) * np.linalg.norm(y))


def commutator_norm(x, y) -> float:
    x, y = _same_shape_square(x, y)
    return float(np.linalg.norm(x @ y - y @ x))


def commutes(x, y, tol: Tolerances = DEFAULT_TOL) -> bool:
    x, y = _same_shape_square(x, y)
    return commutator_norm(x, y) <= _relation_bound(x, y, tol)


def orthogonal_pair(x, y, tol: Tolerances = DEFAULT_TOL) -> bool:
    """XY = YX = 0 within tolerance."""
    x, y = _same_shape_square(x, y)
    bound = _relation_bound(x, y, tol)
    return np.linalg.norm(x @ y) <= bound and np.linalg.norm(y @ x) <= bound


# -- flat / sharp -----------------------------------------------------------------

def _index_set(s, size):
    idx = sorted(set(int(i) for i in s))
    if idx and (idx[0] < 0 or idx[-1] >= size):
        raise IndexError(f"index set {idx} out of range for size {size}")
    return idx


def flat(a, s) -> np.ndarray:
    """Delete rows and columns indexed by ``s`` (zero-based)."""
    a = as_matrix(a, square=True)
    n = a.shape[0]
    idx = _index_set(s, n)
    if len(idx) == n:
        raise DimensionError("flat would delete every row and column")
    keep = [i for i in range(n) if i not in idx]
    return as_matrix(a[np.ix_(keep, keep)])


def sharp(a, s) -> np.ndarray:
    """Insert zero rows and columns so that they sit at positions ``s`` of the result."""
    a = as_matrix(a, square=True)
    size = a.shape[0] + len(set(s))
    idx = _index_set(s, size)
    keep = [i for i in range(size) if i not in idx]
    out = np.zeros((size, size), dtype=np.complex128)
    out[np.ix_(keep, keep)] = a
    return as_matrix(out)


# -- JSON matrix format -----------------------------------------------------------

def matrix_to_json(a) -> dict:
    a = as_matrix(a)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]),
            "data": [[float(z.real), float(z.imag)] for z in a.ravel()]}


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFormatError(f"malformed matrix object: {exc}") from exc
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError("rows and cols must be positive")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise MatrixFormatError(
            f"data length {len(data) if isinstance(data, list) else '?'} != rows*cols = {rows * cols}")
    vals = []
    for entry in data:
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise MatrixFormatError(f"entry {entry!r} is not a [re, im] pair")
        vals.append(complex(float(entry[0]), float(entry[1])))
    return as_matrix(np.array(vals, dtype=np.complex128).reshape(rows, cols))
