"""Samplers and structured constructions on the rank strata of M_n.

Every sampler takes an explicit ``seed`` (an int or a ``numpy`` Generator) and
never touches global RNG state.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .matrix_core import as_matrix

COND_MAX = 100.0
MIN_MODULUS = 0.1
MAX_MODULUS = 2.0
MIN_SEPARATION = 0.05


class DegenerateEpsilonError(ValueError):
    pass


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RankStratumSpec:
    n: int
    k: int
    exact_rank: bool = True

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got n={self.n}, k={self.k}")


@dataclass(frozen=True)
class DiagonalStratumSpec:
    n: int
    k: int
    zero_set: frozenset = field(default_factory=frozenset)
    require_distinct_nonzero: bool = True

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got n={self.n}, k={self.k}")
        if any(j < 0 or j >= self.n for j in self.zero_set):
            raise ValueError("zero_set indices out of range")
        if self.require_distinct_nonzero and len(self.zero_set) != self.n - self.k:
            raise ValueError(f"|zero_set| must be n-k = {self.n - self.k}")


@dataclass(frozen=True)
class JordanSpec:
    """Jordan matrix as an ordered tuple of (eigenvalue, block size)."""

    blocks: tuple

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("JordanSpec needs at least one block")
        for eig, size in self.blocks:
            if int(size) < 1:
                raise ValueError(f"block size must be positive, got {size}")

    @property
    def n(self) -> int:
        return sum(int(s) for _, s in self.blocks)

    @property
    def rank(self) -> int:
        return sum(int(s) if eig != 0 else int(s) - 1 for eig, s in self.blocks)

    def matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.complex128)
        pos = 0
        for eig, size in self.blocks:
            for i in range(size):
                a[pos + i, pos + i] = eig
                if i + 1 < size:
                    a[pos + i, pos + i + 1] = 1.0
            pos += size
        return as_matrix(a)

    def to_json(self) -> dict:
        return {"blocks": [{"eig": [complex(e).real, complex(e).imag], "size": int(s)}
                           for e, s in self.blocks]}

    @classmethod
    def from_json(cls, obj) -> "JordanSpec":
        try:
            return cls(tuple((complex(b["eig"][0], b["eig"][1]), int(b["size"]))
                             for b in obj["blocks"]))
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed JordanSpec: {exc}") from exc


# -- building blocks --------------------------------------------------------------

def lambda_matrix(n: int, k: int) -> np.ndarray:
    """diag(1, ..., k, 0, ..., 0)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    d = np.zeros(n, dtype=np.complex128)
    d[:k] = np.arange(1, k + 1)
    return as_matrix(np.diag(d))


def random_invertible(n: int, seed, cond_max: float = COND_MAX) -> np.ndarray:
    """Complex Ginibre draw with singular values clamped to [1/cond_max, 1]."""
    rng = _rng(seed)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u, s, vh = np.linalg.svd(g)
    s = np.maximum(s / s[0], 1.0 / cond_max)
    return (u * s) @ vh


def nonzero_values(count: int, seed, min_sep: float = MIN_SEPARATION) -> np.ndarray:
    """Pairwise separated complex values with modulus in [0.1, 2]."""
    rng = _rng(seed)
    out = []
    while len(out) < count:
        z = rng.uniform(MIN_MODULUS, MAX_MODULUS) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - w) >= min_sep for w in out):
            out.append(z)
    return np.array(out, dtype=np.complex128)


def _conjugate(s, a):
    return s @ a @ np.linalg.inv(s)


def random_partition(total: int, parts: int, rng) -> list:
    """Random composition of ``total`` into ``parts`` positive integers."""
    if parts < 1 or parts > total:
        raise ValueError(f"cannot split {total} into {parts} positive parts")
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, total]
    return [int(edges[i + 1] - edges[i]) for i in range(parts)]


# -- samplers ------------------------------------------------------------------------

def sample_exact_rank(spec: RankStratumSpec, seed) -> np.ndarray:
    """P diag(d_1..d_r, 0..0) Q with r = k, or r uniform in [0, k] if not exact_rank."""
    rng = _rng(seed)
    n, k = spec.n, spec.k
    r = k if spec.exact_rank else int(rng.integers(0, k + 1))
    d = np.zeros(n, dtype=np.complex128)
    d[:r] = nonzero_values(r, rng)
    p = random_invertible(n, rng)
    q = random_invertible(n, rng)
    return as_matrix(p @ np.diag(d) @ q)


def sample_diagonal(spec: DiagonalStratumSpec, seed) -> np.ndarray:
    rng = _rng(seed)
    n = spec.n
    zero_set = set(spec.zero_set)
    if not spec.require_distinct_nonzero and not zero_set:
        zero_set = set(rng.choice(n, size=n - spec.k, replace=False).tolist())
    free = [i for i in range(n) if i not in zero_set]
    d = np.zeros(n, dtype=np.complex128)
    d[free] = nonzero_values(len(free), rng)
    return as_matrix(np.diag(d))


def sample_diagonalizable_rank_k(n: int, k: int, seed) -> np.ndarray:
    """S D S^-1 with D diagonal, k pairwise distinct nonzero entries at random places."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    rng = _rng(seed)
    zeros = frozenset(rng.choice(n, size=n - k, replace=False).tolist())
    d = sample_diagonal(DiagonalStratumSpec(n, k, zeros), rng)
    return as_matrix(_conjugate(random_invertible(n, rng), d))


def nilpotent_jordan(sizes) -> np.ndarray:
    return JordanSpec(tuple((0.0, s) for s in sizes)).matrix()


def sample_nilpotent(n: int, r: int, seed) -> np.ndarray:
    """S N S^-1 with N a nilpotent Jordan matrix of rank r (needs r <= n-1)."""
    if not 0 <= r <= n - 1:
        raise ValueError(f"nilpotent rank must lie in [0, n-1], got {r}")
    rng = _rng(seed)
    sizes = random_partition(n, n - r, rng)
    return as_matrix(_conjugate(random_invertible(n, rng), nilpotent_jordan(sizes)))


def sample_mixed(n: int, r: int, seed) -> np.ndarray:
    """Rank-r matrix with a nonzero semisimple part and a nontrivial nilpotent part."""
    if not 2 <= r <= n - 1:
        raise ValueError(f"mixed sampler needs 2 <= r <= n-1, got r={r}, n={n}")
    rng = _rng(seed)
    a = int(rng.integers(1, r))              # number of nonzero eigenvalues
    size = n - a                             # nilpotent block size, rank r - a
    sizes = random_partition(size, size - (r - a), rng)
    body = np.zeros((n, n), dtype=np.complex128)
    body[:a, :a] = np.diag(nonzero_values(a, rng))
    body[a:, a:] = nilpotent_jordan(sizes)
    return as_matrix(_conjugate(random_invertible(n, rng), body))


SAMPLE_KINDS = ("diagonalizable", "exact", "nilpotent", "mixed")


def sample_stratified(n: int, k: int, index: int, seed) -> tuple:
    """The ``index``-th draw of a deterministic sweep over ranks 1..k and kinds.

    Returns ``(kind, rank, matrix)``.  Kinds that cannot realise the rank fall
    back to ``diagonalizable``.
    """
    rng = _rng(seed)
    r = 1 + index % k
    kind = SAMPLE_KINDS[(index // k) % len(SAMPLE_KINDS)]
    if kind == "nilpotent" and r > n - 1:
        kind = "diagonalizable"
    if kind == "mixed" and not 2 <= r <= n - 1:
        kind = "nilpotent" if r <= n - 1 else "diagonalizable"
    if kind == "diagonalizable":
        x = sample_diagonalizable_rank_k(n, r, rng)
    elif kind == "exact":
        x = sample_exact_rank(RankStratumSpec(n, r), rng)
    elif kind == "nilpotent":
        x = sample_nilpotent(n, r, rng)
    else:
        x = sample_mixed(n, r, rng)
    return kind, r, x


def sample_commuting_pair(n: int, k: int, seed, same: bool = False):
    """(S D1 S^-1, S D2 S^-1) with D1, D2 diagonal of rank <= k."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    rng = _rng(seed)
    s = random_invertible(n, rng)
    s_inv = np.linalg.inv(s)
    d1 = sample_diagonal(DiagonalStratumSpec(n, int(rng.integers(1, k + 1)), require_distinct_nonzero=False), rng)
    d2 = d1 if same else sample_diagonal(
        DiagonalStratumSpec(n, int(rng.integers(1, k + 1)), require_distinct_nonzero=False), rng)
    return as_matrix(s @ d1 @ s_inv), as_matrix(s @ d2 @ s_inv)


# -- perturbation to the generic stratum -------------------------------------------

def _perturb_positions(j: JordanSpec):
    shifted, nilpotent = [], []
    pos = 0
    for eig, size in j.blocks:
        if eig != 0:
            shifted.extend((pos + i, complex(eig)) for i in range(size))
        else:
            # positions i with (i, i+1) in the support of J(0)
            nilpotent.extend(pos + i for i in range(size - 1))
        pos += size
    return shifted, nilpotent


def perturb_jordan_to_generic(j: JordanSpec, eps: float) -> np.ndarray:
    """Move the diagonal of a Jordan matrix into the generic rank stratum.

    Nonzero-eigenvalue positions and the superdiagonal-supported positions of
    the nilpotent part get pairwise distinct offsets ``eps*i/(n+1)`` rotated by
    a fixed irrational phase.  Off-diagonal entries are untouched, so the rank
    is unchanged and the result has ``rank`` distinct nonzero eigenvalues.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    a = j.matrix()
    n = j.n
    shifted, nilpotent = _perturb_positions(j)
    slots = [p for p, _ in shifted] + nilpotent
    base = [lam for _, lam in shifted] + [0j] * len(nilpotent)
    for phase in (1.0, 2.0, 3.0, 5.0):
        rot = cmath.exp(1j * phase)
        deltas = [eps * (i + 1) / (n + 1) * rot for i in range(len(slots))]
        values = [b + d for b, d in zip(base, deltas)]
        ok = all(v != b and v != 0 for v, b in zip(values, base))
        ok = ok and len(set(values)) == len(values)
        if ok:
            out = np.array(a)
            for p, v in zip(slots, values):
                out[p, p] = v
            return as_matrix(out)
    raise DegenerateEpsilonError(
        f"eps={eps!r} is too small to produce distinct nonzero diagonal values in floating point")
