"""Tensor-product structure on dense matrices.

Factor ordering follows ``np.kron``: the first factor is the most significant
index. Permutations are 0-indexed tuples where ``perm[i]`` is the position the
i-th factor is moved to.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from .densemat import DimensionError, as_matrix


@dataclass(frozen=True)
class BipartiteOperator:
    mat: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        m, n = self.dims
        if self.mat.shape != (m * n, m * n):
            raise DimensionError(f"operator of shape {self.mat.shape} does not match dims {self.dims}")


def kron(*mats) -> np.ndarray:
    if not mats:
        return np.ones((1, 1))
    return reduce(np.kron, [np.asarray(a) for a in mats])


def _check_square(x: np.ndarray, dims: Sequence[int]) -> None:
    d = math.prod(dims)
    if x.shape != (d, d):
        raise DimensionError(f"shape {x.shape} incompatible with factor dims {tuple(dims)}")
    if any(k < 1 for k in dims):
        raise DimensionError("factor dimensions must be >= 1")


def partial_trace_multi(x, dims: Sequence[int], traced: Sequence[int]) -> np.ndarray:
    """Trace out the (0-indexed) factors listed in ``traced``."""
    x = as_matrix(x)
    dims = list(dims)
    _check_square(x, dims)
    p = len(dims)
    t = x.reshape(dims + dims)
    traced = sorted(set(traced), reverse=True)
    for i in traced:
        t = np.trace(t, axis1=i, axis2=i + p)
        p -= 1
    keep = [d for j, d in enumerate(dims) if j not in traced]
    dk = math.prod(keep)
    return t.reshape(dk, dk)


def partial_trace(x, dims: tuple[int, int], which: int = 2) -> np.ndarray:
    """Tr_1 (which=1) or Tr_2 (which=2) of an operator on C^m (x) C^n."""
    if which not in (1, 2):
        raise DimensionError("which must be 1 or 2")
    return partial_trace_multi(x, dims, [which - 1])


def partial_transpose_multi(x, dims: Sequence[int], factors: Sequence[int]) -> np.ndarray:
    x = as_matrix(x)
    dims = list(dims)
    _check_square(x, dims)
    p = len(dims)
    t = x.reshape(dims + dims)
    axes = list(range(2 * p))
    for i in factors:
        axes[i], axes[i + p] = axes[i + p], axes[i]
    return t.transpose(axes).reshape(x.shape)


def partial_transpose(x, dims: tuple[int, int], which: int = 2) -> np.ndarray:
    if which not in (1, 2):
        raise DimensionError("which must be 1 or 2")
    return partial_transpose_multi(x, dims, [which - 1])


def realign(x, dims) -> np.ndarray:
    """Realignment |i><j| (x) |k><l|  ->  |i><k| (x) |j><l|.

    ``dims`` is (m, n) for a square operator on C^m (x) C^n, giving an
    m^2 x n^2 result, or ((a, b), (c, d)) for an operator in
    M_{a,b} (x) M_{c,d} (shape ac x bd), giving shape ab x cd.
    """
    x = as_matrix(x)
    if isinstance(dims[0], (tuple, list)):
        (a, b), (c, d) = dims
    else:
        m, n = dims
        a, b, c, d = m, m, n, n
    if x.shape != (a * c, b * d):
        raise DimensionError(f"shape {x.shape} incompatible with realignment dims")
    t = x.reshape(a, c, b, d)  # [i, k, j, l]
    return t.transpose(0, 2, 1, 3).reshape(a * b, c * d)


def swap_operator(m: int, n: int | None = None) -> np.ndarray:
    """S |i>|j> = |j>|i>, mapping C^m (x) C^n to C^n (x) C^m."""
    n = m if n is None else n
    return swap_perm((m, n), (1, 0))


def _check_perm(perm: Sequence[int], p: int) -> None:
    if sorted(perm) != list(range(p)):
        raise DimensionError(f"{tuple(perm)} is not a permutation of 0..{p - 1}")


def permute_factors_vec(v, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    _check_perm(perm, len(dims))
    inv = np.argsort(perm)
    t = np.asarray(v).reshape(dims)
    return t.transpose(inv).reshape(-1)


def swap_perm(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Permutation operator moving factor i to position perm[i]."""
    dims = list(dims)
    _check_perm(perm, len(dims))
    d = math.prod(dims)
    inv = np.argsort(perm)
    idx = np.arange(d).reshape(dims).transpose(inv).reshape(-1)
    out = np.zeros((d, d))
    out[np.arange(d), idx] = 1.0
    return out


def permute_operator(x, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """P X P^dagger for the factor permutation P = swap_perm(dims, perm)."""
    x = as_matrix(x)
    dims = list(dims)
    _check_square(x, dims)
    _check_perm(perm, len(dims))
    p = len(dims)
    inv = list(np.argsort(perm))
    t = x.reshape(dims + dims).transpose(inv + [i + p for i in inv])
    return t.reshape(x.shape)


def sym_projector(n: int, p: int) -> np.ndarray:
    """(1/p!) sum over all factor permutations of (C^n)^{(x) p}."""
    if p < 1 or n < 1:
        raise DimensionError("n, p must be >= 1")
    dims = [n] * p
    acc = np.zeros((n ** p, n ** p))
    for perm in itertools.permutations(range(p)):
        acc += swap_perm(dims, perm)
    return acc / math.factorial(p)


@lru_cache(maxsize=None)
def occupation_basis(n: int, s: int) -> tuple[tuple[int, ...], ...]:
    """Occupation-number vectors (k_1..k_n), sum s, in lexicographic order of
    the sorted index multisets."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), s):
        occ = [0] * n
        for i in combo:
            occ[i] += 1
        out.append(tuple(occ))
    return tuple(out)


def sym_dim(n: int, s: int) -> int:
    return math.comb(n + s - 1, s)


def sym_isometry(n: int, s: int) -> np.ndarray:
    """n^s x C(n+s-1, s) isometry onto the symmetric subspace."""
    if s < 1 or n < 1:
        raise DimensionError("n, s must be >= 1")
    basis = occupation_basis(n, s)
    v = np.zeros((n ** s, len(basis)))
    for col, occ in enumerate(basis):
        letters = [i for i, k in enumerate(occ) for _ in range(k)]
        arrangements = set(itertools.permutations(letters))
        norm = math.sqrt(math.factorial(s) / math.prod(math.factorial(k) for k in occ))
        for word in arrangements:
            row = 0
            for letter in word:
                row = row * n + letter
            v[row, col] = 1.0 / norm
    return v


def vec(a) -> np.ndarray:
    """Column stacking: an n x m matrix maps into C^m (x) C^n."""
    a = as_matrix(a)
    return a.T.reshape(-1).copy()


def mat(v, m: int, n: int) -> np.ndarray:
    """Inverse of vec for v in C^m (x) C^n; returns an n x m matrix."""
    v = np.asarray(v).reshape(-1)
    if v.size != m * n:
        raise DimensionError(f"vector of length {v.size} cannot be reshaped to {n}x{m}")
    return v.reshape(m, n).T.copy()


def max_entangled(n: int) -> np.ndarray:
    """|psi_+> = sum_i |ii> / sqrt(n)."""
    v = np.zeros(n * n)
    v[:: n + 1] = 1.0
    return v / np.sqrt(n)


def basis_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e
