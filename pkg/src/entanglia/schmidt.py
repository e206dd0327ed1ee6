"""Schmidt decompositions and the s(k) vector norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densemat import DimensionError, kp_norm, waterfill
from .tensor import mat, realign


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray
    left: np.ndarray  # columns in C^m
    right: np.ndarray  # columns in C^n
    rank: int

    def reconstruct(self) -> np.ndarray:
        return np.einsum("k,ik,jk->ij", self.coefficients, self.left, self.right).reshape(-1)


def _as_state(v, m: int, n: int) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    if v.size != m * n:
        raise DimensionError(f"vector of length {v.size} is not in C^{m} (x) C^{n}")
    return v


def _check_k(k: int, m: int, n: int) -> None:
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range 1..{min(m, n)}")


def schmidt_decompose(v, m: int, n: int, tol: float = 1e-10) -> SchmidtData:
    v = _as_state(v, m, n)
    u, s, vh = np.linalg.svd(v.reshape(m, n), full_matrices=False)
    # reshape(m, n) = U diag(s) Vh, so v = sum_k s_k u_k (x) (row k of Vh)
    right = vh.T.copy()
    left = u.copy()
    for k in range(s.size):
        col = left[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            left[:, k] = col / ph
            right[:, k] = right[:, k] * ph
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return SchmidtData(s, left, right, rank)


def schmidt_rank(v, m: int, n: int, tol: float = 1e-10) -> int:
    return schmidt_decompose(v, m, n, tol).rank


def schmidt_coefficients(v, m: int, n: int) -> np.ndarray:
    return np.linalg.svd(_as_state(v, m, n).reshape(m, n), compute_uv=False)


def sk_vector_norm(v, m: int, n: int, k: int) -> float:
    _check_k(k, m, n)
    a = schmidt_coefficients(v, m, n)
    return float(np.sqrt(np.sum(a[:k] ** 2)))


def sk_vector_dual_norm(v, m: int, n: int, k: int, return_optimizer: bool = False):
    """Dual s(k) norm by water-filling the Schmidt coefficients.

    With ``return_optimizer`` also returns the unit vector w attaining
    |<w|v>| = dual * ||w||_{s(k)}.
    """
    _check_k(k, m, n)
    sd = schmidt_decompose(v, m, n)
    a = sd.coefficients
    r, level = waterfill(a, k)
    value = float(np.sqrt(np.sum(a[:r] ** 2) + (k - r) * level ** 2))
    if not return_optimizer:
        return value
    c = np.where(np.arange(a.size) < r, a, level)
    w = np.einsum("k,ik,jk->ij", c, sd.left, sd.right).reshape(-1)
    nrm = np.linalg.norm(w)
    return value, (w / nrm if nrm > 0 else w)


def truncate_sr(v, m: int, n: int, k: int) -> np.ndarray:
    """Nearest Schmidt-rank-k vector, renormalised."""
    v = _as_state(v, m, n)
    u, s, vh = np.linalg.svd(v.reshape(m, n), full_matrices=False)
    w = (u[:, :k] * s[:k]) @ vh[:k]
    nrm = np.linalg.norm(w)
    if nrm == 0:
        out = np.zeros(m * n, dtype=v.dtype)
        out[0] = 1.0
        return out
    return (w / nrm).reshape(-1)


@dataclass(frozen=True)
class OperatorSchmidt:
    coefficients: np.ndarray
    a_factors: list
    b_factors: list

    def reconstruct(self) -> np.ndarray:
        return sum(c * np.kron(a, b) for c, a, b in zip(self.coefficients, self.a_factors, self.b_factors))


def operator_schmidt(x, dims: tuple[int, int], tol: float = 1e-12) -> OperatorSchmidt:
    """X = sum alpha_i A_i (x) B_i with HS-orthonormal factors.

    The coefficients are the singular values of realign(X).
    """
    m, n = dims
    r = realign(x, dims)
    u, s, vh = np.linalg.svd(r, full_matrices=False)
    keep = s > tol * (s[0] if s.size else 0)
    a_f = [u[:, i].reshape(m, m) for i in range(s.size) if keep[i]]
    b_f = [vh[i].reshape(n, n) for i in range(s.size) if keep[i]]
    return OperatorSchmidt(s[keep], a_f, b_f)


def sk_norm_via_matrix(v, m: int, n: int, k: int) -> float:
    """Same norm computed as the (k, 2) norm of mat(v)."""
    return kp_norm(mat(_as_state(v, m, n), m, n), k, 2)
