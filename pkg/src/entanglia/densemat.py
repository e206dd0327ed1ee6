"""Dense complex linear algebra: Hermitian eigendecomposition, SVD and the
singular-value based (k, p) norms with their duals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERM_TOL = 1e-10
RANK_TOL = 1e-12
PSD_TOL = 1e-9


class DimensionError(ValueError):
    """Raised for shape, symmetry or parameter-range violations."""


@dataclass(frozen=True)
class HermEigResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns


@dataclass(frozen=True)
class SVDResult:
    u: np.ndarray
    s: np.ndarray  # descending
    vh: np.ndarray


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix has non-finite entries")
    return a


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return np.linalg.norm(a - a.conj().T) <= tol * (1.0 + np.linalg.norm(a))


def hermitian_part(a) -> np.ndarray:
    """Check Hermiticity within tolerance and return (A + A^dagger)/2."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"square matrix required, got {a.shape}")
    if not is_hermitian(a):
        raise DimensionError("matrix is not Hermitian within tolerance")
    return (a + a.conj().T) / 2


def herm_eig(a) -> HermEigResult:
    h = hermitian_part(a)
    w, v = np.linalg.eigh(h)
    return HermEigResult(w, v)


def eigvalsh(a) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian_part(a))


def lambda_max(a) -> float:
    return float(eigvalsh(a)[-1])


def lambda_min(a) -> float:
    return float(eigvalsh(a)[0])


def is_psd(a, tol: float = PSD_TOL) -> bool:
    if not is_hermitian(a):
        return False
    w = eigvalsh(a)
    scale = 1.0 + max(abs(w[0]), abs(w[-1]))
    return bool(w[0] >= -tol * scale)


def svd(a) -> SVDResult:
    a = as_matrix(a)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return SVDResult(u, s, vh)


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def numerical_rank(a, tol: float = RANK_TOL) -> int:
    s = singular_values(a)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _check_k(k: int, n: int) -> None:
    if not (1 <= k <= n):
        raise DimensionError(f"k={k} out of range 1..{n}")


def kp_norm(a, k: int, p: float) -> float:
    """(sum of the k largest singular values to the p)^(1/p)."""
    s = singular_values(a)
    _check_k(k, s.size)
    if p < 1:
        raise DimensionError("p must be >= 1")
    top = s[:k]
    if np.isinf(p):
        return float(top[0])
    return float(np.sum(top ** p) ** (1.0 / p))


def waterfill(sigma: np.ndarray, k: int) -> tuple[int, float]:
    """Return (r, level) for the dual (k, p) formulas.

    r is the largest index r < k with sigma_r > sum_{i>r} sigma_i / (k - r),
    or 0 if there is none; level is sum_{i>r} sigma_i / (k - r).
    """
    sigma = np.asarray(sigma, dtype=float)
    for r in range(k - 1, 0, -1):
        tail = float(np.sum(sigma[r:]))
        if sigma[r - 1] > tail / (k - r):
            return r, tail / (k - r)
    return 0, float(np.sum(sigma)) / k


def kp_dual_norm_from_sv(s: np.ndarray, k: int, p: float) -> float:
    _check_k(k, s.size)
    r, level = waterfill(s, k)
    if p == 1:
        return float(max(s[0], level))
    if np.isinf(p):
        q = 1.0
    else:
        q = p / (p - 1.0)
    head = np.sum(s[:r] ** q)
    return float((head + (k - r) * level ** q) ** (1.0 / q))


def kp_dual_norm(a, k: int, p: float) -> float:
    if p < 1:
        raise DimensionError("p must be >= 1")
    return kp_dual_norm_from_sv(singular_values(a), k, p)


def trace_norm(a) -> float:
    return float(np.sum(singular_values(a)))


def operator_norm(a) -> float:
    return float(singular_values(a)[0])


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None,
               real: bool = False) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank))
    if not real:
        g = g + 1j * rng.standard_normal((n, rank))
    x = g @ g.conj().T
    return (x + x.conj().T) / 2


def random_state_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _rref_basis(q: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of span(q) obtained from the reduced row echelon form
    of q^T, so that the result does not depend on how q was chosen."""
    r = q.T.copy()
    g, d = r.shape
    row = 0
    for col in range(d):
        if row == g:
            break
        piv = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[piv, col]) <= tol:
            continue
        r[[row, piv]] = r[[piv, row]]
        r[row] /= r[row, col]
        for i in range(g):
            if i != row:
                r[i] -= r[i, col] * r[row]
        row += 1
    out = []
    for vrow in r[:row]:
        v = vrow.copy()
        for u in out:
            v = v - np.vdot(u, v) * u
        out.append(v / np.linalg.norm(v))
    return np.array(out).T


def canonical_eigh(a, group_tol: float = 1e-9) -> HermEigResult:
    """Ascending eigendecomposition with a reproducible basis inside each
    degenerate eigenspace (eigenvalues grouped with relative tolerance)."""
    h = hermitian_part(a)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    out = v.copy()
    start = 0
    while start < w.size:
        stop = start + 1
        while stop < w.size and w[stop] - w[start] <= group_tol * scale:
            stop += 1
        if stop - start > 1:
            out[:, start:stop] = _rref_basis(v[:, start:stop])
            w[start:stop] = np.mean(w[start:stop])
        start = stop
    return HermEigResult(w, out)
