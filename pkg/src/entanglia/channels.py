"""Superoperators held as Choi matrices.

The Choi matrix of Phi: M_m -> M_n is C = sum_ij |i><j| (x) Phi(|i><j|), with the
input factor first. Kraus operators are n x m matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .densemat import PSD_TOL, DimensionError, as_matrix, canonical_eigh, is_hermitian
from .tensor import mat, max_entangled, partial_trace, swap_operator, vec


@dataclass(frozen=True)
class Channel:
    choi: np.ndarray
    in_dim: int
    out_dim: int

    def __post_init__(self):
        d = self.in_dim * self.out_dim
        if self.choi.shape != (d, d):
            raise DimensionError(
                f"Choi matrix shape {self.choi.shape} does not match ({self.in_dim}, {self.out_dim})")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.in_dim, self.out_dim)

    def __call__(self, x):
        return apply(self, x)


@dataclass(frozen=True)
class KrausSet:
    left: list
    right: list
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise DimensionError("left and right Kraus lists differ in length")
        if self.weights is None:
            object.__setattr__(self, "weights", np.ones(len(self.left)))

    @property
    def is_cp_form(self) -> bool:
        return all(a is b or np.array_equal(a, b) for a, b in zip(self.left, self.right)) and \
            bool(np.all(self.weights > 0))


def kraus_set(ops) -> KrausSet:
    ops = [as_matrix(a) for a in ops]
    return KrausSet(ops, ops, np.ones(len(ops)))


def choi_from_kraus(kraus, m: int | None = None, n: int | None = None) -> Channel:
    if not isinstance(kraus, KrausSet):
        kraus = kraus_set(kraus)
    if not kraus.left:
        if m is None or n is None:
            raise DimensionError("dims required for an empty Kraus set")
        return Channel(np.zeros((m * n, m * n)), m, n)
    n0, m0 = kraus.left[0].shape
    m = m0 if m is None else m
    n = n0 if n is None else n
    c = np.zeros((m * n, m * n), dtype=complex)
    for w, a, b in zip(kraus.weights, kraus.left, kraus.right):
        if a.shape != (n, m) or b.shape != (n, m):
            raise DimensionError(f"Kraus operator shape {a.shape} != ({n}, {m})")
        c += w * np.outer(vec(a), vec(b).conj())
    return Channel(_maybe_real(c), m, n)


def _maybe_real(c: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(c) and not np.any(c.imag):
        return c.real.copy()
    return c


def apply(ch: Channel, x) -> np.ndarray:
    x = as_matrix(x)
    m, n = ch.dims
    if x.shape != (m, m):
        raise DimensionError(f"input of shape {x.shape} for a map on M_{m}")
    return np.einsum("ij,iajb->ab", x, ch.choi.reshape(m, n, m, n))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    if nz.size == 0:
        return v
    z = v[nz[0]]
    return v * (abs(z) / z)


def kraus_from_choi(ch: Channel) -> KrausSet:
    """Canonical Kraus set.

    PSD Choi: A_k = sqrt(lambda_k) mat(v_k), descending eigenvalues. Hermitian
    non-PSD Choi: same with weights sign(lambda_k). Otherwise SVD-based left and
    right operators.
    """
    m, n = ch.dims
    c = ch.choi
    if is_hermitian(c):
        eig = canonical_eigh(c)
        w, v = eig.eigenvalues, eig.eigenvectors
        scale = max(abs(w[0]), abs(w[-1]))
        if scale == 0:
            return KrausSet([], [], np.zeros(0))
        order = sorted(range(len(w)), key=lambda i: (-w[i], i))
        keep = [i for i in order if abs(w[i]) > 1e-12 * scale]
        cp = w[0] >= -PSD_TOL * (1 + scale)
        left, weights = [], []
        for i in keep:
            if cp and w[i] < 0:
                continue
            vi = _fix_phase(v[:, i])
            left.append(_maybe_real(np.sqrt(abs(w[i])) * mat(vi, m, n)))
            weights.append(1.0 if (cp or w[i] > 0) else -1.0)
        return KrausSet(left, left, np.array(weights))
    u, s, vh = np.linalg.svd(c)
    keep = s > 1e-12 * s[0]
    left = [np.sqrt(si) * mat(u[:, i], m, n) for i, si in enumerate(s) if keep[i]]
    right = [np.sqrt(si) * mat(vh[i].conj(), m, n) for i, si in enumerate(s) if keep[i]]
    return KrausSet(left, right, np.ones(len(left)))


def _scale(c) -> float:
    return 1.0 + float(np.linalg.norm(c, 2))


def is_trace_preserving(ch: Channel, tol: float = PSD_TOL) -> bool:
    t = partial_trace(ch.choi, ch.dims, 2)
    return bool(np.linalg.norm(t - np.eye(ch.in_dim)) <= tol * _scale(ch.choi))


def is_unital(ch: Channel, tol: float = PSD_TOL) -> bool:
    t = partial_trace(ch.choi, ch.dims, 1)
    return bool(np.linalg.norm(t - np.eye(ch.out_dim)) <= tol * _scale(ch.choi))


def is_hermiticity_preserving(ch: Channel) -> bool:
    return is_hermitian(ch.choi)


def is_cp(ch: Channel, tol: float = PSD_TOL) -> bool:
    if not is_hermitian(ch.choi):
        return False
    w = np.linalg.eigvalsh((ch.choi + ch.choi.conj().T) / 2)
    return bool(w[0] >= -tol * _scale(ch.choi))


def dual_channel(ch: Channel) -> Channel:
    m, n = ch.dims
    s = swap_operator(m, n)
    return Channel(s @ ch.choi.conj() @ s.T, n, m)


def stinespring(ch: Channel) -> np.ndarray:
    """Dilation A: C^m -> C^{mn} (x) C^n, environment first, built from the
    canonical Kraus set padded with zeros to mn operators."""
    if not is_cp(ch):
        raise DimensionError("Stinespring form requires a completely positive map")
    m, n = ch.dims
    ops = kraus_from_choi(ch).left
    blocks = list(ops) + [np.zeros((n, m))] * (m * n - len(ops))
    return np.vstack(blocks)


def channel_from_isometry(a: np.ndarray, env_dim: int, out_dim: int, trace_env: bool = True) -> Channel:
    """Tr_env(A . A^dagger) (trace_env) or Tr_out(A . A^dagger) as a Channel."""
    m = a.shape[1]
    target = out_dim if trace_env else env_dim
    c = np.zeros((m * target, m * target), dtype=complex)
    blocks = a.reshape(env_dim, out_dim, m)
    for i in range(m):
        for j in range(m):
            ai = blocks[:, :, i]
            aj = blocks[:, :, j]
            if trace_env:
                out = ai.T @ aj.conj()  # sum_l A_l|i><j|A_l^dagger
            else:
                out = ai @ aj.conj().T
            c[i * target:(i + 1) * target, j * target:(j + 1) * target] = out
    return Channel(_maybe_real(c), m, target)


def complementary_channel(ch: Channel) -> Channel:
    m, n = ch.dims
    a = stinespring(ch)
    return channel_from_isometry(a, m * n, n, trace_env=False)


def transpose_map(n: int) -> Channel:
    return Channel(swap_operator(n), n, n)


def identity_channel(n: int) -> Channel:
    psi = max_entangled(n)
    return Channel(n * np.outer(psi, psi), n, n)


def depolarizing(n: int, p: float = 1.0) -> Channel:
    """X -> (1 - p) X + p Tr(X) I / n; p = 1 is completely depolarizing."""
    if not (0.0 <= p <= (n * n / (n * n - 1) if n > 1 else 1.0)):
        raise DimensionError("depolarizing parameter out of range")
    return Channel((1 - p) * identity_channel(n).choi + p * np.eye(n * n) / n, n, n)


def unitary_channel(u) -> Channel:
    u = as_matrix(u)
    return choi_from_kraus([u])


def reduction_k_map(n: int, k: int = 1) -> Channel:
    """X -> k Tr(X) I - X."""
    if not (1 <= k <= n):
        raise DimensionError(f"k={k} out of range 1..{n}")
    return Channel(k * np.eye(n * n) - identity_channel(n).choi, n, n)


def schur_map(a) -> Channel:
    """X -> A * X (entrywise)."""
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("Schur multiplier must be square")
    c = np.zeros((n * n, n * n), dtype=a.dtype)
    for i in range(n):
        for j in range(n):
            c[i * n + i, j * n + j] = a[i, j]
    return Channel(c, n, n)


def werner_state(n: int, alpha: float) -> np.ndarray:
    if abs(alpha) > 1:
        raise DimensionError("|alpha| must be <= 1")
    return (np.eye(n * n) - alpha * swap_operator(n)) / (n * n - alpha * n)


def compose(outer: Channel, inner: Channel) -> Channel:
    """Choi matrix of outer o inner."""
    m, k = inner.dims
    k2, n = outer.dims
    if k != k2:
        raise DimensionError("incompatible channel dimensions")
    c = np.zeros((m * n, m * n), dtype=complex)
    for i in range(m):
        for j in range(m):
            e = np.zeros((m, m))
            e[i, j] = 1.0
            c[i * n:(i + 1) * n, j * n:(j + 1) * n] = apply(outer, apply(inner, e))
    return Channel(_maybe_real(c), m, n)


def apply_on_second(ch: Channel, x, dims: tuple[int, int]) -> np.ndarray:
    """(id_m (x) Phi)(X) for X on C^m (x) C^{in}."""
    m, d = dims
    if d != ch.in_dim:
        raise DimensionError("factor dimension does not match channel input")
    n = ch.out_dim
    t = np.asarray(x).reshape(m, d, m, d)
    cr = ch.choi.reshape(d, n, d, n)
    out = np.einsum("aibj,iujv->aubv", t, cr)
    return out.reshape(m * n, m * n)


def random_cp_channel(m: int, n: int, rng: np.random.Generator, n_kraus: int = 3,
                      trace_preserving: bool = True) -> Channel:
    if trace_preserving and n_kraus * n < m:
        raise DimensionError(f"a trace-preserving map M_{m} -> M_{n} needs at least {-(-m // n)} Kraus operators")
    ops = [rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)) for _ in range(n_kraus)]
    if trace_preserving:
        s = sum(a.conj().T @ a for a in ops)
        w, v = np.linalg.eigh(s)
        inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
        ops = [a @ inv_sqrt for a in ops]
    return choi_from_kraus(ops, m, n)
