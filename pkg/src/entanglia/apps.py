"""Applications of the S(k) norms: Werner states and NPPT bound
entanglement, minimum gate fidelity, maximum output purity, Schmidt number
criteria and the geometric measure of entanglement."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sknorm
from .channels import (Channel, apply, complementary_channel, depolarizing, is_cp,
                       is_trace_preserving, schur_map)
from .densemat import DimensionError, PSD_TOL, hermitian_part, kp_dual_norm
from .schmidt import sk_vector_norm
from .tensor import (BipartiteOperator, max_entangled, partial_trace, partial_trace_multi,
                     partial_transpose, permute_operator, realign, sym_isometry)

log = logging.getLogger(__name__)

BOUND_PROJ_LIMIT = 4096


# Werner states

def werner_sk_norm(n: int, alpha: float, k: int) -> float:
    if abs(alpha) > 1:
        raise DimensionError("|alpha| must be <= 1")
    if not (1 <= k <= n):
        raise DimensionError(f"k={k} out of range 1..{n}")
    num = 1 + abs(min(alpha, 0.0)) if k == 1 else 1 + abs(alpha)
    return num / (n * (n - alpha))


def werner_thresholds(n: int) -> dict:
    return {"ppt": 1.0 / n, "entangled": 1.0 / n, "one_copy_distillable": 0.5}


# the projections P^-_{n,r}

def _bound_proj_pairs(n: int, r: int) -> np.ndarray:
    psi = max_entangled(n)
    p1 = np.outer(psi, psi)
    eye = np.eye(n * n)
    p = p1
    for _ in range(r - 1):
        q = np.eye(p.shape[0])
        p = np.kron(eye - p1, p) + np.kron(p1, q - p)
    return p


def _check_size(n, r):
    if n < 2 or r < 1:
        raise DimensionError("need n >= 2 and r >= 1")
    if n ** (2 * r) > BOUND_PROJ_LIMIT:
        raise DimensionError(f"dense size n^(2r) = {n ** (2 * r)} exceeds {BOUND_PROJ_LIMIT}")


def bound_proj_rank(n: int, r: int) -> int:
    return (n ** (2 * r) - (n * n - 2) ** r) // 2


def bound_proj(n: int, r: int) -> tuple[BipartiteOperator, int]:
    """P^-_{n,r} as an operator on C^{n^r} (x) C^{n^r}, with the first factor of
    every pair collected on the left. Returns (operator, rank)."""
    _check_size(n, r)
    p = _bound_proj_pairs(n, r)
    # pair ordering A1 B1 A2 B2 ... -> A1..Ar B1..Br
    perm = [i // 2 if i % 2 == 0 else r + i // 2 for i in range(2 * r)]
    q = permute_operator(p, [n] * (2 * r), perm)
    if not np.allclose(q @ q, q, atol=1e-10):
        raise ArithmeticError("constructed operator is not idempotent")
    rank = int(round(float(np.trace(q))))
    return BipartiteOperator(q, (n ** r, n ** r)), rank


def _s1_fraction(n, r):
    return Fraction(1, 2) - Fraction(1, 2) * (1 - Fraction(2, n)) ** r


@dataclass
class S1Verification:
    value: float
    product_vector_value: float
    pt_max_eigenvalue: float


def bound_proj_s1(n: int, r: int, verify: bool = False):
    """Closed-form S(1) norm; with ``verify`` also the attaining product vector
    value and lambda_max of the partial transpose, both computed densely."""
    value = float(_s1_fraction(n, r))
    if not verify:
        return value
    op, _ = bound_proj(n, r)
    d = n ** r
    v = np.zeros(d * d)
    v[0] = 1.0
    low = float(v @ op.mat @ v)
    up = float(np.linalg.eigvalsh(partial_transpose(op.mat, (d, d), 2))[-1])
    return S1Verification(value, low, up)


def bound_proj_s2_bounds(n: int, r: int) -> tuple[float, float]:
    if n < 3:
        raise DimensionError("need n >= 3")
    q = (1 - Fraction(2, n)) ** r
    lower = Fraction(1, 2) - (Fraction(1, 2) - Fraction(1, n - 2)) * q
    upper = 1 - q
    return float(lower), float(upper)


@dataclass
class BoundEntReport:
    n: int
    r: int
    rank: int
    s1: float
    s2_lower: float
    s2_upper: float
    s2_conjectured: float
    undistillable: object = None


def bound_ent_report(n: int, r: int, alpha=None) -> BoundEntReport:
    lo, up = bound_proj_s2_bounds(n, r)
    rep = BoundEntReport(n, r, bound_proj_rank(n, r), bound_proj_s1(n, r), lo, up, lo)
    if alpha is not None:
        rep.undistillable = certify(n, r, alpha)
    return rep


# r-copy undistillability

def _p_value(n: int, r: int) -> Fraction:
    return Fraction((n - 2) ** r, n ** r - (n - 2) ** r)


def _odd_exponent(r):
    return 2 * math.ceil(r / 2) - 1


@dataclass
class Threshold:
    p: Fraction
    applicable: bool
    alpha: float | None
    alpha_exact: Fraction | None


def undistillable_region(n: int, r: int) -> Threshold:
    if n < 3 or r < 1:
        raise DimensionError("need n >= 3 and r >= 1")
    p = _p_value(n, r)
    if p < 1:
        return Threshold(p, False, None, None)
    e = _odd_exponent(r)
    exact = (p + 1) / n if e == 1 else None
    return Threshold(p, True, (float(p) ** (1.0 / e) + 1) / n, exact)


def p_at_least_one_dimension(r: int) -> float:
    """Smallest real n with p >= 1."""
    t = 2 ** (1.0 / r)
    return 2 * t / (t - 1)


@dataclass
class UndistillCertificate:
    certified: bool
    rule: str
    margin: float = 0.0
    strict_margin: float = 0.0
    within_threshold: bool = False
    details: dict = field(default_factory=dict)


def certify(n: int, r: int, alpha) -> UndistillCertificate:
    """Re-derive 2-block positivity of (rho_alpha^{(x)r})^Gamma from the
    spectral sufficient condition with the S(2) upper bound on P^-_{n,r}.

    Eigenvalues of the unnormalised operator are (1 - alpha n)^m with the odd
    m making up the negative eigenspace P^-_{n,r}.
    """
    exact = isinstance(alpha, (int, Fraction))
    a = Fraction(alpha) if exact else float(alpha)
    if not (-1 <= a <= 1):
        raise DimensionError("|alpha| must be <= 1")
    if n < 3:
        raise DimensionError("need n >= 3")
    one = Fraction(1) if exact else 1.0
    if a * n <= 1:
        return UndistillCertificate(True, "ppt", within_threshold=True)
    thr = undistillable_region(n, r)
    if not thr.applicable:
        return UndistillCertificate(False, "inapplicable", details={"p": thr.p})
    p = thr.p if exact else float(thr.p)
    t = a * n - one  # |1 - alpha n|
    e = _odd_exponent(r)
    even = r - (r % 2)
    if t >= 1:
        lam_pos, lam_neg = one, t ** e
    else:
        lam_pos, lam_neg = (t ** even if even > 0 else one), t
    q = (1 - Fraction(2, n)) ** r
    u = 1 - q if exact else 1 - float(q)
    bound = lam_neg * u / (1 - u)
    margin = lam_pos - bound
    within = (thr.alpha_exact is not None and exact and a <= thr.alpha_exact) or \
        (thr.alpha_exact is None or not exact) and float(a) <= thr.alpha * (1 + 1e-12)
    ok = margin >= 0 if exact else margin >= -1e-12 * max(1.0, float(bound))
    return UndistillCertificate(bool(ok), "spectral_b", float(margin), float(1 - u), bool(within),
                                {"lambda_pos_min": float(lam_pos), "lambda_neg_max": float(lam_neg),
                                 "s2_upper": float(u), "p": thr.p})


# minimum gate fidelity

@dataclass
class FidelityReport:
    lambda_max: float
    estimate: sknorm.NormEstimate
    lower: float
    upper: float


def _fidelity_operator(ch: Channel):
    n = ch.in_dim
    if ch.out_dim != n:
        raise DimensionError("channel must map M_n to M_n")
    if not is_cp(ch) or not is_trace_preserving(ch):
        raise DimensionError("channel must be completely positive and trace preserving")
    cg = partial_transpose(ch.choi, (n, n), 1)
    v = sym_isometry(n, 2)
    comp = hermitian_part(v.T @ cg @ v)
    w = np.linalg.eigvalsh(comp)
    lam = float(w[-1])
    x = v @ (lam * np.eye(v.shape[1]) - comp) @ v.T
    return lam, hermitian_part(x)


def min_gate_fidelity(ch: Channel, budget: str = "default", seed: int = 0) -> FidelityReport:
    lam, x = _fidelity_operator(ch)
    n = ch.in_dim
    est = sknorm.estimate(x, (n, n), 1, budget=budget, seed=seed)
    return FidelityReport(lam, est, lam - est.upper, lam - est.lower)


def fidelity_hierarchy(ch: Channel, s_max: int) -> list:
    """Lower bounds on the minimum gate fidelity from the symmetric-extension
    SDP at levels 1..s_max."""
    lam, x = _fidelity_operator(ch)
    n = ch.in_dim
    return [lam - sknorm.dps_sdp_s1(x, (n, n), s)[0] for s in range(1, s_max + 1)]


def gate_fidelity(ch: Channel, v) -> float:
    v = np.asarray(v).reshape(-1)
    v = v / np.linalg.norm(v)
    return float(np.real(np.vdot(v, apply(ch, np.outer(v, v.conj())) @ v)))


def nphard_channel(a, n: int | None = None) -> Channel:
    """E = D - S_A / (n^2 (n-1)) for a symmetric traceless 0/1 matrix A."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] if n is None else n
    if a.shape != (n, n) or n < 2:
        raise DimensionError("A must be n x n with n >= 2")
    if not np.array_equal(a, a.T) or np.any(np.diag(a) != 0) or not np.all(np.isin(a, (0.0, 1.0))):
        raise DimensionError("A must be symmetric with zero diagonal and 0/1 entries")
    choi = depolarizing(n).choi - schur_map(a).choi / (n * n * (n - 1))
    return Channel(choi, n, n)


def _simplex_grid(n, steps):
    for c in itertools.combinations(range(steps + n - 1), n - 1):
        parts = np.diff((-1,) + c + (steps + n - 1,)) - 1
        yield parts / steps


def quartic_simplex_max(a, steps: int = 60, polish: int = 5) -> float:
    """max over unit real x of sum_ij x_i^2 x_j^2 a_ij, i.e. max y^T A y over
    the probability simplex: grid search followed by replicator ascent."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n > 4:
        log.warning("simplex grid search for n=%d is a heuristic", n)
        steps = max(4, min(steps, 12))
    pts = np.array(list(_simplex_grid(n, steps)))
    vals = np.einsum("pi,ij,pj->p", pts, a, pts)
    best = float(vals.max())
    for idx in np.argsort(-vals)[:polish]:
        y = pts[idx].copy()
        for _ in range(2000):
            g = a @ y
            q = float(y @ g)
            if q <= 0:
                break
            y_new = y * g / q
            if np.abs(y_new - y).max() < 1e-14:
                y = y_new
                break
            y = y_new
        best = max(best, float(y @ a @ y))
    return best


def fidelity_identity(a) -> float:
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    return (1 - quartic_simplex_max(a) / (n * (n - 1))) / n


# output purity

def max_output_purity(ch: Channel, k: int, budget: str = "default", seed: int = 0) -> sknorm.NormEstimate:
    if not is_cp(ch):
        raise DimensionError("map must be completely positive")
    return sknorm.estimate(ch.choi, ch.dims, k, budget=budget, seed=seed)


def cb_output_purity_choi(ch: Channel) -> float:
    if not is_cp(ch):
        raise DimensionError("map must be completely positive")
    return float(np.linalg.eigvalsh(hermitian_part(ch.choi))[-1])


def cb_output_purity_complementary(ch: Channel) -> float:
    comp = complementary_channel(ch)
    return float(np.linalg.eigvalsh(hermitian_part(apply(comp, np.eye(ch.in_dim))))[-1])


def cb_output_purity(ch: Channel, tol: float = 1e-8) -> float:
    a = cb_output_purity_choi(ch)
    b = cb_output_purity_complementary(ch)
    if abs(a - b) > tol * max(1.0, a):
        raise ArithmeticError(f"Choi route {a} and complementary route {b} disagree")
    return a


# Schmidt number criteria

def _check_state(rho, dims):
    m, n = dims
    rho = hermitian_part(rho)
    if rho.shape != (m * n, m * n):
        raise DimensionError("state shape does not match dims")
    if abs(np.trace(rho) - 1) > 1e-8:
        raise DimensionError("state must have unit trace")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -PSD_TOL:
        raise DimensionError("state must be positive semidefinite")
    return rho


def realignment_test(rho, dims, k: int = 1) -> tuple[float, bool]:
    """Returns (value, detected). detected means the Schmidt number exceeds k."""
    m, n = dims
    rho = _check_state(rho, dims)
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range")
    value = kp_dual_norm(realign(rho, (m, n)), k * k, 2)
    return value, bool(value > 1 + 1e-9)


def reduction_test(rho, dims, k: int = 1, tol: float = 1e-9) -> tuple[bool, dict]:
    """Returns (detected, details); detection certifies Schmidt number > k."""
    m, n = dims
    rho = _check_state(rho, dims)
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range")
    a = k * np.kron(partial_trace(rho, (m, n), 2), np.eye(n)) - rho
    b = k * np.kron(np.eye(m), partial_trace(rho, (m, n), 1)) - rho
    la = float(np.linalg.eigvalsh(hermitian_part(a))[0])
    lb = float(np.linalg.eigvalsh(hermitian_part(b))[0])
    return bool(la < -tol or lb < -tol), {"first": la, "second": lb}


# geometric measure

@dataclass
class GeometricMeasure:
    lower: float
    upper: float
    method: str
    certified: bool
    witness: list | None = None
    operator: np.ndarray | None = None

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)


def product_overlap_search(v, dims, restarts: int = 20, seed: int = 0, max_iter: int = 500):
    """Alternating maximisation of |<w_1 ... w_p|v>|^2 over unit w_i.
    Returns (best value, factors)."""
    t = np.asarray(v, dtype=complex).reshape(dims)
    p = len(dims)
    best, best_ws = -1.0, None
    for rep in range(restarts):
        rng = np.random.default_rng([seed, rep])
        if rep == 0:
            ws = []
            for i in range(p):
                mat_i = np.moveaxis(t, i, 0).reshape(dims[i], -1)
                ws.append(np.linalg.svd(mat_i)[0][:, 0])
        else:
            ws = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims]
            ws = [w / np.linalg.norm(w) for w in ws]
        val = 0.0
        for _ in range(max_iter):
            for i in range(p):
                c = t
                for j in reversed(range(p)):
                    if j != i:
                        c = np.tensordot(c, ws[j].conj(), axes=([j], [0]))
                nrm = np.linalg.norm(c)
                ws[i] = c / nrm if nrm > 0 else ws[i]
            amp = t
            for j in reversed(range(p)):
                amp = np.tensordot(amp, ws[j].conj(), axes=([j], [0]))
            new = float(abs(amp) ** 2)
            if new - val <= 1e-14:
                val = max(val, new)
                break
            val = new
        if val > best:
            best, best_ws = val, [w.copy() for w in ws]
    return best, best_ws


def quad_operator(v, dims) -> np.ndarray:
    """A_v with |x1>|x2>|y1>|y2> -> |x2><conj(x1)| (x) |y2><conj(y1)|."""
    n1, n2, n3, n4 = dims
    t = np.asarray(v).reshape(n1, n2, n3, n4)
    return t.transpose(1, 3, 0, 2).reshape(n2 * n4, n1 * n3)


def geometric_measure(v, dims, budget: str = "default", seed: int = 0) -> GeometricMeasure:
    dims = tuple(int(d) for d in dims)
    v = np.asarray(v).reshape(-1)
    if v.size != math.prod(dims):
        raise DimensionError("vector length does not match dims")
    v = v / np.linalg.norm(v)
    p = len(dims)
    if p == 2:
        s = sk_vector_norm(v, dims[0], dims[1], 1) ** 2
        return GeometricMeasure(1 - s, 1 - s, "schmidt", True)
    if p == 3:
        rho = np.outer(v, v.conj())
        red = partial_trace_multi(rho, list(dims), [0])
        est = sknorm.estimate(red, (dims[1], dims[2]), 1, budget=budget, seed=seed)
        return GeometricMeasure(1 - est.upper, 1 - est.lower, "reduced_s1_norm", True,
                                operator=red)
    if p == 4:
        best, ws = product_overlap_search(v, dims, seed=seed)
        return GeometricMeasure(0.0, 1 - best, "product_search_heuristic", False, ws,
                                quad_operator(v, dims))
    raise DimensionError("between 2 and 4 subsystems are supported")
