"""Tests for k-block positivity of Hermitian operators (equivalently,
k-positivity of Hermiticity-preserving maps via their Choi matrices)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import Channel
from .densemat import DimensionError, canonical_eigh, hermitian_part, is_hermitian, numerical_rank
from .schmidt import schmidt_rank, sk_vector_norm
from .sknorm import estimate, expectation, sk_lower_seesaw
from .tensor import mat

KBP = "KBlockPositive"
NOT_KBP = "NotKBlockPositive"
UNKNOWN = "Unknown"
INCONCLUSIVE = "Inconclusive"

BOUNDARY_TOL = 1e-9
ZERO_TOL = 1e-10
WITNESS_TOL = 1e-10


@dataclass
class BPVerdict:
    status: str
    rule: str
    witness: np.ndarray | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.status == KBP


def cmw_max_dim(m: int, n: int, k: int) -> int:
    """Largest dimension of a subspace of C^m (x) C^n whose nonzero vectors all
    have Schmidt rank >= k."""
    return (m - k + 1) * (n - k + 1)


def _setup(x, dims, k):
    m, n = dims
    x = hermitian_part(x)
    if x.shape != (m * n, m * n):
        raise DimensionError(f"operator shape {x.shape} does not match dims {dims}")
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range 1..{min(m, n)}")
    return x, m, n


def _split(x):
    eig = canonical_eigh(x)
    w, v = eig.eigenvalues, eig.eigenvectors
    scale = max(1.0, float(np.max(np.abs(w))))
    neg = w < -ZERO_TOL * scale
    pos = w > ZERO_TOL * scale
    zero = ~(neg | pos)
    return w, v, neg, zero, pos


def _ge(a, b):
    return a >= b - BOUNDARY_TOL * max(1.0, abs(b))


def _gt(a, b):
    return a > b + BOUNDARY_TOL * max(1.0, abs(b))


def find_negative_witness(x, dims, k, seed=0, restarts=50):
    """Search for w with SR(w) <= k and <w|X|w> < 0 by maximising
    <w|(cI - X)|w>. Returns (w, value) or (None, best value)."""
    x, m, n = _setup(x, dims, k)
    c = float(np.linalg.eigvalsh(x)[-1])
    c = max(c, 0.0)
    val, w = sk_lower_seesaw(c * np.eye(m * n) - x, (m, n), k, restarts=restarts, seed=seed)
    ev = expectation(x, w)
    if ev < -WITNESS_TOL:
        return w, ev
    return None, ev


def _not_with_witness(x, dims, k, rule, candidate=None, details=None, seed=0):
    details = dict(details or {})
    if candidate is not None and expectation(x, candidate) < -WITNESS_TOL \
            and schmidt_rank(candidate, *dims) <= k:
        return BPVerdict(NOT_KBP, rule, candidate, details)
    w, ev = find_negative_witness(x, dims, k, seed=seed)
    if w is None:
        details["witness_search"] = f"no negative vector found (best {ev:.3e})"
        return BPVerdict(UNKNOWN, rule, None, details)
    return BPVerdict(NOT_KBP, rule, w, details)


def spectral_test(x, dims, k: int, budget: str = "default", seed: int = 0) -> BPVerdict:
    """Decide via norms of the negative part and of the non-positive projection."""
    x, m, n = _setup(x, dims, k)
    w, v, neg, zero, pos = _split(x)
    if not neg.any():
        return BPVerdict(KBP, "psd")
    if not pos.any():
        return _not_with_witness(x, (m, n), k, "no_positive_part", seed=seed)
    vn = v[:, neg]
    p_neg = vn @ vn.conj().T
    x_neg = -(vn * w[neg]) @ vn.conj().T  # |X^-|
    est_pn = estimate(p_neg, (m, n), k, budget=budget, seed=seed)
    est_xn = estimate(x_neg, (m, n), k, budget=budget, seed=seed)
    details = {"P-": (est_pn.lower, est_pn.upper), "X-": (est_xn.lower, est_xn.upper)}

    # (a) some SR <= k vector lies in the negative eigenspace
    if _ge(est_pn.lower, 1.0):
        return _not_with_witness(x, (m, n), k, "a", est_pn.lower_witness, details, seed)

    lam_pos_min = float(w[pos].min())
    lam_pos_max = float(w[pos].max())

    # (b) positive eigenvalues dominate the worst negative overlap
    if zero.any():
        vz = v[:, neg | zero]
        est_p0 = estimate(vz @ vz.conj().T, (m, n), k, budget=budget, seed=seed)
        p0_up, p0_lo = est_p0.upper, est_p0.lower
        details["P0+P-"] = (p0_lo, p0_up)
    else:
        p0_up, p0_lo = est_pn.upper, est_pn.lower
    if p0_up < 1.0 - BOUNDARY_TOL:
        thr = est_xn.upper / (1.0 - p0_up)
        details["b_threshold"] = thr
        if _ge(lam_pos_min, thr):
            return BPVerdict(KBP, "b", None, details)

    # (c) converse for equal negative eigenvalues and nonsingular X
    neg_vals = w[neg]
    equal = neg_vals.max() - neg_vals.min() <= BOUNDARY_TOL * max(1.0, abs(neg_vals.min()))
    if equal and not zero.any() and est_pn.upper < 1.0 - BOUNDARY_TOL:
        thr_c = est_xn.lower / (1.0 - est_pn.lower)
        details["c_threshold"] = thr_c
        if lam_pos_max < thr_c - BOUNDARY_TOL * max(1.0, thr_c):
            return _not_with_witness(x, (m, n), k, "c", est_xn.lower_witness, details, seed)

    return BPVerdict(UNKNOWN, "spectral", None, details)


def shifted_identity_test(x, dims, c: float, k: int, budget: str = "default", seed: int = 0) -> BPVerdict:
    """Verdict for cI - X with X positive semidefinite."""
    m, n = dims
    est = estimate(x, (m, n), k, budget=budget, seed=seed)
    details = {"lower": est.lower, "upper": est.upper, "methods": est.methods}
    if _ge(c, est.upper):
        return BPVerdict(KBP, "shifted_identity", None, details)
    if c < est.lower - BOUNDARY_TOL * max(1.0, abs(est.lower)):
        w = est.lower_witness
        if c - expectation(x, w) < -WITNESS_TOL:
            return BPVerdict(NOT_KBP, "shifted_identity", w, details)
    return BPVerdict(UNKNOWN, "shifted_identity", None, details)


@dataclass
class _KrausParts:
    pos_vals: np.ndarray
    neg_vals: np.ndarray
    neg_vecs: np.ndarray
    zero_vecs: np.ndarray


def _kraus_parts(ch: Channel) -> _KrausParts:
    if not is_hermitian(ch.choi):
        raise DimensionError("Choi matrix is not Hermitian")
    w, v, neg, zero, pos = _split(ch.choi)
    return _KrausParts(w[pos], w[neg], v[:, neg], v[:, zero])


def kraus_test(ch: Channel, k: int) -> BPVerdict:
    """k-positivity from the canonical generalised Kraus decomposition.

    With HS-normalised operators B_i (negative weights) and C_i (completing
    the basis on the kernel), the (k,2)-norms of these operators equal the
    s(k) norms of the corresponding Choi eigenvectors.
    """
    m, n = ch.dims
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range 1..{min(m, n)}")
    parts = _kraus_parts(ch)
    x = hermitian_part(ch.choi)
    if parts.neg_vals.size == 0:
        return BPVerdict(KBP, "completely_positive")

    nb = np.array([sk_vector_norm(parts.neg_vecs[:, i], m, n, k) ** 2 for i in range(parts.neg_vals.size)])
    nc = np.array([sk_vector_norm(parts.zero_vecs[:, i], m, n, k) ** 2 for i in range(parts.zero_vecs.shape[1])])
    details = {"B_norms_sq": nb.tolist(), "C_norms_sq": nc.tolist(),
               "B_ranks": [numerical_rank(mat(parts.neg_vecs[:, i], m, n), 1e-10)
                           for i in range(parts.neg_vals.size)]}

    for i, r in enumerate(details["B_ranks"]):
        if r <= k:
            return BPVerdict(NOT_KBP, "rank", parts.neg_vecs[:, i].copy(), details)

    if parts.pos_vals.size == 0:
        w, _ = find_negative_witness(x, (m, n), k)
        return BPVerdict(NOT_KBP if w is not None else UNKNOWN, "no_positive_part", w, details)

    denom = 1.0 - nb.sum() - nc.sum()
    if denom > BOUNDARY_TOL:
        thr = float(np.sum(np.abs(parts.neg_vals) * nb) / denom)
        details["a_threshold"] = thr
        if _ge(float(parts.pos_vals.min()), thr):
            return BPVerdict(KBP, "a", None, details)

    if parts.neg_vals.size == 1 and parts.pos_vals.size == m * n - 1 and nb[0] < 1 - BOUNDARY_TOL:
        thr = float(abs(parts.neg_vals[0]) * nb[0] / (1.0 - nb[0]))
        details["b_threshold"] = thr
        if _gt(thr, float(parts.pos_vals.max())):
            return _not_with_witness(x, (m, n), k, "b", None, details)

    return BPVerdict(UNKNOWN, "kraus", None, details)


def eig_structure_tests(x, dims, k: int) -> list:
    """Necessary conditions depending only on the spectrum (and one
    eigenvector). Each entry is Not or Inconclusive; no witnesses."""
    x, m, n = _setup(x, dims, k)
    w, v, neg, zero, pos = _split(x)
    out = []
    r = int(neg.sum())
    lmax, lmin = float(w[-1]), float(w[0])

    limit = (n - k) * (m - k)
    out.append(BPVerdict(NOT_KBP if r > limit else INCONCLUSIVE, "negative_count",
                         details={"negatives": r, "limit": limit}))

    if r == 0:
        for rule in ("min_max_ratio", "ratio_rank_dimension", "ratio_rank_trace"):
            out.append(BPVerdict(INCONCLUSIVE, rule))
    elif lmax <= 0:
        for rule in ("min_max_ratio", "ratio_rank_dimension", "ratio_rank_trace"):
            out.append(BPVerdict(NOT_KBP, rule, details={"lambda_max": lmax}))
    else:
        ratio = lmin / lmax
        t = sk_vector_norm(v[:, 0], m, n, k) ** 2
        b1 = 1 - 1 / t
        b2 = 1 - min(m, n) / k
        bad = ratio < max(b1, b2) - BOUNDARY_TOL
        out.append(BPVerdict(NOT_KBP if bad else INCONCLUSIVE, "min_max_ratio",
                             details={"ratio": ratio, "eigvec_bound": b1, "dimension_bound": b2}))

        p = math.ceil(0.5 * (n + m - math.sqrt((n - m) ** 2 + 4 * r - 4)) - 1e-12)
        s1 = 1 - p / k
        bad = ratio < s1 - BOUNDARY_TOL
        out.append(BPVerdict(NOT_KBP if bad else INCONCLUSIVE, "ratio_rank_dimension",
                             details={"ratio": ratio, "bound": s1}))

        d = m * n
        mn = min(m, n)
        root = math.sqrt(max(d * r - r * r, 0) / (d - 1)) if d > 1 else 0.0
        den = d * (k - 1) + (mn - k) * (r + root)
        s2 = 1 - d * (mn - 1) / den if den > 0 else -np.inf
        bad = ratio < s2 - BOUNDARY_TOL
        out.append(BPVerdict(NOT_KBP if bad else INCONCLUSIVE, "ratio_rank_trace",
                             details={"ratio": ratio, "bound": s2}))

    tr = float(np.real(np.trace(x)))
    tr2 = float(np.real(np.sum(x * x.conj())))
    bad = tr < -BOUNDARY_TOL or tr2 > tr * tr * (1 + BOUNDARY_TOL) + BOUNDARY_TOL
    out.append(BPVerdict(NOT_KBP if bad else INCONCLUSIVE, "trace_square",
                         details={"trace": tr, "trace_of_square": tr2}))
    return out


def two_eval_test(x, dims, k: int, budget: str = "default", seed: int = 0) -> BPVerdict:
    x, m, n = _setup(x, dims, k)
    eig = canonical_eigh(x)
    w, v = eig.eigenvalues, eig.eigenvectors
    vals = np.unique(w)
    if vals.size != 2:
        raise DimensionError(f"expected exactly two distinct eigenvalues, found {vals.size}")
    l2, l1 = float(vals[0]), float(vals[1])
    if l2 >= 0:
        return BPVerdict(KBP, "two_eval", None, {"lambda": (l1, l2)})
    if l1 <= 0:
        return _not_with_witness(x, (m, n), k, "two_eval", details={"lambda": (l1, l2)}, seed=seed)
    vn = v[:, w == l2]
    est = estimate(vn @ vn.conj().T, (m, n), k, budget=budget, seed=seed)
    thr = l1 / (l1 - l2)
    details = {"lambda": (l1, l2), "threshold": thr, "P-": (est.lower, est.upper)}
    if _ge(thr, est.upper):
        return BPVerdict(KBP, "two_eval", None, details)
    if _gt(est.lower, thr):
        return _not_with_witness(x, (m, n), k, "two_eval", est.lower_witness, details, seed)
    return BPVerdict(UNKNOWN, "two_eval", None, details)
