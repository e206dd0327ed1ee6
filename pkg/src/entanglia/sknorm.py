"""S(k)-operator norm: exact cases, certified lower and upper bounds.

Lower bounds come with a witness vector of Schmidt rank at most k. Upper
bounds come from analytic inequalities or from two SDP families (positive-map
relaxations and symmetric extensions), where the dual solution is turned
into a certificate whose value is re-evaluated exactly.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channels import Channel, apply_on_second, dual_channel, reduction_k_map, transpose_map
from .densemat import DimensionError, PSD_TOL, hermitian_part, kp_norm
from .schmidt import sk_vector_norm, truncate_sr
from .tensor import occupation_basis, partial_transpose, partial_transpose_multi, realign, sym_isometry

log = logging.getLogger(__name__)

DPS_BLOCK_LIMIT = 200
SEESAW_MAX_ITER = 1000
SEESAW_TOL = 1e-12


@dataclass
class NormEstimate:
    lower: float
    upper: float
    lower_witness: np.ndarray | None
    upper_certificate: dict
    methods: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    witness_value: float | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _dims_check(x, dims):
    m, n = dims
    x = np.asarray(x)
    if x.shape != (m * n, m * n):
        raise DimensionError(f"operator shape {x.shape} does not match dims {dims}")
    return m, n


def _check_k(k, m, n):
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} out of range 1..{min(m, n)}")


def _psd(x):
    h = hermitian_part(x)
    w = np.linalg.eigvalsh(h)
    if w[0] < -PSD_TOL * (1 + abs(w[-1])):
        raise DimensionError("operator must be positive semidefinite")
    return h


def _real_if_possible(x):
    if np.iscomplexobj(x) and not np.any(np.abs(x.imag) > 1e-14 * (1 + np.abs(x).max())):
        return x.real.copy()
    return x


def expectation(x, v) -> float:
    return float(np.real(np.vdot(v, x @ v)))


# exact cases

def sk_exact_rank1(x, y, m: int, n: int, k: int) -> float:
    """Norm of the rank-one operator |x><y|."""
    return sk_vector_norm(x, m, n, k) * sk_vector_norm(y, m, n, k)


def _rank1_factor(x, tol=1e-10):
    w, v = np.linalg.eigh(x)
    if w[-1] <= 0 or (w.size > 1 and max(abs(w[0]), abs(w[-2])) > tol * w[-1]):
        return None
    return w[-1], v[:, -1]


# lower bounds

def _seesaw_run(x, m, n, k, v, max_iter=SEESAW_MAX_ITER, tol=SEESAW_TOL, history=None):
    v = truncate_sr(v, m, n, k)
    val = expectation(x, v)
    if history is not None:
        history.append(val)
    for _ in range(max_iter):
        w = truncate_sr(x @ v, m, n, k)
        new = expectation(x, w)
        if history is not None:
            history.append(new)
        if new < val:  # can only happen through rounding
            break
        v, done = w, new - val <= tol
        val = new
        if done:
            break
    return val, v


def _start_vector(x, m, n, seed, i):
    if i == 0:
        return np.linalg.eigh(x)[1][:, -1]
    rng = np.random.default_rng([seed, i])
    v = rng.standard_normal(m * n)
    if np.iscomplexobj(x):
        v = v + 1j * rng.standard_normal(m * n)
    return v


def sk_lower_seesaw(x, dims, k: int, restarts: int = 50, seed: int = 0, workers: int = 1):
    """Projected power iteration on vectors of Schmidt rank <= k.

    Returns (value, witness). The value is <w|X|w> for the returned witness.
    """
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    x = _psd(x)

    def run(i):
        return _seesaw_run(x, m, n, k, _start_vector(x, m, n, seed, i))

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]
    best = 0
    for i, (val, _) in enumerate(results):
        if val > results[best][0]:
            best = i
    val, w = results[best]
    return expectation(x, w), w


def seesaw_history(x, dims, k: int, v0) -> list:
    m, n = _dims_check(x, dims)
    hist = []
    _seesaw_run(_psd(x), m, n, k, np.asarray(v0), history=hist)
    return hist


def scaling_lower(value_h: float, h: int, k: int) -> float:
    """||X||_{S(k)} >= (k/h) ||X||_{S(h)} for k <= h."""
    if k > h:
        raise DimensionError("need k <= h")
    return k / h * value_h


def eigen_lower(x, dims, k: int) -> float:
    """max over r >= k of k * lambda_{mn-(n-r)(m-r)} / r (ascending, 1-indexed)."""
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    w = np.linalg.eigvalsh(hermitian_part(x))
    best = -np.inf
    for r in range(k, min(m, n) + 1):
        idx = m * n - (n - r) * (m - r)
        best = max(best, k * w[idx - 1] / r)
    return float(best)


def trace_lower(x, dims) -> float:
    """(Tr X + sqrt((mn Tr X^2 - (Tr X)^2)/(mn-1))) / mn, a lower bound on the
    S(1) norm and hence on every S(k) norm."""
    m, n = _dims_check(x, dims)
    h = hermitian_part(x)
    d = m * n
    t = float(np.real(np.trace(h)))
    if d == 1:
        return t
    t2 = float(np.real(np.sum(h * h.conj())))
    return (t + math.sqrt(max(d * t2 - t * t, 0.0) / (d - 1))) / d


def projection_interp_lower(value_h: float, h: int, k: int, m: int, n: int) -> float:
    """Projection P: ||P||_{S(k)} >= v_h + (k-h)/(min(m,n)-h) (1 - v_h)."""
    mn = min(m, n)
    if not (1 <= h <= k <= mn):
        raise DimensionError("need 1 <= h <= k <= min(m, n)")
    if h == mn:
        return value_h
    return value_h + (k - h) / (mn - h) * (1 - value_h)


def projection_rank_lower(m: int, n: int, k: int, rank: int) -> tuple[float, float]:
    """Both rank-based lower bounds on ||P||_{S(k)} for a projection of the
    given rank. The first uses the dimension of subspaces free of low
    Schmidt rank vectors, the second the trace bound."""
    _check_k(k, m, n)
    if not (1 <= rank <= m * n):
        raise DimensionError("rank out of range")
    p = math.ceil(0.5 * (n + m - math.sqrt((n - m) ** 2 + 4 * rank - 4)) - 1e-12)
    first = min(1.0, k / p) if p > 0 else 1.0
    mn = min(m, n)
    if mn == 1:
        return first, 1.0
    d = m * n
    root = math.sqrt((d * rank - rank * rank) / (d - 1)) if d > 1 else 0.0
    second = (mn - k) / (d * (mn - 1)) * (rank + root) + (k - 1) / (mn - 1)
    return first, second


# upper bounds

def sk_upper_spectral(x, dims, k: int, tol: float = 1e-10) -> float:
    """sum |lambda_i| ||v_i||_{s(k)}^2 over an orthonormal eigenbasis."""
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    x = np.asarray(x)
    if not np.allclose(x @ x.conj().T, x.conj().T @ x, atol=tol * (1 + np.abs(x).max() ** 2)):
        raise DimensionError("operator is not normal")
    if np.allclose(x, x.conj().T, atol=tol * (1 + np.abs(x).max())):
        lam, vecs = np.linalg.eigh((x + x.conj().T) / 2)
    else:
        from scipy.linalg import schur
        t, vecs = schur(x.astype(complex), output="complex")
        lam = np.diag(t)
    return float(sum(abs(l) * sk_vector_norm(vecs[:, i], m, n, k) ** 2 for i, l in enumerate(lam)))


def sk_upper_realign(x, dims, k: int) -> float:
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    x = _psd(x)
    return kp_norm(realign(x, (m, n)), k * k, 2)


def sk_upper_pt(x, dims) -> float:
    """S(1) only: <a b|X|a b> = <a conj(b)|X^Gamma|a conj(b)> <= lambda_max(X^Gamma)."""
    m, n = _dims_check(x, dims)
    return float(np.linalg.eigvalsh(hermitian_part(partial_transpose(x, (m, n), 2)))[-1])


def _lmi_solve(blocks, c0, coeffs, objective, tol, max_iter):
    prob = conic.lmi_problem(blocks, c0, coeffs, objective)
    sol = conic.solve(prob, tol=tol, max_iter=max_iter)
    if sol.status != conic.OPTIMAL:
        # the reported bound is re-certified from the multiplier, so an
        # inaccurate but finite iterate still gives a valid (looser) bound
        if not all(np.all(np.isfinite(x)) for x in sol.x) or max(sol.gap, sol.primal_residual) > 1e-3:
            raise conic.SolverError(sol.status, f"after {sol.iterations} iterations")
        log.info("SDP stopped with status %s (gap %.1e); using its certificate", sol.status, sol.gap)
    return sol


def _sdp_scale(x) -> float:
    # the programs are homogeneous in X; solve at unit operator norm
    top = float(np.linalg.eigvalsh(hermitian_part(x))[-1])
    return top if top > 0 else 1.0


def _psd_part(y):
    y = (y + y.conj().T) / 2
    w, v = np.linalg.eigh(y)
    return (v * np.clip(w, 0, None)) @ v.conj().T


def _resolve_map(map_choice, n, k):
    if isinstance(map_choice, Channel):
        if map_choice.in_dim != n:
            raise DimensionError("map input dimension must match the second factor")
        return map_choice, "user"
    if map_choice == "transpose":
        if k != 1:
            raise DimensionError("the transpose map is only 1-positive")
        return transpose_map(n), "transpose"
    if map_choice == "reduction":
        return reduction_k_map(n, k), "reduction"
    raise DimensionError(f"unknown map choice {map_choice!r}")


def sk_upper_kpos_sdp(x, dims, k: int, map_choice="transpose", tol: float = 1e-8, max_iter: int = 200):
    """Upper bound from a k-positive map Phi acting on the second factor.

    Maximises Tr(X rho) over rho >= 0, (id (x) Phi)(rho) >= 0, Tr rho <= 1.
    The multiplier Y >= 0 of the middle constraint yields the certified
    bound lambda_max(X + (id (x) Phi^dagger)(Y)). Returns (value, Y, info).
    """
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    x = _real_if_possible(_psd(x))
    phi, tag = _resolve_map(map_choice, n, k)
    n_out = phi.out_dim
    cplx = np.iscomplexobj(x) or np.iscomplexobj(phi.choi)
    basis = conic.hermitian_basis(m * n, complex_field=cplx)
    d = m * n
    mapped = np.array([apply_on_second(phi, b, (m, n)) for b in basis])
    if not cplx:
        mapped = mapped.real
    blocks = [conic.Block(d, cplx), conic.Block(m * n_out, cplx), conic.Block(1)]
    c0 = [np.zeros((d, d)), np.zeros((m * n_out, m * n_out)), np.ones((1, 1))]
    coeffs = [-basis, -mapped, np.real(np.trace(basis, axis1=1, axis2=2)).reshape(-1, 1, 1)]
    scale = _sdp_scale(x)
    obj = np.real(np.einsum("ij,kji->k", x / scale, basis))
    sol = _lmi_solve(blocks, c0, coeffs, obj, tol, max_iter)
    y = scale * _psd_part(sol.x[1])
    pulled = apply_on_second(dual_channel(phi), y, (m, n_out))
    value = float(np.linalg.eigvalsh(hermitian_part(x + pulled))[-1])
    info = {"map": tag, "sdp_value": scale * sol.dual_objective, "status": sol.status, "gap": sol.gap}
    return value, y, info


# symmetric extensions

def beta_s(x, dims, s: int) -> float:
    """lambda_max of (I^{(x)(s-1)} (x) X) compressed to Sym^s(C^m) (x) C^n.

    Works in the occupation-number basis, so the matrix has size
    C(m+s-1, s) * n regardless of m^s.
    """
    m, n = _dims_check(x, dims)
    if s < 1:
        raise DimensionError("s must be >= 1")
    x = _psd(x)
    return float(np.linalg.eigvalsh(compressed_extension(x, (m, n), s))[-1])


def compressed_extension(x, dims, s: int) -> np.ndarray:
    m, n = dims
    basis = occupation_basis(m, s)
    index = {occ: i for i, occ in enumerate(basis)}
    dd = len(basis)
    xb = np.asarray(x).reshape(m, n, m, n)
    out = np.zeros((dd, n, dd, n), dtype=np.result_type(x, float))
    for r, occ in enumerate(basis):
        for i in range(m):
            if occ[i] == 0:
                continue
            q = list(occ)
            q[i] -= 1
            for j in range(m):
                q[j] += 1
                c = index[tuple(q)]
                out[r, :, c, :] += math.sqrt(occ[i] * q[j]) / s * xb[i, :, j, :]
                q[j] -= 1
    out = out.reshape(dd * n, dd * n)
    return (out + out.conj().T) / 2


def dps_max_s(m: int, n: int, limit: int = DPS_BLOCK_LIMIT) -> int:
    s = 0
    while 2 * m ** (s + 1) * n <= limit:
        s += 1
    return s


def _ppt_factors(s):
    # last floor(s/2) symmetric copies together with the unextended factor
    return list(range(s - s // 2, s)) + [s]


def dps_sdp_s1(x, dims, s: int, with_ppt: bool = True, tol: float = 1e-8, max_iter: int = 200):
    """Symmetric-extension upper bound on the S(1) norm.

    The extension is parametrised in the compressed symmetric basis,
    rho = V sigma V^dagger with V = sym_isometry(m, s) (x) I_n. Returns
    (alpha_s, W, info) where W >= 0 is the witness and alpha_s is the
    exactly evaluated lambda_max(V^dagger ((I (x) X) + W^Gamma) V).
    """
    m, n = _dims_check(x, dims)
    if s < 1:
        raise DimensionError("s must be >= 1")
    big = m ** s * n
    if 2 * big > DPS_BLOCK_LIMIT:
        raise DimensionError(
            f"extension of order s={s} needs a block of size {2 * big} > {DPS_BLOCK_LIMIT}; "
            f"largest admissible s is {dps_max_s(m, n)}")
    x = _real_if_possible(_psd(x))
    cplx = np.iscomplexobj(x)
    a = compressed_extension(x, (m, n), s)
    d = a.shape[0]
    basis = conic.hermitian_basis(d, complex_field=cplx)
    blocks = [conic.Block(d, cplx), conic.Block(1)]
    c0 = [np.zeros((d, d)), np.ones((1, 1))]
    coeffs = [-basis, np.real(np.trace(basis, axis1=1, axis2=2)).reshape(-1, 1, 1)]
    pdims = [m] * s + [n]
    pf = _ppt_factors(s)
    if with_ppt:
        v = np.kron(sym_isometry(m, s), np.eye(n))
        lifted = np.einsum("ia,kab,jb->kij", v, basis, v)
        gam = np.array([partial_transpose_multi(t, pdims, pf) for t in lifted])
        if not cplx:
            gam = gam.real
        blocks.insert(1, conic.Block(big, cplx))
        c0.insert(1, np.zeros((big, big)))
        coeffs.insert(1, -gam)
    scale = _sdp_scale(x)
    obj = np.real(np.einsum("ij,kji->k", a / scale, basis))
    sol = _lmi_solve(blocks, c0, coeffs, obj, tol, max_iter)
    if with_ppt:
        w = scale * _psd_part(sol.x[1])
        v = np.kron(sym_isometry(m, s), np.eye(n))
        shift = v.T @ partial_transpose_multi(w, pdims, pf) @ v
    else:
        w = np.zeros((big, big))
        shift = 0
    value = float(np.linalg.eigvalsh(hermitian_part(a + shift))[-1])
    info = {"s": s, "ppt": with_ppt, "sdp_value": scale * sol.dual_objective, "status": sol.status, "gap": sol.gap}
    return value, w, info


def dps_certificate_value(x, dims, s: int, w) -> float:
    """Evaluate the bound proven by a given witness W >= 0."""
    m, n = _dims_check(x, dims)
    w = _psd(w)
    v = np.kron(sym_isometry(m, s), np.eye(n))
    a = compressed_extension(_psd(x), (m, n), s)
    shift = v.T @ partial_transpose_multi(w, [m] * s + [n], _ppt_factors(s)) @ v
    return float(np.linalg.eigvalsh(hermitian_part(a + shift))[-1])


# error bounds

def jacobi_roots(deg: int, a: float, b: float) -> np.ndarray:
    """Roots of P_deg^{(a,b)} as eigenvalues of the Jacobi matrix."""
    if deg < 1:
        return np.zeros(0)
    k = np.arange(deg, dtype=float)
    ab = a + b
    diag = np.empty(deg)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag[:] = (b * b - a * a) / ((2 * k + ab) * (2 * k + ab + 2))
    diag[0] = (b - a) / (ab + 2)
    kk = np.arange(1, deg, dtype=float)
    t = 2 * kk + ab
    off = np.sqrt(4 * kk * (kk + a) * (kk + b) * (kk + ab) / (t * t * (t + 1) * (t - 1)))
    from scipy.linalg import eigh_tridiagonal
    return eigh_tridiagonal(diag, off, eigvals_only=True)


def jacobi_gs(n: int, s: int) -> float:
    if n < 2 or s < 1:
        raise DimensionError("need n >= 2 and s >= 1")
    if s % 2 == 0:
        roots = jacobi_roots(s // 2 + 1, n - 2, 0)
    else:
        roots = jacobi_roots((s + 1) // 2, n - 2, 1)
    return float(1 - roots.max())


def error_lower_bounds(n: int, s: int, kind: str, value: float, shift: float, k: int = 1) -> float:
    """Lower bounds on ||X||_{S(k)} from a symmetric-extension value.

    kind 'alpha' (PPT extension) or 'beta' (plain extension). For k = 1
    ``shift`` is lambda_min(X); for k > 1 it is Tr(X).
    """
    if kind not in ("alpha", "beta"):
        raise DimensionError("kind must be 'alpha' or 'beta'")
    if k == 1:
        if kind == "beta":
            return s / (n + s) * value + shift / (n + s)
        g = jacobi_gs(n, s)
        return (1 - n * g / (2 * (n - 1))) * value + g / (2 * (n - 1)) * shift
    if kind == "beta":
        return s / (n * n + s) * value + shift / (n * n + s)
    g = jacobi_gs(n, s)
    den = (2 + g * n) * (n - 1)
    return (1 - n * n * g / den) * value + g / den * shift


# aggregation

BUDGETS = ("fast", "default", "full")


def estimate(x, dims, k: int, budget: str = "default", seed: int = 0, restarts: int | None = None,
             workers: int = 1) -> NormEstimate:
    """Run every applicable method within the budget and keep the tightest
    lower and upper bounds."""
    if budget not in BUDGETS:
        raise DimensionError(f"budget must be one of {BUDGETS}")
    m, n = _dims_check(x, dims)
    _check_k(k, m, n)
    x = _psd(x)
    lam = np.linalg.eigvalsh(x)
    bounds_lo, bounds_up = {}, {}
    certs = {}
    witnesses = {}

    if k == min(m, n):
        w = np.linalg.eigh(x)[1][:, -1]
        bounds_lo["exact_top_eigvec"] = expectation(x, w)
        witnesses["exact_top_eigvec"] = w
        bounds_up["operator_norm"] = float(lam[-1])
        certs["operator_norm"] = {"kind": "analytic", "tag": "operator_norm"}
    else:
        r1 = _rank1_factor(x)
        if r1 is not None:
            lam1, v = r1
            val = lam1 * sk_exact_rank1(v, v, m, n, k)
            w = truncate_sr(v, m, n, k)
            bounds_lo["rank1_exact"] = expectation(x, w)
            witnesses["rank1_exact"] = w
            bounds_up["rank1_exact"] = val
            certs["rank1_exact"] = {"kind": "analytic", "tag": "rank1_exact"}
        nres = restarts if restarts is not None else {"fast": 10, "default": 50, "full": 100}[budget]
        val, w = sk_lower_seesaw(x, (m, n), k, restarts=nres, seed=seed, workers=workers)
        bounds_lo["seesaw"] = val
        witnesses["seesaw"] = w
        bounds_lo["eigen"] = eigen_lower(x, (m, n), k)
        bounds_lo["trace"] = trace_lower(x, (m, n))
        bounds_lo["scaling"] = scaling_lower(float(lam[-1]), min(m, n), k)

        bounds_up["operator_norm"] = float(lam[-1])
        certs["operator_norm"] = {"kind": "analytic", "tag": "operator_norm"}
        bounds_up["spectral"] = sk_upper_spectral(x, (m, n), k)
        certs["spectral"] = {"kind": "analytic", "tag": "spectral"}
        bounds_up["realign"] = sk_upper_realign(x, (m, n), k)
        certs["realign"] = {"kind": "analytic", "tag": "realign"}
        if k == 1:
            bounds_up["partial_transpose"] = sk_upper_pt(x, (m, n))
            certs["partial_transpose"] = {"kind": "analytic", "tag": "partial_transpose"}

        if budget != "fast":
            choices = ["transpose", "reduction"] if k == 1 else ["reduction"]
            for choice in choices:
                label = f"kpos_{choice}"
                try:
                    val, y, info = sk_upper_kpos_sdp(x, (m, n), k, choice)
                except conic.SolverError as exc:
                    log.warning("%s SDP failed: %s", label, exc)
                    continue
                bounds_up[label] = val
                certs[label] = {"kind": "kpos_map", "map": choice, "Y": y}
            if k == 1:
                smax = 20 if budget == "full" else 8
                for s in range(1, smax + 1):
                    if math.comb(m + s - 1, s) * n > 400:
                        break
                    b = beta_s(x, (m, n), s)
                    bounds_up[f"beta_{s}"] = b
                    certs[f"beta_{s}"] = {"kind": "analytic", "tag": f"beta_{s}"}
                    bounds_lo[f"beta_{s}_error"] = error_lower_bounds(m, s, "beta", b, float(lam[0])) \
                        if m == n else -np.inf
                dmax = min(dps_max_s(m, n), 3 if budget == "full" else 1)
                for s in range(1, dmax + 1):
                    label = f"dps_{s}"
                    try:
                        val, wit, info = dps_sdp_s1(x, (m, n), s, with_ppt=True)
                    except conic.SolverError as exc:
                        log.warning("%s SDP failed: %s", label, exc)
                        continue
                    bounds_up[label] = val
                    certs[label] = {"kind": "dps", "s": s, "W": wit}
                    if m == n:
                        bounds_lo[f"{label}_error"] = error_lower_bounds(n, s, "alpha", val, float(lam[0]))

    lo_label = max(bounds_lo, key=lambda t: bounds_lo[t])
    up_label = min(bounds_up, key=lambda t: bounds_up[t])
    wit_label = max(witnesses, key=lambda t: bounds_lo[t])
    wit = witnesses[wit_label]
    bounds = {f"lower:{t}": v for t, v in bounds_lo.items()}
    bounds.update({f"upper:{t}": v for t, v in bounds_up.items()})
    return NormEstimate(
        lower=float(bounds_lo[lo_label]),
        upper=float(bounds_up[up_label]),
        lower_witness=wit,
        upper_certificate=certs[up_label],
        methods=[lo_label, up_label],
        bounds=bounds,
        witness_value=expectation(x, wit),
    )
