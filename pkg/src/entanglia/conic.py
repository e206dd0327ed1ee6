"""Dense primal-dual interior-point solver for semidefinite programs.

Standard form over a direct sum of Hermitian PSD blocks::

    primal:  opt <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
    dual  (min sense):  max b.y  s.t.  Z = C - sum_i y_i A_i >= 0
    dual  (max sense):  min b.y  s.t.  Z = sum_i y_i A_i - C >= 0

Complex blocks are mapped to real symmetric ones by ``real_embed``. The
iteration is an infeasible-start path-following method with the HKM search
direction and Mehrotra's predictor-corrector, solving the Schur complement
system densely.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
PRIMAL_INFEASIBLE = "PrimalInfeasible"
DUAL_INFEASIBLE = "DualInfeasible"
MAX_ITER = "MaxIter"
NUMERICAL_FAILURE = "NumericalFailure"


class SolverError(RuntimeError):
    def __init__(self, status: str, message: str = ""):
        super().__init__(f"{status}: {message}" if message else status)
        self.status = status


@dataclass
class Block:
    size: int
    complex: bool = False


@dataclass
class SDProblem:
    """Per block k: ``c[k]`` is (N, N), ``a[k]`` is (m, N, N)."""
    blocks: list
    c: list
    a: list
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        m = self.b.size
        for blk, ck, ak in zip(self.blocks, self.c, self.a):
            n = blk.size
            if ck.shape != (n, n) or ak.shape != (m, n, n):
                raise ValueError("coefficient shapes inconsistent with block sizes")

    @property
    def n_constraints(self) -> int:
        return self.b.size


@dataclass
class SDSolution:
    status: str
    x: list
    y: np.ndarray
    z: list
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        return 0.5 * (self.primal_objective + self.dual_objective)


def real_embed(h: np.ndarray) -> np.ndarray:
    """X + iY -> [[X, -Y], [Y, X]]."""
    x, y = h.real, h.imag
    return np.block([[x, -y], [y, x]])


def real_unembed(s: np.ndarray) -> np.ndarray:
    n = s.shape[0] // 2
    x = (s[:n, :n] + s[n:, n:]) / 2
    y = (s[n:, :n] - s[:n, n:]) / 2
    return x + 1j * y


def _embed_stack(a: np.ndarray) -> np.ndarray:
    x, y = a.real, a.imag
    top = np.concatenate([x, -y], axis=2)
    bot = np.concatenate([y, x], axis=2)
    return np.concatenate([top, bot], axis=1)


def _sym(a):
    return (a + a.T) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    lc = np.linalg.cholesky(x)
    t = np.linalg.solve(lc, np.linalg.solve(lc, dx).T)
    w = np.linalg.eigvalsh(_sym(t))
    return np.inf if w[0] >= 0 else -1.0 / w[0]


def _solve_real(cs, as_, b, tol, max_iter, keep_history=False):
    m = b.size
    sizes = [c.shape[0] for c in cs]
    ntot = sum(sizes)
    bnorm = np.linalg.norm(b)
    cnorm = np.sqrt(sum(np.sum(c * c) for c in cs))
    tau = 1.0 + (np.max(np.abs(b)) if m else 0.0) + max(np.sqrt(np.sum(c * c)) for c in cs)
    xs = [tau * np.eye(n) for n in sizes]
    zs = [tau * np.eye(n) for n in sizes]
    y = np.zeros(m)
    flat = [a.reshape(m, -1) for a in as_]

    def op_a(mats):
        out = np.zeros(m)
        for f, g in zip(flat, mats):
            out += f @ g.reshape(-1)
        return out

    def op_at(v):
        return [np.tensordot(v, a, axes=1) for a in as_]

    history = []
    status = MAX_ITER
    pobj = dobj = gap = pinf = dinf = np.nan
    best = None
    it = 0
    for it in range(max_iter + 1):
        rp = b - op_a(xs)
        aty = op_at(y)
        rd = [c - t - z for c, t, z in zip(cs, aty, zs)]
        mu = sum(np.sum(x * z) for x, z in zip(xs, zs)) / ntot
        pobj = sum(np.sum(c * x) for c, x in zip(cs, xs))
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / (1.0 + bnorm)
        dinf = np.sqrt(sum(np.sum(r * r) for r in rd)) / (1.0 + cnorm)
        history.append((pobj, dobj, gap, pinf, dinf))
        log.debug("it %d pobj %.10g dobj %.10g gap %.2e pinf %.2e dinf %.2e", it, pobj, dobj, gap, pinf, dinf)
        merit = max(gap, pinf, dinf)
        if best is None or merit < best[0]:
            best = (merit, xs, y, zs, pobj, dobj, gap, pinf, dinf)
        if merit <= tol:
            status = OPTIMAL
            break
        # residuals drifting away from a near-converged iterate: stop early
        if best[0] < 1e3 * tol and merit > 1e3 * best[0]:
            status = NUMERICAL_FAILURE
            break
        if it == max_iter:
            break
        if abs(dobj) > 1e12 * (1 + abs(pobj)) and pinf > tol:
            status = PRIMAL_INFEASIBLE
            break
        if abs(pobj) > 1e12 * (1 + abs(dobj)) and dinf > tol:
            status = DUAL_INFEASIBLE
            break
        if it >= 20:
            old = history[it - 20]
            stalled = gap > 0.5 * old[2]
            if stalled and pinf > 10 * old[3] and pinf > tol:
                status = PRIMAL_INFEASIBLE
                break
            if stalled and dinf > 10 * old[4] and dinf > tol:
                status = DUAL_INFEASIBLE
                break
        try:
            zinv = [np.linalg.inv(z) for z in zs]
            gmat = np.zeros((m, m))
            for a, f, x, zi in zip(as_, flat, xs, zinv):
                g = np.matmul(np.matmul(x, a), zi)
                gmat += f @ g.reshape(m, -1).T
            gmat = _sym(gmat)
            try:
                chol = np.linalg.cholesky(gmat)
            except np.linalg.LinAlgError:
                reg = 1e-13 * (1 + np.trace(gmat) / max(m, 1))
                chol = np.linalg.cholesky(gmat + reg * np.eye(m))

            def direction(rc):
                xrz = [x @ r @ zi for x, r, zi in zip(xs, rd, zinv)]
                h = rp - op_a(rc) + op_a(xrz)
                dy = np.linalg.solve(chol.T, np.linalg.solve(chol, h))
                adz = op_at(dy)
                dz = [r - t for r, t in zip(rd, adz)]
                dx = [_sym(r - x @ d @ zi) for r, x, d, zi in zip(rc, xs, dz, zinv)]
                return dx, dy, dz

            rc = [-x for x in xs]
            dx, dy, dz = direction(rc)
            ap = min([1.0] + [_max_step(x, d) for x, d in zip(xs, dx)])
            ad = min([1.0] + [_max_step(z, d) for z, d in zip(zs, dz)])
            mu_aff = sum(np.sum((x + ap * a1) * (z + ad * a2))
                         for x, a1, z, a2 in zip(xs, dx, zs, dz)) / ntot
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
            rc = [sigma * mu * zi - x - d1 @ d2 @ zi for zi, x, d1, d2 in zip(zinv, xs, dx, dz)]
            dx, dy, dz = direction(rc)
            gamma = 0.98 if it > 5 else 0.9
            ap = min([1.0] + [gamma * _max_step(x, d) for x, d in zip(xs, dx)])
            ad = min([1.0] + [gamma * _max_step(z, d) for z, d in zip(zs, dz)])
        except np.linalg.LinAlgError as exc:
            log.debug("linear algebra failure at iteration %d: %s", it, exc)
            status = NUMERICAL_FAILURE
            break
        xs = [_sym(x + ap * d) for x, d in zip(xs, dx)]
        y = y + ad * dy
        zs = [_sym(z + ad * d) for z, d in zip(zs, dz)]
    if status != OPTIMAL and best is not None:
        # report the most accurate iterate rather than the last one
        _, xs, y, zs, pobj, dobj, gap, pinf, dinf = best
    return status, xs, y, zs, pobj, dobj, gap, pinf, dinf, it, (history if keep_history else [])


def solve(problem: SDProblem, tol: float = 1e-8, max_iter: int = 200,
          keep_history: bool = False) -> SDSolution:
    sign = 1.0 if problem.sense == "min" else -1.0
    cs, as_ = [], []
    for blk, c, a in zip(problem.blocks, problem.c, problem.a):
        if blk.complex:
            cs.append(sign * real_embed(c) / 2)
            as_.append(_embed_stack(a) / 2)
        else:
            cs.append(sign * np.real(c).astype(float))
            as_.append(np.real(a).astype(float))
    status, xs, y, zs, pobj, dobj, gap, pinf, dinf, it, hist = _solve_real(
        cs, as_, problem.b, tol, max_iter, keep_history)
    x_out, z_out = [], []
    for blk, x, z in zip(problem.blocks, xs, zs):
        if blk.complex:
            x_out.append(real_unembed(x))
            z_out.append(2 * real_unembed(z))
        else:
            x_out.append(x)
            z_out.append(z)
    return SDSolution(status, x_out, sign * y, z_out, sign * pobj, sign * dobj, gap,
                      pinf, dinf, it, hist)


def solve_or_raise(problem: SDProblem, **kw) -> SDSolution:
    sol = solve(problem, **kw)
    if sol.status != OPTIMAL:
        raise SolverError(sol.status, f"gap={sol.gap:.2e} pinf={sol.primal_residual:.2e} "
                                      f"dinf={sol.dual_residual:.2e} after {sol.iterations} iterations")
    return sol


def hermitian_basis(n: int, complex_field: bool = True) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of n x n Hermitian (or real
    symmetric) matrices, stacked as (dim, n, n)."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex if complex_field else float)
        e[i, i] = 1.0
        out.append(e)
    r2 = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex if complex_field else float)
            e[i, j] = e[j, i] = r2
            out.append(e)
    if complex_field:
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = -1j * r2
                e[j, i] = 1j * r2
                out.append(e)
    return np.array(out)


def dump_problem(problem: SDProblem, path: str) -> None:
    """Write the problem as JSON:
    {"sense", "b", "blocks": [{"size", "complex"}], "C": [{"re", "im"}],
     "A": [[{"re", "im"} per block] per constraint]}."""
    def cm(a):
        a = np.asarray(a)
        return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}

    doc = {
        "sense": problem.sense,
        "b": problem.b.tolist(),
        "blocks": [{"size": blk.size, "complex": blk.complex} for blk in problem.blocks],
        "C": [cm(c) for c in problem.c],
        "A": [[cm(a[i]) for a in problem.a] for i in range(problem.n_constraints)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_problem(path: str) -> SDProblem:
    with open(path) as fh:
        doc = json.load(fh)
    blocks = [Block(d["size"], d["complex"]) for d in doc["blocks"]]

    def mk(d):
        return np.asarray(d["re"]) + 1j * np.asarray(d["im"])

    c = [mk(d) for d in doc["C"]]
    a = [np.array([mk(row[k]) for row in doc["A"]]).reshape(len(doc["A"]), blk.size, blk.size)
         for k, blk in enumerate(blocks)]
    return SDProblem(blocks, c, a, np.asarray(doc["b"]), doc["sense"])


def lmi_problem(blocks: Sequence[Block], c0: Sequence[np.ndarray], coeffs: Sequence[np.ndarray],
                objective: np.ndarray) -> SDProblem:
    """Encode ``max objective.y s.t. c0 - sum_i y_i coeffs_i >= 0`` (blockwise)
    as the dual of a min-sense standard-form problem."""
    return SDProblem(list(blocks), list(c0), list(coeffs), np.asarray(objective, dtype=float), "min")
