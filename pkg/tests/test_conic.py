import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entanglia import conic
from entanglia.densemat import random_psd

E11 = np.diag([1.0, 0.0])
E22 = np.diag([0.0, 1.0])
OFF = np.array([[0.0, 0.5], [0.5, 0.0]])


def basic_problem():
    # max <A, X>  s.t.  B - Phi(X) = S,  X, S >= 0,  Phi(X) = diag(x11 + x22, -x11)
    a = np.ones((2, 2))
    ax = np.array([E11 + E22, np.zeros((2, 2)), -E11])
    as_ = np.array([E11, OFF, E22])
    return conic.SDProblem([conic.Block(2), conic.Block(2)], [a, np.zeros((2, 2))], [ax, as_],
                           [2.0, -1.0, 2.0], "max")


def test_basic_sdp_value():
    sol = conic.solve(basic_problem())
    assert sol.status == conic.OPTIMAL
    assert sol.primal_objective == pytest.approx(3.3051, abs=1e-3)
    # independent route: the quintic satisfied by x11 at the optimum
    roots = np.roots([2, 14, 31, 14, -27, -24])
    x11 = float(roots[np.argmin(np.abs(roots.imag) + (roots.real < 0))].real)
    x22 = (3 - x11 ** 2) / (2 + x11)
    oracle = (np.sqrt(x11) + np.sqrt(x22)) ** 2
    assert sol.primal_objective == pytest.approx(oracle, abs=1e-7)
    assert sol.x[0][0, 0] == pytest.approx(0.9315, abs=1e-4)
    assert sol.x[0][1, 1] == pytest.approx(0.7274, abs=1e-4)
    assert sol.x[0][0, 1] == pytest.approx(0.8231, abs=1e-4)
    # multipliers: y = (Y11, 2 Y12, Y22)
    y = sol.y
    assert y[0] == pytest.approx(2.1317, abs=1e-3)
    assert y[1] / 2 == pytest.approx(0.7272, abs=1e-3)
    assert y[2] == pytest.approx(0.2480, abs=1e-3)
    assert sol.gap <= 1e-8


def test_min_lambda_identity():
    d = np.diag([1.0, 3.0, 2.0])
    # max -lam s.t. lam I - D >= 0, i.e. -D - (lam)(-I) >= 0
    prob = conic.lmi_problem([conic.Block(3)], [-d], [np.array([-np.eye(3)])], [-1.0])
    sol = conic.solve(prob)
    assert sol.status == conic.OPTIMAL
    assert -sol.dual_objective == pytest.approx(3.0, abs=1e-7)
    assert sol.y[0] == pytest.approx(3.0, abs=1e-7)


def trace_norm_problem(m):
    n = m.shape[0]
    c = np.eye(2 * n, dtype=complex) / 2
    rows, b = [], []
    for i in range(n):
        for j in range(n):
            re = np.zeros((2 * n, 2 * n), dtype=complex)
            re[i, n + j] = re[n + j, i] = 0.5
            im = np.zeros((2 * n, 2 * n), dtype=complex)
            im[i, n + j] = -0.5j
            im[n + j, i] = 0.5j
            rows += [re, im]
            b += [m[i, j].real, m[i, j].imag]
    return conic.SDProblem([conic.Block(2 * n, complex=True)], [c], [np.array(rows)], b, "min")


def test_complex_trace_norm(rng):
    for _ in range(3):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        sol = conic.solve(trace_norm_problem(m))
        assert sol.status == conic.OPTIMAL
        assert sol.primal_objective == pytest.approx(np.linalg.svd(m, compute_uv=False).sum(), abs=1e-7)


def test_final_iterate_duality_and_complementarity(rng):
    probs = [basic_problem(), trace_norm_problem(rng.standard_normal((2, 2)))]
    for prob in probs:
        tol = 1e-8
        sol = conic.solve(prob, tol=tol)
        assert sol.status == conic.OPTIMAL
        if prob.sense == "max":
            assert sol.primal_objective <= sol.dual_objective + tol * (1 + abs(sol.dual_objective))
        else:
            assert sol.dual_objective <= sol.primal_objective + tol * (1 + abs(sol.primal_objective))
        comp = sum(abs(np.real(np.vdot(x, z))) for x, z in zip(sol.x, sol.z))
        assert comp <= 10 * tol * (1 + abs(sol.primal_objective))
        assert sol.gap <= 1e-8


def test_determinism():
    a = conic.solve(basic_problem(), keep_history=True)
    b = conic.solve(basic_problem(), keep_history=True)
    assert a.iterations == b.iterations
    assert all(np.array_equal(np.asarray(p), np.asarray(q)) for p, q in zip(a.history, b.history))
    assert np.array_equal(a.y, b.y)


def test_infeasible_detected():
    prob = conic.SDProblem([conic.Block(2)], [np.eye(2)], [np.array([np.eye(2)])], [-1.0], "min")
    sol = conic.solve(prob, max_iter=100)
    assert sol.status != conic.OPTIMAL
    with pytest.raises(conic.SolverError):
        conic.solve_or_raise(prob, max_iter=100)


def test_embed_round_trip(rng):
    h = random_psd(3, rng)
    e = conic.real_embed(h)
    assert np.allclose(e, e.T)
    assert np.allclose(conic.real_unembed(e), h)
    assert np.allclose(np.sort(np.linalg.eigvalsh(e)), np.sort(np.repeat(np.linalg.eigvalsh(h), 2)))


def test_hermitian_basis_orthonormal():
    for n, cf in [(3, True), (3, False)]:
        basis = conic.hermitian_basis(n, cf)
        assert len(basis) == (n * n if cf else n * (n + 1) // 2)
        gram = np.einsum("aij,bij->ab", basis.conj(), basis)
        assert np.allclose(gram, np.eye(len(basis)))


def test_dump_load(tmp_path):
    prob = trace_norm_problem(np.array([[1.0, 2.0j], [0.5, -1.0]]))
    path = tmp_path / "p.json"
    conic.dump_problem(prob, str(path))
    back = conic.load_problem(str(path))
    assert back.sense == prob.sense and np.array_equal(back.b, prob.b)
    assert all(np.array_equal(x, y) for x, y in zip(back.a, prob.a))
    assert conic.solve(back).primal_objective == pytest.approx(conic.solve(prob).primal_objective, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_lambda_max_lmi_matches_eigvalsh(seed):
    r = np.random.default_rng(seed)
    h = random_psd(4, r, real=bool(seed % 2)) - 2 * np.eye(4)
    cplx = np.iscomplexobj(h)
    prob = conic.lmi_problem([conic.Block(4, complex=cplx)], [-h], [np.array([-np.eye(4)])], [-1.0])
    sol = conic.solve(prob)
    assert sol.status == conic.OPTIMAL
    assert sol.y[0] == pytest.approx(np.linalg.eigvalsh(h)[-1], abs=1e-7)
    assert sol.gap <= 1e-8
