import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entanglia import channels as ch
from entanglia.densemat import DimensionError, random_psd, random_unitary
from entanglia.tensor import max_entangled, partial_transpose, swap_operator


def _basis(m):
    for i in range(m):
        for j in range(m):
            e = np.zeros((m, m))
            e[i, j] = 1
            yield e


def _same_action(a, b):
    m = a.in_dim
    return all(np.allclose(ch.apply(a, e), ch.apply(b, e), atol=1e-9) for e in _basis(m))


def test_choi_examples():
    t = ch.transpose_map(2)
    assert np.allclose(t.choi, swap_operator(2))
    assert np.allclose(np.linalg.eigvalsh(t.choi), [-1, 1, 1, 1])
    for n in (2, 3):
        assert np.allclose(ch.depolarizing(n).choi, np.eye(n * n) / n)
        psi = max_entangled(n)
        assert np.allclose(ch.identity_channel(n).choi, n * np.outer(psi, psi))


def test_apply_matches_kraus_action(rng):
    ops = [rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)) for _ in range(2)]
    c = ch.choi_from_kraus(ops)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(ch.apply(c, x), sum(a @ x @ a.conj().T for a in ops))


def test_kraus_from_choi_examples(rng):
    n = 3
    dep = ch.depolarizing(n)
    ks = ch.kraus_from_choi(dep)
    assert len(ks.left) == n * n
    assert _same_action(ch.choi_from_kraus(ks), dep)
    u = random_unitary(3, rng)
    ks = ch.kraus_from_choi(ch.unitary_channel(u))
    assert len(ks.left) == 1
    a = ks.left[0]
    phase = np.vdot(u.reshape(-1), a.reshape(-1))
    assert np.allclose(a, u * phase / abs(phase))


def test_kraus_from_random_psd_choi(rng):
    c = ch.Channel(random_psd(6, rng), 2, 3)
    ks = ch.kraus_from_choi(c)
    assert np.allclose(ch.choi_from_kraus(ks).choi, c.choi)
    # sum A^dagger A equals the transpose of the output-traced marginal
    from entanglia.tensor import partial_trace
    s = sum(a.conj().T @ a for a in ks.left)
    assert np.allclose(s, partial_trace(c.choi, (2, 3), 2).T)


def test_kraus_from_hermitian_non_psd_choi():
    t = ch.transpose_map(3)
    ks = ch.kraus_from_choi(t)
    assert not ks.is_cp_form
    assert sorted(ks.weights) == [-1] * 3 + [1] * 6
    assert np.allclose(ch.choi_from_kraus(ks).choi, t.choi)


def test_properties_of_standard_maps():
    dep = ch.depolarizing(3)
    assert ch.is_trace_preserving(dep) and ch.is_unital(dep) and ch.is_cp(dep)
    t = ch.transpose_map(3)
    assert ch.is_trace_preserving(t) and ch.is_unital(t) and not ch.is_cp(t)
    zero = ch.Channel(np.zeros((4, 4)), 2, 2)
    assert not ch.is_trace_preserving(zero)


def test_dual_channel(rng):
    dep = ch.depolarizing(3)
    assert np.allclose(ch.dual_channel(dep).choi, dep.choi)
    a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    lhs = ch.dual_channel(ch.choi_from_kraus([a]))
    rhs = ch.choi_from_kraus([a.conj().T])
    assert _same_action(lhs, rhs)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = ch.choi_from_kraus([a])
    assert np.vdot(y, ch.apply(c, x)) == pytest.approx(np.vdot(ch.apply(ch.dual_channel(c), y), x))
    tp = ch.random_cp_channel(2, 3, rng)
    assert ch.is_trace_preserving(tp) and ch.is_unital(ch.dual_channel(tp))


def test_stinespring_round_trip(rng):
    c = ch.random_cp_channel(2, 3, rng)
    a = ch.stinespring(c)
    assert a.shape == (2 * 3 * 3, 2)
    assert np.allclose(a.conj().T @ a, np.eye(2))
    assert _same_action(ch.channel_from_isometry(a, 6, 3), c)


def test_complementary(rng):
    for n in (2, 3):
        idc = ch.identity_channel(n)
        comp = ch.complementary_channel(idc)
        out = ch.apply(comp, np.eye(n))
        assert np.linalg.eigvalsh(out)[-1] == pytest.approx(n)
        # each output is Tr(X) times a fixed rank-one state
        x = random_psd(n, rng)
        y = ch.apply(comp, x)
        assert np.linalg.matrix_rank(y, tol=1e-9) == 1
        assert np.trace(y) == pytest.approx(np.trace(x))
    for _ in range(10):
        c = ch.random_cp_channel(2, 3, rng)
        comp = ch.complementary_channel(c)
        assert np.linalg.eigvalsh(c.choi)[-1] == pytest.approx(np.linalg.eigvalsh(ch.apply(comp, np.eye(2)))[-1],
                                                               abs=1e-9)
        assert ch.is_trace_preserving(comp)
        cc = ch.complementary_channel(comp)
        # the double complement agrees with the channel up to an isometry on the output
        x = random_psd(2, rng)
        ev1 = np.sort(np.linalg.eigvalsh(ch.apply(c, x)))[::-1]
        ev2 = np.sort(np.linalg.eigvalsh(ch.apply(cc, x)))[::-1][:3]
        assert np.allclose(ev1, ev2, atol=1e-9)
    c = ch.random_cp_channel(2, 2, rng, trace_preserving=False)
    assert not ch.is_trace_preserving(ch.complementary_channel(c))


def test_constructors():
    for n, a in [(2, 0.5), (3, -0.5), (4, 1.0)]:
        rho = ch.werner_state(n, a)
        assert np.trace(rho) == pytest.approx(1) and np.allclose(rho, rho.T)
        ev = np.unique(np.round(np.linalg.eigvalsh(partial_transpose(rho, (n, n))) * (n * n - a * n), 10))
        assert np.allclose(sorted(ev), sorted({1.0, round(1 - a * n, 10)}))
    for n, k in [(3, 1), (3, 2), (4, 2)]:
        psi = max_entangled(n)
        assert np.allclose(ch.reduction_k_map(n, k).choi, k * np.eye(n * n) - n * np.outer(psi, psi))
    a = np.array([[1, 2], [3, 4]])
    x = np.array([[5, 6], [7, 8]])
    assert np.allclose(ch.apply(ch.schur_map(a), x), a * x)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (4, 3)])
def test_reduction_map_k_but_not_k_plus_1_positive(n, k):
    phi = ch.reduction_k_map(n, k)
    # (k+1)-dimensional maximally entangled witness
    d = k + 1
    v = np.zeros(d * n)
    for i in range(d):
        v[i * n + i] = 1
    v /= np.sqrt(d)
    out = ch.apply_on_second(phi, np.outer(v, v), (d, n))
    assert np.linalg.eigvalsh(out)[0] == pytest.approx(-1 / (k + 1))
    # and k-positive on random Schmidt-rank-k inputs
    r = np.random.default_rng(n * 10 + k)
    for _ in range(20):
        a = r.standard_normal((k, k)) + 1j * r.standard_normal((k, k))
        b = r.standard_normal((n, k)) + 1j * r.standard_normal((n, k))
        w = (a @ b.T).reshape(-1)
        w /= np.linalg.norm(w)
        assert np.linalg.eigvalsh(ch.apply_on_second(phi, np.outer(w, w.conj()), (k, n)))[0] > -1e-10


def test_compose(rng):
    a = ch.random_cp_channel(2, 3, rng)
    b = ch.random_cp_channel(3, 2, rng)
    x = random_psd(2, rng)
    assert np.allclose(ch.apply(ch.compose(b, a), x), ch.apply(b, ch.apply(a, x)))


def test_errors():
    with pytest.raises(DimensionError):
        ch.Channel(np.eye(5), 2, 2)
    with pytest.raises(DimensionError):
        ch.stinespring(ch.transpose_map(2))
    with pytest.raises(DimensionError):
        ch.werner_state(2, 1.5)
    with pytest.raises(DimensionError):
        ch.random_cp_channel(3, 2, np.random.default_rng(0), n_kraus=1)


seeds = st.integers(0, 10 ** 6)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2)]))
def test_choi_kraus_stinespring_round_trips(seed, dims):
    r = np.random.default_rng(seed)
    m, n = dims
    c = ch.random_cp_channel(m, n, r, n_kraus=int(r.integers(-(-m // n), 5)))
    back = ch.choi_from_kraus(ch.kraus_from_choi(c), m, n)
    assert np.abs(back.choi - c.choi).max() <= 1e-9
    assert _same_action(ch.channel_from_isometry(ch.stinespring(c), m * n, n), c)
    assert ch.is_trace_preserving(c) == ch.is_trace_preserving(ch.complementary_channel(c))
