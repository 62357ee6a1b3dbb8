import numpy as np
import pytest

from helpers import random_spd
from pggm import linalg


def test_symmetrize_idempotent():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6))
    s = linalg.symmetrize(a)
    assert np.array_equal(s, s.T)
    assert np.allclose(linalg.symmetrize(s), s)


def test_cholesky_matches_eigenvalue_sign():
    rng = np.random.default_rng(1)
    for trial in range(40):
        d = int(rng.integers(2, 9))
        base = random_spd(rng, d, jitter=0.0)
        lmin, _ = linalg.extreme_eigenvalues(base)
        shift = float(rng.uniform(-2.0, 2.0)) * max(abs(lmin), 0.1)
        m = base + (shift - lmin) * np.eye(d)
        f = linalg.cholesky(m)
        lo, _ = linalg.extreme_eigenvalues(m)
        if lo > 1e-10:
            assert f is not None
        if lo < -1e-10:
            assert f is None


def test_logdet_block_additive():
    rng = np.random.default_rng(2)
    a = random_spd(rng, 4)
    b = random_spd(rng, 3)
    blk = np.zeros((7, 7))
    blk[:4, :4], blk[4:, 4:] = a, b
    la = linalg.logdet(linalg.require_cholesky(a))
    lb = linalg.logdet(linalg.require_cholesky(b))
    lblk = linalg.logdet(linalg.require_cholesky(blk))
    assert abs(la + lb - lblk) < 1e-10


def test_logdet_against_slogdet():
    rng = np.random.default_rng(3)
    m = random_spd(rng, 8)
    sign, ld = np.linalg.slogdet(m)
    assert sign == 1.0
    assert abs(linalg.logdet(linalg.require_cholesky(m)) - ld) < 1e-10


def test_require_cholesky_raises():
    m = np.diag([1.0, -1.0])
    with pytest.raises(linalg.NotPDError):
        linalg.require_cholesky(m, what="test matrix")


def test_solve_and_inverse():
    rng = np.random.default_rng(4)
    m = random_spd(rng, 5)
    f = linalg.require_cholesky(m)
    rhs = rng.standard_normal((5, 3))
    assert np.allclose(m @ linalg.solve_spd(f, rhs), rhs, atol=1e-10)
    inv = linalg.spd_inverse(f)
    assert np.allclose(m @ inv, np.eye(5), atol=1e-10)
    assert np.array_equal(inv, inv.T)


def test_extreme_eigenvalues_match_full_spectrum():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d = int(rng.integers(1, 10))
        m = linalg.symmetrize(rng.standard_normal((d, d)))
        lmin, lmax = linalg.extreme_eigenvalues(m)
        w = np.linalg.eigvalsh(m)
        assert abs(lmin - w[0]) < 1e-10
        assert abs(lmax - w[-1]) < 1e-10


def test_extreme_eigenvalues_empty():
    with pytest.raises(ValueError):
        linalg.extreme_eigenvalues(np.zeros((0, 0)))


def test_soft_threshold_values():
    x = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
    out = linalg.soft_threshold(x, 1.0)
    assert np.allclose(out, [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_soft_threshold_contraction():
    rng = np.random.default_rng(6)
    for _ in range(200):
        x, y = rng.uniform(-5, 5, size=2)
        t = rng.uniform(0, 3)
        dx = abs(linalg.soft_threshold(np.array(x), t)
                 - linalg.soft_threshold(np.array(y), t))
        assert dx <= abs(x - y) + 1e-15


def test_group_soft_threshold_single_nonzero_matches_scalar():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = np.zeros((4, 3))
        i = int(rng.integers(0, 4))
        j = int(rng.integers(0, 3))
        v = float(rng.uniform(-4, 4))
        m[i, j] = v
        t = float(rng.uniform(0, 3))
        out = linalg.group_soft_threshold(m, t)
        expect = np.zeros_like(m)
        expect[i, j] = linalg.soft_threshold(np.array(v), t)
        assert np.allclose(out, expect)


def test_group_soft_threshold_shrinks_column_norms():
    rng = np.random.default_rng(8)
    m = rng.standard_normal((5, 6))
    t = 0.7
    out = linalg.group_soft_threshold(m, t)
    norms = np.linalg.norm(m, axis=0)
    out_norms = np.linalg.norm(out, axis=0)
    for k in range(6):
        expect = max(norms[k] - t, 0.0)
        assert abs(out_norms[k] - expect) < 1e-12
