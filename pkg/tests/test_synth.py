import json

import numpy as np
import pytest

from pggm import synth
from pggm.linalg import extreme_eigenvalues
from pggm.synth import (GroundTruth, InfeasibleError, RetryExhaustedError,
                        SyntheticSpec)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(n=1, p=2, q=2)
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, p=0, q=2)
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, p=2, q=2, edge_prob=1.5)
    with pytest.raises(ValueError):
        SyntheticSpec(n=10, p=2, q=2, target_condition=1.0)
    assert SyntheticSpec(n=10, p=3, q=4).condition == 7.0


def test_condition_number_hits_target_before_densification():
    for seed in range(5):
        sp = SyntheticSpec(n=50, p=6, q=8, edge_prob=0.2, seed=seed)
        gt = synth.generate_truth(sp)
        assert abs(gt.cond_pre - sp.condition) <= 0.05 * sp.condition
        lmin, lmax = extreme_eigenvalues(gt.omega)
        assert lmin > 0
        assert gt.cond_post == pytest.approx(lmax / lmin, rel=1e-10)


def test_explicit_target_condition():
    sp = SyntheticSpec(n=50, p=4, q=4, edge_prob=0.3, target_condition=25.0,
                       seed=3)
    gt = synth.generate_truth(sp)
    assert abs(gt.cond_pre - 25.0) <= 0.05 * 25.0


def test_truth_structure_raw():
    sp = SyntheticSpec(n=50, p=5, q=7, edge_prob=0.25, seed=11,
                       normalize=False)
    gt = synth.generate_truth(sp)
    p, q = 5, 7
    assert gt.omega.shape == (p + q, p + q)
    assert np.array_equal(gt.omega, gt.omega.T)
    # xx block off-diagonals got the all-ones densification on top of 0/1
    xx = gt.omega_xx
    off = xx[~np.eye(q, dtype=bool)]
    assert np.all(off >= 1.0)
    # yy and yx blocks keep the raw 0/1 weights
    vals = np.unique(np.abs(gt.omega_yx))
    assert set(np.round(vals, 12)).issubset({0.0, 1.0})
    assert np.array_equal(gt.support_yy, gt.omega_yy != 0)
    assert np.array_equal(gt.support_yx, gt.omega_yx != 0)
    assert np.allclose(gt.sigma @ gt.omega, np.eye(p + q), atol=1e-8)


def test_normalized_default_is_pure_rescale():
    kw = dict(n=50, p=5, q=7, edge_prob=0.25, seed=11)
    gt = synth.generate_truth(SyntheticSpec(**kw))
    raw = synth.generate_truth(SyntheticSpec(**kw, normalize=False))
    assert gt.spec.normalize and not raw.spec.normalize
    assert np.all(np.diag(gt.omega_yy) == 1.0)
    assert gt.shift == raw.shift
    assert np.allclose(gt.omega * raw.shift, raw.omega, rtol=0, atol=1e-12)
    assert np.allclose(gt.sigma, raw.sigma * raw.shift, rtol=1e-12, atol=0)
    assert np.array_equal(gt.support_yy, raw.support_yy)
    assert np.array_equal(gt.support_yx, raw.support_yx)
    assert gt.cond_pre == raw.cond_pre
    assert gt.cond_post == pytest.approx(raw.cond_post, rel=1e-10)
    assert np.allclose(gt.sigma @ gt.omega, np.eye(12), atol=1e-8)


def test_support_density_near_edge_prob():
    sp = SyntheticSpec(n=50, p=20, q=20, edge_prob=0.1, seed=4)
    gt = synth.generate_truth(sp)
    mask = gt.omega_yy != 0
    offdiag = mask[~np.eye(20, dtype=bool)]
    rate = offdiag.mean()
    se = np.sqrt(0.1 * 0.9 / offdiag.size)
    assert abs(rate - 0.1) <= 3 * se + 1e-12
    rate_yx = (gt.omega_yx != 0).mean()
    se_yx = np.sqrt(0.1 * 0.9 / gt.omega_yx.size)
    assert abs(rate_yx - 0.1) <= 3 * se_yx + 1e-12


def test_determinism_and_stream_independence():
    sp = SyntheticSpec(n=30, p=4, q=5, edge_prob=0.3, seed=42)
    g1 = synth.generate_truth(sp)
    g2 = synth.generate_truth(sp)
    assert np.array_equal(g1.omega, g2.omega)
    d1 = synth.sample_dataset(g1, 30, (42, 0, 1))
    d2 = synth.sample_dataset(g2, 30, (42, 0, 1))
    assert np.array_equal(d1.y, d2.y) and np.array_equal(d1.x, d2.x)
    d3 = synth.sample_dataset(g1, 30, (42, 0, 2))
    assert not np.array_equal(d1.y, d3.y)


def test_sample_moments_converge_to_truth():
    sp = SyntheticSpec(n=50, p=3, q=3, edge_prob=0.4, seed=9)
    gt = synth.generate_truth(sp)
    n = 200000
    d = synth.sample_dataset(gt, n, 123)
    z = np.hstack([d.y, d.x])
    emp = z.T @ z / n
    assert np.max(np.abs(emp - gt.sigma)) < 0.05


def test_edge_prob_zero_is_infeasible():
    sp = SyntheticSpec(n=10, p=2, q=2, edge_prob=0.0)
    with pytest.raises(InfeasibleError):
        synth.generate_truth(sp)


def test_retry_exhaustion_on_degenerate_draws(monkeypatch):
    # force every adjacency draw to be empty so no draw can be conditioned
    monkeypatch.setattr(synth, "_draw_adjacency",
                        lambda rng, d, prob: np.zeros((d, d)))
    sp = SyntheticSpec(n=10, p=2, q=2, edge_prob=0.5, seed=1)
    with pytest.raises(RetryExhaustedError):
        synth.generate_truth(sp)


def test_save_load_roundtrip(tmp_path):
    sp = SyntheticSpec(n=20, p=3, q=4, edge_prob=0.3, seed=8)
    gt = synth.generate_truth(sp)
    synth.save_truth(str(tmp_path), gt)
    meta = json.loads((tmp_path / "truth.json").read_text())
    assert meta["spec"]["p"] == 3 and meta["spec"]["q"] == 4
    assert "cond_pre" in meta and "cond_post" in meta
    back = synth.load_truth(str(tmp_path))
    assert np.array_equal(back.omega, gt.omega)
    assert np.allclose(back.sigma, gt.sigma, atol=1e-12)
    assert back.spec == gt.spec


def test_stream_rng_accepts_tuple_seed():
    a = synth.stream_rng((5, 1), 2)
    b = synth.stream_rng((5, 1), 2)
    c = synth.stream_rng((5, 1), 3)
    x, y, z = (g.standard_normal(4) for g in (a, b, c))
    assert np.array_equal(x, y)
    assert not np.array_equal(x, z)
