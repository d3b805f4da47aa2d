import numpy as np
import pytest

from envsdr.errors import InvalidInput
from envsdr.kernels import KernelConfig, build_kernels
from envsdr.simgen import ModelSpec, generate
from envsdr.tuning import (
    BOOTSTRAP_VARIABILITY,
    LOO_CA,
    _pick,
    benchmark_psir_qda,
    qda_fit,
    qda_loo_accuracy,
    tune_by_bootstrap,
    tune_by_loo,
)
from oracles import qda_loo_refit


def test_qda_fit_balanced_priors():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((10, 2))
    m = qda_fit(np.vstack([f, f]), np.repeat([0, 1], 10))
    assert np.allclose(m.priors, [0.5, 0.5])
    assert m.priors.sum() == pytest.approx(1.0)


def test_qda_1d_boundary_near_zero():
    rng = np.random.default_rng(1)
    f = np.r_[rng.normal(-3, 1, 500), rng.normal(3, 1, 500)]
    m = qda_fit(f, np.repeat([0, 1], 500))
    grid = np.linspace(-2, 2, 401)
    pred = m.predict(grid[:, None])
    change = grid[np.flatnonzero(np.diff(pred))[0]]
    assert abs(change) < 0.3


def test_qda_fit_errors():
    with pytest.raises(InvalidInput):
        qda_fit(np.zeros((4, 1)), np.zeros(4))
    with pytest.raises(InvalidInput):
        qda_fit(np.arange(5.0), np.array([0, 0, 0, 0, 1]), ridge=False)


def test_loo_separated_and_random():
    rng = np.random.default_rng(2)
    f = np.r_[rng.normal(-20, 1, (30, 2)), rng.normal(20, 1, (30, 2))]
    assert qda_loo_accuracy(f, np.repeat([0, 1], 30)) == 1.0
    g = rng.standard_normal((1000, 2))
    assert abs(qda_loo_accuracy(g, rng.permutation(np.repeat([0, 1], 500))) - 0.5) < 0.1


def test_loo_matches_refit_oracle():
    rng = np.random.default_rng(3)
    for k in (1, 2, 3):
        f = rng.standard_normal((40, k)) + np.repeat([[0.0], [0.8]], 20, axis=0)
        lab = np.repeat([0, 1], 20)
        assert qda_loo_accuracy(f, lab, ridge=False) == pytest.approx(qda_loo_refit(f, lab))
    f3 = rng.standard_normal((45, 2))
    lab3 = np.repeat([0, 1, 2], 15)
    f3[lab3 == 2] *= 3
    assert qda_loo_accuracy(f3, lab3, ridge=False) == pytest.approx(qda_loo_refit(f3, lab3))


def test_loo_affine_invariance():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((60, 3))
    lab = (f[:, 0] ** 2 + 0.5 * rng.standard_normal(60) > 1).astype(int)
    a = rng.standard_normal((3, 3)) + 2 * np.eye(3)
    base = qda_loo_accuracy(f, lab, ridge=False)
    assert qda_loo_accuracy(f @ a + 5.0, lab, ridge=False) == pytest.approx(base, abs=1e-8)


def test_duplicate_feature_does_not_change_accuracy():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((80, 2))
    lab = (f[:, 0] + 0.7 * rng.standard_normal(80) > 0).astype(int)
    dup = np.column_stack([f[:, 0], f])
    assert qda_loo_accuracy(dup, lab) == qda_loo_accuracy(f, lab)


def test_loo_preconditions():
    with pytest.raises(InvalidInput):
        qda_loo_accuracy(np.arange(3.0), np.array([0, 1, 1]))
    with pytest.raises(InvalidInput):
        qda_loo_accuracy(np.arange(6.0), np.array([0, 0, 1, 1, 1, 1]))


def test_pick_tie_rule():
    c = [(3, 0.5, 0.8), (2, 0.7, 0.8), (2, 0.3, 0.8), (4, 0.1, 0.7)]
    assert _pick(c, maximize=True) == (2, 0.3)
    assert _pick(c, maximize=False) == (4, 0.1)


def _class_data(seed=6, n=200):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    w = x[:, 2] + 0.5 * rng.standard_normal(n)
    y = (x[:, 0] + w + 0.5 * rng.standard_normal(n) > 0).astype(float)
    return y, x, w


def test_tune_by_loo_single_candidate_and_records():
    y, x, w = _class_data()
    cfg = KernelConfig(h_y=None, h_w=3, h_inner=None)
    one = tune_by_loo(y, x, w, cfg, [2], [0.5], n_components=1)
    assert one.chosen == (2, 0.5) and one.score_kind == LOO_CA
    rep = tune_by_loo(y, x, w, cfg, [1, 2, 3], [0.2, 0.5], n_components=1)
    assert len(rep.candidates) == 6
    best = max(s for _, _, s in rep.candidates)
    assert rep.score_of(rep.chosen) == best
    with pytest.raises(InvalidInput):
        tune_by_loo(y, x, w, cfg, [1], [0.5], n_components=2)


def test_bootstrap_noiseless_low_rank():
    rng = np.random.default_rng(7)
    n = 200
    x = rng.standard_normal((n, 4))
    w = x[:, 1].copy()
    y = x[:, 0] + x[:, 1]
    rep = tune_by_bootstrap(y, x, w, KernelConfig(h_y=5, h_w=2), [1, 2], [0.5], d=1, m=20, seed=1)
    assert rep.score_of((2, 0.5)) < 0.01
    assert rep.score_kind == BOOTSTRAP_VARIABILITY


def test_bootstrap_reproducible_bounded_and_errors():
    y, x, w, _ = generate(ModelSpec("M1", 6, 1.0, 0.3, 0.5, 120), 3)
    cfg = KernelConfig()
    a = tune_by_bootstrap(y, x, w, cfg, [1, 2, 3], [0.2, 0.6], d=1, m=10, seed=42)
    b = tune_by_bootstrap(y, x, w, cfg, [1, 2, 3], [0.2, 0.6], d=1, m=10, seed=42)
    assert a.candidates == b.candidates and a.chosen == b.chosen
    assert all(0.0 <= s <= 1.0 for _, _, s in a.candidates)
    strat = tune_by_bootstrap(y, x, w, cfg, [2], [0.5], d=1, m=5, seed=1, stratify=True)
    assert 0 <= strat.score_of((2, 0.5)) <= 1
    with pytest.raises(InvalidInput):
        tune_by_bootstrap(y, x, w, cfg, [2], [0.5], d=1, m=1)


def test_bootstrap_extra_estimators():
    y, x, w, _ = generate(ModelSpec("M1", 6, 1.0, 0.3, 0.5, 120), 4)
    full = np.eye(6)[:, :1]
    rep = tune_by_bootstrap(y, x, w, KernelConfig(), [2], [0.5], d=1, m=5, seed=0,
                            extra={"fixed": lambda ks: full})
    assert rep.extra_scores["fixed"] == pytest.approx(0.0)


def test_benchmark_random_labels_near_half():
    rng = np.random.default_rng(8)
    n = 600
    x = rng.standard_normal((n, 4))
    w = rng.standard_normal(n)
    y = rng.permutation(np.repeat([0.0, 1.0], n // 2))
    acc = benchmark_psir_qda(y, x, w, KernelConfig(h_y=None, h_w=3, h_inner=None))
    assert abs(acc - 0.5) < 0.1
    with pytest.raises(InvalidInput):
        benchmark_psir_qda(y, x, None, KernelConfig())


def test_benchmark_uses_w():
    y, x, w = _class_data(9, 400)
    cfg = KernelConfig(h_y=None, h_w=3, h_inner=None)
    ks = build_kernels(y, x, w, cfg)
    assert benchmark_psir_qda(y, x, w, cfg, kernels=ks) > 0.7
