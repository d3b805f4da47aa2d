import numpy as np
import pytest

from envsdr.errors import InvalidInput
from envsdr.estimator import (
    DIRECT,
    TWO_STAGE_HYBRID,
    back_transform,
    direct_estimate,
    envelope_basis,
    projected_eigenvalues,
    projected_kernel,
    two_stage_estimate,
)
from envsdr.kernels import HYBRID, SIR, KernelConfig, KernelMatrix, build_kernels, hybrid_kernel
from envsdr.linalg import SubspaceBasis, inv_sqrt, projection, sym_eigen, trace_correlation
from envsdr.simgen import ModelSpec, generate
from oracles import check_basis


def km(m):
    return KernelMatrix(np.asarray(m, dtype=float), SIR)


def random_psd(rng, p, rank=None):
    a = rng.standard_normal((p, rank or p))
    return a @ a.T


E3 = np.eye(3)


def test_direct_examples():
    r = direct_estimate(km(np.diag([3.0, 2.0, 1.0])), 2)
    assert r.method == DIRECT and np.allclose(projection(r.basis_z), np.diag([1, 1, 0]))
    assert np.allclose(r.eigenvalues_used, [3, 2])
    full = direct_estimate(km(np.diag([3.0, 2.0, 1.0])), 3)
    assert trace_correlation(full.basis_z, SubspaceBasis(E3)) == pytest.approx(1.0)
    v = np.array([1.0, -2.0, 2.0])
    r1 = direct_estimate(km(np.outer(v, v)), 1)
    assert np.allclose(np.abs(r1.basis_z.columns[:, 0]), np.abs(v) / 3)
    with pytest.raises(InvalidInput):
        direct_estimate(km(E3), 4)


def test_envelope_basis_examples():
    assert envelope_basis(km(np.diag([3.0, 1.0, 2.0])), 3).rank == 3
    b = envelope_basis(km(np.diag([5.0, 4.0, 0.0, 0.0])), 2)
    assert np.allclose(projection(b), np.diag([1, 1, 0, 0]))
    u, v = np.array([1.0, 2, 0, 1]), np.array([0.0, 1, 1, -1])
    h = hybrid_kernel(km(np.outer(u, u)), km(np.outer(v, v)), 0.4)
    target = SubspaceBasis.from_span(np.column_stack([u, v]))
    assert np.allclose(projection(envelope_basis(h, 2)), projection(target), atol=1e-8)
    with pytest.raises(InvalidInput):
        envelope_basis(km(E3), 4)


def test_two_stage_examples():
    k = km(np.diag([3.0, 2.0, 1.0]))
    full = two_stage_estimate(k, SubspaceBasis(E3), 2)
    direct = direct_estimate(k, 2)
    assert np.array_equal(full.basis_z.columns, direct.basis_z.columns)
    r = two_stage_estimate(k, SubspaceBasis(E3[:, 1:]), 1)
    assert np.allclose(r.basis_z.columns[:, 0], [0, 1, 0])
    rng = np.random.default_rng(0)
    line = SubspaceBasis.from_span(rng.standard_normal(3))
    r1 = two_stage_estimate(km(random_psd(rng, 3)), line, 1)
    assert trace_correlation(r1.basis_z, line) == pytest.approx(1.0)
    assert r.method == TWO_STAGE_HYBRID
    with pytest.raises(InvalidInput):
        two_stage_estimate(k, SubspaceBasis(E3[:, :1]), 2)


def test_two_stage_matches_explicit_projected_kernel():
    """Envelope-coordinate solve spans the same space as the p x p form P K P."""
    rng = np.random.default_rng(1)
    for _ in range(30):
        p = int(rng.integers(3, 9))
        nu = int(rng.integers(1, p))
        d = int(rng.integers(1, nu + 1))
        k = km(random_psd(rng, p))
        b_env = SubspaceBasis.from_span(rng.standard_normal((p, nu)))
        pkp = projected_kernel(k, b_env)
        es = sym_eigen(pkp)
        explicit = SubspaceBasis(es.vectors[:, :d])
        got = two_stage_estimate(k, b_env, d)
        assert trace_correlation(got.basis_z, explicit) == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(got.eigenvalues_used, es.values[:d], atol=1e-10)
        assert np.allclose(projected_eigenvalues(k, b_env), es.values, atol=1e-10)


def test_back_transform_examples():
    b = SubspaceBasis(E3[:, :2])
    assert np.allclose(back_transform(b, np.eye(3)).columns, b.columns)
    e1 = SubspaceBasis(np.array([[1.0], [0.0]]))
    out = back_transform(e1, inv_sqrt(np.diag([4.0, 1.0])))
    assert np.allclose(out.columns[:, 0], [1, 0])
    rng = np.random.default_rng(2)
    s = inv_sqrt(random_psd(rng, 5) + np.eye(5))
    check_basis(back_transform(SubspaceBasis.from_span(rng.standard_normal((5, 2))), s))


def test_affine_invariance():
    rng = np.random.default_rng(3)
    y, x, w, _ = generate(ModelSpec("M1", 6, 1.0, 0.3, 0.5, 300), 11)
    a = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    shift = rng.standard_normal(6)
    cfg = KernelConfig()
    k1 = build_kernels(y, x, w, cfg)
    k2 = build_kernels(y, x @ a.T + shift, w, cfg)
    for ks, name in ((k1, "a"), (k2, "b")):
        assert ks.k_yz.kind == SIR and ks.hybrid(0.3).kind == HYBRID
    # the same Z-scale span maps back to spans related by A^{-T}
    d1 = direct_estimate(k1.k_yz, 1, k1.data.sigma_inv_sqrt)
    d2 = direct_estimate(k2.k_yz, 1, k2.data.sigma_inv_sqrt)
    mapped = SubspaceBasis.from_span(np.linalg.solve(a.T, d1.basis_x.columns))
    assert trace_correlation(mapped, d2.basis_x) == pytest.approx(1.0, abs=1e-8)
    b1 = two_stage_estimate(k1.k_yz, envelope_basis(k1.hybrid(0.3), 2), 1, k1.data.sigma_inv_sqrt)
    b2 = two_stage_estimate(k2.k_yz, envelope_basis(k2.hybrid(0.3), 2), 1, k2.data.sigma_inv_sqrt)
    mapped = SubspaceBasis.from_span(np.linalg.solve(a.T, b1.basis_x.columns))
    assert trace_correlation(mapped, b2.basis_x) == pytest.approx(1.0, abs=1e-8)


def test_large_n_no_auxiliary_effect_recovers_gamma():
    spec = ModelSpec("M1", 9, 0.0, 0.3, 0.5, 2000)
    y, x, w, truth = generate(spec, 5)
    ks = build_kernels(y, x, w, KernelConfig(h_w=3))
    gamma = truth.s_yx
    assert trace_correlation(direct_estimate(ks.k_yz, 1).basis_z, gamma) >= 0.95
    two = two_stage_estimate(ks.k_yz, envelope_basis(ks.hybrid(0.5), 2), 1)
    assert trace_correlation(two.basis_z, gamma) >= 0.95
