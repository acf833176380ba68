import numpy as np
import pytest

from conftest import crandn, rel
from tuckerpr.linop import CglsConfig
from tuckerpr.lowrank import (AltMinConfig, DegenerateInit, LowRankFactors, altmin_lowrap,
                              altmin_trunc, init_U, objective, reduced_matrices, u_operator,
                              update_B, update_phases, update_U)
from tuckerpr.measurement import Kind, MeasurementEnsemble, gen_cdp, gen_gaussian, observe
from tuckerpr.pr import SpectralInitConfig, rwf, spectral_frames
from tuckerpr.metrics import frame_dist
from tuckerpr.tensor import kron


def lowrank_problem(n, q, r, m, seed, cdp_L=None):
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(crandn(rng, n, r))[0]
    B = crandn(rng, q, r) / np.sqrt(r)
    ens = gen_cdp(n, cdp_L, q, seed) if cdp_L else gen_gaussian(n, m, q, True, seed)
    fac = LowRankFactors(U, B)
    return ens.with_observations(observe(ens, fac.frames())), fac


def subspace_dist(U, V):
    qu, qv = np.linalg.qr(U)[0], np.linalg.qr(V)[0]
    return np.linalg.norm(qv - qu @ (qu.conj().T @ qv), 2)


def test_factor_layout(rng):
    fac = LowRankFactors(crandn(rng, 6, 2), crandn(rng, 4, 2))
    np.testing.assert_allclose(fac.matrix().T, fac.frames())
    np.testing.assert_allclose(fac.frames()[3], fac.U @ fac.B[3])


@pytest.mark.parametrize("cdp", [None, 2])
def test_u_operator_matches_kronecker(cdp, rng):
    ens, fac = lowrank_problem(6, 3, 2, 10, 0, cdp)
    op = u_operator(ens, fac.B)
    v = crandn(rng, 12)
    explicit = np.concatenate([kron(fac.B[k][None], ens.dense(k).conj().T) @ v
                               for k in range(3)])
    assert rel(op.forward(v), explicit) < 1e-12
    z = crandn(rng, op.out_dim)
    lhs = np.vdot(op.forward(v), z)
    assert abs(lhs - np.vdot(v, op.adjoint(z))) / abs(lhs) < 1e-10


def test_reduced_matrices_two_ways(rng):
    for ens, _ in (lowrank_problem(8, 3, 2, 20, 1), lowrank_problem(8, 3, 2, 0, 1, 2)):
        U = crandn(rng, 8, 2)
        red = reduced_matrices(ens, U)
        for k in range(3):
            assert rel(red[k], ens.dense(k).conj().T @ U) < 1e-12
            assert rel(red[k].T, np.stack([ens.frame_forward(k, u) for u in U.T])) < 1e-12


def test_update_B_fixed_point():
    ens, fac = lowrank_problem(10, 4, 2, 30, 2)
    np.testing.assert_allclose(update_B(ens, fac.U, fac.B), fac.B, atol=1e-12)


def test_update_B_identity_subspace_is_per_frame_rwf():
    ens, fac = lowrank_problem(5, 3, 2, 25, 3)
    B0 = np.random.default_rng(0).standard_normal((3, 5)).astype(complex)
    got = update_B(ens, np.eye(5), B0)
    for k in range(3):
        np.testing.assert_allclose(got[k], rwf(ens.y[k], ens.frame_op(k), B0[k]), atol=1e-12)


def test_update_phases_examples(rng):
    ens = MeasurementEnsemble(Kind.REAL_GAUSSIAN, 3, 3, 1, 0,
                              matrices=np.eye(3, dtype=complex)[None])
    np.testing.assert_array_equal(update_phases(ens, np.array([[1.0, 2, 3]])), 1)
    np.testing.assert_array_equal(update_phases(ens, np.array([[0.0, 2, 0]])), 1)
    ens2, fac = lowrank_problem(6, 2, 1, 9, 0)
    c = update_phases(ens2, fac.frames())
    np.testing.assert_allclose(update_phases(ens2, np.exp(0.4j) * fac.frames()),
                               np.exp(0.4j) * c, atol=1e-12)


def test_update_U_exact_interpolation():
    y = np.array([[1.0, 2.0, 0.5]])
    ens = MeasurementEnsemble(Kind.REAL_GAUSSIAN, 3, 3, 1, 0,
                              matrices=np.eye(3, dtype=complex)[None], observations=y)
    C = np.exp(1j * np.array([[0.3, -1.0, 2.0]]))
    U = update_U(ens, C, np.ones((1, 1)), np.zeros((3, 1)))
    np.testing.assert_allclose(U[:, 0], (C * y)[0], atol=1e-12)


def test_update_U_recovers_subspace():
    n, q, r, m = 12, 5, 2, 16
    assert m * q >= 3 * n * r
    ens, fac = lowrank_problem(n, q, r, m, 4)
    C = update_phases(ens, fac.frames())
    rng = np.random.default_rng(0)
    U = update_U(ens, C, fac.B, crandn(rng, n, r),
                 CglsConfig(max_iters=500, rel_tolerance=1e-14))
    assert subspace_dist(U, fac.U) <= 1e-6


def test_update_U_does_not_increase_objective():
    ens, fac = lowrank_problem(10, 4, 2, 15, 5)
    rng = np.random.default_rng(1)
    U0 = fac.U + 0.3 * crandn(rng, 10, 2)
    C = update_phases(ens, fac.B @ U0.T)
    U1 = update_U(ens, C, fac.B, U0)
    assert objective(ens, C, fac.B @ U1.T) <= objective(ens, C, fac.B @ U0.T)


def test_init_U_rank_one_alignment():
    n, q = 32, 20
    rng = np.random.default_rng(7)
    x = crandn(rng, n)
    x /= np.linalg.norm(x)
    frames = np.tile(x, (q, 1))
    ens = gen_gaussian(n, 4 * n, q, True, seed=7)
    ens = ens.with_observations(observe(ens, frames))
    U = init_U(ens, 1)
    assert subspace_dist(U, x[:, None]) <= 0.3
    np.testing.assert_allclose(U.conj().T @ U, np.eye(1), atol=1e-12)


def test_init_U_degenerate_and_saturated():
    ens, fac = lowrank_problem(8, 4, 1, 20, 0)
    with pytest.raises(DegenerateInit):
        init_U(ens.with_observations(np.zeros((4, 20))), 1)
    a = init_U(ens, 1, SpectralInitConfig(alpha=1e9))
    b = init_U(ens, 1, SpectralInitConfig(alpha=1e12))
    np.testing.assert_allclose(a, b)


def test_trunc_zero_iterations_is_truncated_svd():
    ens, fac = lowrank_problem(8, 5, 2, 40, 1)
    X, out, trace = altmin_trunc(ens, AltMinConfig(rank=2, T=0))
    X0 = spectral_frames(ens)[0].T
    U = np.linalg.svd(X0)[0][:, :2]
    np.testing.assert_allclose(X, U @ U.conj().T @ X0, atol=1e-12)
    assert len(trace) == 1
    full, _, _ = altmin_trunc(ens, AltMinConfig(rank=5, T=0))
    np.testing.assert_allclose(full, X0, atol=1e-12)


def test_lowrap_zero_iterations_and_determinism():
    ens, _ = lowrank_problem(8, 5, 2, 40, 2)
    cfg = AltMinConfig(rank=2, T=0)
    X, fac, trace = altmin_lowrap(ens, cfg)
    np.testing.assert_allclose(X, fac.matrix())
    assert len(trace) == 1
    X2, _, _ = altmin_lowrap(ens, cfg)
    np.testing.assert_array_equal(X, X2)
    Xa, _, ta = altmin_trunc(ens, AltMinConfig(rank=2, T=2))
    Xb, _, tb = altmin_trunc(ens, AltMinConfig(rank=2, T=2))
    np.testing.assert_array_equal(Xa, Xb)
    assert ta == tb



@pytest.mark.slow
def test_lowrap_recovers_rank_two():
    hits = 0
    for seed in range(3):
        ens, fac = lowrank_problem(64, 20, 2, 6 * 64, seed)
        X, _, trace = altmin_lowrap(ens, AltMinConfig(rank=2, T=20))
        hits += _frame_rel(X, fac.matrix()) <= 1e-3
        assert np.all(np.isfinite(trace))
    assert hits >= 2


def _frame_rel(X, truth):
    d = [frame_dist(X[:, k], truth[:, k]) for k in range(truth.shape[1])]
    return np.sqrt(np.sum(np.square(d))) / np.linalg.norm(truth)


@pytest.mark.slow
def test_trunc_records_trace_either_way():
    ens, fac = lowrank_problem(64, 20, 2, 6 * 64, 0)
    X, _, trace = altmin_trunc(ens, AltMinConfig(rank=2, T=20))
    assert len(trace) == 21 and np.all(np.isfinite(trace))
    assert np.isfinite(_frame_rel(X, fac.matrix()))


def test_config_validation():
    with pytest.raises(ValueError):
        AltMinConfig(rank=0)
    with pytest.raises(ValueError):
        AltMinConfig(rank=1, T=-1)
