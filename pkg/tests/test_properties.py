"""Property suites over seeded random admissible instances."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from parafeq.analysis import cluster_eigenvalues, frequency_split, partition_channels
from parafeq.models import ks_torus, random_instance
from parafeq.simulation import SimConfig, linear_propagator, random_real_field, simulate_linear, simulate_nonlinear
from parafeq.spectral import ControlOperator
from parafeq.synthesis import closed_loop, solve_channel_feq, synthesize

LAM = 10.0
seeds = st.integers(0, 2**32 - 1)
prop = settings(max_examples=60, derandomize=True, deadline=None)


def instance(seed):
    return random_instance(np.random.default_rng(seed), lam=LAM)


@prop
@given(seeds)
def test_tb_equals_b(seed):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    Bm = B.matrix
    assert np.max(np.abs(r.T @ Bm - Bm)) <= 1e-10 * max(1.0, np.max(np.abs(Bm)) * np.linalg.norm(r.T, 2))


@prop
@given(seeds, st.integers(0, 2**32 - 1))
def test_feedback_ignores_tail_coefficients(seed, seed2):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    N = r.split.N_lambda
    coef = B.coefficients.copy()
    rng = np.random.default_rng(seed2)
    tail = coef[:, N:]
    tail[tail != 0] *= rng.uniform(0.1, 10.0, np.count_nonzero(tail))
    r2 = synthesize(op, ControlOperator(coef, B.growth_exponent), LAM, mu=r.mu, attempts=1)
    assert np.array_equal(r.K_full, r2.K_full)
    assert not np.any(r.K_full[:, N:])


@prop
@given(seeds, st.integers(0, 2**32 - 1))
def test_channel_scaling_invariance(seed, seed2):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    rng = np.random.default_rng(seed2)
    alpha = rng.uniform(0.2, 5.0, B.inputs) * np.exp(1j * rng.uniform(0, 2 * np.pi, B.inputs))
    B2 = ControlOperator(alpha[:, None] * B.coefficients, B.growth_exponent)
    r2 = synthesize(op, B2, LAM, mu=r.mu, attempts=1)
    for f, g in zip(r.channels, r2.channels):
        assert np.allclose(f.T_tilde, g.T_tilde, rtol=1e-9, atol=1e-9 * np.abs(f.T_tilde).max())
    assert np.allclose(r2.K_full, r.K_full / alpha[:, None], rtol=1e-9, atol=0)
    X, X2 = closed_loop(op, B, r.K_full), closed_loop(op, B2, r2.K_full)
    assert np.max(np.abs(X - X2)) <= 1e-10 * np.abs(X).max()


@prop
@given(seeds)
def test_gain_equals_minus_mu_diagonal_over_b(seed):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    for f in r.channels:
        expect = -r.mu * np.diag(f.T_tilde) / f.b
        assert np.allclose(f.K_tilde, expect, rtol=1e-9, atol=0)


@prop
@given(seeds)
def test_gain_is_polynomial_in_mu(seed):
    op, B = instance(seed)
    split = frequency_split(op, LAM)
    part = partition_channels(split, cluster_eigenvalues(op), B)
    for j in range(part.n_channels):
        low = part.low(j)
        n = low.size
        mus = np.arange(1.0, n + 3)
        K = np.array([solve_channel_feq(op.eigenvalues[low], B.coefficients[j, low], mu, j).K_tilde
                      for mu in mus])
        # columns mu, mu^2, ..., mu^n: degree <= n with no constant term
        V = mus[:, None] ** np.arange(1, n + 1)[None, :]
        coef, *_ = np.linalg.lstsq(V.astype(complex), K, rcond=None)
        assert np.max(np.abs(V @ coef - K)) <= 1e-8 * np.abs(K).max()


@prop
@given(seeds)
def test_hermitian_symmetry_preserved(seed):
    op, B = ks_torus(17)
    rng = np.random.default_rng(seed)
    mu = 20.0 + 30.0 * rng.random()
    r = synthesize(op, B, 20.0, mu)
    u0 = random_real_field(op, rng, 10.0 ** rng.uniform(-3, 0))
    tr = simulate_nonlinear(op, B, r.K_full, SimConfig(dt=1e-3, t_final=0.02, nonlinearity="torus_burgers",
                                                        initial=u0, keep_snapshots=True))
    full = np.zeros((tr.coefficients.shape[0], 17), complex)
    full[:, op.modes + 8] = tr.coefficients
    assert np.max(np.abs(full - np.conj(full[:, ::-1]))) <= 1e-9


@prop
@given(seeds)
def test_semigroup_composition(seed):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    dt = 10.0 ** np.random.default_rng(seed).uniform(-4, -2)
    S1 = linear_propagator(op, B, r.K_full, dt)
    S2 = linear_propagator(op, B, r.K_full, 2 * dt)
    assert np.max(np.abs(S1 @ S1 - S2)) <= 1e-10 * max(1.0, np.abs(S2).max())


@prop
@given(seeds)
def test_tail_multiplier_envelope(seed):
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    for f, t in zip(r.channels, r.tails):
        if t.indices.size == 0:
            continue
        lam_k = op.eigenvalues[t.indices]
        dist = np.min(np.abs(lam_k[:, None] - f.eigenvalues[None, :]), axis=1)
        # equality for a one-mode channel, so allow rounding
        bound = t.coupling / dist
        assert np.all(np.abs(t.c - 1) <= bound * (1 + 1e-9))
        assert np.all(np.abs(t.c) >= 1e-6)
        assert bound[-1] <= bound[0]


@prop
@given(seeds)
def test_transformed_norm_decays(seed):
    # D is normal with Re <= -lambda, so ||T u|| contracts at rate lambda
    op, B = instance(seed)
    r = synthesize(op, B, LAM)
    rng = np.random.default_rng(seed)
    u0 = rng.normal(size=op.truncation) + 1j * rng.normal(size=op.truncation)
    tr = simulate_linear(op, B, r.K_full, SimConfig(dt=0.01, t_final=0.2, initial=u0, keep_snapshots=True))
    w = np.linalg.norm(tr.coefficients @ r.T.T, axis=1)
    assert np.all(w[1:] <= np.exp(-LAM * 0.01) * w[:-1] * (1 + 1e-8))


@prop
@given(seeds)
def test_scatter_gather_roundtrip(seed):
    op, B = instance(seed)
    split = frequency_split(op, LAM)
    part = partition_channels(split, cluster_eigenvalues(op), B)
    x = np.random.default_rng(seed).normal(size=op.truncation) + 0j
    assert np.array_equal(part.scatter([part.gather(x, j) for j in range(part.n_channels)]), x)
