import math

import numpy as np
import pytest

from rvdlm import (DataError, HyperParams, ModelClass, PriorMoments,
                   build_regressor, dof_sequences, evolve, price_update,
                   run_filter, rv_update, sv_volatility_update_path)


def make_series(T, seed=42):
    rng = np.random.default_rng(seed)
    y = np.cumsum(rng.normal(0.0, 0.012, T)) + math.log(120.0)
    z = rng.gamma(1.4, 1.4e-4 / 1.4, T) + 1e-12
    x = np.sqrt(z)
    y_prev = np.concatenate([[y[0] - 0.004], y[:-1]])
    x_prev = np.concatenate([[x[0]], x[:-1]])
    return y, z, x, y_prev, x_prev


def default_init(variant, hp, s1=1.4e-4):
    d = variant.dim
    a = np.array([0.0, 1.0, 0.0, 0.0][:d])
    R = np.diag(np.array([0.10, 0.01, 0.05, 0.05][:d]) / hp.delta)
    return PriorMoments(a, R, hp.beta, s1)


def hp_for(variant):
    if variant.uses_rv:
        return HyperParams(0.999, 0.875, 2.75)
    return HyperParams(0.999, 0.925, 0.0)


@pytest.mark.parametrize("variant", list(ModelClass))
def test_fused_kernel_equals_step_composition(variant):
    hp = hp_for(variant)
    init = default_init(variant, hp)
    y, z, x, y_prev, x_prev = make_series(300)
    traj = run_filter(variant, hp, init, y, z, x, y_prev, x_prev)

    prior, post = init, None
    for t in range(y.size):
        if t > 0:
            prior = evolve(post, hp)
        F = build_regressor(variant, y_prev[t], x[t], x_prev[t])
        if variant.uses_rv:
            rvp = rv_update(prior, float(z[t]), hp.alpha)
            post, stats = price_update(rvp, float(y[t]), F)
        else:
            post, stats = sv_volatility_update_path(prior, float(y[t]), F)
        np.testing.assert_allclose(traj.m[t], post.m, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(traj.C[t], post.C, rtol=1e-8, atol=1e-13)
        assert traj.n[t] == pytest.approx(post.n, abs=1e-10)
        assert traj.s[t] == pytest.approx(post.s, rel=1e-9)
        assert traj.log_density[t] == pytest.approx(stats.log_density, abs=1e-8)
        assert traj.forecast[t] == pytest.approx(stats.forecast, abs=1e-10)
        assert traj.scale[t] == pytest.approx(stats.scale, rel=1e-9)


def test_trajectory_accessors_reconstruct_priors():
    variant = ModelClass.RVLDLM
    hp = hp_for(variant)
    init = default_init(variant, hp)
    y, z, x, y_prev, x_prev = make_series(50)
    traj = run_filter(variant, hp, init, y, z, x, y_prev, x_prev)
    assert traj.prior_at(0) is init
    pr = traj.prior_at(10)
    np.testing.assert_allclose(pr.a, traj.m[9])
    np.testing.assert_allclose(pr.R, traj.C[9] / hp.delta)
    assert pr.s_prev == traj.s[9]
    rvp = traj.rv_prior_at(10)
    ref = rv_update(pr, float(z[10]), hp.alpha)
    assert rvp.n_tilde == pytest.approx(ref.n_tilde)
    assert rvp.s_tilde == pytest.approx(ref.s_tilde, rel=1e-14)
    stats = traj.stats_at(10)
    assert stats.log_density == traj.log_density[10]


def test_dof_sequences_recursion_and_limit():
    hp = HyperParams(0.999, 0.875, 2.75)
    n_star, n_tilde, n = dof_sequences(hp, hp.beta, 5000, uses_rv=True)
    assert n_star[0] == hp.beta
    assert n_tilde[0] == hp.beta + 2.75
    np.testing.assert_allclose(n_star[1:], hp.beta * n[:-1], rtol=1e-15)
    assert n[-1] == pytest.approx(30.0, abs=1e-6)


def test_determinism_bit_exact():
    variant = ModelClass.RVDLM
    hp = hp_for(variant)
    init = default_init(variant, hp)
    y, z, x, y_prev, x_prev = make_series(200, seed=9)
    a = run_filter(variant, hp, init, y, z, x, y_prev, x_prev)
    b = run_filter(variant, hp, init, y, z, x, y_prev, x_prev)
    assert np.array_equal(a.m, b.m) and np.array_equal(a.C, b.C)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.log_density, b.log_density)


def test_rejects_nonpositive_rv():
    variant = ModelClass.RVDLM
    hp = hp_for(variant)
    init = default_init(variant, hp)
    y, z, x, y_prev, x_prev = make_series(20)
    z = z.copy()
    z[7] = 0.0
    with pytest.raises(DataError):
        run_filter(variant, hp, init, y, z, x, y_prev, x_prev)


def test_positive_scale_and_dof_growth_along_path():
    variant = ModelClass.RVLDLM
    hp = hp_for(variant)
    init = default_init(variant, hp)
    y, z, x, y_prev, x_prev = make_series(1500, seed=3)
    traj = run_filter(variant, hp, init, y, z, x, y_prev, x_prev)
    assert np.all(traj.s > 0.0)
    assert np.all(traj.n > traj.n_star)
    # C stays symmetric PSD
    for t in (0, 700, 1499):
        evals = np.linalg.eigvalsh(traj.C[t])
        assert evals.min() >= -1e-12 * max(1.0, evals.max())
