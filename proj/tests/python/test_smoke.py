import numpy as np
import pytest

import weakfactor as wf


def low_rank_panel(n=60, t=50, r=2, scale=6.0, seed=0):
    rng = np.random.default_rng(seed)
    b = scale * rng.standard_normal((n, r))
    f = rng.standard_normal((t, r))
    return b @ f.T + rng.standard_normal((n, t))


def test_fit_identification():
    x = low_rank_panel()
    fit = wf.fit_pca(x, 2)
    assert fit.f_hat.shape == (50, 2)
    assert fit.b_hat.shape == (60, 2)
    np.testing.assert_allclose(fit.f_hat.T @ fit.f_hat / 50, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(fit.b_hat @ fit.f_hat.T + fit.residual, x, atol=1e-9)


def test_noise_cov_and_tests():
    x = low_rank_panel()
    fit = wf.fit_pca(x, 2)
    sigma = wf.noise_cov(fit, wf.ThresholdRule("soft"))
    assert sigma.shape == (60, 60)
    np.testing.assert_array_equal(np.diag(sigma), np.diag(wf.pilot_cov(fit.residual)))

    subset = list(range(20, 32))
    rep = wf.factor_spec_test(fit, sigma, subset, fit.f_hat[20:32, 0])
    assert rep.df == 10
    assert rep.statistic < 1e-12
    assert not rep.reject

    two = wf.two_sample_test(fit, sigma, 3, 7)
    assert two.df == 2 and 0.0 <= two.p_value <= 1.0
    ci = wf.systemic_risk_ci(fit, sigma, 0)
    assert ci.lo <= ci.hi

    brk = wf.structural_break_test(x[:, :25], x[:, 25:], 2, 0)
    assert brk.df == 2 and brk.meta["test"]


def test_errors_map_to_python_exceptions():
    x = low_rank_panel()
    with pytest.raises(ValueError):
        wf.fit_pca(x, 0)
    fit = wf.fit_pca(x, 2)
    with pytest.raises(ValueError):
        wf.two_sample_test(fit, np.eye(60), 0, 0)
    assert issubclass(wf.DegenerateError, ArithmeticError)


def test_simulation_is_deterministic():
    scn = wf.SimScenario()
    scn.n_units, scn.n_periods, scn.n_blocks, scn.block_size = 60, 40, 4, 15
    scn.trials = 4
    a = wf.run_coverage(scn, 0.05, 1)
    b = wf.run_coverage(scn, 0.05, 3)
    assert a == b
    rows = wf.run_twosample(scn, 0.05, [(0, 1), (0, 2)])
    assert len(rows) == 2
