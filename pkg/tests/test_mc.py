"""Monte Carlo harness tests: KS machinery, suite calibration, determinism."""

import json

import numpy as np
import pytest
from scipy.special import kolmogi

from carma_spectral import LimitLaw, car1
from carma_spectral.drivers import Brownian, Zero
from carma_spectral.mc import (
    MCConfig,
    build_report,
    chisq1_cdf,
    chisq1_quantile,
    convergence_study,
    covariance_check,
    cross_frequency_independence,
    distribution_suite,
    exp_cdf,
    exp_quantile,
    ks_critical,
    ks_statistic,
    law_cdf,
    law_pdf,
    law_quantile,
    normal_cdf,
    normal_quantile,
    qq_data,
    run_mc,
)


def test_normal_cdf_points():
    assert normal_cdf(0.0, 1.0) == pytest.approx(0.5)
    assert normal_cdf(1.959963984540054, 1.0) == pytest.approx(0.975, abs=1e-12)
    assert normal_cdf(2.0, 4.0) == pytest.approx(normal_cdf(1.0, 1.0), rel=1e-14)


def test_exp_cdf_points():
    assert exp_cdf(0.0, 0.2) == 0.0
    assert exp_cdf(-1.0, 0.2) == 0.0
    assert exp_cdf(0.2, 0.2) == pytest.approx(1 - np.exp(-1.0), rel=1e-14)


def test_chisq1_cdf_points():
    assert chisq1_cdf(0.0) == 0.0
    # P(Z^2 <= 1) = 2 Phi(1) - 1
    assert chisq1_cdf(1.0) == pytest.approx(0.6826894921370859, rel=1e-12)


def test_quantiles_invert_cdfs():
    for p in (0.01, 0.3, 0.5, 0.9, 0.999):
        assert normal_cdf(normal_quantile(p, 2.5), 2.5) == pytest.approx(p, rel=1e-10)
        assert exp_cdf(exp_quantile(p, 0.7), 0.7) == pytest.approx(p, rel=1e-10)
        assert chisq1_cdf(chisq1_quantile(p)) == pytest.approx(p, rel=1e-10)


def test_exp_median():
    assert exp_quantile(0.5, 0.2) == pytest.approx(0.2 * np.log(2.0), rel=1e-12)


def test_law_dispatch():
    norm = LimitLaw(omega=0.0, kind="real_normal", param=0.25)
    expo = LimitLaw(omega=1.0, kind="exponential_modulus", param=0.2)
    # chi law param records the standardizing variance; the cdf itself acts on
    # values that were already divided by it
    chi = LimitLaw(omega=0.0, kind="chi_squared_1", param=0.25)
    assert law_cdf(norm, 0.0) == pytest.approx(0.5)
    assert law_quantile(expo, 0.5) == pytest.approx(0.2 * np.log(2.0))
    assert law_cdf(chi, 1.0) == pytest.approx(chisq1_cdf(1.0))


def test_law_pdf_integrates_to_one():
    from scipy.integrate import quad
    norm = LimitLaw(omega=1.0, kind="complex_isotropic_normal", param=0.1)
    val, _ = quad(lambda x: law_pdf(norm, x), -10, 10, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)
    expo = LimitLaw(omega=1.0, kind="exponential_modulus", param=0.2)
    val, _ = quad(lambda x: law_pdf(expo, x), 0, 20, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_ks_statistic_single_point():
    d = ks_statistic(np.array([0.5]), lambda x: np.clip(x, 0.0, 1.0))
    assert d == pytest.approx(0.5)


def test_ks_statistic_at_exact_quantiles():
    # samples on the (k-0.5)/n quantile grid leave gaps of exactly 0.5/n
    n = 100
    samples = normal_quantile((np.arange(n) + 0.5) / n, 1.0)
    d = ks_statistic(samples, lambda x: normal_cdf(x, 1.0))
    assert d == pytest.approx(0.5 / n, rel=1e-9)


def test_ks_statistic_sharp_lower_bound():
    # against any continuous cdf the jump-point evaluation cannot go below
    # 0.5/n, and the quantile-grid sample attains it
    rng = np.random.default_rng(0)
    x = rng.standard_normal(50)
    d = ks_statistic(x, lambda v: normal_cdf(v, 1.0))
    assert d >= 0.5 / 50 - 1e-12


def test_ks_critical_values():
    assert ks_critical(2000, 0.01) * np.sqrt(2000) == pytest.approx(1.6276, abs=2e-4)
    assert ks_critical(2000, 0.05) * np.sqrt(2000) == pytest.approx(1.3581, abs=2e-4)
    # independent implementation of the same inversion
    assert ks_critical(500, 0.01) == pytest.approx(kolmogi(0.01) / np.sqrt(500), rel=1e-9)
    assert ks_critical(4 * 100, 0.05) == pytest.approx(ks_critical(100, 0.05) / 2, rel=1e-12)


def test_qq_data_shapes_and_median():
    law = LimitLaw(omega=1.0, kind="exponential_modulus", param=0.2)
    theo, emp = qq_data(np.array([0.3]), law)
    assert emp[0] == pytest.approx(0.3)
    assert theo[0] == pytest.approx(0.2 * np.log(2.0))
    samples = np.array([3.0, 1.0, 2.0])
    theo, emp = qq_data(samples, law)
    np.testing.assert_array_equal(emp, [1.0, 2.0, 3.0])
    assert np.all(np.diff(theo) > 0)


def test_qq_diagonal_when_samples_are_quantiles():
    law = LimitLaw(omega=0.0, kind="real_normal", param=0.25)
    n = 64
    samples = normal_quantile((np.arange(n) + 0.5) / n, 0.25)
    theo, emp = qq_data(samples, law)
    np.testing.assert_allclose(theo, emp, rtol=1e-10)


def test_suite_level_calibration():
    # synthetic draws from the exact reference laws must pass at close to the
    # nominal rate; 100 repetitions per statistic, alpha=0.01
    rng = np.random.default_rng(314)
    spec = car1()
    fails = {}
    for _ in range(100):
        re = rng.normal(0.0, np.sqrt(0.1), 400)
        im = rng.normal(0.0, np.sqrt(0.1), 400)
        z0 = rng.normal(0.0, np.sqrt(0.25), 400)
        for omega, values in ((1.0, re + 1j * im), (0.0, z0.astype(complex))):
            for e in distribution_suite(values, spec, omega, alpha=0.01):
                key = (omega, e["statistic"])
                fails.setdefault(key, 0)
                if not e["ks_pass"]:
                    fails[key] += 1
    for key, n_bad in fails.items():
        assert n_bad <= 3, f"{key} rejected {n_bad}/100 times at alpha=0.01"


def test_suite_rejects_degenerate_samples():
    entries = distribution_suite(np.zeros(100, dtype=complex), car1(), 1.0, alpha=0.01)
    assert all(not e["ks_pass"] for e in entries)


def test_suite_entry_fields():
    rng = np.random.default_rng(5)
    values = rng.normal(size=200) + 1j * rng.normal(size=200)
    entries = distribution_suite(values, car1(), 1.0, alpha=0.05)
    stats = [e["statistic"] for e in entries]
    assert stats == ["re", "im", "mod2"]
    mod2 = entries[2]
    for key in ("mean", "variance", "ks_d", "ks_critical", "alpha", "n",
                "mean_theory", "mean_se", "mean_z", "mean_pass", "law_kind", "law_param"):
        assert key in mod2
    assert mod2["n"] == 200
    assert 0.0 <= mod2["ks_d"] <= 1.0


def test_variance_identity():
    # mean |z|^2 - mean(Re)^2 - mean(Im)^2 == biased Var(Re) + biased Var(Im)
    rng = np.random.default_rng(8)
    z = rng.normal(size=500) + 1j * rng.normal(size=500)
    lhs = np.mean(np.abs(z) ** 2) - z.real.mean() ** 2 - z.imag.mean() ** 2
    rhs = z.real.var() + z.imag.var()
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_cross_frequency_zero_correlation_on_iid():
    rng = np.random.default_rng(99)
    m = 4000
    mat = np.zeros((m, 3), dtype=complex)
    mat[:, 0] = rng.normal(size=m)  # omega = 0 column, ignored
    mat[:, 1] = rng.normal(size=m) + 1j * rng.normal(size=m)
    mat[:, 2] = rng.normal(size=m) + 1j * rng.normal(size=m)
    labels, corr = cross_frequency_independence(mat, (0.0, 1.0, 10.0))
    assert labels == ["re@1", "im@1", "re@10", "im@10"]
    np.testing.assert_allclose(np.diag(corr), np.ones(4), rtol=1e-12)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 4.5 / np.sqrt(m)


def test_cross_frequency_needs_two_positive():
    with pytest.raises(ValueError):
        cross_frequency_independence(np.zeros((10, 1), dtype=complex), (1.0,))


def test_cross_frequency_degenerate_is_nan():
    labels, corr = cross_frequency_independence(np.zeros((10, 2), dtype=complex), (1.0, 2.0))
    assert np.isnan(corr[0, 1])


def test_covariance_check_on_calibrated_sample():
    # moduli drawn with the exact finite-horizon mean; z must sit near 0
    from carma_spectral.fourier import theoretical_modsq_mean
    target = theoretical_modsq_mean(car1(), 50.0, 1.0)
    rng = np.random.default_rng(21)
    mods = rng.exponential(target, 3000)
    values = np.sqrt(mods) * np.exp(2j * np.pi * rng.uniform(size=3000))
    entry = covariance_check(values, car1(), 50.0, 1.0)
    assert entry["theoretical"] == pytest.approx(target, rel=1e-12)
    assert abs(entry["z"]) < 4
    assert entry["pass"]


def test_mc_config_validation():
    with pytest.raises(ValueError):
        MCConfig(spec=car1(), driver=Brownian(), horizon=10.0, h_max=0.1, n_paths=1)
    with pytest.raises(ValueError):
        MCConfig(spec=car1(), driver=Brownian(), horizon=10.0, h_max=0.1, mesh=0.2)
    with pytest.raises(ValueError):
        MCConfig(spec=car1(), driver=Brownian(), horizon=10.0, h_max=0.3)  # 2T/h not integral
    with pytest.raises(ValueError):
        MCConfig(spec=car1(), driver=Brownian(), horizon=10.0, h_max=0.1, alpha=1.5)
    with pytest.raises(ValueError, match="variance rate"):
        MCConfig(spec=car1(), driver=Brownian(volatility=2.0), horizon=10.0, h_max=0.1)


def test_zero_driver_matrix_is_zero():
    cfg = MCConfig(spec=car1(), driver=Zero(), horizon=2.0, h_max=0.5, mesh=0.01,
                   n_paths=3, frequencies=(0.0, 1.0), master_seed=1)
    mat = run_mc(cfg)
    assert mat.shape == (3, 2)
    assert np.all(mat == 0)


def test_run_mc_determinism_and_threading():
    cfg = dict(spec=car1(), driver=Brownian(), horizon=2.0, h_max=0.5, mesh=0.01,
               n_paths=6, frequencies=(0.0, 1.0), master_seed=11)
    a = run_mc(MCConfig(**cfg))
    b = run_mc(MCConfig(**cfg))
    c = run_mc(MCConfig(**cfg, threads=3))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_frozen_grid_mode():
    base = dict(spec=car1(), driver=Brownian(), horizon=2.0, h_max=0.5, mesh=0.01,
                n_paths=4, frequencies=(1.0,), master_seed=11)
    frozen1 = run_mc(MCConfig(**base, freeze_grid=True))
    frozen2 = run_mc(MCConfig(**base, freeze_grid=True))
    fresh = run_mc(MCConfig(**base))
    np.testing.assert_array_equal(frozen1, frozen2)
    assert not np.array_equal(frozen1, fresh)


def test_convergence_study_smoke():
    rows = convergence_study(car1(), Brownian(), horizon=4.0, h_ladder=[1.0, 0.5],
                             mesh=0.02, n_paths=20, frequencies=(0.0, 1.0), master_seed=2)
    assert len(rows) == 2
    assert rows[0]["h_max"] == 1.0
    assert rows[0]["n_grid"] == 9
    assert "ratio" not in rows[0] or rows[0]["ratio"] == {}
    assert set(rows[1]["ratio"]) == {"0", "1"}
    for r in rows:
        for v in r["rms"].values():
            assert v > 0


def test_convergence_study_rejects_non_decreasing_ladder():
    with pytest.raises(ValueError):
        convergence_study(car1(), Brownian(), horizon=4.0, h_ladder=[0.5, 1.0],
                          mesh=0.02, n_paths=5, frequencies=(1.0,), master_seed=2)


def test_report_round_trips_through_json():
    cfg = MCConfig(spec=car1(), driver=Brownian(), horizon=2.0, h_max=0.5, mesh=0.01,
                   n_paths=5, frequencies=(0.0, 1.0, 2.0), master_seed=7)
    mat = run_mc(cfg)
    report = build_report(cfg, mat)
    d = report.to_dict()
    assert d["report_version"] == 1
    assert len(d["entries"]) == 2 + 3 + 3
    blob = json.dumps(d)
    assert json.loads(blob) == d
    # determinism of the whole report
    again = build_report(cfg, run_mc(cfg)).to_dict()
    assert again == d
