import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import expit

from spqrds.sampler import make_rng
from spqrds.simulations import (
    SIM3_B_HIDDEN,
    SIM3_B_OUT,
    SIM3_COV,
    SIM3_W_HIDDEN,
    SIM3_W_OUT,
    SimulationDesign,
    TrueMarginals,
    conditional_pdf_cdf,
    gen_sim3,
    sim1_propensity,
    sim2_propensity,
    sim3_propensity,
    sim4_qte,
    skewnorm_cdf,
    skewnorm_pdf,
    skewnorm_rvs,
    true_marginals,
)

DESIGNS = [SimulationDesign(1, J=0), SimulationDesign(1, J=2), SimulationDesign(2),
           SimulationDesign(3), SimulationDesign(4)]


@pytest.fixture(scope="module")
def oracles():
    return {(d.id, d.J): TrueMarginals(d) for d in DESIGNS}


def test_sim1_location_at_origin():
    d = SimulationDesign(1)
    X = np.zeros((1, 5))
    # the error has median 0 on the positive side only: check via the CDF jump
    pdf, cdf = conditional_pdf_cdf(d, X, 0, np.array([-1.55]))
    assert cdf[0] == pytest.approx(0.25, abs=1e-12)


def test_sim1_propensity():
    X = np.random.default_rng(0).uniform(-2, 2, (50, 5))
    np.testing.assert_array_equal(sim1_propensity(X, 0), 0.5)
    np.testing.assert_allclose(sim1_propensity(X, 2), expit(2.0 * (X[:, 0] + X[:, 1])),
                               atol=1e-15)


def test_sim1_j0_randomized():
    ds = SimulationDesign(1, J=0, n=20000).generate(0)
    assert ds.T.mean() == pytest.approx(0.5, abs=0.015)


def test_sim1_invalid_j():
    with pytest.raises(ValueError):
        SimulationDesign(1, J=3).generate(0)


def test_sim2_intercept_only_point():
    X = np.zeros((1, 12))
    assert sim2_propensity(X)[0] == pytest.approx(expit(-2.125), abs=1e-15)
    assert sim2_propensity(X)[0] == pytest.approx(0.1067, abs=1e-4)


def test_sim2_covariate_supports():
    X = SimulationDesign(2, n=2000).generate(0).X
    assert X.shape == (2000, 12)
    assert X[:, :3].min() >= 0 and X[:, :3].max() <= 1
    assert X[:, 3:6].min() >= 1 and X[:, 3:6].max() <= 2
    assert set(np.unique(X[:, 6:])) <= {0.0, 1.0}


def test_sim3_constants_literal():
    np.testing.assert_array_equal(SIM3_W_HIDDEN[0], [-0.99, -1.1, -0.14, -0.26])
    np.testing.assert_array_equal(SIM3_W_HIDDEN[4], [0.12, -0.37, 0.47, 1.25])
    np.testing.assert_array_equal(SIM3_B_HIDDEN, [0.96, 0.64, 0.74, -0.46, 0.21])
    np.testing.assert_array_equal(SIM3_W_OUT, [-0.15, 0.3, -0.004, -0.21, -0.88])
    assert SIM3_B_OUT == -0.05
    assert SIM3_COV[1, 2] == 0.7 and SIM3_COV[0, 3] == 0.3
    with pytest.raises(ValueError):
        SIM3_COV[0, 0] = 2.0


def test_sim3_propensity_at_origin():
    expected = expit(np.tanh(SIM3_B_HIDDEN) @ SIM3_W_OUT + SIM3_B_OUT)
    assert sim3_propensity(np.zeros((1, 4)))[0] == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.4784, abs=1e-4)


def test_sim3_covariance():
    X = gen_sim3(100_000, make_rng(3)).X
    assert np.max(np.abs(np.cov(X, rowvar=False) - SIM3_COV)) < 0.02


def test_skewnorm_shape_zero_is_normal():
    y = np.linspace(-3, 3, 31)
    np.testing.assert_allclose(skewnorm_pdf(y, 0.2, 1.5, 0.0), stats.norm.pdf(y, 0.2, 1.5),
                               atol=1e-14)
    np.testing.assert_allclose(skewnorm_cdf(y, 0.2, 1.5, 0.0), stats.norm.cdf(y, 0.2, 1.5),
                               atol=1e-14)


def test_skewnorm_matches_scipy():
    y = np.linspace(-2, 4, 61)
    np.testing.assert_allclose(skewnorm_pdf(y, 0.3, 0.5, 3.0),
                               stats.skewnorm.pdf(y, 3.0, 0.3, 0.5), atol=1e-12)
    np.testing.assert_allclose(skewnorm_cdf(y, 0.3, 0.5, 3.0),
                               stats.skewnorm.cdf(y, 3.0, 0.3, 0.5), atol=1e-10)


def test_skewnorm_sampler():
    x = skewnorm_rvs(0.0, 0.5, 3.0, make_rng(4), size=50_000)
    assert stats.kstest(x, stats.skewnorm(3.0, 0.0, 0.5).cdf).pvalue > 0.01


def test_sim4_moments_and_qte():
    ds = SimulationDesign(4, n=100_000).generate(0)
    assert ds.Y0.mean() == pytest.approx(0.5, abs=0.01)
    assert ds.Y1.mean() == pytest.approx(0.25, abs=0.01)
    assert sim4_qte(0.5) == pytest.approx(-np.log(2) / 4, abs=1e-15)
    assert sim4_qte(0.0) == 0.0


@pytest.mark.parametrize("design", DESIGNS, ids=lambda d: f"sim{d.id}-J{d.J}")
def test_observed_outcome_consistency(design):
    ds = design.generate(0)
    np.testing.assert_array_equal(ds.Y, np.where(ds.T == 1, ds.Y1, ds.Y0))
    assert set(np.unique(ds.T)) <= {0, 1}
    assert np.all((ds.pi > 0) & (ds.pi < 1))


@pytest.mark.parametrize("design", DESIGNS, ids=lambda d: f"sim{d.id}-J{d.J}")
def test_generation_deterministic(design):
    a, b = design.generate(2), design.generate(2)
    for f in ("X", "T", "Y", "Y0", "Y1", "pi"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert not np.array_equal(a.Y, design.generate(3).Y)


@pytest.mark.parametrize("design", DESIGNS, ids=lambda d: f"sim{d.id}-J{d.J}")
def test_conditional_cdf_is_integral_of_pdf(design):
    X = design.generate(0).X[:3]
    for t in (0, 1):
        for i in range(3):
            f = lambda v: conditional_pdf_cdf(design, X[i:i + 1], t, np.array([v]))[0][0]
            lo = 0.0 if design.id == 4 else -20.0
            val, _ = integrate.quad(f, lo, 0.4, limit=200, points=[0.0] if lo < 0 else None)
            F = conditional_pdf_cdf(design, X[i:i + 1], t, np.array([0.4]))[1][0]
            assert F == pytest.approx(val, abs=1e-8)


@pytest.mark.parametrize("key", [(1, 0), (1, 2), (2, 0), (3, 0), (4, 0)])
def test_oracle_mass_one(oracles, key):
    o = oracles[key]
    lo, hi = o.support(1e-4, 1 - 1e-4)
    for t in (0, 1):
        val, _ = integrate.quad(lambda v: float(o.pdf(v, t)), lo - 2, hi + 2, limit=200,
                                points=[0.0])
        assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("key", [(1, 0), (2, 0), (3, 0)])
def test_oracle_quantiles_invert_cdf(oracles, key):
    o = oracles[key]
    taus = np.array([0.05, 0.5, 0.95])
    for t in (0, 1):
        np.testing.assert_allclose(o.cdf(o.quantile(taus, t), t), taus, atol=1e-8)


def test_sim4_oracle_exact():
    o = TrueMarginals(SimulationDesign(4), n_mc=10)
    y = np.linspace(0, 3, 31)
    for t, rate in ((0, 2.0), (1, 4.0)):
        np.testing.assert_allclose(o.cdf(y, t), stats.expon.cdf(y, scale=1 / rate), atol=1e-12)
        np.testing.assert_allclose(o.pdf(y, t), stats.expon.pdf(y, scale=1 / rate), atol=1e-12)
    taus = np.arange(1, 20) * 0.05
    np.testing.assert_allclose(o.qte(taus), sim4_qte(taus), atol=1e-12)


def test_oracle_requires_large_sample():
    with pytest.raises(ValueError):
        TrueMarginals(SimulationDesign(1), n_mc=1000)


def test_oracle_stable_under_doubling():
    # nested samples: the doubled oracle shares its first half with the base one
    design = SimulationDesign(3)
    big = TrueMarginals(design, n_mc=200_000, rng=make_rng(11))
    half = TrueMarginals(design, n_mc=100_000, rng=make_rng(12))
    half.X = big.X[:100_000]
    grid = np.linspace(*big.support(), 60)
    for t in (0, 1):
        assert np.max(np.abs(big.cdf(grid, t) - half.cdf(grid, t))) < 0.005


def test_true_marginals_tables(oracles):
    out = true_marginals(SimulationDesign(4))
    assert out["grid"].shape == (200,)
    assert len(out["taus"]) == 19
    np.testing.assert_allclose(out["qte"], sim4_qte(out["taus"]), atol=1e-12)
    for k in ("f0", "F0", "f1", "F1"):
        assert out[k].shape == (200,)


def test_invalid_designs():
    with pytest.raises(ValueError):
        SimulationDesign(5)
    with pytest.raises(ValueError):
        SimulationDesign(4, rates=(2.0, -1.0))
