import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spqrds.metrics import DEFAULT_TAUS, aab, aab_per_replicate, ise, rmse_tau, waic

GRID = np.linspace(0, 1, 201)


def test_default_levels():
    np.testing.assert_allclose(DEFAULT_TAUS, np.arange(0.05, 0.951, 0.05))
    assert len(DEFAULT_TAUS) == 19


def test_ise_identical_is_zero():
    f = np.sin(GRID)
    assert ise(f, f, GRID) == 0.0


def test_ise_constant_difference():
    c = 0.3
    assert ise(np.full(201, 1 + c), np.ones(201), GRID) == pytest.approx(c**2, abs=1e-12)


@pytest.mark.parametrize("fh, ft", [
    (lambda y: np.exp(-y), lambda y: 1 + 0 * y),
    (lambda y: np.sin(3 * y), lambda y: y**2),
    (lambda y: 6 * y * (1 - y), lambda y: 2 * y),
])
def test_ise_matches_quadrature(fh, ft):
    exact, _ = integrate.quad(lambda y: (fh(y) - ft(y)) ** 2, 0, 1)
    assert ise(fh(GRID), ft(GRID), GRID) == pytest.approx(exact, abs=1e-3)


def test_ise_grid_errors():
    with pytest.raises(ValueError):
        ise(np.zeros(3), np.zeros(4), np.linspace(0, 1, 3))
    with pytest.raises(ValueError):
        ise(np.zeros(3), np.zeros(3), np.array([0, 0.1, 1.0]))


def test_rmse_examples():
    assert rmse_tau([1.0, 1.0], 1.0) == 0.0
    assert rmse_tau([0.2], 0.0) == pytest.approx(0.2)
    assert rmse_tau([0.1, -0.3], 0.0) == pytest.approx(np.sqrt(0.05), abs=1e-12)
    assert rmse_tau([0.1, -0.3], 0.0) == pytest.approx(0.2236, abs=1e-4)
    with pytest.raises(ValueError):
        rmse_tau([], 0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.floats(-10, 10))
def test_rmse_at_least_abs_mean_error(est, truth):
    err = np.asarray(est) - truth
    assert rmse_tau(est, truth) >= abs(err.mean()) - 1e-12


def test_aab_examples():
    truth = np.linspace(-1, 1, 19)
    assert aab(truth, truth) == 0.0
    assert aab(truth + 0.1, truth) == pytest.approx(0.1)
    alt = truth + 0.1 * (-1) ** np.arange(19)
    assert aab(alt, truth) == pytest.approx(0.1)


def test_aab_uses_across_replicate_mean():
    truth = np.zeros(19)
    est = np.vstack([np.full(19, 0.2), np.full(19, -0.2)])
    assert aab(est, truth) == pytest.approx(0.0)
    np.testing.assert_allclose(aab_per_replicate(est, truth), [0.2, 0.2])


def test_aab_level_count():
    with pytest.raises(ValueError):
        aab(np.zeros(5), np.zeros(5))
    assert aab(np.ones(5), np.zeros(5), allow_any_levels=True) == 1.0


def test_waic_zero_variance():
    ll = np.log(np.array([[0.2, 0.5, 0.9]] * 4))
    assert waic(ll) == pytest.approx(-2 * ll[0].sum(), abs=1e-12)


def test_waic_two_draws():
    a, b = 0.3, 0.8
    ll = np.log(np.array([[a], [b]]))
    expected = -2 * (np.log((a + b) / 2) - np.var(np.log([a, b]), ddof=1))
    assert waic(ll) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-5, 5))
def test_waic_shift(seed, c):
    ll = np.random.default_rng(seed).normal(-1, 0.5, (6, 9))
    assert waic(ll + c) == pytest.approx(waic(ll) - 2 * ll.shape[1] * c, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 5))
def test_waic_improves_with_uniform_increase(seed, c):
    ll = np.random.default_rng(seed).normal(-1, 0.5, (6, 9))
    assert waic(ll + c) < waic(ll)


def test_waic_errors():
    with pytest.raises(ValueError):
        waic(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        waic(np.array([[0.0, -np.inf], [0.0, 0.0]]))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ise_nonnegative(seed):
    rng = np.random.default_rng(seed)
    assert ise(rng.normal(size=201), rng.normal(size=201), GRID) >= 0
