"""
Evaluation metrics for counterfactual density and QTE estimates, and WAIC
for model selection.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

N_QUANTILES = 19
DEFAULT_TAUS = np.round(np.arange(1, N_QUANTILES + 1) * 0.05, 2)


def ise(f_hat, f_true, grid):
    """Integrated squared error by the trapezoid rule on an equidistant grid.

    Parameters
    ----------
    f_hat, f_true : array_like
        Values on ``grid``.
    grid : array_like
        Equidistant points ``g_0 < ... < g_{n_grid}``.
    """
    f_hat = np.asarray(f_hat, dtype=float)
    f_true = np.asarray(f_true, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if not (f_hat.shape == f_true.shape == grid.shape) or grid.ndim != 1:
        raise ValueError("estimate, truth and grid must be matching 1-d arrays")
    if grid.size < 2:
        raise ValueError("need at least two grid points")
    h = np.diff(grid)
    if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-8, atol=0.0):
        raise ValueError("grid must be strictly increasing and equidistant")
    sq = (f_hat - f_true) ** 2
    return float(h[0] * (sq[1:-1].sum() + 0.5 * (sq[0] + sq[-1])))


def rmse_tau(estimates, truth):
    """Root mean squared error of per-replicate estimates at one quantile level."""
    est = np.asarray(estimates, dtype=float).ravel()
    if est.size == 0:
        raise ValueError("need at least one replicate")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def _check_levels(n_levels, allow_any):
    if n_levels != N_QUANTILES and not allow_any:
        raise ValueError(f"AAB uses {N_QUANTILES} quantile levels, got {n_levels}")


def aab(estimates, truth, allow_any_levels=False):
    """Average absolute bias over quantile levels.

    Parameters
    ----------
    estimates : array_like
        Either one estimate per level, shape ``(n_tau,)``, or replicates by
        levels, ``(n_rep, n_tau)``, which are first averaged over replicates.
    truth : array_like, shape (n_tau,)
    """
    est = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.ndim == 2:
        est = est.mean(axis=0)
    _check_levels(est.size, allow_any_levels)
    if est.shape != truth.shape:
        raise ValueError("estimates and truth must cover the same levels")
    return float(np.mean(np.abs(est - truth)))


def aab_per_replicate(estimates, truth, allow_any_levels=False):
    """AAB of each replicate, shape ``(n_rep,)``; the tables report mean and sd."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.asarray(truth, dtype=float)
    _check_levels(est.shape[1], allow_any_levels)
    return np.mean(np.abs(est - truth), axis=1)


def waic(loglik):
    """WAIC on the deviance scale from a ``(draws, observations)`` matrix.

    ``-2 * sum_i [log mean_s exp(ll_si) - var_s(ll_si)]`` with the sample
    variance (``ddof=1``).
    """
    ll = np.asarray(loglik, dtype=float)
    if ll.ndim != 2 or ll.shape[0] < 2:
        raise ValueError("need a (draws, observations) matrix with at least 2 draws")
    if not np.all(np.isfinite(ll)):
        raise ValueError("log-likelihood entries must be finite")
    lppd = logsumexp(ll, axis=0) - np.log(ll.shape[0])
    p_waic = np.var(ll, axis=0, ddof=1)
    return float(-2.0 * np.sum(lppd - p_waic))
