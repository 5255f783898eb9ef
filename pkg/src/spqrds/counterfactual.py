"""
Counterfactual marginal distributions and quantile treatment effects.

For every propensity draw ``j`` the spline mixture network is fitted to
``(y, t, S^(j))`` with ``S^(j) = (pi^(j)(X), X)``. For every retained
weight draw ``l`` a Bayesian bootstrap vector ``u`` reweights the
subjects, and the marginal of ``Y(t)`` is the ``u``-average of the
conditional mixtures with ``t`` substituted for every subject. Because
the conditional law is linear in the mixture weights, the marginal is
itself a spline mixture with weights ``u @ theta(t, S)``; quantiles are
solved on its exact CDF.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .metrics import DEFAULT_TAUS, waic
from .network import (
    GSMHyperParams,
    MixtureData,
    SplineMixtureTarget,
    _forward_pass,
    _softmax_cols,
    mixture_architecture,
)
from .propensity import PropensityConfig, PropensityDraws, fit_propensity
from .sampler import SamplerConfig, make_rng, run_gibbs_nuts
from .splines import SplineBasis, check_weights

logger = logging.getLogger(__name__)

SCORES = ("double", "ps-only", "x-only")
BISECT_TOL = 1e-8


# ---------------------------------------------------------------------------
# outcome scale


@dataclass(frozen=True)
class OutcomeScale:
    """Affine map between raw outcomes and the unit interval."""

    y_min: float
    y_max: float
    margin: float = 0.0

    def __post_init__(self):
        if not self.y_min < self.y_max:
            raise ValueError("y_min must be smaller than y_max")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    @property
    def lower(self):
        return self.y_min - self.margin

    @property
    def width(self):
        return self.y_max - self.y_min + 2.0 * self.margin

    def to_unit(self, Y):
        return (np.asarray(Y, dtype=float) - self.lower) / self.width

    def to_raw(self, y):
        return self.lower + np.asarray(y, dtype=float) * self.width

    def density_to_raw(self, f):
        """Rescale a unit-interval density by the Jacobian ``1 / width``."""
        return np.asarray(f, dtype=float) / self.width

    def shift_to_raw(self, d):
        """Differences of quantiles only scale, the offset cancels."""
        return np.asarray(d, dtype=float) * self.width


def normalize_outcome(Y, margin=0.0):
    """Min-max map raw outcomes onto [0, 1].

    Parameters
    ----------
    Y : array_like
    margin : float
        Raw-scale padding added below the minimum and above the maximum.

    Returns
    -------
    y : numpy.ndarray
    scale : OutcomeScale
    """
    Y = np.asarray(Y, dtype=float)
    if Y.size == 0 or not np.all(np.isfinite(Y)):
        raise ValueError("outcomes must be finite and nonempty")
    lo, hi = float(Y.min()), float(Y.max())
    if lo == hi:
        raise ValueError("outcomes are constant and cannot be normalized")
    scale = OutcomeScale(lo, hi, float(margin))
    y = np.clip(scale.to_unit(Y), 0.0, 1.0)
    return y, scale


# ---------------------------------------------------------------------------
# scores and bootstrap


def minmax_covariates(X):
    """Scale each covariate column to [0, 1]; constant columns become 0."""
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    lo = X.min(axis=0) if X.size else np.zeros(X.shape[1])
    rng = (X.max(axis=0) - lo) if X.size else np.ones(X.shape[1])
    rng = np.where(rng > 0, rng, 1.0)
    return (X - lo) / rng


def build_double_score(X, propensity, j, score="double"):
    """Balancing score of propensity draw ``j`` (0-based).

    ``double`` gives ``(pi^(j)(X_i), X_i)``; ``ps-only`` keeps only the
    propensity and ``x-only`` only the covariates.
    """
    if score not in SCORES:
        raise ValueError(f"score must be one of {SCORES}")
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    if score == "x-only":
        if X.shape[1] == 0:
            raise ValueError("x-only scores need at least one covariate")
        return X.copy()
    pi = propensity.draw(j) if isinstance(propensity, PropensityDraws) else np.asarray(propensity)
    if len(pi) != len(X):
        raise ValueError("propensity and covariates have different lengths")
    if score == "ps-only":
        return pi[:, None].copy()
    return np.column_stack([pi, X])


def bayesian_bootstrap(n, rng):
    """One Dirichlet(1, ..., 1) draw from normalized unit exponentials."""
    if n < 1:
        raise ValueError("n must be positive")
    e = rng.standard_exponential(n)
    return e / e.sum()


# ---------------------------------------------------------------------------
# marginalization and quantiles


def conditional_weights(arch, weights, t, scores):
    """Mixture weights ``theta(t, S_i)`` for every subject, shape ``(n, K)``."""
    scores = np.asarray(scores, dtype=float)
    scores = scores.reshape(len(scores), -1)
    inputs = np.vstack([np.full(len(scores), float(t)), scores.T])
    _, z = _forward_pass(weights, np.ascontiguousarray(inputs))
    return _softmax_cols(z).T


def marginal_weights(arch, weights, scores, u, t):
    """Weights of the marginal mixture, ``u @ theta(t, S)``."""
    u = np.asarray(u, dtype=float)
    u = u / u.sum()
    return u @ conditional_weights(arch, weights, t, scores)


def marginalize(arch, basis, weights, scores, u, grid, t):
    """Marginal density and CDF of ``Y(t)`` on ``grid``.

    Returns
    -------
    f, F : numpy.ndarray
        Values on ``grid``.
    theta_bar : numpy.ndarray
        Weights of the marginal mixture.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    theta_bar = check_weights(marginal_weights(arch, weights, scores, u, t), basis.K)
    f = basis.mspline(grid) @ theta_bar
    F = np.clip(basis.ispline(grid) @ theta_bar, 0.0, 1.0)
    return f, F, theta_bar


def invert_quantile(grid, F, tau, basis=None, theta=None, tol=BISECT_TOL):
    """Solve ``F(y) = tau`` for each level.

    Linear interpolation of the tabulated CDF gives the starting bracket;
    with ``basis`` and ``theta`` the root is refined by bisection on the
    exact mixture CDF until ``|F(y) - tau| < tol``.

    Returns
    -------
    y : numpy.ndarray
    flagged : numpy.ndarray of bool
        Levels outside the tabulated range, clipped to the grid ends.
    """
    grid = np.asarray(grid, dtype=float)
    F = np.maximum.accumulate(np.asarray(F, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    flagged = (tau < F[0]) | (tau > F[-1])
    tc = np.clip(tau, F[0], F[-1])
    # first grid index with F >= tau bounds the root from above
    hi_idx = np.clip(np.searchsorted(F, tc, side="left"), 1, len(grid) - 1)
    lo_idx = hi_idx - 1
    F_lo, F_hi = F[lo_idx], F[hi_idx]
    span = F_hi - F_lo
    frac = np.where(span > 0, (tc - F_lo) / np.where(span > 0, span, 1.0), 0.0)
    y = grid[lo_idx] + frac * (grid[hi_idx] - grid[lo_idx])
    if basis is None or theta is None:
        return y, flagged

    a = grid[lo_idx].copy()
    b = grid[hi_idx].copy()
    theta = np.asarray(theta, dtype=float)

    def cdf(v):
        return basis.ispline(v) @ theta

    ok = ~flagged
    Fy = cdf(y)
    done = ~ok | (np.abs(Fy - tc) < tol)
    for _ in range(200):
        if np.all(done):
            break
        mid = np.where(done, y, 0.5 * (a + b))
        Fm = cdf(mid)
        below = Fm < tc
        a = np.where(~done & below, mid, a)
        b = np.where(~done & ~below, mid, b)
        y = np.where(done, y, mid)
        done = done | (np.abs(Fm - tc) < tol) | (b - a < 1e-15)
    if np.any(flagged):
        logger.warning("%d quantile levels fell outside the CDF range", int(flagged.sum()))
    return y, flagged


# ---------------------------------------------------------------------------
# posterior draws of the counterfactual quantities


@dataclass
class CounterfactualDraws:
    """Per-(j, l) draws on the unit scale, flattened with ``l`` fastest.

    ``f0, F0, f1, F1`` are ``(D, G)``; ``q0, q1, qte`` are ``(D, n_tau)``.
    """

    grid: np.ndarray
    taus: np.ndarray
    f0: np.ndarray
    F0: np.ndarray
    f1: np.ndarray
    F1: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    qte: np.ndarray
    scale: OutcomeScale
    n_pi: int
    n_w: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return self.qte.shape[0]


@dataclass
class Summary:
    """Posterior means and equal-tailed intervals on the raw outcome scale."""

    taus: np.ndarray
    qte_mean: np.ndarray
    qte_lo: np.ndarray
    qte_hi: np.ndarray
    q0_mean: np.ndarray
    q1_mean: np.ndarray
    grid: np.ndarray
    f0: np.ndarray
    f0_lo: np.ndarray
    f0_hi: np.ndarray
    f1: np.ndarray
    f1_lo: np.ndarray
    f1_hi: np.ndarray
    F0: np.ndarray
    F1: np.ndarray
    ci_level: float

    def qte_table(self):
        return np.column_stack([self.taus, self.qte_mean, self.qte_lo, self.qte_hi])

    def density_table(self):
        return np.column_stack([self.grid, self.f0, self.f0_lo, self.f0_hi,
                                self.f1, self.f1_lo, self.f1_hi])


def _band(x, ci_level):
    alpha = 100.0 * (1.0 - ci_level) / 2.0
    if x.shape[0] < 2:
        return x[0].copy(), x[0].copy()
    lo, hi = np.percentile(x, [alpha, 100.0 - alpha], axis=0)
    return lo, hi


def summarize(draws, taus=None, ci_level=0.95):
    """Average the draws and form percentile credible intervals.

    Parameters
    ----------
    draws : CounterfactualDraws
    taus : array_like, optional
        Subset of ``draws.taus`` to report.
    ci_level : float
    """
    if not 0.0 < ci_level < 1.0:
        raise ValueError("ci_level must lie in (0, 1)")
    cols = np.arange(len(draws.taus))
    if taus is not None:
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        cols = []
        for tau in taus:
            hit = np.flatnonzero(np.isclose(draws.taus, tau, atol=1e-12))
            if hit.size == 0:
                raise ValueError(f"level {tau} was not estimated")
            cols.append(hit[0])
        cols = np.asarray(cols)
    sc = draws.scale
    qte = sc.shift_to_raw(draws.qte[:, cols])
    q0 = sc.to_raw(draws.q0[:, cols])
    q1 = sc.to_raw(draws.q1[:, cols])
    f0 = sc.density_to_raw(draws.f0)
    f1 = sc.density_to_raw(draws.f1)
    qlo, qhi = _band(qte, ci_level)
    f0lo, f0hi = _band(f0, ci_level)
    f1lo, f1hi = _band(f1, ci_level)
    return Summary(
        taus=draws.taus[cols], qte_mean=qte.mean(axis=0), qte_lo=qlo, qte_hi=qhi,
        q0_mean=q0.mean(axis=0), q1_mean=q1.mean(axis=0),
        grid=sc.to_raw(draws.grid), f0=f0.mean(axis=0), f0_lo=f0lo, f0_hi=f0hi,
        f1=f1.mean(axis=0), f1_lo=f1lo, f1_hi=f1hi,
        F0=draws.F0.mean(axis=0), F1=draws.F1.mean(axis=0), ci_level=ci_level,
    )


# ---------------------------------------------------------------------------
# the full estimator


@dataclass(frozen=True)
class EstimateConfig:
    """Settings of the full estimator.

    ``K_grid`` and ``hidden_grid`` hold the candidate spline counts and
    hidden widths; with more than one candidate the model is chosen by
    WAIC on the first propensity draw.
    """

    K_grid: tuple = (8, 10, 12)
    hidden_grid: tuple = (5, 8, 10)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    propensity: PropensityConfig = field(default_factory=PropensityConfig)
    n_pi: int = 5
    grid_size: int = 200
    taus: tuple = tuple(DEFAULT_TAUS)
    ci_level: float = 0.95
    score: str = "double"
    margin: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.score not in SCORES:
            raise ValueError(f"score must be one of {SCORES}")
        if not self.K_grid or not self.hidden_grid:
            raise ValueError("model grids must be nonempty")
        if min(self.K_grid) < 2 or min(self.hidden_grid) < 1:
            raise ValueError("K must be >= 2 and hidden widths >= 1")
        if self.grid_size < 2 or self.n_pi < 1:
            raise ValueError("grid_size must be >= 2 and n_pi >= 1")
        if any(not 0.0 < t < 1.0 for t in self.taus):
            raise ValueError("quantile levels must lie in (0, 1)")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")


@dataclass
class FittedModel:
    """A fitted spline mixture network for one propensity draw."""

    K: int
    hidden: int
    basis: SplineBasis
    scores: np.ndarray
    draws: object
    waic: Optional[float] = None


def _chain_rng(seed, j):
    return make_rng(seed, 1, j)


def fit_conditional(y, t, scores, K, hidden, sampler, rng, hyper=None):
    """Run one chain of the spline mixture network and return its target and draws."""
    scores = np.asarray(scores, dtype=float).reshape(len(y), -1)
    arch = mixture_architecture(scores.shape[1] - 1, K, (hidden,))
    basis = SplineBasis(K)
    target = SplineMixtureTarget(arch, basis, MixtureData(y, t, scores))
    draws = run_gibbs_nuts(target, GSMHyperParams() if hyper is None else hyper, sampler, rng)
    return target, draws


def pointwise_loglik_matrix(target, draws):
    return np.vstack([target.pointwise(w) for w in draws.weights])


def select_model(y, t, scores, config):
    """Fit every (K, V_1) candidate and keep the lowest WAIC.

    Ties go to the smaller parameter count. Every candidate uses the chain
    stream of the first propensity draw, so the winner's chain is exactly
    the one the estimator would have run.
    """
    best = None
    table = []
    for K in config.K_grid:
        for V in config.hidden_grid:
            target, draws = fit_conditional(y, t, scores, K, V, config.sampler,
                                            _chain_rng(config.seed, 0))
            ll = pointwise_loglik_matrix(target, draws)
            score = waic(ll) if np.all(np.isfinite(ll)) else np.inf
            n_par = target.arch.n_params
            table.append((K, V, score, n_par))
            key = (score, n_par)
            if best is None or key < best[0]:
                best = (key, FittedModel(K, V, target.basis, scores, draws, score))
    return best[1], table


def estimate(y, t, X, propensity, config, scale=None):
    """Posterior draws of the counterfactual densities and QTEs.

    Parameters
    ----------
    y : array_like
        Outcomes already on the unit interval.
    t : array_like of {0, 1}
    X : array_like, shape (n, d)
        Covariates on the network input scale.
    propensity : PropensityDraws
    config : EstimateConfig
    scale : OutcomeScale, optional
        Stored with the draws for back-transformation.

    Returns
    -------
    CounterfactualDraws
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    n = len(y)
    n_pi = min(config.n_pi, propensity.n_draws) if config.score != "x-only" else config.n_pi
    if config.score != "x-only" and propensity.n_draws < config.n_pi:
        logger.warning("only %d propensity draws available", propensity.n_draws)
    if config.score == "x-only":
        # the score does not depend on j, one chain covers every draw
        n_pi = 1
    grid = np.linspace(0.0, 1.0, config.grid_size)
    taus = np.asarray(config.taus, dtype=float)
    scale = OutcomeScale(0.0, 1.0) if scale is None else scale

    selection = None
    out = {k: [] for k in ("f0", "F0", "f1", "F1", "q0", "q1")}
    diagnostics = {"chains": []}
    chosen = None
    for j in range(n_pi):
        scores = build_double_score(X, propensity, j, config.score)
        if j == 0 and (len(config.K_grid) > 1 or len(config.hidden_grid) > 1):
            chosen, selection = select_model(y, t, scores, config)
            draws = chosen.draws
        else:
            K = chosen.K if chosen else config.K_grid[0]
            V = chosen.hidden if chosen else config.hidden_grid[0]
            _, draws = fit_conditional(y, t, scores, K, V, config.sampler,
                                       _chain_rng(config.seed, j))
            if chosen is None:
                chosen = FittedModel(K, V, SplineBasis(K), scores, draws)
        basis = chosen.basis
        diagnostics["chains"].append({
            "j": j, "divergence_rate": draws.divergence_rate,
            "step_size": draws.step_size, "mean_accept": float(np.mean(draws.accept_stat)),
            "n_clamped": draws.n_clamped,
        })
        arch = draws.arch
        for l in range(len(draws)):
            w = draws.weights_at(l)
            u = bayesian_bootstrap(n, make_rng(config.seed, 2, j, l))
            for arm in (0, 1):
                f, F, theta_bar = marginalize(arch, basis, w, scores, u, grid, arm)
                q, _ = invert_quantile(grid, F, taus, basis, theta_bar)
                out[f"f{arm}"].append(f)
                out[f"F{arm}"].append(F)
                out[f"q{arm}"].append(q)

    diagnostics["K"] = chosen.K
    diagnostics["hidden"] = chosen.hidden
    if selection is not None:
        diagnostics["selection"] = [
            {"K": K, "hidden": V, "waic": s, "n_params": p} for K, V, s, p in selection
        ]
    arrays = {k: np.vstack(v) for k, v in out.items()}
    return CounterfactualDraws(
        grid=grid, taus=taus, qte=arrays["q1"] - arrays["q0"], scale=scale,
        n_pi=n_pi, n_w=config.sampler.n_draws, diagnostics=diagnostics, **arrays,
    )


@dataclass
class EstimateResult:
    draws: CounterfactualDraws
    summary: Summary
    propensity: Optional[PropensityDraws]


def fit_estimate(Y, T, X, config=None, propensity=None):
    """Raw data to summarized counterfactual distributions and QTEs.

    Parameters
    ----------
    Y : array_like
        Raw outcomes.
    T : array_like of {0, 1}
    X : array_like, shape (n, d)
    config : EstimateConfig, optional
    propensity : PropensityDraws, optional
        Fitted with the default backend when omitted (not needed for
        ``x-only`` scores).
    """
    config = EstimateConfig() if config is None else config
    T = np.asarray(T)
    if not np.all(np.isin(T, (0, 1))) or T.min() == T.max():
        raise ValueError("treatment must be binary with both arms present")
    X = np.asarray(X, dtype=float).reshape(len(T), -1)
    y, scale = normalize_outcome(Y, config.margin)
    if propensity is None and config.score != "x-only":
        pcfg = replace(config.propensity, seed=config.seed)
        propensity = fit_propensity(X, T, config=pcfg, rng=make_rng(config.seed, 0))
    draws = estimate(y, T, minmax_covariates(X), propensity, config, scale)
    return EstimateResult(draws, summarize(draws, ci_level=config.ci_level), propensity)
