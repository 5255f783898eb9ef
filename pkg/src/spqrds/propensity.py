"""
Posterior draws of the propensity score ``pi(x) = P(T = 1 | X = x)``.

The default backend is a small Bayesian network classifier: one hidden
layer of tanh units, a logistic output, GSM priors on every weight, and
the same NUTS-within-Gibbs sampler used for the outcome model. Any other
binary regressor can be plugged in by returning a ``PropensityDraws``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, log_expit

from .network import (
    GSMHyperParams,
    NetworkArchitecture,
    NetworkTarget,
    _forward_pass,
)
from .sampler import SamplerConfig, make_rng, run_gibbs_nuts

PROB_MIN = 1e-6
PROB_MAX = 1.0 - 1e-6


def _clamp(p):
    return np.clip(p, PROB_MIN, PROB_MAX)


@dataclass
class PropensityDraws:
    """Per-subject propensity draws, shape ``(n, N_pi)``.

    ``predictor`` maps a covariate matrix ``(m, d)`` to an ``(m, N_pi)``
    matrix of probabilities and is ``None`` when the draws were loaded
    from a table.
    """

    probs: np.ndarray
    predictor: Optional[Callable] = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if not np.all(np.isfinite(p)):
            raise ValueError("propensity draws must be finite")
        self.probs = _clamp(p)

    @property
    def n_draws(self):
        return self.probs.shape[1]

    def __len__(self):
        return self.n_draws

    def draw(self, j):
        """Probabilities of draw ``j`` (0-based) for the fitted subjects."""
        return self.probs[:, j]

    def predict(self, X):
        if self.predictor is None:
            raise ValueError("these draws carry no fitted model for new covariates")
        return _clamp(self.predictor(np.asarray(X, dtype=float)))

    def to_csv(self, path):
        header = ",".join(f"pi{j + 1}" for j in range(self.n_draws))
        np.savetxt(path, self.probs, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        probs = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if np.any(probs <= 0.0) or np.any(probs >= 1.0):
            raise ValueError("propensities must lie strictly inside (0, 1)")
        return cls(probs)


def known_propensity(values, X=None):
    """Wrap a known propensity as a single degenerate draw.

    Parameters
    ----------
    values : float, array_like or callable
        A constant, per-subject values, or a function of the covariate
        matrix ``X``.
    X : array_like, optional
        Covariates, required when ``values`` is callable or a constant.
    """
    if callable(values):
        if X is None:
            raise ValueError("a callable propensity needs the covariate matrix")
        fn = values
        p = np.asarray(fn(np.asarray(X, dtype=float)), dtype=float)
    elif np.ndim(values) == 0:
        if X is None:
            raise ValueError("a constant propensity needs the covariate matrix or n")
        n = X if np.ndim(X) == 0 else len(X)
        c = float(values)
        fn = lambda Z: np.full(len(Z), c)
        p = np.full(int(n), c)
    else:
        p = np.asarray(values, dtype=float)
        fn = None
    p = np.asarray(p, dtype=float).reshape(-1)
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("known propensities must lie strictly inside (0, 1)")
    predictor = None if fn is None else (lambda Z: np.asarray(fn(Z), dtype=float).reshape(-1, 1))
    return PropensityDraws(p[:, None], predictor)


class LogisticTarget(NetworkTarget):
    """Bernoulli likelihood with a logistic link on a single output logit."""

    def __init__(self, arch, inputs, t):
        if arch.output_dim != 1:
            raise ValueError("the logistic head needs a single output")
        super().__init__(arch, inputs)
        self.t = np.asarray(t, dtype=float)[None, :]

    def _head(self, z):
        self.n_clamped = 0
        ll = self.t * log_expit(z) + (1.0 - self.t) * log_expit(-z)
        return ll[0], self.t - expit(z)


@dataclass(frozen=True)
class PropensityConfig:
    """Settings of the default network propensity backend."""

    hidden: int = 10
    n_iter: int = 1000
    n_burnin: int = 500
    thin: int = 100
    max_tree_depth: int = 5
    target_accept: float = 0.8
    seed: int = 0

    def sampler_config(self):
        return SamplerConfig(
            n_iter=self.n_iter, n_burnin=self.n_burnin, thin=self.thin,
            target_accept=self.target_accept, max_tree_depth=self.max_tree_depth,
            seed=self.seed,
        )


def _standardizer(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    return mu, sd


def fit_network_propensity(X, T, config=None, rng=None, hyper=None):
    """Default backend: Bayesian network logistic regression."""
    config = PropensityConfig() if config is None else config
    X = np.asarray(X, dtype=float)
    n = len(T)
    X = X.reshape(n, -1)
    d = X.shape[1]
    # covariate-free data still needs one (constant) input column
    mu, sd = _standardizer(X) if d else (np.zeros(1), np.ones(1))

    def design(Z):
        Z = np.asarray(Z, dtype=float).reshape(len(Z), -1)
        if not d:
            return np.zeros((len(Z), 1))
        return (Z - mu) / sd

    arch = NetworkArchitecture(max(d, 1), (config.hidden,), 1)
    target = LogisticTarget(arch, design(X), T)
    rng = make_rng(config.seed, 0x5053) if rng is None else rng
    draws = run_gibbs_nuts(target, GSMHyperParams() if hyper is None else hyper,
                           config.sampler_config(), rng)
    weights = [arch.unflatten(w) for w in draws.weights]

    def predictor(Z):
        inputs = np.ascontiguousarray(design(Z).T)
        return np.column_stack([expit(_forward_pass(w, inputs)[1][0]) for w in weights])

    diag = {
        "divergence_rate": draws.divergence_rate,
        "step_size": draws.step_size,
        "mean_accept": float(np.mean(draws.accept_stat)),
    }
    return PropensityDraws(predictor(X), predictor, diag)


def fit_propensity(X, T, backend=None, config=None, rng=None):
    """Posterior propensity draws for covariates ``X`` and treatments ``T``.

    Parameters
    ----------
    X : array_like, shape (n, d)
        Covariates; ``d`` may be 0.
    T : array_like of {0, 1}
    backend : callable, optional
        ``backend(X, T, config, rng) -> PropensityDraws``. Defaults to the
        network classifier.
    """
    T = np.asarray(T)
    if T.ndim != 1 or not np.all(np.isin(T, (0, 1))):
        raise ValueError("treatment must be a binary vector")
    if T.min() == T.max():
        raise ValueError("both treatment arms must be represented")
    backend = fit_network_propensity if backend is None else backend
    return backend(X, T.astype(float), config, rng)
