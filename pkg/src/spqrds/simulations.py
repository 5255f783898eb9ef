"""
Data-generating processes for the four simulation designs, with Monte
Carlo oracles for the true counterfactual marginals.

Every design draws covariates ``X``, treatments ``T | X`` and both
potential outcomes; the observed outcome is ``T Y(1) + (1 - T) Y(0)``.
The oracle averages the known conditional densities over a large fresh
covariate sample (closed forms for design 4).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, ndtr, owens_t

from .sampler import make_rng

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _npdf(y, loc=0.0, scale=1.0):
    z = (y - loc) / scale
    return _INV_SQRT_2PI / scale * np.exp(-0.5 * z * z)


def _ncdf(y, loc=0.0, scale=1.0):
    return ndtr((y - loc) / scale)

# Design 3: propensity network and covariate covariance
SIM3_W_HIDDEN = np.array([
    [-0.99, -1.1, -0.14, -0.26],
    [-0.18, 0.03, -1.45, -0.07],
    [-0.44, 0.19, 0.86, 0.36],
    [-1.07, 0.67, -0.58, -0.13],
    [0.12, -0.37, 0.47, 1.25],
])
SIM3_B_HIDDEN = np.array([0.96, 0.64, 0.74, -0.46, 0.21])
SIM3_W_OUT = np.array([-0.15, 0.3, -0.004, -0.21, -0.88])
SIM3_B_OUT = -0.05
SIM3_COV = np.array([
    [1.0, 0.5, 0.2, 0.3],
    [0.5, 1.0, 0.7, 0.0],
    [0.2, 0.7, 1.0, 0.0],
    [0.3, 0.0, 0.0, 1.0],
])
for _a in (SIM3_W_HIDDEN, SIM3_B_HIDDEN, SIM3_W_OUT, SIM3_COV):
    _a.setflags(write=False)


@dataclass(frozen=True)
class Sim3Params:
    """Constants of design 3."""

    W_h: np.ndarray = field(default_factory=lambda: SIM3_W_HIDDEN)
    b_h: np.ndarray = field(default_factory=lambda: SIM3_B_HIDDEN)
    W_o: np.ndarray = field(default_factory=lambda: SIM3_W_OUT)
    b_o: float = SIM3_B_OUT
    covariance: np.ndarray = field(default_factory=lambda: SIM3_COV)


@dataclass(frozen=True)
class SimulationDesign:
    """One of the four simulation designs.

    Parameters
    ----------
    id : int
        Design number, 1 to 4.
    J : int
        Number of confounders in design 1.
    n : int
        Sample size.
    seed : int
        Base seed; replicate ``r`` uses the stream ``(seed, r)``.
    rates : tuple of float
        Exponential rates of ``Y(0)`` and ``Y(1)`` in design 4.
    """

    id: int
    J: int = 0
    n: int = 500
    seed: int = 0
    rates: tuple = (2.0, 4.0)

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ValueError(f"unknown design {self.id!r}")
        if not 0 <= self.J <= 5:
            raise ValueError("J must lie in 0..5")
        if self.n < 1:
            raise ValueError("n must be positive")
        if len(self.rates) != 2 or min(self.rates) <= 0:
            raise ValueError("rates must be two positive numbers")

    def rng(self, replicate=0):
        return make_rng(self.seed, replicate)

    def generate(self, replicate=0):
        rng = self.rng(replicate)
        if self.id == 1:
            return gen_sim1(self.J, self.n, rng)
        if self.id == 2:
            return gen_sim2(self.n, rng)
        if self.id == 3:
            return gen_sim3(self.n, rng)
        return gen_sim4(self.n, rng, self.rates)


@dataclass
class SimDataset:
    """A generated sample with both potential outcomes and the true propensity."""

    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    Y0: np.ndarray
    Y1: np.ndarray
    pi: np.ndarray

    def __len__(self):
        return len(self.Y)

    def to_csv(self, path):
        d = self.X.shape[1]
        cols = ["y", "t"] + [f"x{j + 1}" for j in range(d)] + ["y0", "y1", "pi"]
        table = np.column_stack([self.Y, self.T, self.X, self.Y0, self.Y1, self.pi])
        np.savetxt(path, table, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def _finish(X, pi, Y0, Y1, rng):
    T = (rng.uniform(size=len(pi)) < pi).astype(int)
    Y = np.where(T == 1, Y1, Y0)
    return SimDataset(X, T, Y, Y0, Y1, pi)


def _normal_mixture_rvs(w1, m1, s1, m2, s2, rng):
    first = rng.uniform(size=np.shape(m1)) < w1
    return np.where(first, rng.normal(m1, s1), rng.normal(m2, s2))


# design 1 -----------------------------------------------------------------

def _sim1_z(X, k):
    return expit(0.8 * X.sum(axis=1) + 0.1 * np.sum(np.abs(X) ** k, axis=1))


def sim1_propensity(X, J):
    if J == 0:
        return np.full(len(X), 0.5)
    return expit(4.0 / J * X[:, :J].sum(axis=1))


def _sim1_y0_loc(X):
    z1 = _sim1_z(X, 1)
    return -2.3 + z1 + z1 ** 2


def _sim1_eps_rvs(n, rng):
    pos = rng.uniform(size=n) < 0.75
    return np.where(pos, np.abs(rng.normal(0.0, 0.9, n)), -np.abs(rng.normal(0.0, 0.3, n)))


def _sim1_eps_pdf(e):
    pos = 0.75 * 2.0 * _npdf(e, 0.0, 0.9)
    neg = 0.25 * 2.0 * _npdf(e, 0.0, 0.3)
    return np.where(e >= 0.0, pos, neg)


def _sim1_eps_cdf(e):
    pos = 0.25 + 0.75 * (2.0 * _ncdf(e, 0.0, 0.9) - 1.0)
    neg = 0.25 * 2.0 * _ncdf(np.minimum(e, 0.0), 0.0, 0.3)
    return np.where(e >= 0.0, pos, neg)


def gen_sim1(J, n, rng):
    """Design 1: five uniform covariates, ``J`` of them confounders."""
    if J not in (0, 2):
        raise ValueError("design 1 uses J = 0 or J = 2")
    X = rng.uniform(-2.0, 2.0, (n, 5))
    pi = sim1_propensity(X, J)
    Y0 = _sim1_y0_loc(X) + _sim1_eps_rvs(n, rng)
    z2 = _sim1_z(X, 2)
    Y1 = _normal_mixture_rvs(0.7, -2.5 + 5 * z2, 0.35, 2.5 - 5 * z2, 0.35, rng)
    return _finish(X, pi, Y0, Y1, rng)


# design 2 -----------------------------------------------------------------

def sim2_propensity(X):
    lin = -2.125 + 0.5 * X[:, 0] * X[:, 3] + X[:, 1] * X[:, 4]
    lin = lin + np.sum(X[:, :6] * X[:, 6:12], axis=1)
    return expit(lin)


def _sim2_components(X):
    Z = sim2_propensity(X)
    w = np.sqrt(Z)
    y0 = (w, 2 * Z ** 2 + X[:, 3] + X[:, 2], 0.5,
          Z ** 2 + X[:, 1] - np.sum(X[:, :3] ** 2, axis=1), 0.8)
    y1 = (0.6, -Z, 0.8, X[:, 4] + Z, 1.0)
    return Z, y0, y1


def gen_sim2(n, rng):
    """Design 2: six continuous and six binary confounders."""
    X = np.column_stack([
        rng.uniform(0.0, 1.0, (n, 3)),
        rng.uniform(1.0, 2.0, (n, 3)),
        rng.binomial(1, 0.5, (n, 6)).astype(float),
    ])
    Z, c0, c1 = _sim2_components(X)
    Y0 = _normal_mixture_rvs(*c0, rng=rng)
    Y1 = _normal_mixture_rvs(*c1, rng=rng)
    return _finish(X, Z, Y0, Y1, rng)


# design 3 -----------------------------------------------------------------

def skewnorm_rvs(loc, scale, shape, rng, size=None):
    """Skew-normal draws from the two-Gaussian representation."""
    size = np.broadcast(loc, scale).shape if size is None else size
    delta = shape / np.sqrt(1.0 + shape ** 2)
    u0 = np.abs(rng.standard_normal(size))
    u1 = rng.standard_normal(size)
    return loc + scale * (delta * u0 + np.sqrt(1.0 - delta ** 2) * u1)


def skewnorm_pdf(y, loc, scale, shape):
    """Closed-form skew-normal density ``2/scale phi(z) Phi(shape z)``."""
    z = (y - loc) / scale
    return 2.0 / scale * _npdf(z) * _ncdf(shape * z)


def skewnorm_cdf(y, loc, scale, shape):
    """Skew-normal CDF ``Phi(z) - 2 T(z, shape)`` with Owen's T function."""
    z = (y - loc) / scale
    return np.clip(_ncdf(z) - 2.0 * owens_t(z, shape), 0.0, 1.0)


def sim3_propensity(X, params=None):
    p = Sim3Params() if params is None else params
    hidden = np.tanh(X @ p.W_h.T + p.b_h)
    return expit(hidden @ p.W_o + p.b_o)


def _sim3_locs(X):
    loc0 = 2 * np.tanh(X[:, 1] - X[:, 2] + 0.5 * X[:, 3])
    loc1 = 2 * np.tanh(X[:, 0] + 0.5 * X[:, 1] - X[:, 2] ** 2)
    return loc0, loc1


def gen_sim3(n, rng):
    """Design 3: four correlated Gaussian confounders, network propensity."""
    X = rng.multivariate_normal(np.zeros(4), SIM3_COV, size=n, method="cholesky")
    pi = sim3_propensity(X)
    loc0, loc1 = _sim3_locs(X)
    Y0 = skewnorm_rvs(loc0, 0.5, 3.0, rng)
    Y1 = rng.normal(loc1, 0.5)
    return _finish(X, pi, Y0, Y1, rng)


# design 4 -----------------------------------------------------------------

def gen_sim4(n, rng, rates=(2.0, 4.0)):
    """Design 4: inert covariates, randomized treatment, exponential outcomes."""
    X = rng.uniform(-2.0, 2.0, (n, 5))
    pi = np.full(n, 0.5)
    Y0 = rng.exponential(1.0 / rates[0], n)
    Y1 = rng.exponential(1.0 / rates[1], n)
    return _finish(X, pi, Y0, Y1, rng)


def sim4_qte(tau, rates=(2.0, 4.0)):
    """Exact QTE of design 4, ``q_1(tau) - q_0(tau)``."""
    tau = np.asarray(tau, dtype=float)
    return -np.log1p(-tau) * (1.0 / rates[1] - 1.0 / rates[0])


# oracles ------------------------------------------------------------------

def _mix_pdf(y, w, m1, s1, m2, s2):
    return w * _npdf(y, m1, s1) + (1 - w) * _npdf(y, m2, s2)


def _mix_cdf(y, w, m1, s1, m2, s2):
    return w * _ncdf(y, m1, s1) + (1 - w) * _ncdf(y, m2, s2)


def _covariates(design, n, rng):
    if design.id in (1, 4):
        return rng.uniform(-2.0, 2.0, (n, 5))
    if design.id == 2:
        return np.column_stack([
            rng.uniform(0.0, 1.0, (n, 3)), rng.uniform(1.0, 2.0, (n, 3)),
            rng.binomial(1, 0.5, (n, 6)).astype(float),
        ])
    return rng.multivariate_normal(np.zeros(4), SIM3_COV, size=n, method="cholesky")


def conditional_pdf_cdf(design, X, t, y):
    """Conditional density and CDF of ``Y(t)`` given each row of ``X``.

    ``y`` broadcasts against the rows of ``X``; pass ``y[:, None]`` to get
    arrays of shape ``(len(y), len(X))``.
    """
    y = np.asarray(y, dtype=float)
    if design.id == 1:
        if t == 0:
            e = y - _sim1_y0_loc(X)
            return _sim1_eps_pdf(e), _sim1_eps_cdf(e)
        z2 = _sim1_z(X, 2)
        c = (0.7, -2.5 + 5 * z2, 0.35, 2.5 - 5 * z2, 0.35)
        return _mix_pdf(y, *c), _mix_cdf(y, *c)
    if design.id == 2:
        _, c0, c1 = _sim2_components(X)
        c = c1 if t == 1 else c0
        return _mix_pdf(y, *c), _mix_cdf(y, *c)
    if design.id == 3:
        loc0, loc1 = _sim3_locs(X)
        if t == 0:
            return skewnorm_pdf(y, loc0, 0.5, 3.0), skewnorm_cdf(y, loc0, 0.5, 3.0)
        return _npdf(y, loc1, 0.5), _ncdf(y, loc1, 0.5)
    rate = design.rates[t]
    y = np.broadcast_to(y, np.broadcast_shapes(y.shape, (len(X),)))
    yp = np.maximum(y, 0.0)
    return np.where(y >= 0, rate * np.exp(-rate * yp), 0.0), -np.expm1(-rate * yp)


class TrueMarginals:
    """Counterfactual marginal densities, CDFs and quantiles of a design.

    Designs 1 to 3 average the conditional laws over ``n_mc`` fresh
    covariate draws; design 4 uses the exponential closed forms.
    """

    _BLOCK = 16

    def __init__(self, design, n_mc=100_000, rng=None):
        if design.id != 4 and n_mc < 100_000:
            raise ValueError("the Monte Carlo oracle needs n_mc >= 1e5")
        self.design = design
        self.n_mc = n_mc
        rng = make_rng(design.seed, 0x7275) if rng is None else rng
        self.X = None if design.id == 4 else _covariates(design, n_mc, rng)
        self._table = {}

    @property
    def exact(self):
        return self.design.id == 4

    def _average(self, y, t, which):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.size)
        for i in range(0, flat.size, self._BLOCK):
            blk = flat[i:i + self._BLOCK]
            vals = conditional_pdf_cdf(self.design, self.X, t, blk[:, None])[which]
            out[i:i + self._BLOCK] = vals.mean(axis=1)
        return out.reshape(y.shape)

    def pdf(self, y, t):
        y = np.asarray(y, dtype=float)
        if self.exact:
            rate = self.design.rates[t]
            return np.where(y >= 0, rate * np.exp(-rate * np.maximum(y, 0.0)), 0.0)
        return self._average(y, t, 0)

    def cdf(self, y, t):
        y = np.asarray(y, dtype=float)
        if self.exact:
            rate = self.design.rates[t]
            return -np.expm1(-rate * np.maximum(y, 0.0))
        return self._average(y, t, 1)

    def _cdf_table(self, t):
        # coarse tabulation used only to bracket quantile roots
        if t not in self._table:
            grid = np.linspace(-15.0, 15.0, 121)
            self._table[t] = (grid, self.cdf(grid, t))
        return self._table[t]

    def quantile(self, tau, t):
        tau = np.asarray(tau, dtype=float)
        if self.exact:
            return -np.log1p(-tau) / self.design.rates[t]
        grid, F = self._cdf_table(t)
        out = []
        for q in tau.ravel():
            i = int(np.searchsorted(F, q))
            lo, hi = grid[max(i - 1, 0)], grid[min(i, len(grid) - 1)]
            out.append(optimize.brentq(lambda v: float(self.cdf(v, t)) - q, lo, hi, xtol=1e-9))
        return np.array(out).reshape(tau.shape)

    def qte(self, tau):
        return self.quantile(tau, 1) - self.quantile(tau, 0)

    def support(self, lo_tau=1e-3, hi_tau=1 - 1e-3):
        """A raw-scale interval holding all but ``2e-3`` mass of both arms."""
        qs = [self.quantile(np.array([lo_tau, hi_tau]), t) for t in (0, 1)]
        return min(q[0] for q in qs), max(q[1] for q in qs)


def true_marginals(design, n_mc=100_000, rng=None, grid=None, taus=None):
    """Oracle tables for ``design``.

    Returns
    -------
    dict
        ``grid``, ``f0``, ``F0``, ``f1``, ``F1`` on a raw-scale grid of
        200 points spanning both arms, ``taus``, ``q0``, ``q1``, ``qte``,
        and the ``TrueMarginals`` object under ``oracle``.
    """
    oracle = TrueMarginals(design, n_mc, rng)
    if grid is None:
        grid = np.linspace(*oracle.support(), 200)
    taus = np.round(np.arange(1, 20) * 0.05, 2) if taus is None else np.asarray(taus)
    out = {"grid": np.asarray(grid, dtype=float), "taus": taus, "oracle": oracle}
    for t in (0, 1):
        out[f"f{t}"] = oracle.pdf(grid, t)
        out[f"F{t}"] = oracle.cdf(grid, t)
        out[f"q{t}"] = oracle.quantile(taus, t)
    out["qte"] = out["q1"] - out["q0"]
    return out
