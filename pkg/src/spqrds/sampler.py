"""
Block MCMC for Bayesian networks with GSM priors.

Each sweep makes one No-U-Turn transition over all weights (precisions held
fixed), then Gibbs-updates every global precision ``kappa[l]`` and every
local precision ``omega[l][j]`` from their Gamma full conditionals.

The NUTS kernel is the slice-sampling variant of Hoffman & Gelman with
dual-averaging step size adaptation during burn-in. Weights are rescaled by
a diagonal metric ``1 / sqrt(prior precision + F)``, where ``F`` is the
empirical Fisher diagonal averaged over burn-in and frozen afterwards; the
prior part tracks the current precisions, which NUTS conditions on.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .network import (
    GSMHyperParams,
    NetworkArchitecture,
    PrecisionState,
    SplineMixtureTarget,
)

logger = logging.getLogger(__name__)

DELTA_MAX = 1000.0
STEP_MIN, STEP_MAX = 1e-8, 1e3
PRECISION_MIN, PRECISION_MAX = 1e-10, 1e10


def make_rng(seed, *stream):
    """Independent counter-based stream keyed by ``(seed, *stream)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SamplerConfig:
    """Run lengths and NUTS settings for one chain."""

    n_iter: int = 3000
    n_burnin: int = 1000
    thin: int = 10
    target_accept: float = 0.8
    max_tree_depth: int = 5
    seed: int = 0
    metric: str = "gsm"

    def __post_init__(self):
        if min(self.n_iter, self.thin, self.max_tree_depth) < 1 or self.n_burnin < 0:
            raise ValueError("n_iter, thin and max_tree_depth must be positive")
        if self.n_burnin >= self.n_iter:
            raise ValueError("n_burnin must be smaller than n_iter")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.metric not in ("gsm", "identity"):
            raise ValueError("metric must be 'gsm' or 'identity'")

    @property
    def n_draws(self):
        return (self.n_iter - self.n_burnin) // self.thin


# ---------------------------------------------------------------------------
# NUTS


@dataclass
class TransitionInfo:
    accept_stat: float
    tree_depth: int
    n_leapfrog: int
    divergent: bool
    energy_error: float
    logp: float


class _Tree:
    __slots__ = ("theta_m", "r_m", "grad_m", "theta_p", "r_p", "grad_p",
                 "theta", "grad", "logp", "H", "n", "s", "alpha", "n_alpha",
                 "divergent")


def _leapfrog(fn, theta, r, grad, eps):
    r = r + 0.5 * eps * grad
    theta = theta + eps * r
    logp, grad = fn(theta)
    r = r + 0.5 * eps * grad
    return theta, r, grad, logp


def _no_u_turn(tree):
    dtheta = tree.theta_p - tree.theta_m
    return np.dot(dtheta, tree.r_m) >= 0 and np.dot(dtheta, tree.r_p) >= 0


def _build_tree(fn, theta, r, grad, log_u, v, depth, eps, H0, rng):
    if depth == 0:
        theta1, r1, grad1, logp1 = _leapfrog(fn, theta, r, grad, v * eps)
        H1 = -logp1 + 0.5 * np.dot(r1, r1)
        if not np.isfinite(H1):
            H1 = np.inf
        t = _Tree()
        t.theta_m = t.theta_p = t.theta = theta1
        t.r_m = t.r_p = r1
        t.grad_m = t.grad_p = t.grad = grad1
        t.logp, t.H = logp1, H1
        t.n = int(log_u <= -H1)
        t.s = int(log_u < DELTA_MAX - H1)
        t.divergent = not t.s
        t.alpha = float(np.exp(min(0.0, H0 - H1)))
        t.n_alpha = 1
        return t

    t = _build_tree(fn, theta, r, grad, log_u, v, depth - 1, eps, H0, rng)
    if not t.s:
        return t
    if v == -1:
        t2 = _build_tree(fn, t.theta_m, t.r_m, t.grad_m, log_u, v, depth - 1, eps, H0, rng)
        t.theta_m, t.r_m, t.grad_m = t2.theta_m, t2.r_m, t2.grad_m
    else:
        t2 = _build_tree(fn, t.theta_p, t.r_p, t.grad_p, log_u, v, depth - 1, eps, H0, rng)
        t.theta_p, t.r_p, t.grad_p = t2.theta_p, t2.r_p, t2.grad_p
    n_tot = t.n + t2.n
    if n_tot > 0 and rng.uniform() < t2.n / n_tot:
        t.theta, t.grad, t.logp, t.H = t2.theta, t2.grad, t2.logp, t2.H
    t.alpha += t2.alpha
    t.n_alpha += t2.n_alpha
    t.divergent = t.divergent or t2.divergent
    t.s = int(t2.s and _no_u_turn(t))
    t.n = n_tot
    return t


def nuts_draw(theta, logp_and_grad, step_size, max_tree_depth, rng, logp=None, grad=None):
    """One No-U-Turn transition from ``theta``.

    Parameters
    ----------
    theta : numpy.ndarray
        Current position (flattened parameters).
    logp_and_grad : callable
        Returns ``(log density, gradient)`` at a position.
    step_size : float
    max_tree_depth : int
    rng : numpy.random.Generator
    logp, grad : optional
        Cached values at ``theta``.

    Returns
    -------
    theta_new, logp_new, grad_new, TransitionInfo
    """
    if logp is None or grad is None:
        logp, grad = logp_and_grad(theta)
    if not np.isfinite(logp):
        raise ValueError("log density is not finite at the current state")

    r0 = rng.standard_normal(theta.shape)
    H0 = -logp + 0.5 * np.dot(r0, r0)
    log_u = -H0 - rng.exponential()

    tree = _Tree()
    tree.theta_m = tree.theta_p = theta
    tree.r_m = tree.r_p = r0
    tree.grad_m = tree.grad_p = grad
    new_theta, new_logp, new_grad, new_H = theta, logp, grad, H0
    n, s, depth = 1, 1, 0
    alpha, n_alpha, divergent = 0.0, 0, False

    while s and depth < max_tree_depth:
        v = -1 if rng.uniform() < 0.5 else 1
        if v == -1:
            sub = _build_tree(logp_and_grad, tree.theta_m, tree.r_m, tree.grad_m,
                              log_u, v, depth, step_size, H0, rng)
            tree.theta_m, tree.r_m, tree.grad_m = sub.theta_m, sub.r_m, sub.grad_m
        else:
            sub = _build_tree(logp_and_grad, tree.theta_p, tree.r_p, tree.grad_p,
                              log_u, v, depth, step_size, H0, rng)
            tree.theta_p, tree.r_p, tree.grad_p = sub.theta_p, sub.r_p, sub.grad_p
        if sub.s and rng.uniform() < sub.n / n:
            new_theta, new_logp, new_grad, new_H = sub.theta, sub.logp, sub.grad, sub.H
        n += sub.n
        alpha += sub.alpha
        n_alpha += sub.n_alpha
        divergent = divergent or sub.divergent
        s = int(sub.s and _no_u_turn(tree))
        depth += 1

    info = TransitionInfo(
        accept_stat=alpha / max(n_alpha, 1),
        tree_depth=depth,
        n_leapfrog=n_alpha,
        divergent=bool(divergent),
        energy_error=float(new_H - H0),
        logp=float(new_logp),
    )
    return new_theta, new_logp, new_grad, info


def find_reasonable_step_size(theta, logp_and_grad, rng, step_size=1.0):
    """Heuristic initial step size: double or halve until the one-step
    acceptance probability crosses 1/2."""
    logp, grad = logp_and_grad(theta)
    r = rng.standard_normal(theta.shape)
    H0 = -logp + 0.5 * np.dot(r, r)

    def log_ratio(eps):
        _, r1, _, lp1 = _leapfrog(logp_and_grad, theta, r, grad, eps)
        H1 = -lp1 + 0.5 * np.dot(r1, r1)
        return H0 - H1 if np.isfinite(H1) else -np.inf

    lr = log_ratio(step_size)
    a = 1.0 if lr > np.log(0.5) else -1.0
    for _ in range(100):
        if not a * lr > -a * np.log(2.0):
            break
        step_size *= 2.0 ** a
        if not STEP_MIN <= step_size <= STEP_MAX:
            break
        lr = log_ratio(step_size)
    return float(np.clip(step_size, STEP_MIN, STEP_MAX))


def _exp_clamped(log_step):
    # snap to the bounds exactly, exp(log(x)) can miss x by one ulp
    if log_step <= np.log(STEP_MIN):
        return STEP_MIN
    if log_step >= np.log(STEP_MAX):
        return STEP_MAX
    return float(np.exp(log_step))


class DualAveraging:
    """Dual-averaging step size adaptation toward a target acceptance rate.

    The shrinkage point is the initial step size itself, so a stream of
    acceptance statistics equal to the target leaves the step size put.
    """

    def __init__(self, step_size, target_accept=0.8, gamma=0.05, t0=10.0, kappa=0.75):
        self.mu = np.log(step_size)
        self.target = target_accept
        self.gamma, self.t0, self.kappa = gamma, t0, kappa
        self.t = 0
        self.h_bar = 0.0
        self.log_step = np.log(step_size)
        self.log_step_bar = 0.0

    def update(self, accept_stat):
        self.t += 1
        w = 1.0 / (self.t + self.t0)
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_stat)
        x = self.mu - np.sqrt(self.t) / self.gamma * self.h_bar
        self.log_step = float(np.clip(x, np.log(STEP_MIN), np.log(STEP_MAX)))
        eta = self.t ** (-self.kappa)
        self.log_step_bar = eta * self.log_step + (1.0 - eta) * self.log_step_bar
        return self.step_size

    @property
    def step_size(self):
        return _exp_clamped(self.log_step)

    @property
    def final_step_size(self):
        if self.t == 0:
            return self.step_size
        return _exp_clamped(self.log_step_bar)


def adapt_step_size(history, target_accept=0.8, step_size=1.0):
    """Run dual averaging over a sequence of acceptance statistics and return
    the step size after the last update."""
    da = DualAveraging(step_size, target_accept)
    for a in history:
        da.update(a)
    return da.step_size


# ---------------------------------------------------------------------------
# Gibbs updates


def kappa_conditional(W, omega, hyper):
    """Gamma (shape, rate) of the global precision of one layer."""
    W = np.asarray(W, dtype=float)
    shape = hyper.a_kappa + 0.5 * W.size
    rate = hyper.b_kappa + 0.5 * np.sum(omega[None, :] * W * W)
    return shape, rate


def omega_conditional(W, kappa, j, hyper):
    """Gamma (shape, rate) of the local precision of input unit ``j``
    (``j = 0`` is the bias) of one layer."""
    col = np.asarray(W, dtype=float)[:, j]
    shape = hyper.a_omega + 0.5 * col.size
    rate = hyper.b_omega + 0.5 * kappa * np.dot(col, col)
    return shape, rate


def gibbs_update_kappa(weights, omega, hyper, layer, rng):
    """Draw ``kappa[layer]`` from its full conditional (layers are 0-based)."""
    shape, rate = kappa_conditional(weights[layer], omega[layer], hyper)
    return rng.gamma(shape, 1.0 / rate)


def gibbs_update_omega(weights, kappa, hyper, layer, unit, rng):
    """Draw ``omega[layer][unit]`` from its full conditional."""
    shape, rate = omega_conditional(weights[layer], kappa[layer], unit, hyper)
    return rng.gamma(shape, 1.0 / rate)


def gibbs_sweep(weights, precisions, hyper, rng):
    """Update all ``kappa`` then all ``omega``; returns a new PrecisionState."""
    kappa = precisions.kappa.copy()
    omega = [om.copy() for om in precisions.omega]
    for l, W in enumerate(weights):
        shape, rate = kappa_conditional(W, omega[l], hyper)
        kappa[l] = np.clip(rng.gamma(shape, 1.0 / rate), PRECISION_MIN, PRECISION_MAX)
    for l, W in enumerate(weights):
        shape = hyper.a_omega + 0.5 * W.shape[0]
        rate = hyper.b_omega + 0.5 * kappa[l] * np.sum(W * W, axis=0)
        omega[l] = np.clip(rng.gamma(shape, 1.0 / rate), PRECISION_MIN, PRECISION_MAX)
    return PrecisionState(kappa, omega)


# ---------------------------------------------------------------------------
# chains


@dataclass
class PosteriorDraws:
    """Thinned post-burn-in draws of one chain.

    ``weights`` is ``(N, n_params)``; ``precisions`` is ``(N, n_precisions)``
    laid out as ``kappa`` followed by each layer's ``omega``.
    """

    arch: NetworkArchitecture
    weights: np.ndarray
    precisions: np.ndarray
    accept_stat: np.ndarray
    tree_depth: np.ndarray
    divergent: np.ndarray
    energy_error: np.ndarray
    step_size: float
    divergence_rate: float
    n_clamped: int = 0
    warmup_accept: float = field(default=np.nan)

    def __len__(self):
        return len(self.weights)

    def weights_at(self, i):
        return self.arch.unflatten(self.weights[i])

    def precisions_at(self, i):
        vec = self.precisions[i]
        L = self.arch.L
        kappa = vec[:L].copy()
        omega, start = [], L
        for _, c in self.arch.shapes:
            omega.append(vec[start:start + c].copy())
            start += c
        return PrecisionState(kappa, omega)

    def to_csv(self, path):
        """One row per retained draw: diagnostics, weights ``w<i>``, then
        precisions (``kappa<l>``, ``omega<l>_<j>``, 0-based indices)."""
        header = ["draw", "accept_stat", "tree_depth", "divergent", "energy_error"]
        header += [f"w{i}" for i in range(self.weights.shape[1])]
        header += [f"kappa{l}" for l in range(self.arch.L)]
        header += [f"omega{l}_{j}" for l, (_, c) in enumerate(self.arch.shapes) for j in range(c)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(self)):
                writer.writerow(
                    [i, repr(float(self.accept_stat[i])), int(self.tree_depth[i]),
                     int(self.divergent[i]), repr(float(self.energy_error[i]))]
                    + [repr(float(x)) for x in self.weights[i]]
                    + [repr(float(x)) for x in self.precisions[i]]
                )


def _scaled(fn, scale):
    def scaled(u):
        logp, grad = fn(u * scale)
        return logp, grad * scale
    return scaled


def run_gibbs_nuts(target, hyper, config, rng=None, init=None, max_init_tries=100):
    """Alternate NUTS over the weights of ``target`` with Gibbs precision updates.

    Parameters
    ----------
    target : NetworkTarget
        Supplies ``logp_and_grad``, ``fisher_diag`` and ``set_precisions``.
    hyper : GSMHyperParams
    config : SamplerConfig
    rng : numpy.random.Generator, optional
        Defaults to the stream keyed by ``config.seed``.
    init : numpy.ndarray, optional
        Starting weights; random ``N(0, 0.1^2)`` otherwise.
    """
    arch = target.arch
    rng = make_rng(config.seed) if rng is None else rng
    precisions = PrecisionState.ones(arch)
    target.set_precisions(precisions)

    theta = None
    for attempt in range(max_init_tries):
        cand = np.array(init, dtype=float) if (init is not None and attempt == 0) \
            else arch.flatten(arch.init_weights(rng))
        logp, grad = target.logp_and_grad(cand)
        if np.isfinite(logp) and np.all(np.isfinite(grad)):
            theta = cand
            break
    if theta is None:
        raise RuntimeError(f"no finite starting point after {max_init_tries} attempts")

    use_metric = config.metric == "gsm"
    fisher = target.fisher_diag(theta) if use_metric else None
    n_fisher = 1

    def metric_scale():
        if not use_metric:
            return np.ones(arch.n_params)
        return 1.0 / np.sqrt(precisions.weight_precisions(arch) + fisher)

    scale = metric_scale()
    step = find_reasonable_step_size(theta / scale, _scaled(target.logp_and_grad, scale), rng)
    adapter = DualAveraging(step, config.target_accept)

    n_keep = config.n_draws
    out_w = np.empty((n_keep, arch.n_params))
    out_p = np.empty((n_keep, precisions.flatten().size))
    acc = np.empty(n_keep)
    depth = np.empty(n_keep, dtype=int)
    div = np.zeros(n_keep, dtype=bool)
    energy = np.empty(n_keep)
    n_div_post = 0
    n_clamped = 0
    warm_acc = []

    keep = 0
    for it in range(config.n_iter):
        u, _, _, info = nuts_draw(theta / scale, _scaled(target.logp_and_grad, scale),
                                  step, config.max_tree_depth, rng)
        theta = u * scale
        n_clamped += target.n_clamped
        if it < config.n_burnin:
            step = adapter.update(info.accept_stat)
            warm_acc.append(info.accept_stat)
            if use_metric:
                n_fisher += 1
                fisher += (target.fisher_diag(theta) - fisher) / n_fisher
            if it == config.n_burnin - 1:
                step = adapter.final_step_size
        else:
            n_div_post += info.divergent

        precisions = gibbs_sweep(arch.unflatten(theta), precisions, hyper, rng)
        target.set_precisions(precisions)
        scale = metric_scale()

        post = it - config.n_burnin
        if post >= 0 and (post + 1) % config.thin == 0 and keep < n_keep:
            out_w[keep] = theta
            out_p[keep] = precisions.flatten()
            acc[keep] = info.accept_stat
            depth[keep] = info.tree_depth
            div[keep] = info.divergent
            energy[keep] = info.energy_error
            keep += 1

    if n_clamped:
        logger.warning("%d density evaluations were clamped at the floor", n_clamped)
    return PosteriorDraws(
        arch=arch, weights=out_w, precisions=out_p, accept_stat=acc, tree_depth=depth,
        divergent=div, energy_error=energy, step_size=step,
        divergence_rate=n_div_post / (config.n_iter - config.n_burnin),
        n_clamped=n_clamped,
        warmup_accept=float(np.mean(warm_acc)) if warm_acc else np.nan,
    )


def run_chain(arch, basis, data, hyper=None, config=None, rng=None):
    """Posterior draws of the spline mixture network on ``data``."""
    if len(data) == 0:
        raise ValueError("cannot run a chain on an empty dataset")
    hyper = GSMHyperParams() if hyper is None else hyper
    config = SamplerConfig() if config is None else config
    target = SplineMixtureTarget(arch, basis, data)
    return run_gibbs_nuts(target, hyper, config, rng)
