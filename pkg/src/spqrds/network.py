"""
Feed-forward network for spline mixture weights, with Gaussian scale
mixture (GSM) priors on its weights.

Layer ``l`` holds a matrix ``W[l]`` of shape ``(V_l, 1 + V_{l-1})``. Column
0 is the bias, columns ``1..V_{l-1}`` multiply the previous layer's
activations. Hidden layers use ``tanh``. The spline mixture head applies a
softmax over ``K`` outputs; the propensity head uses a single logit.

Every weight ``W[l][k, j]`` has prior ``N(0, 1 / (kappa[l] * omega[l][j]))``,
bias column included.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import gamma

from .splines import SplineBasis

LOG_2PI = np.log(2.0 * np.pi)
DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class NetworkArchitecture:
    """Layer widths of a fully connected tanh network.

    Parameters
    ----------
    input_dim : int
        Width of the input layer (``V_0``), e.g. ``d + 2`` for the treatment
        plus a ``d + 1`` dimensional double score.
    hidden : tuple of int
        Hidden layer widths ``V_1 .. V_{L-1}``.
    output_dim : int
        Number of outputs (``K`` for the spline mixture head).
    """

    input_dim: int
    hidden: tuple
    output_dim: int
    shapes: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        hidden = tuple(int(v) for v in self.hidden)
        object.__setattr__(self, "hidden", hidden)
        if self.input_dim < 0 or self.output_dim < 1:
            raise ValueError("input_dim must be >= 0 and output_dim >= 1")
        if len(hidden) < 1 or min(hidden) < 1:
            raise ValueError("need at least one hidden layer, all widths >= 1")
        widths = (self.input_dim,) + hidden + (self.output_dim,)
        shapes = tuple((widths[i + 1], widths[i] + 1) for i in range(len(widths) - 1))
        object.__setattr__(self, "shapes", shapes)

    @property
    def L(self):
        return len(self.shapes)

    @property
    def layer_sizes(self):
        return [r * c for r, c in self.shapes]

    @property
    def n_params(self):
        return int(sum(self.layer_sizes))

    def flatten(self, weights):
        self.check(weights)
        return np.concatenate([np.ravel(w) for w in weights])

    def unflatten(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {vec.shape}")
        out, start = [], 0
        for (r, c) in self.shapes:
            out.append(vec[start:start + r * c].reshape(r, c))
            start += r * c
        return out

    def check(self, weights):
        if len(weights) != self.L:
            raise ValueError(f"expected {self.L} weight matrices, got {len(weights)}")
        for l, (w, shape) in enumerate(zip(weights, self.shapes)):
            if np.shape(w) != shape:
                raise ValueError(f"layer {l + 1}: expected shape {shape}, got {np.shape(w)}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"layer {l + 1}: non-finite weights")

    def zeros(self):
        return [np.zeros(s) for s in self.shapes]

    def init_weights(self, rng, scale=0.1):
        """Random start for a chain: independent ``N(0, scale**2)`` entries."""
        return [scale * rng.standard_normal(s) for s in self.shapes]


def mixture_architecture(d, K, hidden):
    """Architecture for ``theta(T, S)`` with a ``d + 1`` dimensional score."""
    return NetworkArchitecture(input_dim=d + 2, hidden=tuple(hidden), output_dim=K)


@dataclass(frozen=True)
class GSMHyperParams:
    """Gamma shape/rate hyper-priors for the global and local precisions."""

    a_kappa: float = 0.01
    b_kappa: float = 0.01
    a_omega: float = 0.01
    b_omega: float = 0.01

    def __post_init__(self):
        if min(self.a_kappa, self.b_kappa, self.a_omega, self.b_omega) <= 0:
            raise ValueError("Gamma hyper-parameters must be strictly positive")


@dataclass
class PrecisionState:
    """Layer-wise global precisions ``kappa`` and unit-wise local ``omega``.

    ``omega[l]`` has one entry per input unit of layer ``l``, bias first.
    """

    kappa: np.ndarray
    omega: list

    @classmethod
    def ones(cls, arch):
        return cls(np.ones(arch.L), [np.ones(c) for _, c in arch.shapes])

    def copy(self):
        return PrecisionState(self.kappa.copy(), [o.copy() for o in self.omega])

    def check(self, arch):
        if len(self.kappa) != arch.L or len(self.omega) != arch.L:
            raise ValueError("precision state does not match the architecture")
        for (_, c), om in zip(arch.shapes, self.omega):
            if om.shape != (c,):
                raise ValueError("omega length must equal the layer's input units + 1")
        if np.any(~(self.kappa > 0)) or any(np.any(~(om > 0)) for om in self.omega):
            raise ValueError("precisions must be strictly positive")

    def weight_precisions(self, arch):
        """Per-weight prior precision ``kappa[l] * omega[l][j]``, flattened."""
        return np.concatenate([
            np.broadcast_to(k * om[None, :], (r, c)).ravel()
            for k, om, (r, c) in zip(self.kappa, self.omega, arch.shapes)
        ])

    def flatten(self):
        return np.concatenate([self.kappa] + list(self.omega))


# ---------------------------------------------------------------------------
# forward / backward passes


def _forward_pass(weights, inputs):
    """Layer inputs and output logits; arrays are laid out (units, n)."""
    acts = [inputs]
    h = inputs
    for w in weights[:-1]:
        h = np.tanh(w[:, 1:] @ h + w[:, :1])
        acts.append(h)
    w = weights[-1]
    return acts, w[:, 1:] @ h + w[:, :1]


def _backward_pass(weights, acts, dz):
    """Gradients of ``sum(dz * z_out)`` with respect to each weight matrix."""
    grads = [None] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        a = acts[l]
        w = weights[l]
        g = np.empty_like(w)
        g[:, 0] = dz.sum(axis=1)
        g[:, 1:] = dz @ a.T
        grads[l] = g
        if l > 0:
            dz = (w[:, 1:].T @ dz) * (1.0 - a * a)
    return grads


def _softmax_cols(z):
    e = np.exp(z - z.max(axis=0))
    return e / e.sum(axis=0)


def _as_inputs(t, s):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.ndim == 0:
        s = np.atleast_1d(s)
        return np.concatenate([[t], s])[None, :], True
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[0] != t.shape[0]:
        raise ValueError("treatment and score arrays have different lengths")
    return np.column_stack([t, s]), False


def forward(arch, weights, t, s):
    """Mixture weights ``theta(t, s)``.

    Parameters
    ----------
    arch : NetworkArchitecture
    weights : list of numpy.ndarray
    t : float or array_like
        Treatment indicator(s).
    s : array_like
        Score vector of length ``d + 1``, or an ``(n, d + 1)`` matrix.

    Returns
    -------
    numpy.ndarray
        ``(K,)`` for a single subject, ``(n, K)`` otherwise.
    """
    arch.check(weights)
    inputs, single = _as_inputs(t, s)
    if inputs.shape[1] != arch.input_dim:
        raise ValueError(f"expected {arch.input_dim - 1} score components, "
                         f"got {inputs.shape[1] - 1}")
    _, z = _forward_pass(weights, np.ascontiguousarray(inputs.T))
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite network output")
    theta = _softmax_cols(z).T
    return theta[0] if single else theta


# ---------------------------------------------------------------------------
# data and densities


@dataclass
class MixtureData:
    """Outcomes on the unit interval with treatments and balancing scores."""

    y: np.ndarray
    t: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        s = np.asarray(self.s, dtype=float)
        self.s = s[:, None] if s.ndim == 1 else s
        if not (len(self.y) == len(self.t) == len(self.s)):
            raise ValueError("y, t and s must have the same length")
        if np.any(self.y < 0.0) or np.any(self.y > 1.0):
            raise ValueError("outcomes must lie in [0, 1]")

    def __len__(self):
        return len(self.y)

    @property
    def inputs(self):
        return np.column_stack([self.t, self.s])


class NetworkTarget:
    """Log posterior of the network weights with precisions held fixed.

    Subclasses supply the likelihood head through ``_head``, which maps
    output logits to per-observation log-likelihoods and their gradient
    with respect to the logits.
    """

    def __init__(self, arch, inputs):
        self.arch = arch
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[1] != arch.input_dim:
            raise ValueError("input matrix does not match the architecture")
        self.inputs = np.ascontiguousarray(inputs.T)
        self._prec = None
        self._prior_const = 0.0
        self.n_clamped = 0

    def set_precisions(self, precisions):
        precisions.check(self.arch)
        self._prec = precisions.weight_precisions(self.arch)
        self._prior_const = 0.5 * np.sum(np.log(self._prec)) - 0.5 * self._prec.size * LOG_2PI

    def _head(self, z):
        """Map logits ``(outputs, n)`` to log-likelihoods and their logit gradient."""
        raise NotImplementedError

    def pointwise(self, flat):
        _, z = _forward_pass(self.arch.unflatten(flat), self.inputs)
        ll, _ = self._head(z)
        return ll

    def log_prior(self, flat):
        return self._prior_const - 0.5 * np.dot(self._prec * flat, flat)

    def logp_and_grad(self, flat):
        weights = self.arch.unflatten(flat)
        acts, z = _forward_pass(weights, self.inputs)
        if not np.all(np.isfinite(z)):
            return -np.inf, np.zeros_like(flat)
        ll, dz = self._head(z)
        grads = _backward_pass(weights, acts, dz)
        grad = np.concatenate([g.ravel() for g in grads]) - self._prec * flat
        return _pairwise_sum(ll) + self.log_prior(flat), grad

    def logp(self, flat):
        return self.logp_and_grad(flat)[0]

    def fisher_diag(self, flat):
        """Sum over observations of squared per-observation score, per weight."""
        weights = self.arch.unflatten(flat)
        acts, z = _forward_pass(weights, self.inputs)
        _, dz = self._head(z)
        out = [None] * len(weights)
        for l in range(len(weights) - 1, -1, -1):
            a = acts[l]
            w = weights[l]
            f = np.empty_like(w)
            dz2 = dz * dz
            f[:, 0] = dz2.sum(axis=1)
            f[:, 1:] = dz2 @ (a * a).T
            out[l] = f
            if l > 0:
                dz = (w[:, 1:].T @ dz) * (1.0 - a * a)
        return np.concatenate([f.ravel() for f in out])


class SplineMixtureTarget(NetworkTarget):
    """Posterior target for the spline mixture network."""

    def __init__(self, arch, basis: SplineBasis, data: MixtureData, clamp=True):
        if arch.output_dim != basis.K:
            raise ValueError("network output width must equal the number of splines")
        super().__init__(arch, data.inputs)
        self.basis = basis
        self.clamp = clamp
        self.M = np.ascontiguousarray(basis.mspline(data.y).T)

    def _head(self, z):
        theta = _softmax_cols(z)
        dens = (theta * self.M).sum(axis=0)
        low = dens < DENSITY_FLOOR
        self.n_clamped = int(low.sum())
        safe = np.where(low, DENSITY_FLOOR, dens) if self.n_clamped else dens
        with np.errstate(divide="ignore"):
            ll = np.log(safe if self.clamp else dens)
        dz = theta * (self.M / safe - 1.0)
        return ll, dz


def _pairwise_sum(x):
    # np.add.reduce already sums float arrays pairwise in a fixed order
    return float(np.sum(x))


def _target(arch, weights, basis, data, precisions=None, clamp=True):
    tgt = SplineMixtureTarget(arch, basis, data, clamp=clamp)
    tgt.set_precisions(precisions if precisions is not None else PrecisionState.ones(arch))
    return tgt, arch.flatten(weights)


def pointwise_log_likelihood(arch, weights, basis, data, clamp=True):
    """Per-observation ``log f(y_i | t_i, s_i)``."""
    tgt, flat = _target(arch, weights, basis, data, clamp=clamp)
    return tgt.pointwise(flat)


def log_likelihood(arch, weights, basis, data, clamp=False):
    """Sum of ``log sum_k theta_k(t_i, s_i) M_k(y_i)`` over the data.

    With ``clamp=False`` a zero-density observation yields ``-inf``; with
    ``clamp=True`` densities are floored at ``1e-300``.
    """
    if len(data) == 0:
        return 0.0
    return _pairwise_sum(pointwise_log_likelihood(arch, weights, basis, data, clamp=clamp))


def log_prior(arch, weights, precisions):
    """Gaussian log prior of all weights, normalizing constants included."""
    prec = precisions.weight_precisions(arch)
    w = arch.flatten(weights)
    return float(0.5 * np.sum(np.log(prec)) - 0.5 * prec.size * LOG_2PI - 0.5 * np.dot(prec * w, w))


def log_gamma_hyperprior(precisions, hyper):
    """Gamma log densities of all precisions under ``hyper``."""
    out = np.sum(gamma.logpdf(precisions.kappa, hyper.a_kappa, scale=1.0 / hyper.b_kappa))
    for om in precisions.omega:
        out += np.sum(gamma.logpdf(om, hyper.a_omega, scale=1.0 / hyper.b_omega))
    return float(out)


def log_posterior(arch, weights, precisions, basis, data, hyper=None):
    """Unnormalized log posterior of the weights given the precisions.

    The Gaussian prior keeps its ``0.5*log(precision) - 0.5*log(2*pi)``
    terms; the evidence is dropped. When ``hyper`` is given the Gamma
    log densities of the precisions are added as well.
    """
    precisions.check(arch)
    tgt, flat = _target(arch, weights, basis, data, precisions)
    value = tgt.logp(flat)
    if hyper is not None:
        value += log_gamma_hyperprior(precisions, hyper)
    return value


def grad_log_posterior(arch, weights, precisions, basis, data, hyper=None):
    """Analytic gradient of :func:`log_posterior` with respect to every weight.

    ``hyper`` is accepted for symmetry; the hyper-prior does not depend on
    the weights.
    """
    precisions.check(arch)
    tgt, flat = _target(arch, weights, basis, data, precisions)
    _, grad = tgt.logp_and_grad(flat)
    return arch.unflatten(grad)
