"""
Second-order M-spline and I-spline bases on the unit interval.

Order-2 M-splines are normalized hat functions, so every basis function
integrates to one and its running integral (the I-spline) climbs from 0
to 1. Convex combinations of the two families give a matching pair of
conditional density and distribution functions.

Knots are equally spaced with the boundary knots repeated once::

    0, 0, 1/(K-1), 2/(K-1), ..., (K-2)/(K-1), 1, 1

which leaves exactly ``K`` basis functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class SplineBasis:
    """K order-2 M/I-spline pairs with equally spaced knots on [0, 1].

    Parameters
    ----------
    K : int
        Number of basis functions, at least 2.
    """

    K: int
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K!r}")
        inner = np.linspace(0.0, 1.0, self.K)
        knots = np.concatenate([[0.0], inner, [1.0]])
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    def _segments(self):
        # (left, peak, right) of each hat, shape (K,)
        t = self.knots
        return t[:-2], t[1:-1], t[2:]

    def mspline(self, y):
        """Evaluate all M-splines at ``y``.

        Parameters
        ----------
        y : array_like
            Points in [0, 1].

        Returns
        -------
        numpy.ndarray
            Array of shape ``y.shape + (K,)``.
        """
        y = _check_unit(y)
        a, b, c = self._segments()
        yy = y[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where((b > a) & (yy >= a) & (yy <= b), (yy - a) / (b - a), 0.0)
            down = np.where((c > b) & (yy >= b) & (yy <= c), (c - yy) / (c - b), 0.0)
        return 2.0 * np.maximum(up, down) / (c - a)

    def ispline(self, y):
        """Evaluate all I-splines (running integrals of the M-splines) at ``y``."""
        y = _check_unit(y)
        a, b, c = self._segments()
        yy = y[..., None]
        width = c - a
        left_mass = (b - a) / width
        with np.errstate(divide="ignore", invalid="ignore"):
            rising = np.where(b > a, (np.clip(yy, a, b) - a) ** 2 / ((b - a) * width), 0.0)
            falling = np.where(
                c > b,
                ((c - b) ** 2 - (c - np.clip(yy, b, c)) ** 2) / ((c - b) * width),
                0.0,
            )
        out = np.where(yy <= b, rising, left_mass + falling)
        return np.clip(out, 0.0, 1.0)


def _check_unit(y):
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(y)) or np.any(y < 0.0) or np.any(y > 1.0):
        raise ValueError("spline arguments must lie in [0, 1]")
    return y


def _check_index(basis, k):
    if int(k) != k or not 1 <= k <= basis.K:
        raise IndexError(f"basis index must be in 1..{basis.K}, got {k!r}")
    return int(k) - 1


def mspline_eval(basis: SplineBasis, k: int, y: float) -> float:
    """M_k(y) with a 1-based basis index ``k``."""
    idx = _check_index(basis, k)
    return float(basis.mspline(y)[..., idx])


def ispline_eval(basis: SplineBasis, k: int, y: float) -> float:
    """I_k(y) with a 1-based basis index ``k``."""
    idx = _check_index(basis, k)
    return float(basis.ispline(y)[..., idx])


def check_weights(theta, K=None, tol=WEIGHT_TOL):
    """Validate mixture weights along the last axis and renormalize them.

    Raises
    ------
    ValueError
        If any weight is negative or a row sum is off by more than ``tol``.
    """
    theta = np.asarray(theta, dtype=float)
    if K is not None and theta.shape[-1] != K:
        raise ValueError(f"expected {K} mixture weights, got {theta.shape[-1]}")
    if np.any(~np.isfinite(theta)) or np.any(theta < 0.0):
        raise ValueError("mixture weights must be finite and nonnegative")
    total = theta.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > tol):
        raise ValueError("mixture weights must sum to 1")
    return theta / total


def mixture_pdf_cdf(basis: SplineBasis, theta, y):
    """Density and distribution function of a spline mixture.

    Parameters
    ----------
    basis : SplineBasis
    theta : array_like
        Mixture weights, shape ``(K,)``, or ``(n, K)`` to pair one weight
        vector with each entry of ``y``.
    y : array_like
        Evaluation points in [0, 1].

    Returns
    -------
    pdf, cdf : numpy.ndarray
    """
    theta = check_weights(theta, basis.K)
    M = basis.mspline(y)
    I = basis.ispline(y)
    pdf = np.sum(M * theta, axis=-1)
    cdf = np.clip(np.sum(I * theta, axis=-1), 0.0, 1.0)
    if np.ndim(pdf) == 0:
        return float(pdf), float(cdf)
    return pdf, cdf
