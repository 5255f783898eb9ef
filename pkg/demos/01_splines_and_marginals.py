"""
Spline mixtures and their marginals
===================================

The conditional law of an outcome on [0, 1] is a convex combination of
M-spline densities; the matching I-splines give its CDF. Averaging the
mixture weights over subjects gives the marginal law, which is again a
spline mixture. Runs in a second or two.
"""

import numpy as np

from spqrds.counterfactual import bayesian_bootstrap, invert_quantile, marginalize
from spqrds.network import forward, mixture_architecture
from spqrds.sampler import make_rng
from spqrds.splines import SplineBasis, mixture_pdf_cdf

# a basis of 8 order-2 M-splines on equally spaced interior knots
basis = SplineBasis(8)
print("knots:", np.round(basis.knots, 3))

# any point on the simplex is a density
theta = np.array([0.05, 0.1, 0.3, 0.2, 0.1, 0.1, 0.1, 0.05])
y = np.linspace(0, 1, 11)
pdf, cdf = mixture_pdf_cdf(basis, theta, y)
for yi, p, c in zip(y, pdf, cdf):
    print(f"y={yi:.1f}  f={p:.3f}  F={c:.3f}")

# a small network maps (t, score) to weights; random weights stand in
# for a posterior draw here
arch = mixture_architecture(2, 8, (5,))
w = arch.init_weights(np.random.default_rng(0), scale=1.0)
scores = np.random.default_rng(1).uniform(0, 1, (200, 3))
print("theta(t=1, S_0):", np.round(forward(arch, w, 1, scores[0]), 3))

# one Bayesian bootstrap draw of the covariate distribution
u = bayesian_bootstrap(len(scores), make_rng(7))
grid = np.linspace(0, 1, 200)
for t in (0, 1):
    f, F, theta_bar = marginalize(arch, basis, w, scores, u, grid, t)
    q, _ = invert_quantile(grid, F, [0.25, 0.5, 0.75], basis, theta_bar)
    print(f"arm {t}: quartiles {np.round(q, 4)}, mass {np.trapezoid(f, grid):.4f}")
