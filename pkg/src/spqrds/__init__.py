"""
Bayesian semiparametric estimation of counterfactual outcome distributions
and quantile treatment effects.

The conditional law of the outcome given treatment and a balancing score
is a mixture of M-splines whose weights come from a tanh network with
Gaussian scale mixture priors. Weights are sampled with NUTS, precisions
with Gibbs steps, and the conditional law is marginalized over Bayesian
bootstrap draws of the score distribution.
"""

__version__ = "0.1.0"

from .splines import SplineBasis, check_weights, ispline_eval, mixture_pdf_cdf, mspline_eval
from .network import (
    GSMHyperParams,
    MixtureData,
    NetworkArchitecture,
    PrecisionState,
    SplineMixtureTarget,
    forward,
    grad_log_posterior,
    log_likelihood,
    log_posterior,
    mixture_architecture,
)
from .sampler import (
    DualAveraging,
    PosteriorDraws,
    SamplerConfig,
    adapt_step_size,
    gibbs_update_kappa,
    gibbs_update_omega,
    make_rng,
    nuts_draw,
    run_chain,
)
from .propensity import PropensityConfig, PropensityDraws, fit_propensity, known_propensity
from .counterfactual import (
    CounterfactualDraws,
    EstimateConfig,
    OutcomeScale,
    bayesian_bootstrap,
    build_double_score,
    estimate,
    fit_estimate,
    invert_quantile,
    marginalize,
    normalize_outcome,
    summarize,
)
from .simulations import (
    SimulationDesign,
    TrueMarginals,
    gen_sim1,
    gen_sim2,
    gen_sim3,
    gen_sim4,
    true_marginals,
)
from .metrics import aab, aab_per_replicate, ise, rmse_tau, waic
