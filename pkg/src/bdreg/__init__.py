"""Bivariate distribution regression.

Estimates the joint conditional distribution of two outcomes as a grid of
bivariate probits with a tanh-linked local correlation, and derives
counterfactual joint distributions, composition/sorting/marginals
decompositions, transition matrices, and weighted-bootstrap inference.
"""

from .bootstrap import (
    BootstrapEnsemble,
    WeightScheme,
    bootstrap_fit,
    draw_weights,
    ensemble_apply,
    percentile_interval,
    robust_se,
    robust_se_map,
)
from .data import (
    GridSpec,
    Sample,
    build_grid,
    grid_from_values,
    nearest_body_point,
    split_groups,
    validate,
)
from .dependence import (
    BdrFit,
    FitConfig,
    dep_fisher_info,
    dep_score,
    fit_bdr,
    fit_dependence,
    joint_loglik,
    quadrant_probs,
)
from .dgp import CovariateSpec, DgpSpec, generate, true_joint_cdf
from .exceptions import (
    BdrError,
    ConfigError,
    DataError,
    EstimationError,
    InferenceError,
    TailError,
)
from .functionals import (
    CounterfactualIndex,
    DecompositionReport,
    JointCdfSurface,
    TransitionMatrix,
    conditional_joint_cdf,
    counterfactual_joint_cdf,
    decompose_joint,
    decompose_transition,
    fitted_surface,
    independence_counterfactual,
    transition_from_fits,
    transition_matrix,
)
from .marginals import (
    MarginalFit,
    fit_marginal,
    fit_probit_dr,
    fit_tail_scale,
    marginal_index,
)
from .normal import (
    EPS_RHO,
    bvn_cdf,
    bvn_pdf,
    cdf_partials,
    link_eval,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

__version__ = "0.1.0"
