"""Exactly tractable information-theoretic acquisition functions at desk scale.

The package splits into small layers:

- infomath: entropies, divergences, joint tables, Dirichlet entropy moments.
- models: synthetic datasets, conjugate linear regression, Laplace logistic
  regression, parameter sampling, prediction cubes.
- acq_classify: pool scores on prediction cubes (disagreement, joint-batch
  greedy selection, stochastic batch selection, transfer scores, holdout
  referenced sampling scores).
- acq_kernel: Gaussian predictive information, prediction-space and
  gradient kernels, log-det batch selection, Fisher bounds, causal scores.
- density: Gaussian discriminant density model and the entropy error split.
- harness: seeded experiment loops (active learning, active sampling) and
  the rank-correlation report.
- cli: the `infoacq` command line (run / plot / selfcheck).
"""

from infoacq.infomath import (
    DirichletParams,
    JointTable,
    dirichlet_entropy_variance,
    dirichlet_expected_entropy,
    dirichlet_moment_match,
    entropy,
    information_gain,
    kl_divergence,
    mutual_information,
    stirling_binomial_bound,
)
from infoacq.models import (
    Dataset,
    GaussianPredictive,
    ParameterSamples,
    PredictionCube,
    WeightPosterior,
    blr_predictive,
    fit_bayes_linear,
    fit_gp_regression,
    fit_logistic_glm_laplace,
    make_feature_map,
    make_synthetic,
    predict_cube,
    sample_parameters,
)
from infoacq.acq_classify import (
    AcquisitionBatch,
    ConfigSampler,
    ScoreVector,
    bald_scores,
    batchbald_joint_entropy,
    batchbald_select,
    choose_sampler,
    entropy_scores,
    epig_scores,
    epig_nested_mc,
    jepig_conjugate,
    linearized_mutual_information,
    mean_std_scores,
    rho_loss_scores,
    sampled_joint_entropy,
    stochastic_select,
    top_b_select,
    variance_sum_scores,
    variation_ratio_scores,
)
from infoacq.acq_kernel import (
    FisherBundle,
    KernelMatrix,
    causal_scores,
    egl_score,
    empirical_pred_kernel,
    fisher_eig_bounds,
    fisher_epig_trace,
    gaussian_bald,
    gaussian_epig,
    gaussian_joint_entropy,
    glm_fisher_bundle,
    grand_score,
    logdet_batch_select,
    posterior_gradient_kernel,
    psi_gradient_kernel,
    similarity_logdet,
)
from infoacq.density import (
    GdaModel,
    entropy_rmse_decomposition,
    fit_gda,
    log_marginal_density,
)
from infoacq.harness import (
    ExperimentConfig,
    RoundRecord,
    RunRecord,
    rank_correlation_report,
    run_active_learning,
    run_active_sampling,
    write_results_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionBatch",
    "ConfigSampler",
    "Dataset",
    "DirichletParams",
    "ExperimentConfig",
    "FisherBundle",
    "GaussianPredictive",
    "GdaModel",
    "JointTable",
    "KernelMatrix",
    "ParameterSamples",
    "PredictionCube",
    "RoundRecord",
    "RunRecord",
    "ScoreVector",
    "WeightPosterior",
    "bald_scores",
    "batchbald_joint_entropy",
    "batchbald_select",
    "causal_scores",
    "choose_sampler",
    "dirichlet_entropy_variance",
    "dirichlet_expected_entropy",
    "dirichlet_moment_match",
    "egl_score",
    "empirical_pred_kernel",
    "entropy",
    "entropy_rmse_decomposition",
    "entropy_scores",
    "epig_nested_mc",
    "epig_scores",
    "blr_predictive",
    "fisher_eig_bounds",
    "fisher_epig_trace",
    "fit_bayes_linear",
    "fit_gda",
    "fit_gp_regression",
    "fit_logistic_glm_laplace",
    "gaussian_bald",
    "gaussian_epig",
    "gaussian_joint_entropy",
    "glm_fisher_bundle",
    "grand_score",
    "information_gain",
    "jepig_conjugate",
    "kl_divergence",
    "linearized_mutual_information",
    "log_marginal_density",
    "logdet_batch_select",
    "make_feature_map",
    "make_synthetic",
    "mean_std_scores",
    "mutual_information",
    "posterior_gradient_kernel",
    "predict_cube",
    "psi_gradient_kernel",
    "rank_correlation_report",
    "rho_loss_scores",
    "run_active_learning",
    "run_active_sampling",
    "sample_parameters",
    "sampled_joint_entropy",
    "similarity_logdet",
    "stirling_binomial_bound",
    "stochastic_select",
    "top_b_select",
    "variance_sum_scores",
    "variation_ratio_scores",
    "write_results_csv",
]
