"""Injectivity and stability analysis for phase retrieval measurement ensembles."""

from ._parallel import BudgetExceeded
from .ensemble import (
    COMPLEX,
    REAL,
    MeasurementEnsemble,
    ProjectiveVector,
    canonicalize,
    fractional_dft_3,
    fractional_dft_stack,
    hermitian_basis,
    identity_ensemble,
    injective_3x8_example,
    intensity_map,
    lift,
    load_ensemble,
    projective_distance,
    root_intensity_map,
    save_ensemble,
    super_analysis_operator,
)
from .injectivity import (
    InjectivityVerdict,
    bounds_summary,
    check_injectivity,
    complement_property,
    hmw_test,
    nullspace_classifier,
    real_injectivity,
    span_condition,
)
from .stability_avg import NoiseModel, fisher_matrix, monte_carlo_fisher, score_vector
from .stability_worst import (
    GaussianExperimentConfig,
    localized_fourier_frame,
    operator_norm,
    run_gaussian_experiment,
    sample_lipschitz_ratios,
    scp_sigma,
)

__version__ = "0.1.0"
