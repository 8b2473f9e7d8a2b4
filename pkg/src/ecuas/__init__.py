"""Decision-theoretic evaluation metrics for uncertainty-augmented systems."""

__version__ = "0.1.0"

from .core import (
    REJECT,
    BayesOutcome,
    CategoricalDistribution,
    ClampCounters,
    ConfidenceOnly,
    CostKind,
    CostMatrix,
    DiracAt,
    FullPosterior,
    PowerLaw,
    Tabulated,
    bayes_candidate,
    bayes_decision,
    c_gamma_star,
    c_n01,
    c_n01g,
    c_n_star,
    ecuas,
    u_max,
)
from .quadrature import QuadratureConfig, c_w_numeric, c_w_numeric_confidence, u_max_grid
from .baselines import (
    RiskCoveragePoint,
    ScoredSample,
    auc,
    aurc,
    brier_binary,
    brier_multiclass,
    ce_binary,
    ce_multiclass,
    ece,
    error_rate,
    expected_cost_fixed_gamma,
    risk_coverage_curve,
)
from .calibration import (
    AffineCalibrator,
    apply_affine,
    crossval_calibrate,
    fit_affine,
    temperature_transform,
)
from .normalization import NaiveSystem, naive_prior, naive_reference_metrics, normalize_metric
from .dataio import (
    Dataset,
    EvaluationReport,
    read_generative_csv,
    read_posterior_csv,
    read_report,
    write_report,
)
from .experiments import cost_curve, gamma_sweep, temperature_experiment

__all__ = [
    "__version__",
    "REJECT",
    "BayesOutcome",
    "CategoricalDistribution",
    "ClampCounters",
    "ConfidenceOnly",
    "CostKind",
    "CostMatrix",
    "DiracAt",
    "FullPosterior",
    "PowerLaw",
    "Tabulated",
    "bayes_candidate",
    "bayes_decision",
    "c_gamma_star",
    "c_n01",
    "c_n01g",
    "c_n_star",
    "ecuas",
    "u_max",
    "QuadratureConfig",
    "c_w_numeric",
    "c_w_numeric_confidence",
    "u_max_grid",
    "RiskCoveragePoint",
    "ScoredSample",
    "auc",
    "aurc",
    "brier_binary",
    "brier_multiclass",
    "ce_binary",
    "ce_multiclass",
    "ece",
    "error_rate",
    "expected_cost_fixed_gamma",
    "risk_coverage_curve",
    "AffineCalibrator",
    "apply_affine",
    "crossval_calibrate",
    "fit_affine",
    "temperature_transform",
    "NaiveSystem",
    "naive_prior",
    "naive_reference_metrics",
    "normalize_metric",
    "Dataset",
    "EvaluationReport",
    "read_generative_csv",
    "read_posterior_csv",
    "read_report",
    "write_report",
    "cost_curve",
    "gamma_sweep",
    "temperature_experiment",
]
