__version__ = "0.1.0"

from .covariates import ModelKind, fit_covariate_model, sample_covariates
from .curves import LearningCurve, Provenance, delta_estimate, monotone_smooth
from .errors import LearningCurveError
from .harness import Estimator, GenerativeModel, StudyConfig, dataset_study, run_mc_study, true_curve_oracle
from .impint import brie_curve, impint_tau
from .logistic import Dataset, fit_logistic, loocv_error, subsample_error
from .subex import fit_power_law, subex_curve
from .utils_numerics import RngStream
