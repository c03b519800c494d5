"""Consistent estimation of Wasserstein and Frobenius distances between covariance matrices."""
from ._config import TOL, ConfigError, DomainError, InputError, NumericalError, RegimeError
from .estimators import (DistanceEstimate, ProductSpectrum, build_spectrum, contour_functional_oracle,
                         estimate_frobenius, estimate_sqrt_functional, estimate_wasserstein,
                         phi_psi, plugin_frobenius, plugin_wasserstein, spectrum_from_samples)
from .known import (DescentOptions, DescentState, FitResult, KnownPopModel, KnownPopulationProblem,
                    build_known_model, estimate_sqrt_known, fit_covariance, gradient_h,
                    linear_shrinkage_init, objective_h, retract, riemannian_norm)
from .linalg import (frobenius_distance, product_eigenvalues, sample_covariance, spd_exp, spd_log,
                     spd_sqrt, true_wasserstein)
from .models import CovarianceModel, gaussian_samples, read_matrix_csv, write_matrix_csv
from .secular import secular_roots

__version__ = "0.1.0"
