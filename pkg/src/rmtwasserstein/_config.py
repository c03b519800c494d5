"""Numerical tolerances and error types shared across the package."""
from dataclasses import dataclass


class InputError(ValueError):
    """Malformed or out-of-domain input (non-finite data, non-SPD matrix, ...)."""


class RegimeError(ValueError):
    """Dimension/sample-count ratio outside the supported regime p < n."""


class DomainError(ValueError):
    """A rational spectral function was evaluated at one of its poles."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge."""


class ConfigError(ValueError):
    """An experiment configuration violates its schema."""


@dataclass(frozen=True)
class Tolerances:
    # eigenvalue clamps
    psd_rel: float = 1e-8          # spd_sqrt: allowed negative eigenvalue, relative to norm
    product_neg_rel: float = 1e-10  # product_eigenvalues: clamp band for negatives
    product_floor: float = 1e-300
    # secular solver
    secular_width: float = 1e-13   # bisection stop, relative to bracket width
    secular_newton_steps: int = 2
    duplicate_rel: float = 1e-12   # deflation threshold
    # endpoint-singular quadrature
    quad_start: int = 64
    quad_max: int = 2 ** 14
    quad_rtol: float = 1e-8
    degenerate_interval: float = 1e-14
    sign_slack: float = 1e-12
    # contour oracle
    contour_start: int = 64
    contour_max: int = 2 ** 16
    contour_rtol: float = 1e-9
    # pole proximity for phi/psi evaluation
    pole_rel: float = 1e-14


TOL = Tolerances()
