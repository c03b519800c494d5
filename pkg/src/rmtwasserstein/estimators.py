"""Random-matrix estimators of spectral functionals of ``C1 C2``.

The observable spectrum ``lam`` of ``C1hat C2hat`` is paired with two sets of
secular roots, ``xi`` (update ``1/n1``) and ``eta`` (update ``1/n2``). They
are the poles of ``phi`` and the zeros of ``psi``:

    phi(z) = z / (1 - c1 - c1 z m(z)) = z prod(z - lam) / prod(z - xi)
    psi(z) = 1 - c2 - c2 z m(z)       = prod(z - eta) / prod(z - lam)

with ``m(z) = mean(1 / (lam - z))`` and ``c_a = p / n_a``.
"""
from dataclasses import dataclass, field

import numpy as np

from ._config import TOL, DomainError, InputError, NumericalError, RegimeError
from .linalg import as_samples, product_eigenvalues, sample_covariance, true_wasserstein
from .quadrature import chebyshev_integrals
from .secular import secular_roots

# cap on elements of the (intervals, nodes, p) work arrays
_CHUNK = 1 << 21


@dataclass(frozen=True, eq=False)
class ProductSpectrum:
    lam: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    n1: int
    n2: int
    xi_gap: np.ndarray = field(repr=False)   # lam - xi, cancellation free
    eta_gap: np.ndarray = field(repr=False)  # lam - eta

    @property
    def p(self):
        return self.lam.size

    @property
    def c1(self):
        return self.p / self.n1

    @property
    def c2(self):
        return self.p / self.n2


@dataclass
class DistanceEstimate:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"method": self.method, "value": self.value, "diagnostics": self.diagnostics}


def build_spectrum(lam, n1, n2):
    """Pair the spectrum of ``C1hat C2hat`` with its two secular root sets."""
    lam = np.sort(np.asarray(lam, dtype=float).ravel())
    p = lam.size
    n1, n2 = int(n1), int(n2)
    if p >= n1 or p >= n2:
        raise RegimeError(f"need p < min(n1, n2), got p={p}, n1={n1}, n2={n2}")
    if lam[0] <= 0:
        raise InputError("product spectrum must be strictly positive")
    xi, gx = secular_roots(lam, 1.0 / n1, return_gaps=True)
    if n2 == n1:
        eta, ge = xi, gx
    else:
        eta, ge = secular_roots(lam, 1.0 / n2, return_gaps=True)
    return ProductSpectrum(lam=lam, xi=xi, eta=eta, n1=n1, n2=n2, xi_gap=gx, eta_gap=ge)


def spectrum_from_samples(X1, X2):
    X1 = as_samples(X1, "X1")
    X2 = as_samples(X2, "X2")
    if X1.shape[0] != X2.shape[0]:
        raise InputError(f"dimension mismatch: {X1.shape[0]} vs {X2.shape[0]}")
    C1, C2 = sample_covariance(X1), sample_covariance(X2)
    lam = product_eigenvalues(C1, C2)
    return build_spectrum(lam, X1.shape[1], X2.shape[1]), C1, C2


# --- rational functions -----------------------------------------------------

def _ratio(z, zeros, poles):
    """``prod(z - zeros) / prod(z - poles)`` and its derivative, zeros and poles paired."""
    z = np.asarray(z)
    dz = z[..., None] - zeros
    dp = z[..., None] - poles
    value = np.exp(np.sum(np.log(dz.astype(complex)) - np.log(dp.astype(complex)), axis=-1))
    near = np.abs(dz) <= TOL.pole_rel * np.maximum(np.abs(zeros), 1.0)
    inv_p = np.sum(1.0 / dp, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        deriv = value * (np.sum(1.0 / dz, axis=-1) - inv_p)
    if np.any(near):
        # at a zero the log form is 0 * inf; drop that factor instead
        for idx in zip(*np.nonzero(near)):
            k = idx[-1]
            at = idx[:-1]
            others = np.delete(dz[at], k)
            deriv[at] = np.prod(others) / np.prod(dp[at])
    if np.isrealobj(z):
        return value.real, np.real(deriv)
    return value, deriv


def _check_poles(x, poles, name):
    x = np.atleast_1d(np.asarray(x))
    hit = np.abs(x[..., None] - poles) <= TOL.pole_rel * np.maximum(np.abs(poles), 1.0)
    if np.any(hit):
        root = int(np.nonzero(hit)[-1][0])
        raise DomainError(f"{name} evaluated at its pole #{root} ({poles[root]:.17g})")


def phi_psi(model, x):
    """Values and first derivatives of ``phi`` and ``psi`` at ``x``.

    ``x`` may be real or complex, scalar or array. Raises :class:`DomainError`
    at a pole (``xi`` for ``phi``, ``lam`` for ``psi``).

    Returns
    -------
    phi, psi, dphi, dpsi
    """
    _check_poles(x, model.xi, "phi")
    _check_poles(x, model.lam, "psi")
    x = np.asarray(x)
    r, dr = _ratio(x, model.lam, model.xi)
    phi = x * r
    dphi = r + x * dr
    psi, dpsi = _ratio(x, model.eta, model.lam)
    return phi, psi, dphi, dpsi


def stieltjes(lam, z):
    """``mean(1 / (lam - z))``."""
    z = np.asarray(z)
    return np.mean(1.0 / (lam - z[..., None]), axis=-1)


# --- square-root functional -------------------------------------------------

def _rows(idx, n_nodes, p):
    step = max(1, _CHUNK // max(n_nodes * p, 1))
    for s in range(0, idx.size, step):
        yield s, idx[s:s + step]


def _sqrt_integrand(lam, lo, lo_gap, hi_gap, n_big):
    """Smooth factor of ``sqrt(-phi/psi) psi'`` on ``(lo_j, hi_j)``.

    ``lo``/``hi`` are the roots for the smaller/larger sample count, so that
    ``lo_j < hi_j < lam_j``. The ``sqrt((x - lo)(hi - x))`` singular part is
    stripped off analytically.
    """
    p = lam.size

    def smooth(x, idx):
        out = np.empty_like(x)
        for s, sub in _rows(idx, x.shape[1], p):
            xs = x[s:s + sub.size]
            d = xs[..., None] - lam                       # x - lam_i
            # (x - lam)^2 / ((x - lo)(x - hi)) = 1 / ((1 + glo/d)(1 + ghi/d))
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = -np.log1p(lo_gap / d) - np.log1p(hi_gap / d)
            rows = np.arange(sub.size)
            terms[rows, :, sub] = 0.0
            log_ratio = np.sum(terms, axis=-1)
            dpsi = -np.sum(lam / d ** 2, axis=-1) / n_big
            own = lam[sub][:, None] - xs
            out[s:s + sub.size] = np.sqrt(xs) * own * np.exp(0.5 * log_ratio) * dpsi
        return out

    return smooth


def sign_margin(model, samples=33):
    """Smallest value of ``-phi/psi`` on interior points of the integration intervals.

    Used to assert that the square root in the unequal-n estimator stays real.
    """
    lo = np.minimum(model.xi, model.eta)
    hi = np.maximum(model.xi, model.eta)
    t = (np.arange(samples) + 0.5) / samples
    worst = np.inf
    for j in range(model.p):
        if hi[j] - lo[j] <= 0:
            continue
        x = lo[j] + (hi[j] - lo[j]) * t
        phi, psi, _, _ = phi_psi(model, x)
        worst = min(worst, float(np.min(-phi / psi)))
    return worst


def estimate_sqrt_functional(model):
    """Consistent estimate of ``mean(sqrt(lambda_i(C1 C2)))``.

    Closed form when ``n1 == n2``; otherwise a sum of interval integrals
    evaluated with the Chebyshev substitution. For ``n1 > n2`` the two
    samples swap roles, which leaves the target unchanged.
    """
    lam, p = model.lam, model.p
    if model.n1 == model.n2:
        gap = model.xi_gap
        # sqrt(lam) - sqrt(xi) without cancellation
        terms = gap / (np.sqrt(lam) + np.sqrt(lam - gap))
        value = 2.0 * model.n1 / p * np.sum(terms)
        return DistanceEstimate(float(value), "rmt-sqrt", {"branch": "equal-n"})

    if model.n1 < model.n2:
        n_small, n_big = model.n1, model.n2
        lo, lo_gap, hi, hi_gap = model.xi, model.xi_gap, model.eta, model.eta_gap
        swapped = False
    else:
        n_small, n_big = model.n2, model.n1
        lo, lo_gap, hi, hi_gap = model.eta, model.eta_gap, model.xi, model.xi_gap
        swapped = True

    lead = 2.0 * np.sqrt(n_small * n_big) / p * np.sum(np.sqrt(lam))
    coef = 2.0 * n_big / (np.pi * p)
    smooth = _sqrt_integrand(lam, lo, lo_gap, hi_gap, n_big)
    # the stopping scale is the size of the final O(1) answer, not the
    # (much larger) cancelling pieces
    scale = np.sum(np.sqrt(lam)) / p / coef
    try:
        ints, info = chebyshev_integrals(lo, hi, smooth, scale=scale)
    except NumericalError as exc:
        raise NumericalError(f"square-root functional: {exc}") from None
    value = lead + coef * np.sum(ints)
    diag = {
        "branch": "unequal-n",
        "swapped": swapped,
        "nodes_max": int(info.nodes.max()),
        "nodes_total": int(info.nodes.sum()),
    }
    return DistanceEstimate(float(value), "rmt-sqrt", diag)


def estimate_wasserstein(X1, X2):
    """Per-dimension Wasserstein estimate ``tr(C1hat + C2hat)/p - 2 Dhat``."""
    model, C1, C2 = spectrum_from_samples(X1, X2)
    sq = estimate_sqrt_functional(model)
    value = (np.trace(C1) + np.trace(C2)) / model.p - 2.0 * sq.value
    diag = dict(sq.diagnostics, sqrt_functional=sq.value, p=model.p, n1=model.n1, n2=model.n2)
    return DistanceEstimate(float(value), "rmt-wasserstein", diag)


def plugin_wasserstein(X1, X2):
    """Wasserstein distance between the two sample covariances, divided by ``p``."""
    X1 = as_samples(X1, "X1")
    X2 = as_samples(X2, "X2")
    if X1.shape[0] != X2.shape[0]:
        raise InputError(f"dimension mismatch: {X1.shape[0]} vs {X2.shape[0]}")
    p = X1.shape[0]
    value = true_wasserstein(sample_covariance(X1), sample_covariance(X2)) / p
    return DistanceEstimate(value, "plugin-wasserstein", {"p": p})


def estimate_frobenius(X1, X2):
    """Per-dimension estimate of ``||C1 - C2||_F^2``."""
    X1 = as_samples(X1, "X1")
    X2 = as_samples(X2, "X2")
    if X1.shape[0] != X2.shape[0]:
        raise InputError(f"dimension mismatch: {X1.shape[0]} vs {X2.shape[0]}")
    p, n1, n2 = X1.shape[0], X1.shape[1], X2.shape[1]
    C1, C2 = sample_covariance(X1), sample_covariance(X2)
    t1, t2 = np.trace(C1) / p, np.trace(C2) / p
    value = (np.sum(C1 * C1) + np.sum(C2 * C2)) / p \
        - p / n1 * t1 ** 2 - p / n2 * t2 ** 2 - 2.0 * np.sum(C1 * C2) / p
    return DistanceEstimate(float(value), "rmt-frobenius", {"p": p, "n1": n1, "n2": n2})


def plugin_frobenius(X1, X2):
    X1 = as_samples(X1, "X1")
    X2 = as_samples(X2, "X2")
    p = X1.shape[0]
    D = sample_covariance(X1) - sample_covariance(X2)
    return DistanceEstimate(float(np.sum(D * D) / p), "plugin-frobenius", {"p": p})


# --- contour oracle ---------------------------------------------------------

_MULTIVALUED = {"sqrt", "log", "log2", "log10", "power", "arcsin", "arccos", "arctan"}

NAMED_FUNCTIONS = {
    "one": lambda t: np.ones_like(t),
    "identity": lambda t: t,
    "square": lambda t: t * t,
}


def contour_functional_oracle(model, f, nodes=None):
    """Evaluate the contour-integral estimator numerically for an entire ``f``.

    The contour is a circle crossing the real axis a quarter of ``xi_1``
    outside ``[xi_1, lam_p]``; the trapezoid rule is refined by doubling the
    node count until two successive values agree to 1e-9.

    ``f`` is a callable accepting complex arrays, or one of ``"one"``,
    ``"identity"``, ``"square"``. Multivalued functions such as ``sqrt`` are
    rejected: the circle would cross their branch cuts.
    """
    if isinstance(f, str):
        if f in _MULTIVALUED:
            raise InputError(f"{f!r} is multivalued; the contour oracle needs an entire f")
        try:
            f = NAMED_FUNCTIONS[f]
        except KeyError:
            raise InputError(f"unknown function name {f!r}") from None
    elif getattr(f, "__name__", "") in _MULTIVALUED:
        raise InputError(f"{f.__name__!r} is multivalued; the contour oracle needs an entire f")

    lo = min(model.xi[0], model.eta[0])
    hi = model.lam[-1]
    margin = 0.25 * lo
    left, right = lo - margin, hi + margin
    if left <= 0.5 * lo:
        raise InputError("contour would leave the half-plane Re z > xi_1 / 2")
    center, radius = 0.5 * (left + right), 0.5 * (right - left)

    def trapezoid(n):
        t = 2.0 * np.pi * np.arange(n) / n
        e = np.exp(1j * t)
        z = center + radius * e
        phi, psi, dphi, dpsi = phi_psi(model, z)
        g = f(phi / psi) * (dphi / phi - dpsi / psi) * psi
        integral = np.sum(g * 1j * radius * e) * (2.0 * np.pi / n)
        return (model.n2 / (2j * np.pi * model.p) * integral).real

    n = TOL.contour_start if nodes is None else int(nodes)
    prev = trapezoid(n)
    while True:
        if 2 * n > TOL.contour_max:
            raise NumericalError(f"contour oracle did not converge with {TOL.contour_max} nodes")
        n *= 2
        cur = trapezoid(n)
        if abs(cur - prev) <= TOL.contour_rtol * max(abs(cur), 1e-300):
            return float(cur)
        prev = cur
