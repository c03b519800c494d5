"""Square-root functional with one covariance known, and covariance fitting.

With ``C1 = M`` known, the spectrum ``lam`` of ``M C2hat`` and the secular
roots ``xi`` (update ``1/n2``) give

    Dhat(M) = 2 / (pi c2) * sum_j int_{xi_j}^{lam_j} sqrt(mt(x)) dx,
    mt(x)   = c2 m(x) + (p - n2) / (n2 x) = -psi(x) / x,

an estimate of ``mean(sqrt(lambda_i(M C2)))``. Fitting minimizes the squared
residual ``h(M) = (tr(M + C2hat)/p - 2 Dhat(M))^2`` by Riemannian gradient
descent on the SPD cone with the affine-invariant metric
``<A, B>_M = tr(M^-1 A M^-1 B)``.

Each interval integral is written in the angle variable
``x = xi_j + (lam_j - xi_j)(1 + cos t)/2``, where the integrand is smooth in
``t`` and in all the ``lam``/``xi``; gradients differentiate under that
integral and chain through ``d xi / d lam`` from the secular equation.
"""
import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ._config import TOL, InputError, NumericalError, RegimeError
from .linalg import (as_samples, product_eigenvalues, sample_covariance, spd_exp,
                     spd_invsqrt, spd_sqrt, symmetrize)
from .quadrature import legendre_angles, midpoint_angles
from .secular import secular_roots

log = logging.getLogger(__name__)

_CHUNK = 1 << 21


@dataclass(frozen=True, eq=False)
class KnownPopModel:
    lam: np.ndarray
    xi: np.ndarray
    gap: np.ndarray          # lam - xi
    n2: int
    V: np.ndarray = field(default=None, repr=False)  # right eigenvectors of M C2hat, M^{1/2} U

    @property
    def p(self):
        return self.lam.size

    @property
    def c2(self):
        return self.p / self.n2


def known_model_from_spectrum(lam, n2, V=None):
    lam = np.asarray(lam, dtype=float)
    p = lam.size
    if p > n2:
        raise RegimeError(f"need p <= n2, got p={p}, n2={n2}")
    xi, gap = secular_roots(lam, 1.0 / n2, allow_boundary=True, return_gaps=True)
    return KnownPopModel(lam=lam, xi=xi, gap=gap, n2=int(n2), V=V)


def build_known_model(M, X2):
    """Spectrum of ``M C2hat`` paired with its secular roots for ``1/n2``.

    ``p == n2`` is accepted (the smallest root is then exactly 0).
    """
    X2 = as_samples(X2, "X2")
    p, n2 = X2.shape
    if p > n2:
        raise RegimeError(f"need p <= n2, got p={p}, n2={n2}")
    lam, V, _ = product_eigenvalues(M, sample_covariance(X2), return_vectors=True)
    return known_model_from_spectrum(lam, n2, V)


def _angles(model, n):
    t, w = midpoint_angles(n)
    T = np.broadcast_to(t, (model.p, n)).copy()
    W = np.broadcast_to(w, (model.p, n)).copy()
    if model.xi[0] == 0.0:
        # c2 = 1: sqrt(x) at the left end is not of the form F(cos t)
        T[0], W[0] = legendre_angles(n)
    return T, W


def _interval_terms(model, n, grad):
    """Interval integrals (and their partials) at ``n`` angle nodes each."""
    lam, xi, gap, p = model.lam, model.xi, model.gap, model.p
    T, W = _angles(model, n)
    u = 0.5 * (1.0 + np.cos(T))                      # (p, n)
    X = xi[:, None] + gap[:, None] * u
    ints = np.empty(p)
    if grad:
        d_lam_own = np.empty(p)
        d_xi_own = np.empty(p)
        cross_lam = np.zeros((p, p))   # [j, k] = int G_j / (x - lam_k)
        cross_xi = np.zeros((p, p))
    step = max(1, _CHUNK // (n * p))
    for s in range(0, p, step):
        rows = np.arange(s, min(p, s + step))
        x = X[rows]
        d = x[..., None] - lam                        # (r, n, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.log1p(gap / d)                 # log((x - xi_i)/(x - lam_i))
        r = np.arange(rows.size)
        terms[r, :, rows] = 0.0
        logR = np.sum(terms, axis=-1) - np.log(x)
        sqR = np.exp(0.5 * logR)
        own = gap[rows, None] * u[rows]               # x - xi_j
        G = own * sqR
        w = W[rows]
        ints[rows] = np.sum(G * w, axis=1)
        if not grad:
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_l = 1.0 / d
            inv_x = 1.0 / (d + gap)
        inv_l[r, :, rows] = 0.0
        inv_x[r, :, rows] = 0.0
        dlogR = np.sum(inv_x - inv_l, axis=-1) - 1.0 / x
        dG = sqR * (1.0 + 0.5 * own * dlogR)
        d_lam_own[rows] = np.sum(dG * u[rows] * w, axis=1)
        d_xi_own[rows] = np.sum((dG * (1.0 - u[rows]) - sqR) * w, axis=1)
        Gw = (G * w)[..., None]
        cross_lam[rows] = np.sum(Gw * inv_l, axis=1)
        cross_xi[rows] = np.sum(Gw * inv_x, axis=1)
    if not grad:
        return ints, None
    if xi[0] == 0.0:
        # xi_1 is pinned at 0 when p == n2 (its partial diverges but d xi_1/d lam = 0)
        d_xi_own[0] = 0.0
    # partials of sum_j I_j with lam and xi treated as independent
    p_lam = d_lam_own + 0.5 * np.sum(cross_lam, axis=0)
    p_xi = d_xi_own - 0.5 * np.sum(cross_xi, axis=0)
    return ints, (p_lam, p_xi)


def _xi_jacobian(model):
    """``J[i, k] = d xi_i / d lam_k`` from implicit differentiation of the secular equation."""
    lam, xi, gap = model.lam, model.xi, model.gap
    # lam_k - xi_i = (lam_k - lam_i) + gap_i
    D = lam[None, :] - lam[:, None] + gap[:, None]
    with np.errstate(divide="ignore"):
        inv2 = 1.0 / D ** 2
    denom = np.sum(lam[None, :] * inv2, axis=1)
    return xi[:, None] * inv2 / denom[:, None]


def _sqrt_known(model, grad=False, start=None, max_nodes=None, rtol=None):
    start = TOL.quad_start if start is None else start
    max_nodes = TOL.quad_max if max_nodes is None else max_nodes
    rtol = TOL.quad_rtol if rtol is None else rtol
    coef = 2.0 * model.n2 / (np.pi * model.p)
    n = start
    ints, parts = _interval_terms(model, n, grad)
    while True:
        if 2 * n > max_nodes:
            raise NumericalError(
                f"known-population quadrature did not converge with {max_nodes} nodes "
                f"(worst interval index {int(np.argmax(np.abs(ints)))})")
        n *= 2
        new_ints, new_parts = _interval_terms(model, n, grad)
        change = np.max(np.abs(new_ints - ints))
        done = change <= rtol * np.sum(np.abs(new_ints))
        if grad:
            for a, b in zip(parts, new_parts):
                done &= np.max(np.abs(a - b)) <= rtol * max(np.max(np.abs(b)), 1e-300)
        ints, parts = new_ints, new_parts
        if done:
            break
    value = coef * np.sum(ints)
    if not grad:
        return value, None, n
    p_lam, p_xi = parts
    d_lam = coef * (p_lam + _xi_jacobian(model).T @ p_xi)
    return value, d_lam, n


def estimate_sqrt_known(model):
    """Estimate of ``mean(sqrt(lambda_i(M C2)))`` for a known ``M``."""
    value, _, _ = _sqrt_known(model)
    return float(value)


def mtilde(model, x):
    """``c2 m(x) + (p - n2)/(n2 x)``; nonnegative on each ``(xi_j, lam_j)``."""
    x = np.asarray(x, dtype=float)
    m = np.mean(1.0 / (model.lam - x[..., None]), axis=-1)
    return model.c2 * m + (model.p - model.n2) / (model.n2 * x)


# --- objective and gradient --------------------------------------------------

class KnownPopulationProblem:
    """Squared-residual objective ``h`` for one sample block, with ``C2hat`` cached."""

    def __init__(self, X2):
        X2 = as_samples(X2, "X2")
        self.X2 = X2
        self.p, self.n2 = X2.shape
        if self.p > self.n2:
            raise RegimeError(f"need p <= n2, got p={self.p}, n2={self.n2}")
        self.C2 = sample_covariance(X2)
        self.trace_C2 = float(np.trace(self.C2))
        self.C2_eigvals = np.linalg.eigvalsh(self.C2)

    def model(self, M):
        lam, V, _ = product_eigenvalues(M, self.C2, return_vectors=True)
        return known_model_from_spectrum(lam, self.n2, V)

    def residual(self, M):
        """``tr(M + C2hat)/p - 2 Dhat(M)``; may be negative."""
        value, _, _ = _sqrt_known(self.model(M))
        return (np.trace(M) + self.trace_C2) / self.p - 2.0 * value

    def value(self, M):
        return self.residual(M) ** 2

    def value_and_gradient(self, M):
        """``h(M)`` and its Riemannian gradient ``2 g (M^2/p - 2 V diag(lam dD/dlam) V^T)``."""
        M = symmetrize(M)
        model = self.model(M)
        if model.p > 1:
            spacing = np.min(np.diff(model.lam)) / model.lam[-1]
            if spacing < 1e-10:
                M = _perturb(M)
                model = self.model(M)
                if np.min(np.diff(model.lam)) / model.lam[-1] < 1e-12:
                    raise NumericalError("repeated eigenvalues of M C2hat; gradient undefined")
        D, d_lam, _ = _sqrt_known(model, grad=True)
        g = (np.trace(M) + self.trace_C2) / self.p - 2.0 * D
        V = model.V
        grad_g = M @ M / self.p - 2.0 * (V * (model.lam * d_lam)) @ V.T
        return g * g, symmetrize(2.0 * g * grad_g)


def _perturb(M):
    rng = np.random.default_rng(0)
    E = symmetrize(rng.standard_normal(M.shape))
    return M + 1e-9 * np.linalg.norm(M, 2) * E / np.linalg.norm(E, 2)


def _problem(X2):
    return X2 if isinstance(X2, KnownPopulationProblem) else KnownPopulationProblem(X2)


def objective_h(M, X2):
    """``(tr(M + C2hat)/p - 2 Dhat(M, X2))^2``."""
    return float(_problem(X2).value(M))


def gradient_h(M, X2):
    """Riemannian gradient of :func:`objective_h` under ``tr(M^-1 A M^-1 B)``."""
    return _problem(X2).value_and_gradient(M)[1]


def riemannian_norm(M, G):
    A = np.linalg.solve(M, G)
    return float(np.sqrt(max(np.trace(A @ A), 0.0)))


def retract(M, G, t):
    """``M^{1/2} exp(-t M^{-1/2} G M^{-1/2}) M^{1/2}``."""
    R = spd_sqrt(M)
    Ri = spd_invsqrt(M)
    return symmetrize(R @ spd_exp(-t * symmetrize(Ri @ G @ Ri)) @ R)


# --- shrinkage initializer and descent ----------------------------------------

def linear_shrinkage_init(X2):
    """Linear shrinkage of the sample covariance toward a scaled identity.

    ``rho mu I + (1 - rho) C2hat`` with ``mu = tr(C2hat)/p`` and the
    data-driven intensity ``rho = min(bbar2, d2) / d2``.
    """
    X2 = as_samples(X2, "X2")
    p, n = X2.shape
    if n < 2:
        raise InputError("linear shrinkage needs at least two samples")
    S = sample_covariance(X2)
    mu = np.trace(S) / p
    A = S - mu * np.eye(p)
    d2 = np.sum(A * A) / p
    if d2 <= 0:
        return S
    # sum_k ||x_k x_k^T - S||_F^2 = sum_k ||x_k||^4 - n ||S||_F^2
    sq = np.sum(X2 * X2, axis=0)
    b2_bar = (np.sum(sq * sq) - n * np.sum(S * S)) / (n * n * p)
    b2 = min(max(b2_bar, 0.0), d2)
    rho = b2 / d2
    return symmetrize(rho * mu * np.eye(p) + (1.0 - rho) * S)


@dataclass
class DescentOptions:
    tol: float = 1e-7
    max_iter: int = 500
    step: float = 1.0
    armijo: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 40
    # grow the step while the decrease keeps improving; the next iteration
    # starts from the last accepted step
    expand: bool = True
    max_expansions: int = 20


@dataclass
class DescentState:
    M: np.ndarray = field(repr=False)
    h_value: float
    grad_norm: float
    step: float
    iteration: int


@dataclass
class FitResult:
    M: np.ndarray
    trace: list
    stalled: bool = False
    converged: bool = False


def _line_search(problem, M, G, h, gnorm, t, opts):
    def attempt(step):
        try:
            cand = retract(M, G, step)
            h_new = problem.value(cand)
        except (NumericalError, InputError, np.linalg.LinAlgError):
            return None, np.inf, False
        return cand, h_new, h_new < h and h_new <= h - opts.armijo * step * gnorm ** 2

    cand, h_new, ok = attempt(t)
    if ok:
        if opts.expand:
            for _ in range(opts.max_expansions):
                big = t / opts.shrink
                c2, h2, ok2 = attempt(big)
                if not ok2 or h2 >= h_new:
                    break
                t, cand, h_new = big, c2, h2
        return cand, h_new, t
    for _ in range(opts.max_halvings):
        t *= opts.shrink
        cand, h_new, ok = attempt(t)
        if ok:
            return cand, h_new, t
    return None, h, t


def fit_covariance(X2, opts=None, M0=None):
    """Fit a covariance to ``X2`` by Riemannian descent on ``h``.

    Starts from :func:`linear_shrinkage_init` unless ``M0`` is given; steps
    use the exponential retraction with an Armijo line search (backtracking,
    plus step growth when ``opts.expand``). Stops once the gradient norm or
    ``sqrt(h)`` falls below ``opts.tol``, or at ``opts.max_iter`` iterations.
    A line search that fails returns the current iterate with ``stalled`` set.
    """
    opts = opts or DescentOptions()
    problem = _problem(X2)
    M = linear_shrinkage_init(problem.X2) if M0 is None else symmetrize(M0)
    h, G = problem.value_and_gradient(M)
    gnorm = riemannian_norm(M, G)
    trace = [DescentState(M, float(h), gnorm, 0.0, 0)]
    stalled = False
    t = opts.step
    for it in range(1, opts.max_iter + 1):
        if gnorm < opts.tol or h < opts.tol ** 2:
            break
        cand, _, t = _line_search(problem, M, G, h, gnorm, t, opts)
        if cand is None:
            log.warning("line search stalled at iteration %d (h=%.3e)", it, h)
            stalled = True
            break
        M = cand
        h, G = problem.value_and_gradient(M)
        gnorm = riemannian_norm(M, G)
        trace.append(DescentState(M, float(h), gnorm, t, it))
        if not opts.expand:
            t = opts.step
    converged = gnorm < opts.tol or h < opts.tol ** 2
    return FitResult(M=M, trace=trace, stalled=stalled, converged=converged)


def trace_csv(trace):
    """Descent trace as CSV text: iteration, h, grad_norm, step."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "h", "grad_norm", "step"])
    for s in trace:
        w.writerow([s.iteration, repr(s.h_value), repr(s.grad_norm), repr(s.step)])
    return buf.getvalue()
