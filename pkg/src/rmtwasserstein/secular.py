"""Eigenvalues of the rank-one update ``diag(lam) - rho * sqrt(lam) sqrt(lam)^T``.

The eigenvalues are the roots of the secular function

    f(x) = 1 - rho * sum_i lam_i / (lam_i - x),

which is strictly decreasing between consecutive poles, so each root sits
alone in a bracket given by interlacing: ``(0, lam_1)`` for the first one and
``(lam_{j-1}, lam_j)`` afterwards.
"""
import numpy as np

from ._config import TOL, InputError, RegimeError


def secular_function(x, poles, weights, rho):
    """``1 - rho * sum_k w_k / (d_k - x)`` evaluated at each entry of ``x``."""
    x = np.asarray(x, dtype=float)
    return 1.0 - rho * np.sum(weights / (poles - x[..., None]), axis=-1)


def _deflate(lam):
    """Group numerically equal eigenvalues; returns unique poles, weights, multiplicities."""
    starts = [0]
    for i in range(1, lam.size):
        if lam[i] - lam[starts[-1]] > TOL.duplicate_rel * lam[i]:
            starts.append(i)
    bounds = starts + [lam.size]
    poles = np.array([lam[s] for s in starts])
    weights = np.array([lam[a:b].sum() for a, b in zip(bounds[:-1], bounds[1:])])
    mult = np.diff(bounds)
    return poles, weights, mult


def _solve(poles, weights, rho):
    """Offsets ``delta_j = d_j - x_j`` of the secular roots below each pole."""
    k = poles.size
    # root j lies in (d_{j-1}, d_j); work with offsets from the upper pole
    # so that d_j - x is formed without cancellation
    lower_gap = np.empty(k)
    lower_gap[0] = poles[0]
    lower_gap[1:] = np.diff(poles)
    diff = poles[None, :] - poles[:, None]  # diff[j, i] = d_i - d_j

    def f(delta):
        # d_i - x_j = (d_i - d_j) + delta_j
        return 1.0 - rho * np.sum(weights / (diff + delta[:, None]), axis=1)

    def fprime_neg(delta):
        return rho * np.sum(weights / (diff + delta[:, None]) ** 2, axis=1)

    lo = np.zeros(k)          # delta -> 0+: x -> d_j-, f -> -inf
    hi = lower_gap.copy()     # delta -> gap: x -> d_{j-1}+ (or 0), f -> +inf (or >= 0)
    width = TOL.secular_width * lower_gap
    with np.errstate(divide="ignore", invalid="ignore"):
        while True:
            active = (hi - lo) > width
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            # f decreasing in x means increasing in delta
            go_hi = fm > 0
            hi = np.where(active & go_hi, mid, hi)
            lo = np.where(active & ~go_hi, mid, lo)
        delta = 0.5 * (lo + hi)
        for _ in range(TOL.secular_newton_steps):
            fv = f(delta)
            # df/d(delta) = -df/dx = rho * sum w/(d-x)^2 > 0
            step = fv / fprime_neg(delta)
            cand = delta - step
            ok = np.isfinite(cand) & (cand > 0) & (cand < lower_gap)
            delta = np.where(ok, cand, delta)
    return delta


def secular_roots(lam, rho, allow_boundary=False, return_gaps=False):
    """Ascending eigenvalues of ``diag(lam) - rho * sqrt(lam) sqrt(lam)^T``.

    Parameters
    ----------
    lam : array_like, shape (p,)
        Sorted positive eigenvalues.
    rho : float
        Positive update strength, typically ``1 / n``. Requires ``rho * p < 1``;
        with ``allow_boundary=True`` the edge case ``rho * p == 1`` is accepted
        and yields a smallest root of exactly zero.
    return_gaps : bool
        Also return ``lam - roots`` computed without cancellation.

    Returns
    -------
    roots : ndarray, shape (p,)
        Interlaced roots, ``roots[0] < lam[0] < roots[1] < ... < lam[-1]``.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    p = lam.size
    if p == 0:
        raise InputError("empty spectrum")
    if not np.all(np.isfinite(lam)) or lam[0] <= 0:
        raise InputError("eigenvalues must be finite and strictly positive")
    if np.any(np.diff(lam) < 0):
        raise InputError("eigenvalues must be sorted ascending")
    if not rho > 0:
        raise InputError(f"rho must be positive, got {rho}")
    load = rho * p
    boundary = abs(load - 1.0) <= 4 * np.finfo(float).eps
    if (load > 1.0 and not boundary) or (boundary and not allow_boundary):
        raise RegimeError(f"rho * p = {load:.6g} must be < 1 (need p < n)")

    poles, weights, mult = _deflate(lam)
    delta = _solve(poles, weights, rho)
    if boundary:
        # f(0) = 0 exactly: the first root is the origin
        delta[0] = poles[0]
    roots_u = poles - delta

    roots = np.empty(p)
    gaps = np.empty(p)
    pos = 0
    for d, r, g, m in zip(poles, roots_u, delta, mult):
        # a pole of multiplicity m keeps m-1 copies of itself as eigenvalues
        roots[pos] = r
        gaps[pos] = g
        roots[pos + 1:pos + m] = d
        gaps[pos + 1:pos + m] = 0.0
        pos += m
    if return_gaps:
        return roots, gaps
    return roots
