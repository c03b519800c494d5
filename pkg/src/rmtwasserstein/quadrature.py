"""Quadrature for integrals with inverse-square-root singularities at both ends.

Integrals of the form ``int_a^b F(x) / sqrt((x - a)(b - x)) dx`` with smooth
``F`` become ``int_0^pi F(m + h cos t) dt`` under ``x = m + h cos t``; the
midpoint rule in ``t`` (Gauss-Chebyshev of the first kind) then converges
geometrically. Callers pass the smooth part ``F`` only.
"""
from dataclasses import dataclass

import numpy as np

from ._config import TOL, NumericalError


@dataclass
class QuadratureInfo:
    nodes: np.ndarray      # final node count per interval
    converged: bool
    worst_interval: int    # index with the largest last refinement change


def midpoint_angles(n):
    return (np.arange(n) + 0.5) * (np.pi / n), np.full(n, np.pi / n)


def legendre_angles(n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * np.pi * (t + 1.0), 0.5 * np.pi * w


def chebyshev_integrals(a, b, smooth, rule=midpoint_angles, start=None, max_nodes=None,
                        rtol=None, scale=None, strict=True):
    """Integrate ``smooth(x, idx) / sqrt((x - a)(b - x))`` over each ``[a_k, b_k]``.

    Parameters
    ----------
    a, b : ndarray, shape (k,)
        Interval endpoints; ``a > b`` is allowed and gives the signed integral.
    smooth : callable
        ``smooth(x, idx)`` gets nodes of shape ``(len(idx), N)`` for the
        intervals ``idx`` and returns the smooth factor at those nodes.
    scale : float, optional
        Absolute scale for the stopping test; by default ``sum |I_k|``.

    Returns
    -------
    values : ndarray, shape (k,)
    info : QuadratureInfo
    """
    start = TOL.quad_start if start is None else start
    max_nodes = TOL.quad_max if max_nodes is None else max_nodes
    rtol = TOL.quad_rtol if rtol is None else rtol
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = a.size
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    # sign of the orientation: int_a^b with a > b flips
    orient = np.where(b >= a, 1.0, -1.0)
    half = np.abs(half)

    def level(n, idx):
        t, w = rule(n)
        x = mid[idx, None] + half[idx, None] * np.cos(t)[None, :]
        return orient[idx] * (smooth(x, idx) @ w)

    n = start
    nodes = np.full(k, n)
    values = level(n, np.arange(k))
    active = np.arange(k)
    change = np.zeros(k)
    while active.size:
        if 2 * n > max_nodes:
            break
        n *= 2
        refined = level(n, active)
        change[active] = np.abs(refined - values[active])
        values[active] = refined
        nodes[active] = n
        ref = np.sum(np.abs(values)) if scale is None else scale
        ref = max(ref, np.finfo(float).tiny)
        active = active[change[active] > rtol * ref]
    info = QuadratureInfo(nodes=nodes, converged=active.size == 0,
                          worst_interval=int(np.argmax(change)) if k else -1)
    if strict and not info.converged:
        raise NumericalError(
            f"quadrature did not converge with {max_nodes} nodes "
            f"(worst interval index {info.worst_interval})")
    return values, info
