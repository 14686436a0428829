"""Scalar line search: forward tracking with doubling, then golden-section refinement."""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def line_search(
    f: Callable[[float], float],
    f0: float | None = None,
    t0: float = 0.5,
    max_doublings: int = 6,
    max_halvings: int = 6,
    tol: float = 1e-3,
) -> tuple[float, float]:
    """Approximate the nearest local minimum of f(t) for t >= 0.

    Starts at t0, halving up to max_halvings times until a value below f(0)
    is found (returning 0 if none is), then doubles while the value keeps
    decreasing and refines the resulting bracket by golden section down to
    width tol. Returns (t, f(t)) for the best point seen; (0, f(0)) is always
    admissible, so the result never increases the objective.
    """
    if f0 is None:
        f0 = f(0.0)
    best_t, best_f = 0.0, f0

    t = t0
    ft = f(t)
    halvings = 0
    while not ft < f0 and halvings < max_halvings:
        t *= 0.5
        ft = f(t)
        halvings += 1
    if not ft < f0:
        return 0.0, f0
    best_t, best_f = t, ft

    # Forward-track: double while the objective decreases.
    lo = 0.0
    mid, fmid = t, ft
    hi = None
    for _ in range(max_doublings):
        cand = mid * 2.0
        fc = f(cand)
        if fc < fmid:
            lo, mid, fmid = mid, cand, fc
            if fc < best_f:
                best_t, best_f = cand, fc
        else:
            hi = cand
            break
    if hi is None:
        hi = mid  # still decreasing at the doubling cap; refine up to the cap

    # Golden-section refinement of [lo, hi].
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        if fc < best_f:
            best_t, best_f = c, fc
        if fd < best_f:
            best_t, best_f = d, fd
    return best_t, best_f
