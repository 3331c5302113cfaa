"""Bracketed one-dimensional solvers shared by the model primitives.

Everything here is deterministic: fixed iteration rules, no randomness, and
ties broken towards the smallest argument.
"""

import math
from typing import Callable

ROOT_TOL = 1e-9
GRID_RESOLUTION = 1e-4


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of ``f`` on ``[lo, hi]`` by plain bisection.

    ``f(lo)`` and ``f(hi)`` must have opposite signs (or one of them be zero).
    The bracket is halved until it is narrower than ``tol``; the midpoint of
    the final bracket is returned.
    """
    f_lo = f(lo)
    if f_lo == 0.0:
        return lo
    f_hi = f(hi)
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise ValueError(f"root not bracketed on [{lo!r}, {hi!r}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grid_argmax(f: Callable[[float], float], lo: float, hi: float,
                resolution: float = GRID_RESOLUTION) -> float:
    """Argmax of ``f`` over a uniform grid on ``[lo, hi]``.

    The grid spacing is ``resolution`` times the bracket width. Ties go to the
    smallest argument.
    """
    if hi <= lo:
        return lo
    n = int(math.ceil(1.0 / resolution))
    best_x, best_val = lo, f(lo)
    for i in range(1, n + 1):
        x = lo + (hi - lo) * i / n
        val = f(x)
        if val > best_val:
            best_x, best_val = x, val
    return best_x


def first_sign_change(f: Callable[[float], float], lo: float, hi: float,
                      n: int = 100) -> tuple[float, float] | None:
    """Scan ``n`` equal cells of ``[lo, hi]`` and return the first cell over
    which ``f`` goes from positive to non-positive, or None."""
    prev_x, prev_val = lo, f(lo)
    for i in range(1, n + 1):
        x = lo + (hi - lo) * i / n
        val = f(x)
        if prev_val > 0.0 and val <= 0.0:
            return prev_x, x
        prev_x, prev_val = x, val
    return None
