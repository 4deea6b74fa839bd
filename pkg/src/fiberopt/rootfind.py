"""Scalar root and maximum finding on the positive half-line.

All routines work in log coordinates: the quantities of interest here live on
rays t > 0 whose interesting scales can differ by many orders of magnitude, so
brackets are split at geometric midpoints.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import NumericalError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def expand_until_negative(
    f: Callable[[float], float],
    start: float,
    factor: float,
    max_steps: int = 128,
) -> float:
    """Walk t <- factor * t from `start` until f(t) < 0.

    `factor` < 1 walks toward zero, > 1 toward infinity.  Raises with the
    visited endpoints if no sign change appears within `max_steps`.
    """
    t = start
    for _ in range(max_steps):
        t *= factor
        if f(t) < 0.0:
            return t
    raise NumericalError(
        "bracket expansion failed: no sign change found",
        diagnostics={"start": start, "factor": factor, "last_t": t, "last_f": f(t)},
    )


def bisect_sign_change(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    max_iter: int = 200,
    xtol_rel: float = 1e-15,
) -> float:
    """Locate a zero of f in (lo, hi) by bisection at geometric midpoints.

    Requires 0 < lo < hi and sign(f(lo)) != sign(f(hi)).
    """
    if not (0.0 < lo < hi):
        raise NumericalError("invalid bracket", diagnostics={"lo": lo, "hi": hi})
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise NumericalError(
            "bracket endpoints have equal signs",
            diagnostics={"lo": lo, "hi": hi, "f_lo": flo, "f_hi": fhi},
        )
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= xtol_rel * hi:
            break
    return math.sqrt(lo * hi)


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    max_iter: int = 200,
    xtol_rel: float = 1e-12,
) -> tuple[float, float]:
    """Maximize a unimodal f over [lo, hi]; returns (argmax, max).

    Section points are geometric so the relative tolerance is scale free.
    """
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(max_iter):
        if b - a <= xtol_rel:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(math.exp(d))
    t = math.exp(0.5 * (a + b))
    return t, f(t)
