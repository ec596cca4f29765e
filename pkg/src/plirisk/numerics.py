"""Adaptive Simpson quadrature and golden-section minimization."""
from __future__ import annotations

import math

import numpy as np


class QuadratureError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, panels: int = 64,
                     max_depth: int = 40, max_panels: int = 1 << 17) -> float:
    """Integrate a vectorized ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    All panels at one refinement level are evaluated in a single call to ``f``.
    Each panel gets a share of ``tol`` proportional to its width; accepted
    panels contribute the Richardson-corrected estimate.
    """
    if b <= a:
        return 0.0
    x = np.linspace(a, b, 2 * panels + 1)
    fx = f(x)
    lo, mid, hi = x[0:-1:2], x[1::2], x[2::2]
    flo, fmid, fhi = fx[0:-1:2], fx[1::2], fx[2::2]
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    total = 0.0
    width = b - a
    for _ in range(max_depth):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        fv = f(np.concatenate([lm, rm]))
        flm, frm = fv[:lm.size], fv[lm.size:]
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        diff = left + right - whole
        ok = np.abs(diff) <= 15.0 * tol * (hi - lo) / width
        total += float(np.sum((left + right + diff / 15.0)[ok]))
        bad = ~ok
        if not bad.any():
            return total
        if 2 * np.count_nonzero(bad) > max_panels:
            raise QuadratureError(f"adaptive Simpson needs more than {max_panels} panels "
                                  f"for tol={tol}")
        lo, mid, hi = (np.concatenate([lo[bad], mid[bad]]),
                       np.concatenate([lm[bad], rm[bad]]),
                       np.concatenate([mid[bad], hi[bad]]))
        flo, fmid, fhi = (np.concatenate([flo[bad], fmid[bad]]),
                          np.concatenate([flm[bad], frm[bad]]),
                          np.concatenate([fmid[bad], fhi[bad]]))
        whole = np.concatenate([left[bad], right[bad]])
    raise QuadratureError(f"adaptive Simpson did not reach tol={tol} in {max_depth} levels")


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, xtol: float = 1e-8, check_bracket: bool = True):
    """Minimize a unimodal scalar function on ``[a, b]``.

    Returns ``(x, f(x))``. With ``check_bracket`` a minimizer that ends up
    within ``xtol`` of either end raises :class:`BracketError`, since the true
    minimum may then lie outside the interval.
    """
    a0, b0 = a, b
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    # also stop at the floating-point resolution of the bracket
    while b - a > max(xtol, 4 * np.finfo(float).eps * max(abs(a), abs(b))):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    if check_bracket and (x - a0 <= 2 * xtol or b0 - x <= 2 * xtol):
        raise BracketError(f"minimizer {x!r} at the edge of bracket [{a0!r}, {b0!r}]")
    return x, fx
