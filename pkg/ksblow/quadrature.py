'''
Adaptive composite Simpson quadrature.

The integrands met here (phi/psi, phi/beta and their moments) are smooth and positive, so plain
interval bisection with the Richardson correction of Simpson's rule is enough. Ranges spanning
many decades are integrated in the variable x = ln(t).
'''
import math
from collections.abc import Callable

from ksblow.exceptions import QuadratureError

RTOL = 1e-10
ATOL = 1e-30
PANELS = 16
MAX_DEPTH = 48


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f: Callable[[float], float], a: float, b: float, fa: float, fm: float, fb: float,
              whole: float, tol: float, depth: int) -> float:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)

    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    error = (left + right - whole) / 15.0

    if abs(error) <= tol:
        return left + right + error
    if depth >= MAX_DEPTH:
        raise QuadratureError(a, b, left + right)

    return (_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + _adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))


def simpson(f: Callable[[float], float], a: float, b: float, rtol: float = RTOL, atol: float = ATOL) -> float:
    ''' Integrate f over [a, b] (either orientation) to max(rtol * |I|, atol). '''
    if a == b:
        return 0.0
    if a > b:
        return -simpson(f, b, a, rtol, atol)

    nodes = [a + (b - a) * k / PANELS for k in range(PANELS + 1)]
    values = [f(x) for x in nodes]
    mids = [f(0.5 * (x0 + x1)) for x0, x1 in zip(nodes, nodes[1:])]
    coarse = [_simpson(values[k], mids[k], values[k + 1], nodes[k + 1] - nodes[k]) for k in range(PANELS)]

    if not all(math.isfinite(c) for c in coarse):
        raise QuadratureError(a, b, float('nan'))

    tol = max(rtol * abs(sum(coarse)), atol) / PANELS
    return sum(
        _adaptive(f, nodes[k], nodes[k + 1], values[k], mids[k], values[k + 1], coarse[k], tol, 0)
        for k in range(PANELS)
    )


def simpson_log(f: Callable[[float], float], a: float, b: float, rtol: float = RTOL, atol: float = ATOL) -> float:
    ''' Integrate f over [a, b] with 0 < a, b, substituting t = exp(x). '''
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f'Logarithmic quadrature needs positive limits, got [{a}, {b}]')
    return simpson(lambda x: f(math.exp(x)) * math.exp(x), math.log(a), math.log(b), rtol, atol)
