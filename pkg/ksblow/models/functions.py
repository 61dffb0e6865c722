'''
The primitives G and H of phi/psi, and G' = int_{s0}^s phi/psi.

Catalog families share phi/psi = (1 + s)^p / s and phi/beta = (1 + s)^p, with p = q for power
diffusion, p = -gamma2 for the remark family and p = 0 for the semilinear case. For p <= 0 all
three functions have closed forms: with Y = 1/(1 + s) and a = -p > 0,

    int (1 + s)^p / s ds = -Y^a / a * 2F1(a, 1; a + 1; Y)

which converges fast for s >= 1. Below s = 1 the log singularity is split off and the smooth
remainder is integrated with a fixed Gauss-Legendre rule.
'''
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import hyp2f1

from ksblow.exceptions import EvaluationError
from ksblow.models.types import NonlinearityModel
from ksblow.quadrature import simpson, simpson_log

# The remainder integrand is analytic on [0, 1] with its nearest singularity at t = -1, so 16 nodes
# already reach double precision
_GL_NODES, _GL_WEIGHTS = leggauss(16)


def _has_closed_form(model: NonlinearityModel) -> bool:
    return model.is_catalog and model.p <= 0.0


def _scalar_or_array(s: np.ndarray | float, values: np.ndarray) -> np.ndarray | float:
    return float(values) if np.ndim(s) == 0 else values


# Closed forms

def _H_closed(p: float, s: np.ndarray) -> np.ndarray:
    if p == -1.0:
        return np.log1p(s)
    return np.expm1((p + 1.0) * np.log1p(s)) / (p + 1.0)


def _tail_primitive(a: float, s: np.ndarray) -> np.ndarray:
    ''' Primitive of (1 + s)^-a / s for s >= 1, vanishing at infinity up to sign. '''
    y = 1.0 / (1.0 + s)
    return -np.power(y, a) / a * hyp2f1(a, 1.0, a + 1.0, y)


def _smooth_remainder(p: float, s: np.ndarray) -> np.ndarray:
    ''' int_s^1 ((1 + t)^p - 1) / t dt for 0 < s <= 1. '''
    half = 0.5 * (1.0 - s)
    t = 0.5 * (1.0 + s)[..., None] + half[..., None] * _GL_NODES
    integrand = np.expm1(p * np.log1p(t)) / t
    return half * (integrand @ _GL_WEIGHTS)


def _dG_closed(p: float, s0: float, s: np.ndarray) -> np.ndarray:
    if p == 0.0:
        with np.errstate(divide='ignore'):
            return np.log(s / s0)

    a = -p
    anchor = _tail_primitive(a, np.float64(s0))
    out = np.empty_like(s)

    high = s >= 1.0
    out[high] = _tail_primitive(a, s[high]) - anchor

    low = ~high
    if np.any(low):
        at_one = _tail_primitive(a, np.float64(1.0)) - anchor
        s_low = s[low]
        with np.errstate(divide='ignore'):
            out[low] = at_one + np.log(s_low) - _smooth_remainder(p, s_low)
    return out


# Quadrature

def _dG_quad(model: NonlinearityModel, s: float) -> float:
    if s == 0.0:
        return -math.inf
    return simpson_log(lambda t: float(model.phi_over_beta(t)) / t, model.s0, s)


def _H_quad(model: NonlinearityModel, s: float) -> float:
    f = lambda t: float(model.phi_over_beta(t))
    if s <= 1.0:
        return simpson(f, 0.0, s)
    return simpson(f, 0.0, 1.0) + simpson_log(f, 1.0, s)


def _G_quad(model: NonlinearityModel, s: float) -> float:
    ''' G(s) = int_{s0}^s (s - t) phi(t) / psi(t) dt, non-negative for every s >= 0. '''
    if s == 0.0:
        return _H_quad(model, model.s0)
    return simpson_log(lambda t: (s - t) * float(model.phi_over_beta(t)) / t, model.s0, s)


def _cumulative(model: NonlinearityModel, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ''' G' and I1 = int_{s0}^s phi/beta on an array, by summing short quadratures between sorted points. '''
    f0 = lambda t: float(model.phi_over_beta(t)) / t
    f1 = lambda t: float(model.phi_over_beta(t))

    points = np.unique(np.concatenate((s[s > 0.0], [model.s0])))
    origin = int(np.searchsorted(points, model.s0))
    i0 = np.zeros_like(points)
    i1 = np.zeros_like(points)

    for k in range(origin + 1, len(points)):
        i0[k] = i0[k - 1] + simpson_log(f0, points[k - 1], points[k])
        i1[k] = i1[k - 1] + simpson_log(f1, points[k - 1], points[k])
    for k in range(origin - 1, -1, -1):
        i0[k] = i0[k + 1] - simpson_log(f0, points[k], points[k + 1])
        i1[k] = i1[k + 1] - simpson_log(f1, points[k], points[k + 1])

    idx = np.searchsorted(points, np.where(s > 0.0, s, model.s0))
    dG = np.where(s > 0.0, i0[idx], -np.inf)
    I1 = np.where(s > 0.0, i1[idx], -_H_quad(model, model.s0))
    return dG, I1


def _checked(model: NonlinearityModel, s: np.ndarray, values: np.ndarray) -> np.ndarray:
    bad = np.isnan(values)
    if np.any(bad):
        raise EvaluationError(model.name, float(s[bad][0]))
    return values


# Public evaluators

def eval_dG(model: NonlinearityModel, s: np.ndarray | float, quadrature: bool = False) -> np.ndarray | float:
    ''' G'(s) = int_{s0}^s phi/psi; -inf at s = 0. '''
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if _has_closed_form(model) and not quadrature:
        values = _dG_closed(model.p, model.s0, arr)
    elif arr.size > 1 and not quadrature:
        values, _ = _cumulative(model, arr)
    else:
        values = np.array([_dG_quad(model, float(x)) for x in arr])
    return _scalar_or_array(s, _checked(model, arr, values).reshape(np.shape(s)))


def eval_H(model: NonlinearityModel, s: np.ndarray | float, quadrature: bool = False) -> np.ndarray | float:
    ''' H(s) = int_0^s phi/beta, finite since beta(0) > 0. '''
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(arr < 0.0):
        raise ValueError('H is defined for s >= 0 only')
    if _has_closed_form(model) and not quadrature:
        values = _H_closed(model.p, arr)
    else:
        values = np.array([_H_quad(model, float(x)) for x in arr])
    return _scalar_or_array(s, _checked(model, arr, values).reshape(np.shape(s)))


def eval_G(model: NonlinearityModel, s: np.ndarray | float, quadrature: bool = False) -> np.ndarray | float:
    ''' G(s) = int_{s0}^s int_{s0}^sigma phi/psi, continuous at s = 0 where it equals H(s0). '''
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(arr < 0.0):
        raise ValueError('G is defined for s >= 0 only')

    if _has_closed_form(model) and not quadrature:
        dG = _dG_closed(model.p, model.s0, arr)
        I1 = _H_closed(model.p, arr) - _H_closed(model.p, np.float64(model.s0))
        with np.errstate(invalid='ignore'):
            values = np.where(arr > 0.0, arr * dG, 0.0) - I1
    elif arr.size > 1 and not quadrature:
        dG, I1 = _cumulative(model, arr)
        with np.errstate(invalid='ignore'):
            values = np.where(arr > 0.0, arr * dG, 0.0) - I1
    else:
        values = np.array([_G_quad(model, float(x)) for x in arr])

    values = np.maximum(_checked(model, arr, values), 0.0)
    return _scalar_or_array(s, values.reshape(np.shape(s)))
