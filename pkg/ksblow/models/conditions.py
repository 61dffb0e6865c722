'''
Structural conditions on (phi, beta) and the regime they place a model in.

Every condition is written as "ratio r(s) <= 1" with the user's coefficients in ConditionParams.
Catalog families are decided exactly from their exponents; custom models are decided on
log-spaced samples, a sampled violation giving a witness and otherwise the slope of log r over
the last sampled decade deciding the asymptotics (pass if it falls, fail if it rises, unknown if
it is within SLOPE_BAND of flat).
'''
import math
from collections.abc import Callable

import numpy as np

from ksblow.logging import logger, raise_or_warn
from ksblow.exceptions import EvaluationError, ModelError
from ksblow.models.functions import eval_G, eval_H
from ksblow.models.types import ConditionEntry, ConditionParams, ConditionReport, NonlinearityModel
from ksblow.types import Regime, Status

SLOPE_BAND = 0.05
MU_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))

# Witness search for exactly failing catalog conditions may run past s_max_check
WITNESS_LIMIT = 1e100

G1, H1, PSI, RAZ, BALANCE, PHIBETA, MONOTONE_PHI = 'G1', 'H1', 'psi', 'raz', 'balance', 'phibeta', 'monotone_phi'

# Critical decay exponent gamma1 > n in the balance condition
DIMENSION = 2


def _samples(params: ConditionParams, lo: float, hi: float | None = None) -> np.ndarray:
    return np.geomspace(lo, hi or params.s_max_check, params.n_samples)


def _last_decade(s: np.ndarray, decades: float = 1.0) -> np.ndarray:
    return s >= s[-1] / 10.0**decades


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def _first_violation(s: np.ndarray, r: np.ndarray) -> float | None:
    violated = np.flatnonzero(r > 1.0)
    return float(s[violated[0]]) if violated.size else None


def _search_witness(ratio: Callable[[np.ndarray], np.ndarray], params: ConditionParams, lo: float) -> float | None:
    ''' First violation on the checked range, then on the extended range if evaluation stays finite there. '''
    for hi in (params.s_max_check, WITNESS_LIMIT):
        s = _samples(params, lo, hi)
        try:
            with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
                witness = _first_violation(s, ratio(s))
        except EvaluationError as e:
            logger.debug(f'Witness search stopped: {e}')
            return None
        if witness is not None:
            return witness
    return None


def _sampled(condition: str, s: np.ndarray, r: np.ndarray, fitted: float, loglog: bool = False,
             details: dict[str, float] | None = None) -> ConditionEntry:
    '''
    Sampled decision for a condition written as r(s) <= 1. The tail slope is taken against
    log(log(s)) for the logarithmic conditions and against log(s) otherwise.
    '''
    details = details or {}
    if (witness := _first_violation(s, r)) is not None:
        return ConditionEntry(condition, Status.FAIL, witness_s=witness, details=details)

    x = np.log(np.log(s)) if loglog else np.log(s)
    tail = _last_decade(s)
    slope = _slope(x[tail], np.log(r[tail]))
    details = {**details, 'tail_slope': slope}

    if slope < -SLOPE_BAND:
        return ConditionEntry(condition, Status.PASS, fitted_coefficient=fitted, details=details)

    if slope > SLOPE_BAND:
        # log r = intercept + slope * x reaches 0 beyond the sampled range
        x_hit = x[-1] - float(np.log(r[-1])) / slope
        try:
            witness = math.exp(math.exp(x_hit)) if loglog else math.exp(x_hit)
        except OverflowError:
            witness = math.inf
        if math.isfinite(witness):
            return ConditionEntry(condition, Status.FAIL, witness_s=witness, details={**details, 'extrapolated': 1.0})

    return ConditionEntry(condition, Status.UNKNOWN, details=details)


def _exact(condition: str, holds: bool, fitted: float, witness: Callable[[], float | None],
           details: dict[str, float] | None = None) -> ConditionEntry:
    details = details or {}
    if holds:
        return ConditionEntry(condition, Status.PASS, fitted_coefficient=fitted, details=details)
    if (w := witness()) is not None:
        return ConditionEntry(condition, Status.FAIL, witness_s=w, details=details)
    logger.debug(f'No witness below {WITNESS_LIMIT:g} for {condition}, reporting unknown')
    return ConditionEntry(condition, Status.UNKNOWN, details=details)


# Individual conditions

def check_G1(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' G(s) <= a s (ln s)^mu for s >= s0, with some mu in (0, 1). '''
    s = _samples(params, model.s0)
    G = eval_G(model, s)
    log_s = np.log(s)

    fits = {mu: float(np.max(G / (s * log_s**mu))) for mu in MU_GRID}
    best_mu = min(fits, key=fits.get)
    details = {'mu': best_mu}

    ratio = lambda t: eval_G(model, t) / (params.a * t * np.log(t)**params.mu)

    if exact and model.is_catalog:
        return _exact(G1, model.p < 0.0, fits[best_mu], lambda: _search_witness(ratio, params, model.s0), details)

    if (witness := _first_violation(s, ratio(s))) is not None:
        return ConditionEntry(G1, Status.FAIL, witness_s=witness, details=details)

    # Passes if any mu on the grid makes G / (s (ln s)^mu) eventually decreasing
    entries = [_sampled(G1, s, G / (params.a * s * log_s**mu), fits[mu], loglog=True, details={'mu': mu}) for mu in MU_GRID]
    if passing := [e for e in entries if e.passed]:
        return min(passing, key=lambda e: e.fitted_coefficient)

    rising = all(e.status == Status.FAIL or e.details.get('tail_slope', 0.0) > SLOPE_BAND for e in entries)
    failing = [e for e in entries if e.status == Status.FAIL]
    if rising and failing:
        return min(failing, key=lambda e: e.witness_s)
    return ConditionEntry(G1, Status.UNKNOWN, details=details)


def check_H1(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' H(s) <= b s / ln s for s >= s0. '''
    s = _samples(params, model.s0)
    H = eval_H(model, s)
    log_s = np.log(s)
    fitted = float(np.max(H * log_s / s))

    ratio = lambda t: eval_H(model, t) * np.log(t) / (params.b * t)

    if exact and model.is_catalog:
        return _exact(H1, model.p < 0.0, fitted, lambda: _search_witness(ratio, params, model.s0))
    return _sampled(H1, s, ratio(s), fitted, loglog=True)


def check_psi(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' psi(s) >= c0 s for s >= 0, i.e. beta bounded below. '''
    s = _samples(params, 1e-12)
    beta = model.beta(s)
    fitted = float(min(np.min(beta), model.beta(0.0)))

    ratio = lambda t: params.c0 / model.beta(t)

    if exact and model.is_catalog:
        return _exact(PSI, model.l2 >= 0.0, fitted, lambda: _search_witness(ratio, params, 1e-12))
    return _sampled(PSI, s, ratio(s), fitted)


def check_raz(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' psi(s) / phi(s) >= C s ln s for s > s0. '''
    s = _samples(params, model.s0)
    log_s = np.log(s)
    # psi / (phi s ln s) = beta / (phi ln s)
    quotient = model.beta(s) / (model.phi(s) * log_s)
    fitted = float(np.min(quotient))

    ratio = lambda t: params.C_raz * model.phi(t) * np.log(t) / model.beta(t)

    if exact and model.is_catalog:
        return _exact(RAZ, model.p < 0.0, fitted, lambda: _search_witness(ratio, params, model.s0))
    return _sampled(RAZ, s, ratio(s), fitted, loglog=True)


def check_balance(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' beta^2(s) / phi(s) <= D1 (1 + s)^-gamma1 for s >= 0, with gamma1 > n. '''
    s = np.concatenate(([0.0], _samples(params, 1e-12)))
    quotient = model.beta(s)**2 / model.phi(s)
    log1p_s = np.log1p(s)

    if exact and model.is_catalog:
        gamma1 = -(2.0 * model.l2 - model.l1)
        fitted = float(np.max(quotient * np.exp(gamma1 * log1p_s)))
        # No gamma1 > n fits: exhibit the violation for gamma1 -> n
        ratio = lambda t: model.beta(t)**2 / model.phi(t) * (1.0 + t)**DIMENSION / params.D1
        return _exact(BALANCE, gamma1 > DIMENSION, fitted, lambda: _search_witness(ratio, params, 1e-12), {'gamma1': gamma1})

    tail = _last_decade(s)
    gamma1 = -_slope(log1p_s[tail], np.log(quotient[tail]))
    details = {'gamma1': gamma1}

    if gamma1 > DIMENSION + SLOPE_BAND:
        r = quotient * np.exp(gamma1 * log1p_s) / params.D1
        if (witness := _first_violation(s, r)) is not None:
            return ConditionEntry(BALANCE, Status.FAIL, witness_s=witness, details=details)
        return ConditionEntry(BALANCE, Status.PASS, fitted_coefficient=float(np.max(r) * params.D1), details=details)

    if gamma1 < DIMENSION - SLOPE_BAND:
        r = quotient * (1.0 + s)**DIMENSION / params.D1
        if (witness := _first_violation(s, r)) is not None:
            return ConditionEntry(BALANCE, Status.FAIL, witness_s=witness, details=details)

    return ConditionEntry(BALANCE, Status.UNKNOWN, details=details)


def check_phibeta(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' phi(s) >= C1 (1 + s)^l1 and beta(s) <= C2 (1 + s)^l2 for s >= 0. '''
    s = np.concatenate(([0.0], _samples(params, 1e-12)))
    log1p_s = np.log1p(s)
    log_phi = np.log(model.phi(s))
    log_beta = np.log(model.beta(s))

    if exact and model.is_catalog:
        l1, l2 = model.l1, model.l2
    else:
        last, previous = _last_decade(s), _last_decade(s, 2.0) & ~_last_decade(s)
        l1 = _slope(log1p_s[last], log_phi[last])
        l2 = _slope(log1p_s[last], log_beta[last])
        drift = max(abs(l1 - _slope(log1p_s[previous], log_phi[previous])),
                    abs(l2 - _slope(log1p_s[previous], log_beta[previous])))
        if drift > SLOPE_BAND:
            return ConditionEntry(PHIBETA, Status.UNKNOWN, details={'l1': l1, 'l2': l2, 'drift': drift})

    C1 = float(np.min(np.exp(log_phi - l1 * log1p_s)))
    C2 = float(np.max(np.exp(log_beta - l2 * log1p_s)))
    details = {'l1': l1, 'l2': l2, 'C2': C2}

    if exact and model.is_catalog:
        return ConditionEntry(PHIBETA, Status.PASS, fitted_coefficient=C1, details=details)

    r = np.maximum(params.C1 * np.exp(l1 * log1p_s - log_phi), np.exp(log_beta - l2 * log1p_s) / params.C2)
    if (witness := _first_violation(s, r)) is not None:
        return ConditionEntry(PHIBETA, Status.FAIL, witness_s=witness, details=details)
    return ConditionEntry(PHIBETA, Status.PASS, fitted_coefficient=C1, details=details)


def check_monotone_phi(model: NonlinearityModel, params: ConditionParams, exact: bool) -> ConditionEntry:
    ''' phi non-increasing on [0, s_max_check]; fitted coefficient is the largest relative increase. '''
    s = np.concatenate(([0.0], _samples(params, 1e-12)))
    phi = model.phi(s)
    increase = np.diff(phi) / phi[:-1]
    worst = float(max(np.max(increase), 0.0))

    if exact and model.is_catalog:
        return _exact(MONOTONE_PHI, model.l1 <= 0.0, worst, lambda: float(s[1 + int(np.argmax(increase))]))

    if np.any(increase > 1e-12):
        return ConditionEntry(MONOTONE_PHI, Status.FAIL, witness_s=float(s[1 + int(np.argmax(increase > 1e-12))]))
    return ConditionEntry(MONOTONE_PHI, Status.PASS, fitted_coefficient=worst)


CHECKS: dict[str, Callable[[NonlinearityModel, ConditionParams, bool], ConditionEntry]] = {
    G1: check_G1,
    H1: check_H1,
    PSI: check_psi,
    RAZ: check_raz,
    BALANCE: check_balance,
    PHIBETA: check_phibeta,
    MONOTONE_PHI: check_monotone_phi,
}


# Operations

def check_conditions(model: NonlinearityModel, params: ConditionParams | None = None, sampled: bool = False) -> ConditionReport:
    '''
    Decide every structural condition. Catalog families are decided by exponent arithmetic unless
    sampled is set, in which case they go through the same sampling route as custom models.
    '''
    params = params or ConditionParams()
    report = ConditionReport(model.name)
    exact = model.is_catalog and not sampled

    with np.errstate(over='ignore', divide='ignore'):
        for check in CHECKS.values():
            report.add(check(model, params, exact))

    for name, entry in report.entries.items():
        logger.debug(f'{model.name}: ({name}) {entry.status.value} witness={entry.witness_s} fitted={entry.fitted_coefficient}')

    report.regime = classify_regime(report)
    return report


def check_raz_implies_GH(model: NonlinearityModel, params: ConditionParams | None = None) -> ConditionReport:
    '''
    Consistency test of the checker: when (raz) holds on samples, (G1) and (H1) must hold as well.
    Both are verified independently by sampling, never derived from (raz).
    '''
    params = params or ConditionParams()
    report = ConditionReport(model.name)

    with np.errstate(over='ignore', divide='ignore'):
        raz = check_raz(model, params, exact=False)
        report.add(raz)

        if not raz.passed:
            report.notes.append('raz fails: the implication is vacuous')
            return report

        report.add(check_G1(model, params, exact=False))
        report.add(check_H1(model, params, exact=False))

    for condition in (G1, H1):
        if report.fails(condition):
            message = f'{model.name}: (raz) holds but ({condition}) fails at s = {report[condition].witness_s:.6g}'
            report.notes.append(message)
            raise_or_warn(ModelError(message))

    return report


def classify_regime(report: ConditionReport, n: int = 2) -> Regime:
    if report.passes(G1, H1, PSI):
        return Regime.FINITE_TIME_BLOWUP
    if n == 2 and report.passes(BALANCE, PHIBETA, G1, H1) and report.fails(PSI):
        return Regime.INFINITE_TIME_BLOWUP
    if report.passes(BALANCE, PHIBETA):
        return Regime.GLOBAL_EXISTENCE
    return Regime.UNKNOWN
