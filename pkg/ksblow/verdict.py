'''
Classification of a finished trajectory and of a refinement study.

A run that trips the blowup trigger is only ever a FiniteTimeBlowup candidate on its own mesh;
refinement_verdict turns a set of runs at N, 2N (and 4N) into a confirmed label or Inconclusive.
'''
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ksblow.logging import logger
from ksblow.trajectory import Trajectory
from ksblow.types import Verdict

# Bounded: ||u||_inf varies by less than this over the final part of the run
BOUNDED_VARIATION = 0.05
BOUNDED_SPAN = 0.2

# Infinite-time candidate: strict growth across this many equal windows covering the second half
GROWTH_WINDOWS = 5
GROWTH_SPAN = 0.5
DT_MARGIN = 10.0

# Refinements agree when their trigger times lie within this relative spread
REFINEMENT_AGREEMENT = 0.2

EXIT_CODES = {
    Verdict.BOUNDED_CANDIDATE: 0,
    Verdict.ERROR: 1,
    Verdict.FINITE_TIME_BLOWUP: 3,
    Verdict.INFINITE_TIME_BLOWUP_CANDIDATE: 4,
    Verdict.INCONCLUSIVE: 5,
}


@dataclass(frozen=True)
class Trigger:
    ''' Why a run stopped early: threshold crossing or time-step collapse. '''
    kind: str
    t: float
    linf_u: float
    reason: str


@dataclass(frozen=True)
class RunVerdict:
    label: Verdict
    T_star: float | None = None
    T_star_interval: tuple[float, float] | None = None
    max_linf_u: float = math.nan
    reason: str = ''
    min_dt: float = math.inf
    confirmed: bool = False
    refinements: tuple[tuple[int, float | None], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.label == Verdict.FINITE_TIME_BLOWUP and (self.T_star is None or not self.refinements):
            raise ValueError('A finite-time blowup verdict needs a trigger time and refinement metadata')

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.label]

    def to_json(self) -> dict[str, Any]:
        return {
            'verdict': self.label.value,
            'T_star': self.T_star,
            'T_star_interval': list(self.T_star_interval) if self.T_star_interval else None,
            'max_linf_u': self.max_linf_u,
            'reason': self.reason,
            'min_dt': self.min_dt,
            'confirmed': self.confirmed,
            'refinements': [{'N': N, 'T_star': T} for N, T in self.refinements],
        }


def _bounded(times: np.ndarray, linf: np.ndarray, t_end: float) -> tuple[bool, float]:
    start = (1.0 - BOUNDED_SPAN) * t_end
    tail = np.concatenate(([np.interp(start, times, linf)], linf[times >= start]))
    variation = float((tail.max() - tail.min()) / tail.max()) if tail.max() > 0.0 else 0.0
    return variation < BOUNDED_VARIATION, variation


def _growing(times: np.ndarray, linf: np.ndarray, t_end: float) -> bool:
    boundaries = np.linspace((1.0 - GROWTH_SPAN) * t_end, t_end, GROWTH_WINDOWS + 1)
    return bool(np.all(np.diff(np.interp(boundaries, times, linf)) > 0.0))


def classify_trajectory(trajectory: Trajectory, t_end: float, dt_min: float, N: int,
                        trigger: Trigger | None = None, min_dt: float = math.inf) -> RunVerdict:
    '''
    Label one run. A trigger gives an unconfirmed FiniteTimeBlowup; otherwise a run that reached
    t_end is BoundedCandidate if ||u||_inf is flat over its final part, else
    InfiniteTimeBlowupCandidate if ||u||_inf grew across every late window without the step size
    approaching dt_min. Bounded is tested first: a solution settling onto a steady state from
    below grows monotonically as well.
    '''
    linf = trajectory.linf
    max_linf = float(linf.max()) if len(linf) else math.nan

    if trigger is not None:
        return RunVerdict(Verdict.FINITE_TIME_BLOWUP, T_star=trigger.t, T_star_interval=(trigger.t, trigger.t),
                          max_linf_u=max_linf, reason=trigger.reason, min_dt=min_dt, refinements=((N, trigger.t),))

    times = trajectory.times
    if not len(times) or times[-1] < t_end:
        return RunVerdict(Verdict.INCONCLUSIVE, max_linf_u=max_linf, min_dt=min_dt, reason='run stopped before t_end')

    bounded, variation = _bounded(times, linf, t_end)
    if bounded:
        return RunVerdict(Verdict.BOUNDED_CANDIDATE, max_linf_u=max_linf, min_dt=min_dt,
                          reason=f'||u||_inf varies by {variation:.3%} over the final {BOUNDED_SPAN:.0%}')

    if _growing(times, linf, t_end) and min_dt > DT_MARGIN * dt_min:
        return RunVerdict(Verdict.INFINITE_TIME_BLOWUP_CANDIDATE, max_linf_u=max_linf, min_dt=min_dt,
                          reason=f'||u||_inf grew across each of the last {GROWTH_WINDOWS} windows')

    return RunVerdict(Verdict.INCONCLUSIVE, max_linf_u=max_linf, min_dt=min_dt,
                      reason=f'||u||_inf varies by {variation:.3%} over the final {BOUNDED_SPAN:.0%} without steady growth')


def refinement_verdict(runs: Sequence[tuple[int, RunVerdict]]) -> RunVerdict:
    '''
    Confirm a blowup from runs at increasing N: every run must trigger, the two finest trigger times
    must agree within REFINEMENT_AGREEMENT and, with three or more runs, the differences between
    successive trigger times must shrink. Anything else is Inconclusive.
    '''
    runs = sorted(runs, key=lambda run: run[0])
    refinements = tuple((N, v.T_star if v.label == Verdict.FINITE_TIME_BLOWUP else None) for N, v in runs)
    max_linf = max(v.max_linf_u for _, v in runs)
    min_dt = min(v.min_dt for _, v in runs)

    missing = [N for N, T in refinements if T is None]
    if missing:
        reason = f'no blowup trigger at N = {", ".join(map(str, missing))}'
        logger.warning(f'Blowup not confirmed: {reason}')
        return RunVerdict(Verdict.INCONCLUSIVE, max_linf_u=max_linf, min_dt=min_dt, reason=reason, refinements=refinements)

    T = [T for _, T in refinements]
    interval = (min(T), max(T))
    spread = abs(T[-1] - T[-2]) / T[-1] if len(T) > 1 else 0.0
    differences = np.abs(np.diff(T))
    cauchy = bool(np.all(np.diff(differences) < 0.0)) if len(differences) > 1 else True

    if spread <= REFINEMENT_AGREEMENT and cauchy:
        return RunVerdict(Verdict.FINITE_TIME_BLOWUP, T_star=T[-1], T_star_interval=interval, max_linf_u=max_linf,
                          min_dt=min_dt, confirmed=True, refinements=refinements,
                          reason=f'{len(T)} refinements, finest pair agrees within {spread:.1%}')

    reason = f'finest trigger times differ by {spread:.1%}' if spread > REFINEMENT_AGREEMENT else 'trigger times do not settle under refinement'
    logger.warning(f'Blowup not confirmed: {reason}')
    return RunVerdict(Verdict.INCONCLUSIVE, T_star_interval=interval, max_linf_u=max_linf, min_dt=min_dt,
                      reason=reason, refinements=refinements)
