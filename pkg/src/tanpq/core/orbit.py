"""
Orbit Engine

Iterates seeds under f_lambda, detects and Newton-refines attracting cycles,
computes cycle multipliers and classifies parameters as shell, capture,
virtual-cycle or undecided.

Classification of a single parameter and of whole batches share the same
compiled kernel, so a grid cell and a direct classification of the same lambda agree
bit for bit.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numba import njit, prange
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import (
    CYCLE_AMPLIFICATION_LIMIT,
    MAX_MODULUS,
    MULTIPLIER_AGREEMENT,
    MULTIPLIER_ERROR_LIMIT,
    ORBIT_KICK,
    ORBIT_KICKS,
    SYMMETRIC_CYCLE_TOL,
    TRACT_GUARD,
    deep_orbit_defaults,
    orbit_defaults,
    polish_max_steps,
    refine_max_steps,
)
from .errors import MagnitudeOverflowError, PoleHitError, RefinementError, SingularMultiplierError
from .family import (
    STATUS_OK,
    STATUS_OVERFLOW,
    STATUS_POLE,
    TWO_PI,
    FamilyParams,
    _aligned,
    _check_lambda,
    _eval,
    _eval_with_derivative,
    _from_log,
    _ipow,
    _log_derivative,
    _log_multiplier,
    _log_ratio,
    _phase_gap,
    _pole_distance,
    _power,
    _tan_sec2,
    _times_i_power,
    on_invariant_lines,
)

logger = logging.getLogger(__name__)

# Integer codes shared by orbit outcomes and parameter classes
CODE_ATTRACTED = 0
CODE_CAPTURED = 1
CODE_PREPOLE = 2
CODE_UNDECIDED = 3

MODE_NONE = 0
MODE_TWO_CYCLES = 1
MODE_DOUBLED = 2


class OutcomeTag(str, Enum):
    ATTRACTED = "Attracted"
    CAPTURED = "CapturedByZero"
    PREPOLE = "PrepoleHit"
    UNDECIDED = "Undecided"


class ClassTag(str, Enum):
    SHELL = "Shell"
    CAPTURE = "Capture"
    VIRTUAL = "VirtualCycle"
    UNDECIDED = "Undecided"


class CycleMode(str, Enum):
    TWO_CYCLES = "TwoCycles"
    DOUBLED = "DoubledCycle"


OUTCOME_BY_CODE = {
    CODE_ATTRACTED: OutcomeTag.ATTRACTED,
    CODE_CAPTURED: OutcomeTag.CAPTURED,
    CODE_PREPOLE: OutcomeTag.PREPOLE,
    CODE_UNDECIDED: OutcomeTag.UNDECIDED,
}
CLASS_BY_CODE = {
    CODE_ATTRACTED: ClassTag.SHELL,
    CODE_CAPTURED: ClassTag.CAPTURE,
    CODE_PREPOLE: ClassTag.VIRTUAL,
    CODE_UNDECIDED: ClassTag.UNDECIDED,
}
MODE_BY_CODE = {
    MODE_NONE: None,
    MODE_TWO_CYCLES: CycleMode.TWO_CYCLES,
    MODE_DOUBLED: CycleMode.DOUBLED,
}


class OrbitBudget(BaseModel):
    """Iteration limits and tolerances for orbit classification."""

    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(default=orbit_defaults["max_iter"], gt=0)
    warmup: int = Field(default=orbit_defaults["warmup"], gt=0)
    max_period: int = Field(default=orbit_defaults["max_period"], gt=0)
    cycle_tol: float = Field(default=orbit_defaults["cycle_tol"], gt=0)
    attract_tol: float = Field(default=orbit_defaults["attract_tol"], gt=0)
    zero_tol: float = Field(default=orbit_defaults["zero_tol"], gt=0)
    pole_tol: float = Field(default=orbit_defaults["pole_tol"], gt=0)

    @model_validator(mode="after")
    def _warmup_below_max_iter(self):
        if self.warmup >= self.max_iter:
            raise ValueError(f"warmup ({self.warmup}) must be below max_iter ({self.max_iter})")
        return self

    @classmethod
    def deep(cls) -> "OrbitBudget":
        """Budget for parameters near a neutral cycle."""
        return cls(**deep_orbit_defaults)

    def kernel_args(self) -> Tuple:
        return (
            self.max_iter,
            self.warmup,
            self.max_period,
            self.cycle_tol,
            self.attract_tol,
            self.zero_tol,
            self.pole_tol,
        )


@dataclass(frozen=True)
class CycleInfo:
    """A refined periodic cycle z_0 .. z_{n-1} with its multiplier."""

    period: int
    points: Tuple[complex, ...]
    multiplier: complex
    self_symmetric: bool = False


@dataclass(frozen=True)
class OrbitOutcome:
    tag: OutcomeTag
    cycle: Optional[CycleInfo] = None
    order: Optional[int] = None


@dataclass(frozen=True)
class ParamClass:
    """
    Classification of one parameter (or of one dynamical seed).

    `period` is the S-index: the raw cycle length, halved for DoubledCycle.
    `side` is the sign of Im(w) on the cycle point feeding the seed's
    neighbourhood; it tells apart components that share period and mode.
    """

    tag: ClassTag
    period: int = 0
    raw_period: int = 0
    mode: Optional[CycleMode] = None
    multiplier: Optional[complex] = None
    order: Optional[int] = None
    cycle: Optional[CycleInfo] = None
    side: int = 0

    @property
    def key(self):
        return (self.tag, self.period, self.mode)

    def is_shell(self, period: Optional[int] = None) -> bool:
        return self.tag == ClassTag.SHELL and (period is None or self.period == period)


# --- compiled kernels ---

EPS = float(np.finfo(np.float64).eps)
LOG_REPRESENTABLE = -745.0
LOG_AMPLIFICATION_LIMIT = math.log(CYCLE_AMPLIFICATION_LIMIT)

# Verdicts on a detected cycle
CYCLE_ACCEPTED = 0
CYCLE_UNDECIDED = 1
CYCLE_CAPTURED = 2
CYCLE_RESCAN = 3


@njit(cache=True)
def _zero_attracting(p, q, lam):
    # f'(0) = 0 for pq >= 2, lam for pq = 1
    return p * q >= 2 or abs(lam) < 1.0


@njit(cache=True)
def _iterate(p, q, lam, z0, max_iter, warmup, max_period, cycle_tol, zero_tol, pole_tol, snap):
    """
    Raw orbit scan. Returns (code, z, period, order).

    Period detection compares against a reference point refreshed every
    max_period steps, then demands the match for three consecutive points.
    """
    zero_attracting = _zero_attracting(p, q, lam)
    size = max_period + 3
    buf = np.empty(size, dtype=np.complex128)
    z = z0
    ref = z0
    t_ref = -1
    for t in range(max_iter + 1):
        if abs(z) > MAX_MODULUS or not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return CODE_UNDECIDED, z, 0, 0
        w = _power(z, q, snap)
        d, _m = _pole_distance(w)
        if d < pole_tol:
            return CODE_PREPOLE, z, 0, t + 1
        if zero_attracting and abs(z) < zero_tol:
            return CODE_CAPTURED, z, 0, 0
        buf[t % size] = z
        if t >= warmup:
            if t_ref < 0 or t - t_ref > max_period:
                ref = z
                t_ref = t
            elif abs(z - ref) < cycle_tol * max(1.0, abs(z)):
                n = t - t_ref
                sustained = True
                for s in range(3):
                    a = buf[(t - s) % size]
                    b = buf[(t - s - n) % size]
                    if abs(a - b) >= cycle_tol * max(1.0, abs(a)):
                        sustained = False
                        break
                if sustained:
                    return CODE_ATTRACTED, z, n, 0
        tw, _s = _tan_sec2(w)
        z = lam * _ipow(tw, p)
    return CODE_UNDECIDED, z, 0, 0


@njit(cache=True)
def _compose(p, q, lam, z, n, pole_tol, snap):
    """f^n(z) and (f^n)'(z) by the chain rule."""
    deriv = complex(1.0, 0.0)
    for _ in range(n):
        z, dz, status = _eval_with_derivative(p, q, lam, z, pole_tol, snap)
        if status != STATUS_OK:
            return z, deriv, status
        deriv = deriv * dz
    return z, deriv, STATUS_OK


@njit(cache=True)
def _refine(p, q, lam, z, n, attract_tol, pole_tol, snap):
    """Newton on f^n(z) - z. Returns (z, residual, converged)."""
    residual = np.inf
    for _step in range(refine_max_steps + 1):
        image, deriv, status = _compose(p, q, lam, z, n, pole_tol, snap)
        if status != STATUS_OK:
            return z, np.inf, False
        g = image - z
        residual = abs(g)
        denom = deriv - 1.0
        if abs(denom) == 0.0:
            return z, residual, residual < attract_tol * max(1.0, abs(z))
        if residual < attract_tol * max(1.0, abs(z)):
            # one polishing step, kept only if it helps
            zp = z - g / denom
            image, _dpol, status = _compose(p, q, lam, zp, n, pole_tol, snap)
            if status == STATUS_OK and abs(image - zp) < residual:
                return zp, abs(image - zp), True
            return z, residual, True
        z = z - g / denom
    return z, residual, False


@njit(cache=True)
def _minimal_period(p, q, lam, z, n, cycle_tol, attract_tol, pole_tol, snap):
    """Collapse n onto its smallest divisor that still closes the cycle."""
    for d in range(1, n):
        if n % d != 0:
            continue
        image, _dd, status = _compose(p, q, lam, z, d, pole_tol, snap)
        if status != STATUS_OK:
            continue
        if abs(image - z) < 10.0 * cycle_tol * max(1.0, abs(z)):
            zd, _res, ok = _refine(p, q, lam, z, d, attract_tol, pole_tol, snap)
            if ok:
                return zd, d
    return z, n


@njit(cache=True)
def _cycle_points(p, q, lam, z, n, pole_tol, snap):
    pts = np.empty(n, dtype=np.complex128)
    for i in range(n):
        pts[i] = z
        z, _ = _eval(p, q, lam, z, pole_tol, snap)
    return pts


@njit(cache=True)
def _step_residuals(p, q, lam, pts, pole_tol, snap, res, slopes):
    """Fill f(z_i) - z_{i+1} and f'(z_i); return the worst relative residual."""
    n = pts.shape[0]
    worst = 0.0
    for i in range(n):
        image, deriv, status = _eval_with_derivative(p, q, lam, pts[i], pole_tol, snap)
        if status != STATUS_OK:
            return np.inf
        nxt = pts[(i + 1) % n]
        res[i] = image - nxt
        slopes[i] = deriv
        rel = abs(res[i]) / max(1.0, abs(nxt))
        if not rel <= worst:
            worst = rel
    return worst


@njit(cache=True)
def _polish_cycle(p, q, lam, pts, pole_tol, snap):
    """
    Multiple-shooting Newton on z_{i+1} = f(z_i) around the whole cycle.

    Each sweep solves the cyclic bidiagonal system exactly; a sweep is kept
    only when it lowers the worst one-step residual.
    """
    n = pts.shape[0]
    res = np.empty(n, dtype=np.complex128)
    slopes = np.empty(n, dtype=np.complex128)
    worst = _step_residuals(p, q, lam, pts, pole_tol, snap, res, slopes)
    for _sweep in range(polish_max_steps):
        if not (worst > 0.0 and math.isfinite(worst)):
            break
        acc = complex(0.0, 0.0)
        mu = complex(1.0, 0.0)
        for i in range(n):
            acc = acc * slopes[i] + res[i]
            mu = mu * slopes[i]
        delta = acc / (1.0 - mu)
        trial = np.empty(n, dtype=np.complex128)
        finite = True
        for i in range(n):
            if not (math.isfinite(delta.real) and math.isfinite(delta.imag)):
                finite = False
                break
            trial[i] = pts[i] + delta
            delta = res[i] + slopes[i] * delta
        if not finite:
            break
        trial_res = np.empty(n, dtype=np.complex128)
        trial_slopes = np.empty(n, dtype=np.complex128)
        trial_worst = _step_residuals(p, q, lam, trial, pole_tol, snap, trial_res, trial_slopes)
        if not trial_worst < worst:
            break
        pts = trial
        res = trial_res
        slopes = trial_slopes
        worst = trial_worst
    return pts, worst


@njit(cache=True)
def _settle_cycle(p, q, lam, z, n, pole_tol, snap):
    pts = _cycle_points(p, q, lam, z, n, pole_tol, snap)
    return _polish_cycle(p, q, lam, pts, pole_tol, snap)


@njit(cache=True)
def _log_chain(p, q, lam, pts, pole_tol, snap):
    """log|prod f'(z_i)| and its phase, accumulated term by term."""
    logmod = 0.0
    phase = 0.0
    for i in range(pts.shape[0]):
        lm, ph, status = _log_derivative(p, q, lam, pts[i], pole_tol, snap)
        if status != STATUS_OK:
            return logmod, phase, status
        logmod += lm
        phase = np.fmod(phase + ph, TWO_PI)
    return logmod, phase, STATUS_OK


@njit(cache=True)
def _log_factors(p, q, pts, snap):
    """
    Per point: log|2pq w / sin 2w| and q|1 - s cot s|, s = 2w.

    The first is how much f stretches relative errors at that point, the
    second how strongly that point's own rounding moves log(mu).
    """
    n = pts.shape[0]
    logs = np.empty(n, dtype=np.float64)
    sens = np.empty(n, dtype=np.float64)
    base = math.log(p * q)
    for i in range(n):
        s = 2.0 * _power(pts[i], q, snap)
        lm, _ph, singular = _log_ratio(s)
        if singular:
            return logs, sens, False
        logs[i] = base + lm
        if s.imag > TRACT_GUARD:
            cot = complex(0.0, -1.0)
        elif s.imag < -TRACT_GUARD:
            cot = complex(0.0, 1.0)
        elif abs(s) == 0.0:
            cot = complex(0.0, 0.0)
        else:
            cot = cmath.cos(s) / cmath.sin(s)
        sens[i] = q * abs(1.0 - s * cot)
    return logs, sens, True


@njit(cache=True)
def _max_window(logs):
    """Largest sum of log factors over cyclic runs shorter than the cycle."""
    n = logs.shape[0]
    best = 0.0
    for i in range(n):
        acc = 0.0
        for length in range(1, n):
            acc += logs[(i - length) % n]
            if acc > best:
                best = acc
    return best


@njit(cache=True)
def _examine_cycle(p, q, lam, z, n, cycle_tol, attract_tol, zero_tol, pole_tol, snap):
    """
    Refine, polish and vet a detected cycle. Returns (verdict, points,
    log_modulus, phase).

    A cycle whose points cannot be trusted to cycle_tol, or whose closed-form
    and chain-rule multipliers disagree, earns a rescan from a nudged point.
    An accurate cycle whose multiplier is still ill-conditioned is Undecided.
    """
    empty = np.empty(0, dtype=np.complex128)
    z, _res, ok = _refine(p, q, lam, z, n, attract_tol, pole_tol, snap)
    if not ok:
        return CYCLE_RESCAN, empty, 0.0, 0.0
    z, n = _minimal_period(p, q, lam, z, n, cycle_tol, attract_tol, pole_tol, snap)
    pts, worst = _settle_cycle(p, q, lam, z, n, pole_tol, snap)

    near_zero = True
    for i in range(n):
        if abs(pts[i]) >= zero_tol:
            near_zero = False
            break
    if near_zero:
        if _zero_attracting(p, q, lam):
            return CYCLE_CAPTURED, empty, 0.0, 0.0
        return CYCLE_UNDECIDED, empty, 0.0, 0.0
    if not worst <= cycle_tol:
        return CYCLE_RESCAN, empty, 0.0, 0.0

    logmod, phase, singular = _log_multiplier(p, q, pts, snap)
    if singular or not logmod < 0.0:
        return CYCLE_UNDECIDED, empty, 0.0, 0.0
    logs, sens, ok = _log_factors(p, q, pts, snap)
    if not ok:
        return CYCLE_UNDECIDED, empty, 0.0, 0.0
    if _max_window(logs) > LOG_AMPLIFICATION_LIMIT:
        return CYCLE_RESCAN, empty, 0.0, 0.0

    chain_log, chain_phase, status = _log_chain(p, q, lam, pts, pole_tol, snap)
    if status != STATUS_OK:
        return CYCLE_RESCAN, empty, 0.0, 0.0
    if logmod >= LOG_REPRESENTABLE:
        if abs(chain_log - logmod) > MULTIPLIER_AGREEMENT or _phase_gap(chain_phase, phase) > MULTIPLIER_AGREEMENT:
            return CYCLE_RESCAN, empty, 0.0, 0.0
        gap = abs(1.0 - _from_log(logmod, phase))
        if 4.0 * EPS * np.sum(sens) > MULTIPLIER_ERROR_LIMIT * gap:
            return CYCLE_UNDECIDED, empty, 0.0, 0.0
    elif abs(chain_log - logmod) > MULTIPLIER_AGREEMENT * abs(logmod):
        return CYCLE_RESCAN, empty, 0.0, 0.0
    return CYCLE_ACCEPTED, pts, logmod, phase


@njit(cache=True)
def _classify_orbit(p, q, lam, z0, max_iter, warmup, max_period, cycle_tol, attract_tol, zero_tol, pole_tol):
    """
    Full classification of the orbit of z0.

    Returns (code, s_index, raw_period, mode, multiplier, order, cycle_point,
    side, log_modulus). A rejected cycle is rescanned from a slightly nudged
    point at most ORBIT_KICKS times before the orbit counts as Undecided.
    """
    zero = complex(0.0, 0.0)
    if lam.real == 0.0 and lam.imag == 0.0:
        return CODE_UNDECIDED, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan
    snap = _aligned(_times_i_power(lam, p), q) and _aligned(z0, q)
    start = z0
    for attempt in range(ORBIT_KICKS + 1):
        code, z, n, order = _iterate(
            p, q, lam, start, max_iter, warmup, max_period, cycle_tol, zero_tol, pole_tol, snap
        )
        if code == CODE_PREPOLE:
            if attempt > 0:
                return CODE_UNDECIDED, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan
            return CODE_PREPOLE, 0, 0, MODE_NONE, zero, order, zero, 0, np.nan
        if code != CODE_ATTRACTED:
            return code, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan

        verdict, pts, logmod, phase = _examine_cycle(
            p, q, lam, z, n, cycle_tol, attract_tol, zero_tol, pole_tol, snap
        )
        if verdict == CYCLE_CAPTURED:
            return CODE_CAPTURED, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan
        if verdict == CYCLE_UNDECIDED:
            return CODE_UNDECIDED, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan
        if verdict == CYCLE_RESCAN:
            start = z * (1.0 + ORBIT_KICK)
            continue

        n = pts.shape[0]
        mode = MODE_NONE
        s_index = n
        if (p * q) % 2 == 1:
            mode = MODE_TWO_CYCLES
            tol = SYMMETRIC_CYCLE_TOL * max(1.0, abs(pts[0]))
            for i in range(1, n):
                if abs(pts[i] + pts[0]) < tol:
                    mode = MODE_DOUBLED
                    s_index = n // 2
                    break

        nearest = 0
        best = abs(pts[0] - z0)
        for i in range(1, n):
            dist = abs(pts[i] - z0)
            if dist < best:
                best = dist
                nearest = i
        point = pts[nearest]
        image, _d, status = _compose(p, q, lam, point, n, pole_tol, snap)
        if status != STATUS_OK or not abs(image - point) <= cycle_tol * max(1.0, abs(point)):
            start = z * (1.0 + ORBIT_KICK)
            continue
        pred = pts[(nearest - 1) % n]
        side = 1 if _power(pred, q, snap).imag >= 0.0 else -1
        return CODE_ATTRACTED, s_index, n, mode, _from_log(logmod, phase), 0, point, side, logmod
    return CODE_UNDECIDED, 0, 0, MODE_NONE, zero, 0, zero, 0, np.nan


@njit(parallel=True, cache=True)
def _classify_batch(p, q, lams, seeds, use_asymptotic, max_iter, warmup, max_period, cycle_tol, attract_tol, zero_tol, pole_tol):
    count = lams.shape[0]
    codes = np.empty(count, dtype=np.int8)
    s_index = np.empty(count, dtype=np.int32)
    raw = np.empty(count, dtype=np.int32)
    modes = np.empty(count, dtype=np.int8)
    mults = np.empty(count, dtype=np.complex128)
    orders = np.empty(count, dtype=np.int32)
    points = np.empty(count, dtype=np.complex128)
    sides = np.empty(count, dtype=np.int8)
    logmods = np.empty(count, dtype=np.float64)
    for i in prange(count):
        lam = lams[i]
        z0 = _times_i_power(lam, p) if use_asymptotic else seeds[i]
        c, s, r, m, mu, o, pt, sd, lm = _classify_orbit(
            p, q, lam, z0, max_iter, warmup, max_period, cycle_tol, attract_tol, zero_tol, pole_tol
        )
        codes[i] = c
        s_index[i] = s
        raw[i] = r
        modes[i] = m
        mults[i] = mu
        orders[i] = o
        points[i] = pt
        sides[i] = sd
        logmods[i] = lm
    return codes, s_index, raw, modes, mults, orders, points, sides, logmods


# --- public surface ---


@dataclass
class ClassBatch:
    """Struct-of-arrays result of a batch classification."""

    codes: np.ndarray
    periods: np.ndarray
    raw_periods: np.ndarray
    modes: np.ndarray
    multipliers: np.ndarray
    orders: np.ndarray
    points: np.ndarray
    sides: np.ndarray
    log_moduli: np.ndarray

    def __len__(self):
        return self.codes.shape[0]

    def item(self, i: int, params: Optional[FamilyParams] = None, lam: Optional[complex] = None) -> ParamClass:
        """ParamClass of entry i; with params and lam the full cycle is rebuilt."""
        return _to_param_class(
            int(self.codes[i]),
            int(self.periods[i]),
            int(self.raw_periods[i]),
            int(self.modes[i]),
            complex(self.multipliers[i]),
            int(self.orders[i]),
            complex(self.points[i]),
            int(self.sides[i]),
            params,
            lam,
        )


def _rebuild_cycle(params: FamilyParams, lam: complex, point: complex, raw: int, pole_tol: float) -> np.ndarray:
    """The polished cycle through an emitted point, as the kernel saw it."""
    snap = on_invariant_lines(params, lam, point)
    pts, _ = _settle_cycle(params.p, params.q, complex(lam), complex(point), int(raw), pole_tol, snap)
    return pts


def _to_param_class(code, s_index, raw, mode, mult, order, point, side, params=None, lam=None):
    tag = CLASS_BY_CODE[code]
    if tag == ClassTag.VIRTUAL:
        return ParamClass(tag=tag, order=order)
    if tag != ClassTag.SHELL:
        return ParamClass(tag=tag)
    cycle = None
    if params is not None and lam is not None:
        pts = _rebuild_cycle(params, lam, point, raw, orbit_defaults["pole_tol"])
        cycle = CycleInfo(
            period=raw,
            points=tuple(complex(z) for z in pts),
            multiplier=mult,
            self_symmetric=mode == MODE_DOUBLED,
        )
    return ParamClass(
        tag=tag,
        period=s_index,
        raw_period=raw,
        mode=MODE_BY_CODE[mode],
        multiplier=mult,
        cycle=cycle,
        side=side,
    )


def classify_many(params: FamilyParams, lambdas, budget: Optional[OrbitBudget] = None) -> ClassBatch:
    """Classify every parameter in `lambdas` in parallel; output order follows input."""
    budget = budget or OrbitBudget()
    lams = np.ascontiguousarray(np.asarray(lambdas, dtype=np.complex128).reshape(-1))
    arrays = _classify_batch(params.p, params.q, lams, lams, True, *budget.kernel_args())
    return ClassBatch(*arrays)


def classify_seeds(params: FamilyParams, lam: complex, seeds, budget: Optional[OrbitBudget] = None) -> ClassBatch:
    """Classify the orbits of many seeds of one map f_lambda in parallel."""
    budget = budget or OrbitBudget()
    lam = _check_lambda(lam)
    zs = np.ascontiguousarray(np.asarray(seeds, dtype=np.complex128).reshape(-1))
    lams = np.full(zs.shape[0], lam, dtype=np.complex128)
    arrays = _classify_batch(params.p, params.q, lams, zs, False, *budget.kernel_args())
    return ClassBatch(*arrays)


def classify_parameter(params: FamilyParams, lam: complex, budget: Optional[OrbitBudget] = None) -> ParamClass:
    """
    Classify lambda by the fate of the free asymptotic value v = i^p lambda.

    For pq odd the orbit of -v is the negated orbit of v, so the mode is read
    off the attracting cycle C alone: DoubledCycle when -C == C.
    """
    budget = budget or OrbitBudget()
    lam = complex(lam)
    z0 = complex(_times_i_power(lam, params.p))
    result = _classify_orbit(params.p, params.q, lam, z0, *budget.kernel_args())
    code, s_index, raw, mode, mult, order, point, side, _ = result
    return _to_param_class(code, s_index, raw, mode, complex(mult), order, complex(point), side, params, lam)


def iterate_orbit(params: FamilyParams, lam: complex, z0: complex, budget: Optional[OrbitBudget] = None) -> OrbitOutcome:
    """
    Iterate z0 under f_lambda and report where it goes.

    z0 = 0 is CapturedByZero only where 0 attracts; for pq = 1 and
    |lambda| >= 1 it is a repelling or neutral fixed point and stays Undecided.
    """
    budget = budget or OrbitBudget()
    lam = _check_lambda(lam)
    code, _, raw, mode, mult, order, point, _, _ = _classify_orbit(
        params.p, params.q, lam, complex(z0), *budget.kernel_args()
    )
    tag = OUTCOME_BY_CODE[code]
    if tag == OutcomeTag.PREPOLE:
        return OrbitOutcome(tag=tag, order=int(order))
    if tag != OutcomeTag.ATTRACTED:
        return OrbitOutcome(tag=tag)
    pts = _rebuild_cycle(params, lam, point, raw, budget.pole_tol)
    cycle = CycleInfo(
        period=int(raw),
        points=tuple(complex(z) for z in pts),
        multiplier=complex(mult),
        self_symmetric=mode == MODE_DOUBLED,
    )
    return OrbitOutcome(tag=tag, cycle=cycle)


def _is_self_symmetric(points) -> bool:
    pts = np.asarray(points, dtype=np.complex128)
    tol = SYMMETRIC_CYCLE_TOL * max(1.0, abs(pts[0]))
    return bool(np.any(np.abs(pts[1:] + pts[0]) < tol))


def refine_cycle(params: FamilyParams, lam: complex, z_seed: complex, period: int, budget: Optional[OrbitBudget] = None) -> CycleInfo:
    """
    Newton-refine a period-n cycle through z_seed, then polish every point.

    If a proper divisor of n already closes the cycle, the minimal period is
    returned instead.

    Raises:
        RefinementError: Newton did not reach attract_tol within its step limit.
    """
    budget = budget or OrbitBudget()
    lam = _check_lambda(lam)
    if period < 1:
        raise ValueError(f"period must be positive, got {period}")
    p, q = params.p, params.q
    snap = on_invariant_lines(params, lam, z_seed)
    z, residual, ok = _refine(p, q, lam, complex(z_seed), period, budget.attract_tol, budget.pole_tol, snap)
    if not ok:
        raise RefinementError(f"period-{period} refinement from {z_seed!r} stalled at residual {residual:.3e}")
    z, n = _minimal_period(p, q, lam, z, period, budget.cycle_tol, budget.attract_tol, budget.pole_tol, snap)
    pts, worst = _settle_cycle(p, q, lam, z, n, budget.pole_tol, snap)
    logger.debug(f"period-{n} cycle at lambda={lam} polished to residual {worst:.2e}")
    return CycleInfo(
        period=int(n),
        points=tuple(complex(w) for w in pts),
        multiplier=_closed_form(params, pts),
        self_symmetric=params.pq_odd and n > 1 and _is_self_symmetric(pts),
    )


def _cycle_array(params: FamilyParams, points):
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.complex128).reshape(-1))
    # z^q is snapped only when every point already sits on the invariant lines
    snap = all(_aligned(complex(z), params.q) for z in pts)
    return pts, snap


def _closed_form(params: FamilyParams, points) -> complex:
    pts, snap = _cycle_array(params, points)
    logmod, phase, singular = _log_multiplier(params.p, params.q, pts, snap)
    if singular:
        raise SingularMultiplierError("sin(2 z^q) vanishes on the cycle")
    return complex(_from_log(logmod, phase))


def cycle_multiplier(params: FamilyParams, cycle: CycleInfo) -> complex:
    """Closed-form multiplier (2pq)^n * prod z_i^q / sin(2 z_i^q)."""
    return _closed_form(params, cycle.points)


def cycle_log_modulus(params: FamilyParams, cycle: CycleInfo) -> float:
    """log|mu| of the cycle, finite even where |mu| underflows."""
    pts, snap = _cycle_array(params, cycle.points)
    logmod, _, singular = _log_multiplier(params.p, params.q, pts, snap)
    if singular:
        raise SingularMultiplierError("sin(2 z^q) vanishes on the cycle")
    return float(logmod)


def chain_multiplier(params: FamilyParams, lam: complex, cycle: CycleInfo) -> complex:
    """
    Product of f'(z_i) over the cycle, accumulated as a sum of logarithms.

    Raises:
        PoleHitError: a cycle point sits on a pole.
        MagnitudeOverflowError: a cycle point is above the overflow threshold.
    """
    lam = _check_lambda(lam)
    pts, snap = _cycle_array(params, cycle.points)
    snap = snap and on_invariant_lines(params, lam, pts[0])
    logmod, phase, status = _log_chain(params.p, params.q, lam, pts, orbit_defaults["pole_tol"], snap)
    if status == STATUS_POLE:
        raise PoleHitError(complex(_ipow(complex(pts[0]), params.q)))
    if status == STATUS_OVERFLOW:
        raise MagnitudeOverflowError(f"cycle point beyond {MAX_MODULUS:.0e}")
    if status != STATUS_OK:
        return 0j
    return complex(_from_log(logmod, phase))
