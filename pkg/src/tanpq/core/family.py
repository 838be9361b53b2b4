"""
Family Kernel

Numerically stable evaluation of f_lambda(z) = lambda * tan(z^q)^p, its
derivative, its poles and asymptotic values, and the fixed-point formulas
that parametrise period-1 behaviour.

The compiled primitives at the top of the module never raise: they return
integer status codes that the orbit engine consumes directly. The public
functions below translate those codes into tanpq exceptions.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field

from .config import AXIS_ALIGN_TOL, MAX_MODULUS, TRACT_GUARD, orbit_defaults
from .errors import (
    DegenerateInputError,
    MagnitudeOverflowError,
    PoleHitError,
    SingularMultiplierError,
)

logger = logging.getLogger(__name__)

STATUS_OK = 0
STATUS_POLE = 1
STATUS_OVERFLOW = 2
STATUS_ZERO = 3

HALF_PI = math.pi / 2.0
TWO_PI = 2.0 * math.pi
LOG_FOUR = math.log(4.0)
_TINY = 1e-300


class FamilyParams(BaseModel):
    """The integer pair (p, q) selecting f = lambda * tan^p(z^q)."""

    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=1, description="outer power")
    q: int = Field(ge=1, description="inner power")

    @property
    def pq(self) -> int:
        return self.p * self.q

    @property
    def pq_even(self) -> bool:
        return self.pq % 2 == 0

    @property
    def pq_odd(self) -> bool:
        return not self.pq_even

    def __str__(self):
        return f"(p={self.p}, q={self.q})"


@dataclass(frozen=True)
class Pole:
    """A pole of tan^p(z^q): location^q = pi/2 + m*pi on root branch j."""

    m: int
    j: int
    location: complex


# --- compiled primitives ---


@njit(cache=True)
def _times_i_power(z, k):
    # exact multiplication by i^k
    k = k % 4
    if k == 0:
        return z
    if k == 1:
        return complex(-z.imag, z.real)
    if k == 2:
        return -z
    return complex(z.imag, -z.real)


@njit(cache=True)
def _ipow(z, n):
    result = complex(1.0, 0.0)
    if n == 1:
        return z
    base = z
    while n > 0:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result


@njit(cache=True)
def _pole_distance(w):
    """Distance from w to the nearest pi/2 + m*pi, and that m."""
    m = math.floor((w.real - HALF_PI) / math.pi + 0.5)
    pole = HALF_PI + m * math.pi
    return abs(w - pole), int(m)


@njit(cache=True)
def _axis_snap(w):
    # onto the nearer of the real and imaginary axes
    if abs(w.imag) <= abs(w.real):
        return complex(w.real, 0.0)
    return complex(0.0, w.imag)


@njit(cache=True)
def _power(z, q, snap):
    """z^q, snapped onto an axis when the orbit lives on the invariant lines."""
    w = _ipow(z, q)
    if snap:
        return _axis_snap(w)
    return w


@njit(cache=True)
def _aligned(z, q):
    """True when z^(4q) is real and positive up to AXIS_ALIGN_TOL in angle."""
    if z.real == 0.0 and z.imag == 0.0:
        return True
    r = abs(np.fmod(4.0 * q * math.atan2(z.imag, z.real), TWO_PI))
    return min(r, TWO_PI - r) <= 4.0 * q * AXIS_ALIGN_TOL


@njit(cache=True)
def _phase_gap(a, b):
    r = abs(np.fmod(a - b, TWO_PI))
    return min(r, TWO_PI - r)


@njit(cache=True)
def _tan_sec2(w):
    """
    tan(w) and sec^2(w) with the exponential always of modulus <= 1.

    Real w gives an exactly real pair, imaginary w an exactly imaginary
    tangent and a real sec^2.
    """
    if w.imag == 0.0:
        t = math.tan(w.real)
        return complex(t, 0.0), complex(1.0 + t * t, 0.0)
    if w.real == 0.0:
        e = math.exp(-2.0 * abs(w.imag))
        return complex(0.0, math.tanh(w.imag)), complex(4.0 * e / ((1.0 + e) * (1.0 + e)), 0.0)
    if w.imag > 0.0:
        a = -2.0 * w.imag
        b = 2.0 * w.real
        sign = -1.0
    else:
        a = 2.0 * w.imag
        b = -2.0 * w.real
        sign = 1.0
    ea = math.exp(a)
    half = math.sin(0.5 * b)
    # E = u - 1 without cancellation near u = 1
    e = complex(math.expm1(a) * math.cos(b) - 2.0 * half * half, ea * math.sin(b))
    u = complex(ea * math.cos(b), ea * math.sin(b))
    tan = sign * 1j * e / (e + 2.0)
    if abs(w.imag) < 1.0:
        return tan, 1.0 + tan * tan
    return tan, 4.0 * u / ((u + 1.0) * (u + 1.0))


@njit(cache=True)
def _log_sec2(w, t):
    """log|sec^2 w| and its phase; the mirrored exponential keeps deep tracts finite."""
    if abs(w.imag) < 1.0:
        s2 = 1.0 + t * t
        return math.log(abs(s2)), cmath.phase(s2)
    if w.imag > 0.0:
        a = -2.0 * w.imag
        b = 2.0 * w.real
    else:
        a = 2.0 * w.imag
        b = -2.0 * w.real
    ea = math.exp(a)
    one_u = complex(1.0 + ea * math.cos(b), ea * math.sin(b))
    return LOG_FOUR + a - 2.0 * math.log(abs(one_u)), np.fmod(b, TWO_PI) - 2.0 * cmath.phase(one_u)


@njit(cache=True)
def _eval(p, q, lam, z, pole_tol, snap):
    if abs(z) > MAX_MODULUS:
        return complex(0.0, 0.0), STATUS_OVERFLOW
    w = _power(z, q, snap)
    d, _m = _pole_distance(w)
    if d < pole_tol:
        return complex(0.0, 0.0), STATUS_POLE
    t, _s = _tan_sec2(w)
    return lam * _ipow(t, p), STATUS_OK


@njit(cache=True)
def _eval_with_derivative(p, q, lam, z, pole_tol, snap):
    zero = complex(0.0, 0.0)
    if abs(z) > MAX_MODULUS:
        return zero, zero, STATUS_OVERFLOW
    w = _power(z, q, snap)
    d, _ = _pole_distance(w)
    if d < pole_tol:
        return zero, zero, STATUS_POLE
    t, sec2 = _tan_sec2(w)
    tp1 = _ipow(t, p - 1)
    value = lam * tp1 * t
    deriv = lam * p * q * _ipow(z, q - 1) * tp1 * sec2
    return value, deriv, STATUS_OK


@njit(cache=True)
def _log_derivative(p, q, lam, z, pole_tol, snap):
    """log|f'(z)| and arg f'(z), summed term by term so no factor overflows."""
    if abs(z) > MAX_MODULUS:
        return 0.0, 0.0, STATUS_OVERFLOW
    w = _power(z, q, snap)
    d, _ = _pole_distance(w)
    if d < pole_tol:
        return 0.0, 0.0, STATUS_POLE
    t, _s = _tan_sec2(w)
    if (q > 1 and abs(z) == 0.0) or (p > 1 and abs(t) == 0.0):
        return -np.inf, 0.0, STATUS_ZERO
    logmod = math.log(abs(lam)) + math.log(p * q)
    phase = cmath.phase(lam)
    if q > 1:
        logmod += (q - 1) * math.log(abs(z))
        phase += (q - 1) * cmath.phase(z)
    if p > 1:
        logmod += (p - 1) * math.log(abs(t))
        phase += (p - 1) * cmath.phase(t)
    ls, ps = _log_sec2(w, t)
    return logmod + ls, phase + ps, STATUS_OK


@njit(cache=True)
def _log_ratio(s):
    """
    log|s / sin s| and its phase, stable for any |Im s|.

    Returns (log_modulus, phase, singular). When |Im s| exceeds the tract
    guard, sin s is replaced by its dominant exponential.
    """
    b = s.imag
    if abs(s) == 0.0:
        return 0.0, 0.0, False
    if b > TRACT_GUARD:
        return math.log(2.0 * abs(s)) - b, cmath.phase(s) - HALF_PI + np.fmod(s.real, TWO_PI), False
    if b < -TRACT_GUARD:
        return math.log(2.0 * abs(s)) + b, cmath.phase(s) + HALF_PI - np.fmod(s.real, TWO_PI), False
    sn = cmath.sin(s)
    if abs(sn) <= 1e-15 * max(1.0, abs(s)):
        return 0.0, 0.0, True
    ratio = s / sn
    return math.log(abs(ratio)), cmath.phase(ratio), False


@njit(cache=True)
def _log_multiplier(p, q, points, snap):
    """log|mu| and arg(mu) for mu = (pq)^n * prod(s_i / sin s_i), s_i = 2 z_i^q."""
    n = points.shape[0]
    logmod = n * math.log(p * q)
    phase = 0.0
    for i in range(n):
        s = 2.0 * _power(points[i], q, snap)
        lm, ph, singular = _log_ratio(s)
        if singular:
            return 0.0, 0.0, True
        logmod += lm
        phase += ph
    return logmod, phase, False


@njit(cache=True)
def _from_log(logmod, phase):
    if logmod < -745.0:
        return complex(0.0, 0.0)
    r = math.exp(logmod)
    return complex(r * math.cos(phase), r * math.sin(phase))


# --- public surface ---


def root_of_unity(k: int, n: int) -> complex:
    """exp(2*pi*i*k/n), exact when k/n is a multiple of a quarter turn."""
    k = k % n
    if (4 * k) % n == 0:
        return (1 + 0j, 1j, -1 + 0j, -1j)[(4 * k) // n]
    return cmath.exp(2j * math.pi * k / n)


def stable_tan(w: complex) -> complex:
    """
    tan(w) without overflow for any imaginary part.

    Raises:
        PoleHitError: w is within the default pole tolerance of pi/2 + m*pi.
    """
    w = complex(w)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise DegenerateInputError(f"non-finite argument {w!r}")
    dist, _ = _pole_distance(w)
    if dist < orbit_defaults["pole_tol"]:
        raise PoleHitError(w)
    return complex(_tan_sec2(w)[0])


def on_invariant_lines(params: FamilyParams, lam: complex, z: complex) -> bool:
    """
    True when both i^p*lambda and z have real positive (4q)-th powers.

    The orbit of such a z then stays on the lines where z^q is real or
    purely imaginary, and the kernels keep it there exactly.
    """
    v = _times_i_power(complex(lam), params.p)
    return bool(_aligned(v, params.q) and _aligned(complex(z), params.q))


def _check_lambda(lam: complex) -> complex:
    lam = complex(lam)
    if lam == 0:
        raise DegenerateInputError("lambda = 0 is the puncture of the parameter plane")
    return lam


def _raise_for_status(status: int, z: complex, q: int):
    if status == STATUS_OVERFLOW:
        raise MagnitudeOverflowError(f"|z| = {abs(z):.3e} exceeds {MAX_MODULUS:.0e}")
    if status == STATUS_POLE:
        raise PoleHitError(complex(_ipow(complex(z), q)))


def evaluate(params: FamilyParams, lam: complex, z: complex) -> complex:
    """
    Evaluate f_lambda(z) = lambda * tan(z^q)^p.

    Raises:
        PoleHitError: z^q is at a pole.
        MagnitudeOverflowError: |z| is above the overflow threshold.
    """
    lam = _check_lambda(lam)
    value, status = _eval(params.p, params.q, lam, complex(z), orbit_defaults["pole_tol"], False)
    _raise_for_status(status, z, params.q)
    return complex(value)


def evaluate_derivative(params: FamilyParams, lam: complex, z: complex) -> complex:
    """Complex derivative lambda*p*q*z^(q-1)*tan^(p-1)(z^q)*sec^2(z^q)."""
    lam = _check_lambda(lam)
    _, deriv, status = _eval_with_derivative(
        params.p, params.q, lam, complex(z), orbit_defaults["pole_tol"], False
    )
    _raise_for_status(status, z, params.q)
    return complex(deriv)


def free_asymptotic_value(params: FamilyParams, lam: complex) -> complex:
    """The free asymptotic value v = i^p * lambda."""
    return complex(_times_i_power(_check_lambda(lam), params.p))


def asymptotic_values(params: FamilyParams, lam: complex) -> Tuple[complex, ...]:
    """v alone for pq even; (v, -v) for pq odd, where f is odd."""
    v = free_asymptotic_value(params, lam)
    if params.pq_odd:
        return v, -v
    return (v,)


def pole_location(params: FamilyParams, m: int, j: int) -> Pole:
    """
    The j-th q-th root of pi/2 + m*pi.

    The principal root has argument in (-pi/q, pi/q]; branch j multiplies it
    by exp(2*pi*i*j/q).
    """
    q = params.q
    if not 0 <= j < q:
        raise ValueError(f"root branch j={j} outside [0, {q - 1}]")
    base = HALF_PI + m * math.pi
    modulus = abs(base) ** (1.0 / q)
    turn = 2 * j + (1 if base < 0 else 0)
    return Pole(m=m, j=j, location=modulus * root_of_unity(turn, 2 * q))


def lambda_of_fixed_point(params: FamilyParams, z: complex) -> complex:
    """
    The unique lambda = z / tan^p(z^q) making z a fixed point.

    Raises:
        DegenerateInputError: z = 0 or tan(z^q) = 0.
        PoleHitError: z^q is a pole.
    """
    z = complex(z)
    if z == 0:
        raise DegenerateInputError("z = 0 is fixed for every lambda")
    t = stable_tan(complex(_ipow(z, params.q)))
    if abs(t) < _TINY:
        raise DegenerateInputError(f"tan(z^q) vanishes at z={z!r}")
    return z / t**params.p


def fixed_point_multiplier(params: FamilyParams, z: complex) -> complex:
    """
    Multiplier 2pq z^q / sin(2 z^q) of a fixed point z of f_lambda(z).

    Large |Im z^q| are handled in log space and underflow smoothly to 0.
    """
    points = _as_points([z])
    logmod, phase, singular = _log_multiplier(params.p, params.q, points, False)
    if singular:
        raise SingularMultiplierError(f"sin(2 z^q) = 0 at z={complex(z)!r}")
    return complex(_from_log(logmod, phase))


def _as_points(points):
    return np.asarray(points, dtype=np.complex128).reshape(-1)
