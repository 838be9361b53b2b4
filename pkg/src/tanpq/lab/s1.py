"""
Period-1 Shell Structure

The period-1 shell components are the images of the regions U+ and U- of the
u-plane (u = 2 z^q) where |h(u)| = |pq u / sin u| < 1, pushed through the
fixed-point relation lambda = z / tan^p(z^q). This module computes the entry
level r0 of those regions, traces their boundary locus, finds the parabolic
points where a period-doubling bud is attached, and runs the suites that
check the 2q unbounded components and their symmetry rays.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..core.config import MAX_PQ, boundary_perturbation
from ..core.errors import PreconditionError, RefinementError
from ..core.family import (
    FamilyParams,
    fixed_point_multiplier,
    free_asymptotic_value,
    lambda_of_fixed_point,
    root_of_unity,
)
from ..core.orbit import (
    CODE_ATTRACTED,
    CycleMode,
    OrbitBudget,
    classify_many,
    classify_parameter,
)
from ..render.plane import circle_points, circle_scan
from .certificates import Certificate, Measurement

logger = logging.getLogger(__name__)

Y_MAX = 30.0
ASYMPTOTE_Y = 20.0
ARG_TOL = 1e-6
LOCUS_TOL = 1e-8
Z_ROUTE_LIMIT = 1e6  # |u| beyond which z = (u/2pq)^(1/q) no longer resolves |mu| to LOCUS_TOL (q >= 2)
UNDECIDED_LIMIT = 0.5


@dataclass(frozen=True)
class Ray:
    """Symmetry ray lambda = r * direction of the component Omega_k^sign."""

    sign: int
    k: int
    direction: complex

    @property
    def label(self) -> str:
        return f"{self.k}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class BoundaryPoint:
    y: float
    x: float
    u: complex
    z: complex
    lam: complex
    deviation: float  # ||h(u)| - 1|
    z_deviation: Optional[float] = None  # ||mu(z)| - 1| through the fixed point z, where representable


@dataclass(frozen=True)
class ParabolicPoint:
    """A boundary parameter whose attracting fixed point has multiplier -1."""

    u: complex
    z: complex
    lam: complex
    multiplier: complex


def _guard_pq(params: FamilyParams):
    if params.pq > MAX_PQ:
        raise PreconditionError(f"pq = {params.pq} exceeds the supported maximum {MAX_PQ}")


def s1_threshold(params: FamilyParams) -> float:
    """
    Positive root r0 of sinh(r) = pq * r, the level where the imaginary
    axis enters U+. Zero when pq = 1.
    """
    _guard_pq(params)
    pq = params.pq
    if pq == 1:
        return 0.0
    return float(optimize.brentq(lambda r: math.sinh(r) - pq * r, 1e-3, 50.0, xtol=1e-15, maxiter=200))


def s1_threshold_radius(params: FamilyParams) -> float:
    """
    |lambda| of the fixed-point parameter at u = i r0:
    (r0/2)^(1/q) / tanh^p(r0/2), with the limit 1 when pq = 1.
    """
    r0 = s1_threshold(params)
    if r0 == 0.0:
        return 1.0
    half = 0.5 * r0
    return half ** (1.0 / params.q) / math.tanh(half) ** params.p


def symmetry_rays(params: FamilyParams) -> List[Ray]:
    """
    The 2q rays i^(-p) eta_k^+- with (eta_k^+)^q = i and (eta_k^-)^q = -i.

    eta^- is -eta^+ for q odd and conj(eta^+) for q even.
    """
    q = params.q
    rotate = root_of_unity(-params.p, 4)
    rays = []
    for k in range(q):
        eta = cmath.exp(1j * math.pi * (0.5 + 2 * k) / q)
        rays.append(Ray(sign=1, k=k, direction=rotate * eta))
    for k in range(q):
        eta = cmath.exp(1j * math.pi * (0.5 + 2 * k) / q)
        minus = -eta if q % 2 == 1 else eta.conjugate()
        rays.append(Ray(sign=-1, k=k, direction=rotate * minus))
    return rays


def separating_ray_directions(params: FamilyParams) -> List[complex]:
    """Directions i^(-p) omega with omega^(2q) = 1, i.e. omega^q = +-1."""
    rotate = root_of_unity(-params.p, 4)
    return [rotate * root_of_unity(k, 2 * params.q) for k in range(2 * params.q)]


def _locus_function(pq: int, y: float):
    shift = math.sinh(y) ** 2 - (pq * y) ** 2

    def f(x):
        return math.sin(x) ** 2 - (pq * x) ** 2 + shift

    return f


def locus_x(params: FamilyParams, y: float) -> float:
    """
    The x > 0 with |h(x + iy)| = 1.

    sin^2 x + sinh^2 y - pq^2 (x^2 + y^2) is strictly decreasing in x, so the
    root is unique and bracketed by [0, cosh(y)/pq + 1].

    Raises:
        PreconditionError: y is below the entry level r0 (no root with x >= 0).
    """
    pq = params.pq
    f = _locus_function(pq, y)
    if f(0.0) < 0.0:
        raise PreconditionError(f"y = {y} lies below the entry level r0 of U+")
    hi = math.cosh(y) / pq + 1.0
    try:
        return float(optimize.bisect(f, 0.0, hi, maxiter=400))
    except ValueError as e:
        raise RefinementError(f"locus bracket failed at y = {y}: {e}") from e


def z_of_u(params: FamilyParams, u: complex, root_branch: int = 0) -> complex:
    """z with 2 z^q = u on the given q-th root branch."""
    w = complex(u) / 2.0
    if params.q == 1:
        return w
    principal = cmath.exp(cmath.log(w) / params.q)
    return principal * root_of_unity(root_branch, params.q)


def h(params: FamilyParams, u: complex) -> complex:
    return params.pq * u / cmath.sin(u)


def _u_on_branch(x: float, y: float, branch: str, side: int) -> complex:
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    u = complex(side * x, y)
    return u if branch == "+" else u.conjugate()


def s1_boundary_curve(
    params: FamilyParams,
    branch: str = "+",
    y_range: Optional[Tuple[float, float]] = None,
    samples: int = 64,
    side: int = 1,
    root_branch: int = 0,
) -> List[BoundaryPoint]:
    """
    Trace the boundary of the period-1 component on one branch.

    For each y the locus |h(x+iy)| = 1 is solved for x by bisection, then
    mapped u -> z -> lambda. `side` = -1 takes the mirror branch x < 0.
    Each point carries ||h(u)| - 1| and, while z still resolves it, the same
    quantity through the fixed-point multiplier of z.

    Raises:
        PreconditionError: y_range leaves [max(1, r0), 30].
    """
    r0 = s1_threshold(params)
    low = max(1.0, r0)
    y_lo, y_hi = y_range if y_range is not None else (low, Y_MAX)
    if y_lo < low or y_hi > Y_MAX or y_lo > y_hi:
        raise PreconditionError(f"y range [{y_lo}, {y_hi}] outside [{low:.6g}, {Y_MAX}]")

    points = []
    for y in np.linspace(y_lo, y_hi, samples):
        x = locus_x(params, float(y))
        u = _u_on_branch(x, float(y), branch, side)
        z = z_of_u(params, u, root_branch)
        lam = lambda_of_fixed_point(params, z)
        deviation = abs(abs(h(params, u)) - 1.0)
        z_deviation = None
        if params.q == 1 or abs(u) < Z_ROUTE_LIMIT:
            z_deviation = abs(abs(fixed_point_multiplier(params, z)) - 1.0)
        points.append(BoundaryPoint(y=float(y), x=x, u=u, z=z, lam=lam, deviation=deviation, z_deviation=z_deviation))
    return points


def perturb_boundary_point(params: FamilyParams, point: BoundaryPoint, inward: bool, root_branch: int = 0, scale: float = boundary_perturbation) -> complex:
    """
    Parameter of the fixed point displaced from the locus along the normal
    of F = sin^2 x + sinh^2 y - pq^2 (x^2 + y^2) in the u-plane (F > 0 inside).
    """
    pq = params.pq
    u = point.u
    x, y = u.real, u.imag
    normal = complex(math.sin(2 * x) - 2 * pq * pq * x, math.sinh(2 * y) - 2 * pq * pq * y)
    normal /= abs(normal)
    step = scale * abs(u) * (1.0 if inward else -1.0)
    z = z_of_u(params, u + step * normal, root_branch)
    return lambda_of_fixed_point(params, z)


def s1_parabolic_points(params: FamilyParams, branch: str = "+", count: int = 3, side: int = 1, root_branch: int = 0) -> List[ParabolicPoint]:
    """
    Boundary points where the fixed-point multiplier equals -1.

    Solves sin u + pq u = 0 by Newton from x = 3 pi/2 + 2 pi k,
    y = log(2 pq x); these are where period-2 buds touch the component.
    """
    _guard_pq(params)
    pq = params.pq
    found = []
    for k in range(count):
        x0 = 1.5 * math.pi + 2 * math.pi * k
        u0 = complex(x0, math.log(2 * pq * x0))
        try:
            u = complex(
                optimize.newton(
                    lambda u: cmath.sin(u) + pq * u,
                    u0,
                    fprime=lambda u: cmath.cos(u) + pq,
                    tol=1e-14,
                    maxiter=100,
                )
            )
        except RuntimeError as e:
            raise RefinementError(f"parabolic point {k} did not converge: {e}") from e
        u = _u_on_branch(abs(u.real), abs(u.imag), branch, side)
        z = z_of_u(params, u, root_branch)
        lam = lambda_of_fixed_point(params, z)
        found.append(ParabolicPoint(u=u, z=z, lam=lam, multiplier=fixed_point_multiplier(params, z)))
    return found


def _dlam_dmu(params: FamilyParams, u: complex, root_branch: int) -> complex:
    step = 1e-6 * max(1.0, abs(u))
    lam_p = lambda_of_fixed_point(params, z_of_u(params, u + step, root_branch))
    lam_m = lambda_of_fixed_point(params, z_of_u(params, u - step, root_branch))
    mu_p = h(params, u + step)
    mu_m = h(params, u - step)
    return (lam_p - lam_m) / (mu_p - mu_m)


def _angle_gap(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2.0 * math.pi))


# --- suites ---


def check_s1_structure(params: FamilyParams, radii: Sequence[float], samples: int = 3600, budget: Optional[OrbitBudget] = None) -> Certificate:
    """
    2q period-1 arcs on every circle |lambda| = R, one symmetry ray per arc,
    the argument relation of the fixed point on each ray, and |mu| shrinking
    outward along each ray.
    """
    _guard_pq(params)
    cert = Certificate(name="s1-structure", params=params)
    threshold = s1_threshold_radius(params)
    rays = symmetry_rays(params)
    expected_arcs = 2 * params.q

    for radius in radii:
        if radius <= threshold:
            raise PreconditionError(f"R = {radius} does not exceed the threshold radius {threshold:.6g}")
        if radius < 4 * threshold:
            logger.warning(f"R = {radius} is below 4x the threshold radius {threshold:.6g}")
        report = circle_scan(params, radius, samples, budget)
        if report.undecided_fraction() > UNDECIDED_LIMIT:
            return cert.mark_inconclusive(f"circle R={radius} is {report.undecided_fraction():.0%} undecided")
        arcs = report.shell_arcs(1)
        cert.add(Measurement(f"R={radius} period-1 arcs", float(len(arcs)), float(expected_arcs), 0.0))
        angles = [cmath.phase(ray.direction) for ray in rays]
        one_ray_each = all(sum(arc.contains(a % (2 * math.pi)) for a in angles) == 1 for arc in arcs)
        every_ray_covered = all(sum(arc.contains(a % (2 * math.pi)) for arc in arcs) == 1 for a in angles)
        cert.add(Measurement.flag(f"R={radius} one ray per arc", one_ray_each and every_ray_covered))

    radius = float(radii[0]) if len(radii) else 2.0 * threshold
    for ray in rays:
        lam = radius * ray.direction
        pc = classify_parameter(params, lam, budget)
        if not pc.is_shell(1) or pc.cycle is None:
            cert.add(Measurement.flag(f"ray {ray.label} period-1 shell", False))
            continue
        v = free_asymptotic_value(params, lam)
        gap_v = min(_angle_gap(cmath.phase(z), cmath.phase(v)) for z in pc.cycle.points)
        gap = gap_v
        if params.p % 2 == 1 and params.q % 2 == 0:
            gap_minus = min(_angle_gap(cmath.phase(z), cmath.phase(-v)) for z in pc.cycle.points)
            # either branch is accepted; record which one held
            cert.add(Measurement.record(f"ray {ray.label} arg branch", 1.0 if gap_v <= gap_minus else -1.0))
            gap = min(gap_v, gap_minus)
        cert.add(Measurement.at_most(f"ray {ray.label} arg z - arg v", gap, ARG_TOL))
        if params.pq_odd and ray.sign < 0:
            doubled = pc.mode == CycleMode.DOUBLED and pc.raw_period == 2
            cert.add(Measurement.flag(f"ray {ray.label} single period-2 cycle", doubled))

    if len(radii):
        lams = np.array([[radius * ray.direction, 2 * radius * ray.direction] for ray in rays])
        batch = classify_many(params, lams.reshape(-1), budget)
        logs = batch.log_moduli.reshape(len(rays), 2)
        codes = batch.codes.reshape(len(rays), 2)
        shrinking = bool(np.all(codes == CODE_ATTRACTED) and np.all(logs[:, 1] < logs[:, 0]))
        cert.add(Measurement.flag("|mu| decreases outward on every ray", shrinking))

    logger.info(f"s1-structure {params}: {'passed' if cert.passed else 'failed'}")
    return cert


def check_s1_boundary(params: FamilyParams, samples: int = 64, flank_samples: int = 4, budget: Optional[OrbitBudget] = None) -> Certificate:
    """
    Boundary-locus checks: the entry level r0, ||mu| - 1| along the locus,
    the exponential asymptote at y = 20, the locus reaching the imaginary
    axis at r0, and that inward (outward) perturbations do (do not)
    classify as period-1 shells.
    """
    _guard_pq(params)
    budget = budget or OrbitBudget.deep()
    cert = Certificate(name="s1-boundary", params=params)
    pq = params.pq
    r0 = s1_threshold(params)
    cert.add(Measurement.record("r0", r0))
    cert.add(Measurement.at_most("r0 residual", abs(math.sinh(r0) - pq * r0) / max(1.0, pq * r0), 1e-9))

    low = max(1.0, r0)
    worst = 0.0
    checked = 0
    off_locus = 0
    for branch in ("+", "-"):
        for side in (1, -1):
            for point in s1_boundary_curve(params, branch, (low + 0.05, Y_MAX), samples, side):
                checked += 1
                deviation = max(point.deviation, point.z_deviation if point.z_deviation is not None else 0.0)
                worst = max(worst, deviation)
                if not deviation <= LOCUS_TOL:
                    off_locus += 1
                    label = f"locus {branch}{'x' if side > 0 else '-x'} y={point.y:.6g} ||mu| - 1|"
                    cert.add(Measurement.at_most(label, deviation, LOCUS_TOL))
    cert.add(Measurement.record("locus points checked", checked))
    cert.add(Measurement.at_most("locus points with ||mu| - 1| above tolerance", off_locus, 0))
    cert.add(Measurement.record("max ||mu| - 1| on locus", worst))

    asymptote = math.exp(ASYMPTOTE_Y) / (2 * pq)
    x20 = locus_x(params, ASYMPTOTE_Y)
    cert.add(Measurement.at_most("asymptote relative error at y=20", abs(x20 - asymptote) / asymptote, 0.01))

    if pq >= 2:
        cert.add(Measurement.at_most("locus x at y=r0", locus_x(params, r0 * (1.0 + 1e-9)), 1e-2))

    inward, outward = [], []
    for branch in ("+", "-"):
        for side in (1, -1):
            for point in s1_boundary_curve(params, branch, (low + 0.5, low + 3.0), flank_samples, side):
                inward.append(perturb_boundary_point(params, point, inward=True))
                outward.append(perturb_boundary_point(params, point, inward=False))
    inside = classify_many(params, inward, budget)
    outside = classify_many(params, outward, budget)
    in_shell = (inside.codes == CODE_ATTRACTED) & (inside.periods == 1)
    out_shell = (outside.codes == CODE_ATTRACTED) & (outside.periods == 1)
    for i in np.flatnonzero(~in_shell):
        cert.add(Measurement.flag(f"inward lambda={inward[i]:.6g} period-1 shell ({inside.item(i).tag.value})", False))
    for i in np.flatnonzero(out_shell):
        cert.add(Measurement.flag(f"outward lambda={outward[i]:.6g} not a period-1 shell", False))
    cert.add(Measurement("inward period-1 fraction", np.count_nonzero(in_shell) / len(inward), 1.0, 0.0))
    cert.add(Measurement.at_most("outward period-1 fraction", np.count_nonzero(out_shell) / len(outward), 0.0))

    logger.info(f"s1-boundary {params}: {'passed' if cert.passed else 'failed'}")
    return cert


def check_parabolic_buds(params: FamilyParams, count: int = 2, samples: int = 360, budget: Optional[OrbitBudget] = None) -> Certificate:
    """Around each multiplier -1 point, a small circle meets both period-1 and period-2 shells."""
    _guard_pq(params)
    budget = budget or OrbitBudget.deep()
    cert = Certificate(name="parabolic-buds", params=params)
    for branch in ("+", "-"):
        for idx, nu in enumerate(s1_parabolic_points(params, branch, count)):
            cert.add(Measurement.at_most(f"nu{idx}{branch} |mu + 1|", abs(nu.multiplier + 1.0), 1e-9))
            radius = 0.1 * abs(_dlam_dmu(params, nu.u, 0))
            batch = classify_many(params, circle_points(radius, samples, nu.lam), budget)
            shell = batch.codes == CODE_ATTRACTED
            has_s1 = bool(np.any(shell & (batch.periods == 1)))
            has_s2 = bool(np.any(shell & (batch.periods == 2)))
            logger.debug(f"nu{idx}{branch} at {nu.lam:.6g}: r={radius:.3g}, s1={has_s1}, s2={has_s2}")
            cert.add(Measurement.flag(f"nu{idx}{branch} touches period 1 and period 2", has_s1 and has_s2))
    logger.info(f"parabolic-buds {params}: {'passed' if cert.passed else 'failed'}")
    return cert
