"""
Virtual Centers

Locates parameters where the free asymptotic value is a prepole: closed
form for order 2, Newton's method for orders 3 to 5. Also checks the local
structure around a center (number of shell components meeting there, and
presence of attracting cycles of the center's period in every small
neighbourhood).
"""

import cmath
import math
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numba import njit, prange

from .config import (
    DEFAULT_CIRCLE_SAMPLES,
    MAX_CENTER_ORDER,
    center_dedup_radius,
    center_fd_factor,
    center_max_steps,
    center_residual_tol,
    orbit_defaults,
    wrong_order_radius,
)
from .errors import (
    InconclusiveError,
    NoConvergenceError,
    PreconditionError,
    WrongOrderError,
)
from .family import (
    HALF_PI,
    STATUS_OK,
    FamilyParams,
    Pole,
    _eval,
    _ipow,
    _pole_distance,
    _times_i_power,
    pole_location,
)
from .orbit import CODE_ATTRACTED, CODE_UNDECIDED, OrbitBudget, classify_many

logger = logging.getLogger(__name__)

NEWTON_OK = 0
NEWTON_DIVERGED = 1
NEWTON_WRONG_ORDER = 2
NEWTON_EVAL_FAILED = 3

CENTER_CSV_COLUMNS = ["order", "m", "branch", "lambda_re", "lambda_im", "residual"]


@dataclass(frozen=True)
class VirtualCenter:
    """A parameter where v is a prepole of order `order - 1`."""

    order: int
    lam: complex
    pole: Pole
    residual: float
    root_branch: int
    history: Tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def m(self) -> int:
        return self.pole.m


# --- compiled kernels ---


@njit(cache=True)
def _center_residual(p, q, lam, order, target, pole_tol):
    """
    G(lam) = f^(order-2)(v) - target.

    Returns (G, status, closest approach of an intermediate point to a pole
    in the w-plane).
    """
    z = _times_i_power(lam, p)
    closest = np.inf
    for _step in range(order - 2):
        d, _m = _pole_distance(_ipow(z, q))
        if d < closest:
            closest = d
        z, status = _eval(p, q, lam, z, pole_tol, False)
        if status != STATUS_OK:
            return complex(0.0, 0.0), status, closest
    return z - target, STATUS_OK, closest


@njit(cache=True)
def _newton_center(p, q, lam, order, target, max_steps, tol, fd_factor, pole_tol, history):
    """Newton with a central finite-difference derivative. Returns (lam, residual, status, steps)."""
    for step in range(max_steps + 1):
        g, status, closest = _center_residual(p, q, lam, order, target, pole_tol)
        if status != STATUS_OK:
            return lam, np.inf, NEWTON_EVAL_FAILED, step
        history[step] = abs(g)
        if abs(g) < tol:
            if closest < wrong_order_radius:
                return lam, abs(g), NEWTON_WRONG_ORDER, step + 1
            return lam, abs(g), NEWTON_OK, step + 1
        if step == max_steps:
            break
        h = fd_factor * max(1.0, abs(lam))
        gp, sp, _ = _center_residual(p, q, lam + h, order, target, pole_tol)
        gm, sm, _ = _center_residual(p, q, lam - h, order, target, pole_tol)
        if sp != STATUS_OK or sm != STATUS_OK:
            return lam, np.inf, NEWTON_EVAL_FAILED, step + 1
        slope = (gp - gm) / (2.0 * h)
        if abs(slope) == 0.0:
            return lam, abs(g), NEWTON_DIVERGED, step + 1
        lam = lam - g / slope
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            return lam, np.inf, NEWTON_DIVERGED, step + 1
    return lam, history[max_steps], NEWTON_DIVERGED, max_steps + 1


@njit(cache=True)
def _nearest_pole(q, z):
    """(m, j, location) of the pole closest to z in the z-plane."""
    _, m = _pole_distance(_ipow(z, q))
    base = HALF_PI + m * math.pi
    modulus = abs(base) ** (1.0 / q)
    shift = 1 if base < 0 else 0
    best_j = 0
    best_loc = complex(0.0, 0.0)
    best = np.inf
    for j in range(q):
        angle = math.pi * (2 * j + shift) / q
        loc = modulus * complex(math.cos(angle), math.sin(angle))
        d = abs(z - loc)
        if d < best:
            best = d
            best_j = j
            best_loc = loc
    return m, best_j, best_loc


@njit(parallel=True, cache=True)
def _search_centers(p, q, order, seeds, max_steps, tol, fd_factor, pole_tol):
    count = seeds.shape[0]
    lams = np.empty(count, dtype=np.complex128)
    residuals = np.empty(count, dtype=np.float64)
    statuses = np.empty(count, dtype=np.int32)
    ms = np.empty(count, dtype=np.int64)
    js = np.empty(count, dtype=np.int64)
    for i in prange(count):
        history = np.empty(max_steps + 1, dtype=np.float64)
        lam0 = seeds[i]
        zero = complex(0.0, 0.0)
        g, status, _closest = _center_residual(p, q, lam0, order, zero, pole_tol)
        lams[i] = lam0
        residuals[i] = np.inf
        statuses[i] = NEWTON_EVAL_FAILED
        ms[i] = 0
        js[i] = 0
        if status == STATUS_OK:
            m, j, target = _nearest_pole(q, g)
            lam, res, st, _steps = _newton_center(p, q, lam0, order, target, max_steps, tol, fd_factor, pole_tol, history)
            lams[i] = lam
            residuals[i] = res
            statuses[i] = st
            ms[i] = m
            js[i] = j
    return lams, residuals, statuses, ms, js


# --- public surface ---


def _normalise_m_range(m_range) -> range:
    if isinstance(m_range, range):
        return m_range
    lo, hi = m_range
    if lo > hi:
        raise PreconditionError(f"empty m range {lo}..{hi}")
    return range(int(lo), int(hi) + 1)


def period2_centers(params: FamilyParams, m_range) -> List[VirtualCenter]:
    """
    All order-2 centers lambda = i^(-p) * (q-th root of pi/2 + m*pi).

    Args:
        params: Family parameters.
        m_range: Inclusive (lo, hi) pair or a range of pole indices.

    Returns:
        q centers per m, ordered by m then root branch.
    """
    centers = []
    for m in _normalise_m_range(m_range):
        for j in range(params.q):
            pole = pole_location(params, m, j)
            lam = complex(_times_i_power(pole.location, -params.p))
            v = complex(_times_i_power(lam, params.p))
            centers.append(
                VirtualCenter(order=2, lam=lam, pole=pole, residual=abs(v - pole.location), root_branch=j)
            )
    return centers


def center_residual(params: FamilyParams, lam: complex, order: int) -> float:
    """|f^(order-2)(v) - nearest pole|, the defect of lam as a center of that order."""
    g, status, _ = _center_residual(params.p, params.q, complex(lam), order, 0j, orbit_defaults["pole_tol"])
    if status != STATUS_OK:
        return float("inf")
    _, _, loc = _nearest_pole(params.q, g)
    return float(abs(g - loc))


def _check_order(order: int):
    if order < 3:
        raise PreconditionError(f"order {order} has closed-form centers; use period2_centers")
    if order > MAX_CENTER_ORDER:
        raise PreconditionError(f"order {order} exceeds the supported maximum {MAX_CENTER_ORDER}")


def find_virtual_center(params: FamilyParams, order: int, pole: Pole, seed: complex) -> VirtualCenter:
    """
    Newton-solve f_lambda^(order-2)(v_lambda) = pole from `seed`.

    Raises:
        PreconditionError: order outside 3..5.
        NoConvergenceError: no convergence within the step limit.
        WrongOrderError: the root is a center of lower order.
    """
    _check_order(order)
    history = np.full(center_max_steps + 1, np.nan)
    lam, residual, status, steps = _newton_center(
        params.p,
        params.q,
        complex(seed),
        order,
        complex(pole.location),
        center_max_steps,
        center_residual_tol,
        center_fd_factor,
        orbit_defaults["pole_tol"],
        history,
    )
    trail = tuple(float(r) for r in history[: min(steps, center_max_steps + 1)])
    if status == NEWTON_WRONG_ORDER:
        raise WrongOrderError(f"root {complex(lam)!r} collapses onto a lower-order center")
    if status != NEWTON_OK:
        raise NoConvergenceError(
            f"order-{order} Newton from {complex(seed)!r} did not converge in {center_max_steps} steps"
        )
    return VirtualCenter(
        order=order,
        lam=complex(lam),
        pole=pole,
        residual=float(residual),
        root_branch=pole.j,
        history=trail,
    )


def search_virtual_centers(
    params: FamilyParams,
    order: int,
    bounds: Tuple[float, float, float, float],
    seeds_per_side: int = 41,
) -> List[VirtualCenter]:
    """
    Newton from a square grid of seeds over bounds (re_min, re_max, im_min, im_max).

    Each seed aims at the pole nearest to its own f^(order-2)(v). Roots closer
    than the dedup radius are merged, keeping the first seed's branch.
    """
    if order == 2:
        raise PreconditionError("order-2 centers are closed form; use period2_centers")
    _check_order(order)
    re_min, re_max, im_min, im_max = bounds
    re = np.linspace(re_min, re_max, seeds_per_side)
    im = np.linspace(im_min, im_max, seeds_per_side)
    seeds = (re[None, :] + 1j * im[:, None]).reshape(-1)
    lams, residuals, statuses, ms, js = _search_centers(
        params.p,
        params.q,
        order,
        np.ascontiguousarray(seeds),
        center_max_steps,
        center_residual_tol,
        center_fd_factor,
        orbit_defaults["pole_tol"],
    )

    found: List[VirtualCenter] = []
    failures = 0
    for lam, res, st, m, j in zip(lams, residuals, statuses, ms, js):
        if st != NEWTON_OK:
            failures += 1
            continue
        lam = complex(lam)
        if not (re_min <= lam.real <= re_max and im_min <= lam.imag <= im_max):
            continue
        if any(abs(lam - c.lam) < center_dedup_radius for c in found):
            continue
        pole = pole_location(params, int(m), int(j))
        found.append(VirtualCenter(order=order, lam=lam, pole=pole, residual=float(res), root_branch=int(j)))

    if failures:
        logger.warning(f"{failures} of {seeds.size} Newton seeds failed for order {order} {params}")
    found.sort(key=lambda c: (round(abs(c.lam), 9), round(cmath.phase(c.lam), 9)))
    logger.info(f"Found {len(found)} order-{order} centers for {params}")
    return found


def _known_centers_near(params: FamilyParams, lam: complex) -> List[complex]:
    # order-2 centers with |base| up to a little beyond |lam|^q
    reach = int(abs(lam) ** params.q / math.pi) + 3
    return [c.lam for c in period2_centers(params, (-reach - 1, reach))]


def _circle(center: complex, radius: float, samples: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return center + radius * np.exp(1j * theta)


def count_components_at_center(
    params: FamilyParams,
    center: VirtualCenter,
    radius: float,
    samples: int = DEFAULT_CIRCLE_SAMPLES,
    known: Optional[Iterable[complex]] = None,
    budget: Optional[OrbitBudget] = None,
) -> int:
    """
    Count the shell components of the center's period crossing a small circle.

    Samples are grouped into cyclic runs keyed by (period, mode, side); a run
    counts when it is a shell run with S-index equal to the center's order.

    Raises:
        PreconditionError: radius not below half the distance to the nearest other known center.
        InconclusiveError: every sample is Undecided.
    """
    others = list(known) if known is not None else _known_centers_near(params, center.lam)
    distances = [abs(c - center.lam) for c in others if abs(c - center.lam) > center_dedup_radius]
    if distances and radius >= 0.5 * min(distances):
        raise PreconditionError(
            f"radius {radius} too large: nearest other center at distance {min(distances):.4g}"
        )

    batch = classify_many(params, _circle(center.lam, radius, samples), budget)
    if np.all(batch.codes == CODE_UNDECIDED):
        raise InconclusiveError(f"all {samples} samples undecided around {center.lam!r}")

    keys = []
    for i in range(samples):
        if batch.codes[i] == CODE_ATTRACTED and batch.periods[i] == center.order:
            keys.append((int(batch.periods[i]), int(batch.modes[i]), int(batch.sides[i])))
        else:
            keys.append(None)
    return _count_cyclic_runs(keys)


def _count_cyclic_runs(keys: Sequence) -> int:
    runs = []
    for key in keys:
        if not runs or runs[-1] != key:
            runs.append(key)
    if len(runs) > 1 and runs[0] == runs[-1]:
        runs.pop()
    return sum(1 for key in runs if key is not None)


def verify_attracting_nearby(
    params: FamilyParams,
    center: Union[VirtualCenter, complex],
    radii: Sequence[float],
    period: Optional[int] = None,
    samples: int = DEFAULT_CIRCLE_SAMPLES,
    budget: Optional[OrbitBudget] = None,
) -> bool:
    """
    True iff every circle of the given radii about the center carries a
    shell sample of the requested S-index (the center's order by default).
    """
    if isinstance(center, VirtualCenter):
        lam = center.lam
        period = period or center.order
    else:
        lam = complex(center)
        if period is None:
            raise PreconditionError("period is required when the center is a bare parameter")
    for radius in radii:
        batch = classify_many(params, _circle(lam, radius, samples), budget)
        hits = np.count_nonzero((batch.codes == CODE_ATTRACTED) & (batch.periods == period))
        logger.debug(f"r={radius}: {hits}/{samples} samples with an attracting period-{period} cycle")
        if hits == 0:
            return False
    return True


def centers_frame(centers: Sequence[VirtualCenter]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "order": [c.order for c in centers],
            "m": [c.m for c in centers],
            "branch": [c.root_branch for c in centers],
            "lambda_re": [c.lam.real for c in centers],
            "lambda_im": [c.lam.imag for c in centers],
            "residual": [float(c.residual) for c in centers],
        },
        columns=CENTER_CSV_COLUMNS,
    )


def write_centers_csv(centers: Sequence[VirtualCenter], path) -> None:
    """Write the center list with 17 significant digits."""
    centers_frame(centers).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Wrote {len(centers)} centers to {path}")
