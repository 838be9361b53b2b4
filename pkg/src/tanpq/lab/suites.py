"""
Verification Suites

Each suite checks one structural statement about the parameter plane of
f_lambda = lambda tan^p(z^q) and returns a Certificate. run_suite executes a
selection of them, keeps going when one raises, and optionally writes the
certificates as JSON next to any image artifacts.
"""

import math
import os
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from ..core.config import (
    DEFAULT_CIRCLE_SAMPLES,
    DEFAULT_RESOLUTION,
    DEFAULT_SEED,
    MAX_PQ,
    ray_flank_offset,
    symmetry_annulus,
)
from ..core.centers import (
    count_components_at_center,
    period2_centers,
    search_virtual_centers,
    verify_attracting_nearby,
)
from ..core.errors import InconclusiveError, PreconditionError, UnknownSuiteError
from ..core.family import FamilyParams, root_of_unity
from ..core.orbit import (
    CODE_ATTRACTED,
    CODE_PREPOLE,
    CODE_UNDECIDED,
    MODE_DOUBLED,
    MODE_TWO_CYCLES,
    ClassBatch,
    ClassTag,
    CycleMode,
    OrbitBudget,
    chain_multiplier,
    classify_many,
    classify_parameter,
    cycle_multiplier,
)
from ..render.components import capture_cells, components_near, largest_component, shell_period
from ..render.image import write_image
from ..render.plane import ClassGrid, Window, render_parameter_plane
from .certificates import Certificate, Measurement, write_certificate
from .s1 import check_parabolic_buds, check_s1_boundary, check_s1_structure, s1_threshold_radius, separating_ray_directions

logger = logging.getLogger(__name__)

CLASS_MISMATCH_LIMIT = 0.01  # mismatches involving an Undecided sample
BOUNDARY_DISTANCE = 1e-8  # relative; decided mismatches closer than this to a class boundary are excused
MULTIPLIER_TOL = 1e-9
DOUBLING_TOL = 1e-8
LOG_UNDERFLOW = -700.0
EDGE_MARGIN = 0.25
THEOREM_B_RADII = (0.1, 0.01, 0.001)


def _rel(a, b):
    """|a - b| / max(|a|, |b|), zero when both vanish."""
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0, np.abs(a - b) / np.where(scale > 0, scale, 1.0), 0.0)
    return out


def _annulus(rng: np.random.Generator, count: int, inner: float, outer: float) -> np.ndarray:
    """Uniform samples (by area) of inner < |lambda| < outer."""
    radius = np.sqrt(rng.uniform(inner * inner, outer * outer, count))
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return radius * np.exp(1j * theta)


def _same_class(a: ClassBatch, b: ClassBatch) -> np.ndarray:
    same = (a.codes == b.codes) & (a.periods == b.periods) & (a.modes == b.modes)
    prepole = a.codes == CODE_PREPOLE
    return same & (~prepole | (a.orders == b.orders))


def _comparable(a: ClassBatch, b: ClassBatch, matching: np.ndarray, floor: float = LOG_UNDERFLOW) -> np.ndarray:
    return (
        matching
        & (a.codes == CODE_ATTRACTED)
        & (a.log_moduli > floor)
        & (b.log_moduli > floor)
    )


def _max_or_zero(values: np.ndarray) -> float:
    return float(values.max()) if values.size else 0.0


def _near_boundary(params: FamilyParams, lams: np.ndarray, budget: Optional[OrbitBudget] = None) -> np.ndarray:
    """True where one of four neighbours at BOUNDARY_DISTANCE * max(1, |lambda|) has another class."""
    lams = np.asarray(lams, dtype=np.complex128)
    near = np.zeros(lams.shape[0], dtype=bool)
    if lams.size == 0:
        return near
    here = classify_many(params, lams, budget)
    steps = BOUNDARY_DISTANCE * np.maximum(1.0, np.abs(lams))
    for direction in (1, 1j, -1, -1j):
        near |= ~_same_class(here, classify_many(params, lams + direction * steps, budget))
    return near


def _add_mismatches(cert: Certificate, label: str, params: FamilyParams, lams, images, base: ClassBatch, other: ClassBatch, match: np.ndarray, budget: Optional[OrbitBudget] = None):
    """
    Class mismatches of a symmetry law. Those involving an Undecided sample
    are allowed up to CLASS_MISMATCH_LIMIT; a mismatch between two decided
    classes is allowed only when lambda or its image sits within
    BOUNDARY_DISTANCE of a class boundary.
    """
    mismatch = ~match
    undecided = (base.codes == CODE_UNDECIDED) | (other.codes == CODE_UNDECIDED)
    cert.add(Measurement.at_most(f"{label} undecided mismatch fraction", float(np.mean(mismatch & undecided)), CLASS_MISMATCH_LIMIT))
    decided = np.flatnonzero(mismatch & ~undecided)
    lams = np.asarray(lams, dtype=np.complex128)
    images = np.asarray(images, dtype=np.complex128)
    excused = _near_boundary(params, lams[decided], budget) | _near_boundary(params, images[decided], budget)
    cert.add(Measurement.record(f"{label} mismatches at class boundaries", int(excused.sum())))
    for i in decided[~excused]:
        logger.debug(f"{label}: lambda={lams[i]:.6g} is {base.item(i).key}, image is {other.item(i).key}")
    cert.add(Measurement.at_most(f"{label} decided mismatches off class boundaries", int((~excused).sum()), 0))


def check_symmetries(params: FamilyParams, samples: int = 500, seed: int = DEFAULT_SEED, budget: Optional[OrbitBudget] = None) -> Certificate:
    """
    Classification and multiplier invariance under conjugation, rotation by
    q-th roots of unity and lambda -> -lambda.

    pq even: -lambda has the same class and multiplier. pq odd: the S-index is
    kept, the mode flips when the S-index is odd, and a TwoCycles multiplier
    mu with odd period becomes mu^2 on the DoubledCycle side.
    """
    cert = Certificate(name="symmetries", params=params)
    if samples <= 0:
        return cert
    cert.add(Measurement.record("seed", seed))
    cert.add(Measurement.record("samples", samples))

    rng = np.random.default_rng(seed)
    lams = _annulus(rng, samples, *symmetry_annulus)
    base = classify_many(params, lams, budget)

    conj_lams = np.conj(lams)
    conj = classify_many(params, conj_lams, budget)
    match = _same_class(base, conj)
    _add_mismatches(cert, "conjugation", params, lams, conj_lams, base, conj, match, budget)
    ok = _comparable(base, conj, match)
    dev = _rel(conj.multipliers[ok], np.conj(base.multipliers[ok]))
    cert.add(Measurement.at_most("conjugation max multiplier deviation", _max_or_zero(dev), MULTIPLIER_TOL))

    if params.q > 1:
        worst_dev = 0.0
        for k in range(1, params.q):
            rot_lams = root_of_unity(k, params.q) * lams
            rotated = classify_many(params, rot_lams, budget)
            match = _same_class(base, rotated)
            _add_mismatches(cert, f"rotation k={k}", params, lams, rot_lams, base, rotated, match, budget)
            ok = _comparable(base, rotated, match)
            worst_dev = max(worst_dev, _max_or_zero(_rel(rotated.multipliers[ok], base.multipliers[ok])))
        cert.add(Measurement.at_most("rotation max multiplier deviation", worst_dev, MULTIPLIER_TOL))

    neg = classify_many(params, -lams, budget)
    if params.pq_even:
        match = _same_class(base, neg)
        ok = _comparable(base, neg, match)
        dev = _rel(neg.multipliers[ok], base.multipliers[ok])
        _add_mismatches(cert, "sign law", params, lams, -lams, base, neg, match, budget)
        cert.add(Measurement.at_most("sign law max multiplier deviation", _max_or_zero(dev), MULTIPLIER_TOL))
    else:
        shell = base.codes == CODE_ATTRACTED
        flips = shell & (base.periods % 2 == 1)
        expected_modes = np.where(
            flips,
            np.where(base.modes == MODE_TWO_CYCLES, MODE_DOUBLED, MODE_TWO_CYCLES),
            base.modes,
        )
        match = (base.codes == neg.codes) & (base.periods == neg.periods) & (neg.modes == expected_modes)
        _add_mismatches(cert, "sign law", params, lams, -lams, base, neg, match, budget)

        kept = _comparable(base, neg, match & ~flips)
        dev = _rel(neg.multipliers[kept], base.multipliers[kept])
        cert.add(Measurement.at_most("sign law max multiplier deviation", _max_or_zero(dev), MULTIPLIER_TOL))

        # mu^2 must stay representable on both sides
        doubled = _comparable(base, neg, match & flips & (base.modes == MODE_TWO_CYCLES), 0.5 * LOG_UNDERFLOW)
        dev = _rel(neg.multipliers[doubled], base.multipliers[doubled] ** 2)
        cert.add(Measurement.record("doubling law samples", int(doubled.sum())))
        cert.add(Measurement.at_most("doubling law max relative deviation", _max_or_zero(dev), DOUBLING_TOL))

    logger.info(f"symmetries {params}: {'passed' if cert.passed else 'failed'} on {samples} samples")
    return cert


def _innermost_center_on(params: FamilyParams, direction: complex):
    best = None
    for center in period2_centers(params, (-1, 0)):
        along = center.lam / direction
        if along.real > 0 and abs(along.imag) < 1e-9 * abs(along):
            if best is None or abs(center.lam) < abs(best.lam):
                best = center
    return best


def check_separating_rays(params: FamilyParams, r_max: float = 10.0, samples: int = 500, budget: Optional[OrbitBudget] = None) -> Certificate:
    """
    pq even: no shell parameter on the 2q rays i^(-p) r omega, omega^q = +-1.
    pq odd: the ray crosses its innermost order-2 center between the two
    period-2 modes.
    """
    cert = Certificate(name="separating-rays", params=params)
    directions = separating_ray_directions(params)
    cert.add(Measurement.record("rays", len(directions)))

    if params.pq_even:
        radii = r_max * np.logspace(-3.0, 0.0, samples)
        lams = np.concatenate([d * radii for d in directions])
        batch = classify_many(params, lams, budget)
        shell = int(np.count_nonzero(batch.codes == CODE_ATTRACTED))
        cert.add(Measurement.at_most("shell samples on separating rays", shell, 0.0))
        logger.info(f"separating-rays {params}: {shell} shell hits in {lams.size} samples")
        return cert

    for idx, direction in enumerate(directions):
        center = _innermost_center_on(params, direction)
        if center is None or abs(center.lam) > r_max:
            continue
        r_c = abs(center.lam)
        inner = classify_parameter(params, direction * (r_c - ray_flank_offset), budget)
        outer = classify_parameter(params, direction * (r_c + ray_flank_offset), budget)
        both_s2 = inner.is_shell(2) and outer.is_shell(2)
        modes = {inner.mode, outer.mode}
        logger.debug(f"ray {idx}: inner {inner.mode} raw {inner.raw_period}, outer {outer.mode} raw {outer.raw_period}")
        cert.add(
            Measurement.flag(
                f"ray {idx} flanks of center m={center.m} carry both period-2 modes",
                both_s2 and modes == {CycleMode.TWO_CYCLES, CycleMode.DOUBLED},
            )
        )
    logger.info(f"separating-rays {params}: {'passed' if cert.passed else 'failed'}")
    return cert


def default_window(params: FamilyParams, resolution: int = DEFAULT_RESOLUTION) -> Window:
    return Window.square(0j, 8.0 if params.q == 1 else 6.0, resolution)


def _centers_in(params: FamilyParams, window: Window):
    half = 0.5 * math.hypot(window.width, window.height)
    reach = int((abs(window.center) + half) ** params.q / math.pi) + 2
    inside, eligible = [], []
    for c in period2_centers(params, (-reach - 1, reach)):
        dx = 0.5 * window.width - abs(c.lam.real - window.center.real)
        dy = 0.5 * window.height - abs(c.lam.imag - window.center.imag)
        if dx > 0 and dy > 0:
            inside.append(c)
            if dx >= EDGE_MARGIN * window.width and dy >= EDGE_MARGIN * window.height:
                eligible.append(c)
    return inside, eligible


def check_s2_bounded(
    params: FamilyParams,
    window: Optional[Window] = None,
    resolution: int = DEFAULT_RESOLUTION,
    budget: Optional[OrbitBudget] = None,
    grid: Optional[ClassGrid] = None,
    out_dir: Optional[str] = None,
) -> Certificate:
    """
    Period-2 components next to the order-2 centers stay away from the
    window edge and within twice their diameter of their center. As a
    control, the largest period-1 component reaches the edge.

    Raises:
        PreconditionError: the window holds fewer than two order-2 centers.
    """
    window = window or (grid.window if grid is not None else default_window(params, resolution))
    inside, eligible = _centers_in(params, window)
    if len(inside) < 2:
        raise PreconditionError(f"window holds {len(inside)} order-2 centers; need at least two")
    grid = grid or render_parameter_plane(params, window, budget)
    cert = Certificate(name="s2-bounded", params=params)
    cert.add(Measurement.record("centers checked", len(eligible)))
    slack = 2.0 * window.cell_size

    touching = 0
    for c in eligible:
        label = f"center m={c.m} j={c.root_branch}"
        found = components_near(grid, c.lam, shell_period(2))
        cert.add(Measurement.flag(f"{label} has adjacent period-2 cells", bool(found)))
        for _, report in found:
            if report.touches_edge:
                touching += 1
                continue
            cert.add(
                Measurement.flag(
                    f"{label} component within 2x diameter",
                    report.max_distance_from_seed <= 2.0 * report.diameter + slack,
                )
            )

    control = largest_component(grid, shell_period(1))
    cert.add(Measurement.flag("period-1 control touches edge", control is not None and control.touches_edge))
    _attach_image(cert, grid, out_dir, "s2-bounded")
    if touching:
        return cert.mark_inconclusive(f"{touching} period-2 components touch the window edge; enlarge the window")
    logger.info(f"s2-bounded {params}: {'passed' if cert.passed else 'failed'}")
    return cert


def check_capture_bounded(
    params: FamilyParams,
    window: Optional[Window] = None,
    resolution: int = DEFAULT_RESOLUTION,
    budget: Optional[OrbitBudget] = None,
    grid: Optional[ClassGrid] = None,
    out_dir: Optional[str] = None,
) -> Certificate:
    """The capture components around the puncture lambda = 0 do not reach the window edge."""
    window = window or (grid.window if grid is not None else default_window(params, resolution))
    grid = grid or render_parameter_plane(params, window, budget)
    cert = Certificate(name="capture-bounded", params=params)
    found = components_near(grid, 0j, capture_cells)
    cert.add(Measurement.flag("capture cells next to the puncture", bool(found)))
    touching = sum(1 for _, report in found if report.touches_edge)
    for idx, (_, report) in enumerate(found):
        cert.add(Measurement.record(f"capture component {idx} diameter", report.diameter))
    _attach_image(cert, grid, out_dir, "capture-bounded")
    if touching:
        return cert.mark_inconclusive(f"{touching} capture components touch the window edge; enlarge the window")
    logger.info(f"capture-bounded {params}: {'passed' if cert.passed else 'failed'}")
    return cert


def _attach_image(cert: Certificate, grid: ClassGrid, out_dir: Optional[str], stem: str):
    if not out_dir:
        return
    path = os.path.join(out_dir, f"{stem}_p{cert.params.p}_q{cert.params.q}.ppm")
    write_image(grid, path)
    cert.artifacts.append(path)


def check_multipliers(params: FamilyParams, count: int = 100, seed: int = DEFAULT_SEED, budget: Optional[OrbitBudget] = None) -> Certificate:
    """Closed-form against chain-rule multipliers on random shell parameters, and |mu| < 1."""
    cert = Certificate(name="multipliers", params=params)
    if count <= 0:
        return cert
    cert.add(Measurement.record("seed", seed))
    rng = np.random.default_rng(seed)
    lams = _annulus(rng, 20 * count, *symmetry_annulus)
    batch = classify_many(params, lams, budget)
    picks = np.nonzero((batch.codes == CODE_ATTRACTED) & (batch.log_moduli > LOG_UNDERFLOW))[0][:count]
    if picks.size == 0:
        return cert.mark_inconclusive("no shell parameters among the random samples")

    worst, attracting = 0.0, True
    for i in picks:
        lam = complex(lams[i])
        cycle = batch.item(int(i), params, lam).cycle
        closed = cycle_multiplier(params, cycle)
        chained = chain_multiplier(params, lam, cycle)
        worst = max(worst, float(_rel(closed, chained)))
        attracting = attracting and abs(closed) < 1.0
    cert.add(Measurement.record("shell samples", int(picks.size)))
    cert.add(Measurement.at_most("max relative deviation closed vs chain rule", worst, MULTIPLIER_TOL))
    cert.add(Measurement.flag("all |mu| < 1", attracting))
    logger.info(f"multipliers {params}: worst relative deviation {worst:.3e} over {picks.size} cycles")
    return cert


def _center_radius(params: FamilyParams) -> float:
    return 0.05 if params.pq <= 2 else 0.02


def check_centers(params: FamilyParams, m_range=(-3, 3), budget: Optional[OrbitBudget] = None) -> Certificate:
    """
    Order-2 centers are prepoles of order 1, 2pq period-2 components meet at
    one of them, and attracting cycles of the center's period exist in every
    small neighbourhood of an order-2 and of an order-3 center.
    """
    cert = Certificate(name="centers", params=params)
    centers = period2_centers(params, m_range)
    virtual = 0
    for c in centers:
        pc = classify_parameter(params, c.lam, budget)
        virtual += pc.tag == ClassTag.VIRTUAL and pc.order == 1
    cert.add(Measurement("order-2 centers classified virtual of order 1", virtual / len(centers), 1.0, 0.0))
    cert.add(Measurement.at_most("max order-2 residual", max(c.residual for c in centers), 1e-12))

    anchor = next(c for c in centers if c.m == 0 and c.root_branch == 0)
    components = count_components_at_center(params, anchor, _center_radius(params), DEFAULT_CIRCLE_SAMPLES, budget=budget)
    cert.add(Measurement("components at order-2 center", float(components), float(2 * params.pq), 0.0))
    cert.add(
        Measurement.flag(
            "attracting period-2 cycles near order-2 center",
            verify_attracting_nearby(params, anchor, THEOREM_B_RADII, budget=budget),
        )
    )

    extent = max(2.0, 1.5 * s1_threshold_radius(params))
    third = search_virtual_centers(params, 3, (-extent, extent, -extent, extent), seeds_per_side=21)
    third = [c for c in third if c.residual < 1e-10]
    if not third:
        return cert.mark_inconclusive("no order-3 center found")
    others = [c.lam for c in third] + [c.lam for c in period2_centers(params, (-4, 3))]

    def isolation(c):
        return min(abs(c.lam - o) for o in others if abs(c.lam - o) > 1e-8)

    chosen = max(third, key=isolation)
    scale = min(1.0, isolation(chosen) / (2.0 * THEOREM_B_RADII[0]))
    radii = tuple(r * scale for r in THEOREM_B_RADII)
    cert.add(Measurement.record("order-3 center residual", chosen.residual))
    cert.add(
        Measurement.flag(
            "attracting period-3 cycles near order-3 center",
            verify_attracting_nearby(params, chosen, radii, budget=budget),
        )
    )
    logger.info(f"centers {params}: {'passed' if cert.passed else 'failed'}")
    return cert


# --- orchestration ---


@dataclass
class SuiteContext:
    """Shared options for one run_suite call; the parameter-plane grid is rendered once."""

    params: FamilyParams
    seed: int = DEFAULT_SEED
    samples: int = 500
    resolution: int = DEFAULT_RESOLUTION
    budget: Optional[OrbitBudget] = None
    out_dir: Optional[str] = None
    _grid: Optional[ClassGrid] = field(default=None, repr=False)

    def grid(self) -> ClassGrid:
        if self._grid is None:
            self._grid = render_parameter_plane(self.params, default_window(self.params, self.resolution), self.budget)
        return self._grid

    def s1_radius(self) -> float:
        radius = 6.0 if self.params.q >= 3 else 10.0
        return max(radius, 4.2 * s1_threshold_radius(self.params))


SUITES: Dict[str, Callable[[SuiteContext], Certificate]] = {
    "symmetries": lambda ctx: check_symmetries(ctx.params, ctx.samples, ctx.seed, ctx.budget),
    "s1-structure": lambda ctx: check_s1_structure(ctx.params, [ctx.s1_radius()], budget=ctx.budget),
    "s1-boundary": lambda ctx: check_s1_boundary(ctx.params),
    "parabolic-buds": lambda ctx: check_parabolic_buds(ctx.params),
    "separating-rays": lambda ctx: check_separating_rays(ctx.params, 10.0, ctx.samples, ctx.budget),
    "s2-bounded": lambda ctx: check_s2_bounded(ctx.params, grid=ctx.grid(), out_dir=ctx.out_dir),
    "capture-bounded": lambda ctx: check_capture_bounded(ctx.params, grid=ctx.grid(), out_dir=ctx.out_dir),
    "multipliers": lambda ctx: check_multipliers(ctx.params, 100, ctx.seed, ctx.budget),
    "centers": lambda ctx: check_centers(ctx.params, budget=ctx.budget),
}


def resolve_selection(selection: Iterable[str]) -> List[str]:
    """Expand "all" and validate names, keeping order and dropping repeats."""
    names: List[str] = []
    for name in selection:
        expanded = list(SUITES) if name == "all" else [name]
        for n in expanded:
            if n not in SUITES:
                raise UnknownSuiteError(n, list(SUITES) + ["all"])
            if n not in names:
                names.append(n)
    return names


def run_suite(
    params: FamilyParams,
    selection: Iterable[str],
    out_dir: Optional[str] = None,
    seed: int = DEFAULT_SEED,
    samples: int = 500,
    resolution: int = DEFAULT_RESOLUTION,
    budget: Optional[OrbitBudget] = None,
) -> List[Certificate]:
    """
    Run the selected suites in order. A suite that raises yields a failing
    certificate carrying the error; the remaining suites still run.

    Raises:
        UnknownSuiteError: a name is not registered.
        PreconditionError: pq exceeds the supported maximum.
    """
    if params.pq > MAX_PQ:
        raise PreconditionError(f"pq = {params.pq} exceeds the supported maximum {MAX_PQ}")
    names = resolve_selection(selection)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    ctx = SuiteContext(params=params, seed=seed, samples=samples, resolution=resolution, budget=budget, out_dir=out_dir)

    certificates = []
    for name in names:
        logger.info(f"Running suite {name} for {params}")
        try:
            cert = SUITES[name](ctx)
        except InconclusiveError as e:
            cert = Certificate(name=name, params=params).mark_inconclusive(str(e))
        except Exception as e:
            logger.error(f"Suite {name} failed for {params}: {e}", exc_info=True)
            cert = Certificate.failed(name, params, f"{type(e).__name__}: {e}")
        if out_dir:
            write_certificate(cert, os.path.join(out_dir, f"{name}_p{params.p}_q{params.q}.json"))
        certificates.append(cert)

    passed = sum(1 for c in certificates if c.passed)
    logger.info(f"{passed}/{len(certificates)} suites passed for {params}")
    return certificates
