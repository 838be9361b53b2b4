"""
Plane Renderer

Classifies rectangular grids of parameters (or of dynamical seeds) and
circles of parameters. All heavy lifting runs in the parallel batch kernels
of the orbit engine; every cell is written exactly once, so grids do not
depend on the worker count.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numba
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.config import MAX_WINDOW_CELLS, MIN_CIRCLE_SAMPLES
from ..core.errors import PreconditionError
from ..core.family import FamilyParams
from ..core.orbit import (
    CLASS_BY_CODE,
    CODE_ATTRACTED,
    CODE_PREPOLE,
    CODE_UNDECIDED,
    MODE_BY_CODE,
    OUTCOME_BY_CODE,
    ClassBatch,
    ClassTag,
    OrbitBudget,
    ParamClass,
    _to_param_class,
    classify_many,
    classify_seeds,
)

logger = logging.getLogger(__name__)

GRID_CSV_COLUMNS = ["ix", "iy", "re", "im", "class", "period", "mode", "mult_re", "mult_im", "order"]


def set_threads(count: Optional[int]) -> int:
    """Set the numba worker count, clamped to what the runtime allows."""
    available = numba.config.NUMBA_NUM_THREADS
    if count is None:
        count = available
    if count < 1 or count > available:
        clamped = min(max(1, count), available)
        logger.warning(f"Requested {count} threads; using {clamped}")
        count = clamped
    numba.set_num_threads(count)
    return count


class Window(BaseModel):
    """A rectangle of the complex plane sampled at px_w x px_h cell centers."""

    model_config = ConfigDict(frozen=True)

    center: complex = 0j
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    px_w: int = Field(gt=0)
    px_h: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.px_w * self.px_h > MAX_WINDOW_CELLS:
            raise ValueError(f"{self.px_w}x{self.px_h} exceeds {MAX_WINDOW_CELLS} cells")
        pixel_aspect = (self.width / self.px_w) / (self.height / self.px_h)
        if abs(pixel_aspect - 1.0) > 1e-9:
            raise ValueError(
                f"cells are not square: {self.width}x{self.height} over {self.px_w}x{self.px_h}"
            )
        return self

    @classmethod
    def square(cls, center: complex, width: float, resolution: int) -> "Window":
        return cls(center=center, width=width, height=width, px_w=resolution, px_h=resolution)

    @classmethod
    def from_bounds(cls, re_min: float, re_max: float, im_min: float, im_max: float, px_w: int, px_h: int) -> "Window":
        center = complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max))
        return cls(center=center, width=re_max - re_min, height=im_max - im_min, px_w=px_w, px_h=px_h)

    @property
    def cell_size(self) -> float:
        return self.width / self.px_w

    def columns(self) -> np.ndarray:
        ix = np.arange(self.px_w)
        return self.center.real + ((2 * ix + 1 - self.px_w) / (2 * self.px_w)) * self.width

    def rows(self) -> np.ndarray:
        # row 0 is the top edge (largest imaginary part)
        iy = np.arange(self.px_h)
        return self.center.imag + ((self.px_h - 1 - 2 * iy) / (2 * self.px_h)) * self.height

    def cell_centers(self) -> np.ndarray:
        """(px_h, px_w) array of complex cell centers; mirrored cells have exactly negated offsets."""
        return self.columns()[None, :] + 1j * self.rows()[:, None]

    def cell_of(self, z: complex) -> Tuple[int, int]:
        """(ix, iy) of the cell containing z, clipped to the grid."""
        left = self.center.real - 0.5 * self.width
        top = self.center.imag + 0.5 * self.height
        ix = int(np.floor((z.real - left) / self.cell_size))
        iy = int(np.floor((top - z.imag) / (self.height / self.px_h)))
        return min(max(ix, 0), self.px_w - 1), min(max(iy, 0), self.px_h - 1)


@dataclass
class ClassGrid:
    """
    Classified window stored as parallel (px_h, px_w) arrays.

    `kind` is "parameter" (cells follow v_lambda) or "dynamical" (cells
    follow their own center point under a fixed f_lambda).
    """

    window: Window
    params: FamilyParams
    budget: OrbitBudget
    kind: str
    codes: np.ndarray
    periods: np.ndarray
    raw_periods: np.ndarray
    modes: np.ndarray
    multipliers: np.ndarray
    orders: np.ndarray
    sides: np.ndarray
    lam: Optional[complex] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.codes.shape

    def cell(self, ix: int, iy: int) -> ParamClass:
        return _to_param_class(
            int(self.codes[iy, ix]),
            int(self.periods[iy, ix]),
            int(self.raw_periods[iy, ix]),
            int(self.modes[iy, ix]),
            complex(self.multipliers[iy, ix]),
            int(self.orders[iy, ix]),
            0j,
            int(self.sides[iy, ix]),
        )

    def class_labels(self) -> np.ndarray:
        names = OUTCOME_BY_CODE if self.kind == "dynamical" else CLASS_BY_CODE
        lookup = np.array([names[c].value for c in sorted(names)], dtype=object)
        return lookup[self.codes.astype(np.intp)]


def _grid_from_batch(batch: ClassBatch, window: Window, params, budget, kind, lam=None) -> ClassGrid:
    shape = (window.px_h, window.px_w)
    return ClassGrid(
        window=window,
        params=params,
        budget=budget,
        kind=kind,
        codes=batch.codes.reshape(shape),
        periods=batch.periods.reshape(shape),
        raw_periods=batch.raw_periods.reshape(shape),
        modes=batch.modes.reshape(shape),
        multipliers=batch.multipliers.reshape(shape),
        orders=batch.orders.reshape(shape),
        sides=batch.sides.reshape(shape),
        lam=lam,
    )


def render_parameter_plane(params: FamilyParams, window: Window, budget: Optional[OrbitBudget] = None) -> ClassGrid:
    """Classify every cell center of the window; the lambda = 0 cell is Undecided."""
    budget = budget or OrbitBudget()
    batch = classify_many(params, window.cell_centers().reshape(-1), budget)
    logger.info(f"Rendered parameter plane {params} at {window.px_w}x{window.px_h}")
    return _grid_from_batch(batch, window, params, budget, "parameter")


def render_dynamical_plane(params: FamilyParams, lam: complex, window: Window, budget: Optional[OrbitBudget] = None) -> ClassGrid:
    """Classify the orbit of every cell center under the fixed map f_lambda."""
    budget = budget or OrbitBudget()
    batch = classify_seeds(params, lam, window.cell_centers().reshape(-1), budget)
    logger.info(f"Rendered dynamical plane {params} lambda={complex(lam)} at {window.px_w}x{window.px_h}")
    return _grid_from_batch(batch, window, params, budget, "dynamical", lam=complex(lam))


def write_grid_csv(grid: ClassGrid, path) -> None:
    """One row per cell; floats with 17 significant digits, empty where not applicable."""
    h, w = grid.shape
    iy, ix = np.indices((h, w))
    centers = grid.window.cell_centers()
    shell = grid.codes == CODE_ATTRACTED
    virtual = grid.codes == CODE_PREPOLE
    modes = np.array([MODE_BY_CODE[m].value if MODE_BY_CODE[m] else "" for m in range(3)], dtype=object)

    frame = pd.DataFrame(
        {
            "ix": ix.reshape(-1),
            "iy": iy.reshape(-1),
            "re": centers.real.reshape(-1),
            "im": centers.imag.reshape(-1),
            "class": grid.class_labels().reshape(-1),
            "period": pd.array(np.where(shell, grid.periods, 0).reshape(-1), dtype="Int64"),
            "mode": modes[grid.modes.astype(np.intp)].reshape(-1),
            "mult_re": np.where(shell, grid.multipliers.real, np.nan).reshape(-1),
            "mult_im": np.where(shell, grid.multipliers.imag, np.nan).reshape(-1),
            "order": pd.array(grid.orders.reshape(-1), dtype="Int64"),
        },
        columns=GRID_CSV_COLUMNS,
    )
    frame.loc[~shell.reshape(-1), "period"] = pd.NA
    frame.loc[~virtual.reshape(-1), "order"] = pd.NA
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", na_rep="")
    logger.info(f"Wrote {h * w} cells to {path}")


@dataclass(frozen=True)
class Arc:
    """A maximal run of equally classified circle samples."""

    key: Tuple
    start: float
    end: float
    count: int

    @property
    def tag(self):
        return self.key[0]

    @property
    def period(self) -> int:
        return self.key[1]

    def contains(self, angle: float) -> bool:
        two_pi = 2.0 * np.pi
        offset = (angle - self.start) % two_pi
        return offset <= (self.end - self.start)


@dataclass
class ArcReport:
    """Arcs of a circle scan; arcs partition the circle, end may exceed 2*pi after wrap merge."""

    radius: float
    samples: int
    arcs: List[Arc]
    classes: Optional[ClassBatch] = None

    def shell_arcs(self, period: int) -> List[Arc]:
        return [a for a in self.arcs if a.key[0] == ClassTag.SHELL and a.key[1] == period]

    def undecided_fraction(self) -> float:
        if self.classes is None:
            return 0.0
        return float(np.count_nonzero(self.classes.codes == CODE_UNDECIDED)) / self.samples


def circle_angles(samples: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(samples) / samples


def circle_points(radius: float, samples: int, center: complex = 0j) -> np.ndarray:
    """Points center + r e^(i theta_j); samples j and N-j are exact conjugates about the center."""
    theta = circle_angles(samples)
    pts = radius * np.exp(1j * theta)
    j = np.arange(1, (samples - 1) // 2 + 1)
    pts[samples - j] = np.conj(pts[j])
    pts[0] = radius
    if samples % 2 == 0:
        pts[samples // 2] = -radius
    return center + pts


def circle_scan(params: FamilyParams, radius: float, samples: int, budget: Optional[OrbitBudget] = None) -> ArcReport:
    """
    Classify lambda = R e^(i theta) at uniform angles and merge runs into arcs.

    Runs are keyed by (class, S-index, mode); multipliers are ignored. Arc
    boundaries sit midway between differing samples.
    """
    if radius <= 0:
        raise PreconditionError(f"radius must be positive, got {radius}")
    if samples < MIN_CIRCLE_SAMPLES:
        raise PreconditionError(f"circle scans need at least {MIN_CIRCLE_SAMPLES} samples, got {samples}")
    batch = classify_many(params, circle_points(radius, samples), budget)
    keys = [
        (CLASS_BY_CODE[int(batch.codes[i])], int(batch.periods[i]), MODE_BY_CODE[int(batch.modes[i])])
        for i in range(samples)
    ]
    arcs = merge_arcs(keys)
    logger.info(f"Circle scan {params} R={radius}: {len(arcs)} arcs")
    return ArcReport(radius=radius, samples=samples, arcs=arcs, classes=batch)


def merge_arcs(keys: List[Tuple]) -> List[Arc]:
    samples = len(keys)
    step = 2.0 * np.pi / samples
    runs = []
    for i, key in enumerate(keys):
        if runs and runs[-1][0] == key:
            runs[-1][2] += 1
        else:
            runs.append([key, i, 1])
    if len(runs) > 1 and runs[0][0] == runs[-1][0]:
        last = runs.pop()
        runs[0] = [last[0], last[1] - samples, runs[0][2] + last[2]]
    if len(runs) == 1:
        return [Arc(key=runs[0][0], start=0.0, end=2.0 * np.pi, count=samples)]

    arcs = []
    for key, first, count in runs:
        start = (first - 0.5) * step
        if start < 0:
            start += 2.0 * np.pi
        arcs.append(Arc(key=key, start=start, end=start + count * step, count=count))
    arcs.sort(key=lambda a: a.start)
    return arcs
