"""
Connected components of classified grids.

4-connected labelling is delegated to scipy.ndimage.label.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from ..core.errors import PredicateError
from ..core.orbit import CODE_ATTRACTED, CODE_CAPTURED
from .plane import ClassGrid

logger = logging.getLogger(__name__)

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

CellMask = Callable[[ClassGrid], np.ndarray]


@dataclass(frozen=True)
class ComponentReport:
    """Extent of one 4-connected component, in cells and in the complex plane."""

    cell_count: int
    bbox: Tuple[int, int, int, int]  # ix_min, iy_min, ix_max, iy_max
    touches_edge: bool
    diameter: float
    max_distance_from_seed: float


def shell_period(period: int) -> CellMask:
    """Shell cells of one S-index; both pq-odd modes belong to the same family."""

    def mask(grid: ClassGrid) -> np.ndarray:
        return (grid.codes == CODE_ATTRACTED) & (grid.periods == period)

    return mask


def capture_cells(grid: ClassGrid) -> np.ndarray:
    return grid.codes == CODE_CAPTURED


def flood_component(grid: ClassGrid, seed: Tuple[int, int], predicate: CellMask) -> ComponentReport:
    """
    4-connected component of `seed` = (ix, iy) among cells matching `predicate`.

    Raises:
        PredicateError: the seed cell does not match.
    """
    ix, iy = seed
    mask = np.asarray(predicate(grid), dtype=bool)
    if not mask[iy, ix]:
        raise PredicateError(f"seed cell ({ix}, {iy}) does not satisfy the predicate")
    labels, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    component = labels == labels[iy, ix]
    return _report(grid, component, seed)


def _report(grid: ClassGrid, component: np.ndarray, seed: Tuple[int, int], origin: Optional[complex] = None) -> ComponentReport:
    rows, cols = np.nonzero(component)
    h, w = component.shape
    touches = bool(rows.min() == 0 or cols.min() == 0 or rows.max() == h - 1 or cols.max() == w - 1)

    centers = grid.window.cell_centers()[rows, cols]
    re_span = centers.real.max() - centers.real.min()
    im_span = centers.imag.max() - centers.imag.min()
    seed_point = grid.window.cell_centers()[seed[1], seed[0]] if origin is None else origin
    return ComponentReport(
        cell_count=int(rows.size),
        bbox=(int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max())),
        touches_edge=touches,
        diameter=float(np.hypot(re_span, im_span)),
        max_distance_from_seed=float(np.abs(centers - seed_point).max()),
    )


def components_near(grid: ClassGrid, point: complex, predicate: CellMask, reach: int = 3) -> List[Tuple[Tuple[int, int], ComponentReport]]:
    """
    Distinct components with a matching cell within `reach` cells of `point`.

    Returns a list of (seed cell, ComponentReport), one per component, with
    max_distance_from_seed measured from `point` itself.
    """
    mask = np.asarray(predicate(grid), dtype=bool)
    labels, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    cx, cy = grid.window.cell_of(point)
    h, w = mask.shape
    seen = set()
    found = []
    for iy in range(max(0, cy - reach), min(h, cy + reach + 1)):
        for ix in range(max(0, cx - reach), min(w, cx + reach + 1)):
            label = labels[iy, ix]
            if label == 0 or label in seen:
                continue
            seen.add(label)
            found.append(((ix, iy), _report(grid, labels == label, (ix, iy), complex(point))))
    return found


def largest_component(grid: ClassGrid, predicate: CellMask) -> Optional[ComponentReport]:
    """Report of the component with the most cells, or None if no cell matches."""
    mask = np.asarray(predicate(grid), dtype=bool)
    labels, count = ndimage.label(mask, structure=FOUR_CONNECTED)
    if count == 0:
        return None
    sizes = np.bincount(labels.reshape(-1))[1:]
    label = int(np.argmax(sizes)) + 1
    component = labels == label
    rows, cols = np.nonzero(component)
    return _report(grid, component, (int(cols[0]), int(rows[0])))
