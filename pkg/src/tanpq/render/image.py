"""
Binary PPM (P6) output of classified grids.

Fixed colormap: capture green, period-1 shells yellow, period-2 shells cyan,
higher periods stepped around the hue circle by the golden angle, virtual
cycle parameters white and undecided cells black.
"""

import logging
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from matplotlib.colors import hsv_to_rgb

from ..core.config import (
    GOLDEN_ANGLE_DEG,
    HUE_SATURATION,
    HUE_START_DEG,
    HUE_VALUE,
    colormap as default_colormap,
)
from ..core.orbit import CODE_ATTRACTED, CODE_CAPTURED, CODE_PREPOLE, CODE_UNDECIDED
from .plane import ClassGrid

logger = logging.getLogger(__name__)

RGB = Tuple[int, int, int]


@lru_cache(maxsize=None)
def _stepped_hue(period: int) -> RGB:
    hue = (HUE_START_DEG + GOLDEN_ANGLE_DEG * (period - 2)) % 360.0
    rgb = hsv_to_rgb([hue / 360.0, HUE_SATURATION, HUE_VALUE])
    return tuple(int(round(255 * c)) for c in rgb)


def shell_color(period: int, colormap: Optional[Dict] = None) -> RGB:
    table = (colormap or default_colormap)["shell"]
    if period in table:
        return tuple(table[period])
    return _stepped_hue(period)


def grid_rgb(grid: ClassGrid, colormap: Optional[Dict] = None) -> np.ndarray:
    """(px_h, px_w, 3) uint8 image of the grid."""
    colormap = colormap or default_colormap
    rgb = np.zeros(grid.shape + (3,), dtype=np.uint8)
    rgb[grid.codes == CODE_CAPTURED] = colormap["capture"]
    rgb[grid.codes == CODE_PREPOLE] = colormap["virtual"]
    rgb[grid.codes == CODE_UNDECIDED] = colormap["undecided"]
    shell = grid.codes == CODE_ATTRACTED
    for period in np.unique(grid.periods[shell]):
        rgb[shell & (grid.periods == period)] = shell_color(int(period), colormap)
    return rgb


def encode_image(grid: ClassGrid, colormap: Optional[Dict] = None) -> bytes:
    """P6 header followed by row-major RGB triples, top row first."""
    h, w = grid.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + grid_rgb(grid, colormap).tobytes()


def write_image(grid: ClassGrid, path, colormap: Optional[Dict] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_image(grid, colormap))
    logger.info(f"Wrote {grid.shape[1]}x{grid.shape[0]} image to {path}")
