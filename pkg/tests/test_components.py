"""Tests for 4-connected component reports on synthetic grids."""

import numpy as np
import pytest

from tanpq.core.errors import PredicateError
from tanpq.core.family import FamilyParams
from tanpq.core.orbit import CODE_ATTRACTED, CODE_CAPTURED, CODE_UNDECIDED, OrbitBudget
from tanpq.render.components import (
    capture_cells,
    components_near,
    flood_component,
    largest_component,
    shell_period,
)
from tanpq.render.plane import ClassGrid, Window


def _grid(codes, periods=None):
    codes = np.asarray(codes, dtype=np.int8)
    shape = codes.shape
    periods = np.zeros(shape, dtype=np.int32) if periods is None else np.asarray(periods, dtype=np.int32)
    zeros = np.zeros(shape, dtype=np.int32)
    return ClassGrid(
        window=Window.square(0j, float(shape[1]), shape[1]),
        params=FamilyParams(p=1, q=1),
        budget=OrbitBudget(),
        kind="parameter",
        codes=codes,
        periods=periods,
        raw_periods=periods.copy(),
        modes=np.zeros(shape, dtype=np.int8),
        multipliers=np.zeros(shape, dtype=np.complex128),
        orders=zeros,
        sides=np.zeros(shape, dtype=np.int8),
    )


U, A, C = CODE_UNDECIDED, CODE_ATTRACTED, CODE_CAPTURED


@pytest.fixture
def grid():
    # a 2x2 period-2 blob in the middle, a period-2 stripe on the left edge,
    # and a diagonal period-2 neighbour that is not 4-connected to the blob
    codes = [
        [A, U, U, U, U, U],
        [A, U, U, U, U, U],
        [A, U, A, A, U, U],
        [U, U, A, A, U, U],
        [U, U, U, U, A, U],
        [C, C, U, U, U, U],
    ]
    periods = [[2 if c == A else 0 for c in row] for row in codes]
    return _grid(codes, periods)


def test_flood_component_reports_blob(grid):
    report = flood_component(grid, (2, 2), shell_period(2))
    assert report.cell_count == 4
    assert report.bbox == (2, 2, 3, 3)
    assert not report.touches_edge
    assert report.diameter == pytest.approx(np.sqrt(2.0))
    assert report.max_distance_from_seed == pytest.approx(np.sqrt(2.0))


def test_flood_component_edge_stripe(grid):
    report = flood_component(grid, (0, 1), shell_period(2))
    assert report.cell_count == 3
    assert report.touches_edge


def test_flood_component_rejects_unmatched_seed(grid):
    with pytest.raises(PredicateError):
        flood_component(grid, (1, 1), shell_period(2))
    with pytest.raises(PredicateError):
        flood_component(grid, (2, 2), shell_period(1))


def test_components_near_is_deduplicated(grid):
    point = grid.window.cell_centers()[3, 3]
    found = components_near(grid, point, shell_period(2), reach=1)
    sizes = sorted(report.cell_count for _, report in found)
    assert sizes == [1, 4]
    blob = next(report for _, report in found if report.cell_count == 4)
    assert blob.max_distance_from_seed == pytest.approx(np.sqrt(2.0))


def test_largest_component(grid):
    assert largest_component(grid, shell_period(2)).cell_count == 4
    captured = largest_component(grid, capture_cells)
    assert captured.cell_count == 2 and captured.touches_edge
    assert largest_component(grid, shell_period(5)) is None
