"""Tests for windows, plane rendering and circle scans."""

import math

import numba
import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from tanpq.core.errors import PreconditionError
from tanpq.core.family import FamilyParams
from tanpq.core.orbit import CODE_ATTRACTED, ClassTag, CycleMode
from tanpq.render.plane import (
    GRID_CSV_COLUMNS,
    Window,
    circle_points,
    circle_scan,
    merge_arcs,
    render_dynamical_plane,
    render_parameter_plane,
    set_threads,
    write_grid_csv,
)


def test_window_requires_square_cells():
    with pytest.raises(ValidationError):
        Window(width=2.0, height=1.0, px_w=10, px_h=10)
    with pytest.raises(ValidationError):
        Window(width=-1.0, height=1.0, px_w=10, px_h=10)
    window = Window.from_bounds(-2, 2, -1, 1, 40, 20)
    assert window.center == 0j
    assert window.cell_size == pytest.approx(0.1)


@settings(max_examples=50, deadline=None)
@given(resolution=st.integers(min_value=1, max_value=64), width=st.floats(min_value=0.1, max_value=50))
def test_cell_centers_are_point_symmetric(resolution, width):
    centers = Window.square(0j, width, resolution).cell_centers()
    np.testing.assert_array_equal(centers, -centers[::-1, ::-1])


def test_row_zero_is_top_edge():
    window = Window.square(1 + 1j, 2.0, 4)
    rows = window.rows()
    assert rows[0] > rows[-1]
    assert rows[0] == pytest.approx(1.75)
    assert window.columns()[0] == pytest.approx(0.25)


def test_cell_of_inverts_cell_centers():
    window = Window.square(0.5 - 0.5j, 3.0, 12)
    centers = window.cell_centers()
    for iy in (0, 5, 11):
        for ix in (0, 7, 11):
            assert window.cell_of(centers[iy, ix]) == (ix, iy)
    assert window.cell_of(100 + 100j) == (11, 0)


def test_set_threads_clamps():
    available = numba.config.NUMBA_NUM_THREADS
    assert set_threads(available + 1000) == available
    assert set_threads(0) == 1
    assert set_threads(None) == available


def test_render_is_deterministic_across_thread_counts(p23):
    window = Window.square(0j, 6.0, 32)
    set_threads(1)
    single = render_parameter_plane(p23, window)
    set_threads(None)
    parallel = render_parameter_plane(p23, window)
    np.testing.assert_array_equal(single.codes, parallel.codes)
    np.testing.assert_array_equal(single.periods, parallel.periods)
    np.testing.assert_array_equal(single.multipliers, parallel.multipliers)


def test_parameter_plane_conjugation_symmetry(p21):
    # p even: v of conj(lambda) is conj(v), so the grid mirrors across the real axis
    grid = render_parameter_plane(p21, Window.square(0j, 8.0, 40))
    mismatch = np.count_nonzero(grid.codes != grid.codes[::-1, :])
    assert mismatch <= 0.01 * grid.codes.size


def test_parameter_plane_cell_lookup(p11):
    grid = render_parameter_plane(p11, Window.square(0j, 8.0, 40))
    ix, iy = grid.window.cell_of(2.0 + 0.05j)
    cell = grid.cell(ix, iy)
    assert cell.tag == ClassTag.SHELL
    assert cell.period == 1 and cell.mode == CycleMode.TWO_CYCLES
    ix, iy = grid.window.cell_of(0.3 + 0.05j)
    assert grid.cell(ix, iy).tag == ClassTag.CAPTURE


def test_dynamical_plane(p11):
    grid = render_dynamical_plane(p11, 2.0, Window.square(0j, 4.0, 16))
    assert grid.kind == "dynamical" and grid.lam == 2
    ix, iy = grid.window.cell_of(1.9j)
    assert grid.codes[iy, ix] == CODE_ATTRACTED
    assert set(grid.class_labels().reshape(-1)) <= {"Attracted", "CapturedByZero", "PrepoleHit", "Undecided"}


def test_write_grid_csv(p11, tmp_path):
    grid = render_parameter_plane(p11, Window.square(0j, 8.0, 10))
    path = tmp_path / "grid.csv"
    write_grid_csv(grid, path)
    frame = pd.read_csv(path, keep_default_na=False)
    assert list(frame.columns) == GRID_CSV_COLUMNS
    assert len(frame) == 100
    shell = frame[frame["class"] == "Shell"]
    assert len(shell) > 0
    assert all(str(v) != "" for v in shell["period"])
    assert all(v == "" for v in frame[frame["class"] != "Shell"]["mult_re"])


@pytest.mark.parametrize("samples", [360, 361, 720])
def test_circle_points_conjugate_pairs(samples):
    pts = circle_points(2.5, samples)
    for j in range(1, samples):
        assert pts[samples - j] == np.conj(pts[j])
    assert pts[0] == 2.5


def test_circle_scan_preconditions(p11):
    with pytest.raises(PreconditionError):
        circle_scan(p11, 0.0, 720)
    with pytest.raises(PreconditionError):
        circle_scan(p11, 10.0, 100)


def test_merge_arcs_wraps_around():
    assert len(merge_arcs(["a"] * 10)) == 1
    arcs = merge_arcs(["a", "a", "b", "b", "a"])
    assert len(arcs) == 2
    by_key = {arc.key: arc for arc in arcs}
    assert by_key["a"].count == 3 and by_key["b"].count == 2
    assert by_key["a"].contains(0.0)
    assert by_key["b"].contains(2 * math.pi * 2.5 / 5)
    assert not by_key["b"].contains(0.0)


@pytest.mark.slow
@pytest.mark.parametrize("pq, radius", [((1, 1), 10.0), ((2, 1), 10.0), ((1, 2), 10.0), ((2, 3), 6.0)])
def test_one_period_one_arc_per_ray(pq, radius):
    params = FamilyParams(p=pq[0], q=pq[1])
    report = circle_scan(params, radius, 3600)
    assert len(report.shell_arcs(1)) == 2 * params.q
    assert report.undecided_fraction() < 0.5
