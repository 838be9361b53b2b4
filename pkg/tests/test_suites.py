"""Tests for the verification suites and their orchestration."""

import json

import numpy as np

import pytest

from tanpq.core.errors import InconclusiveError, PreconditionError, UnknownSuiteError
from tanpq.core.family import FamilyParams
from tanpq.lab import suites
from tanpq.lab.certificates import Certificate, Measurement, all_passed
from tanpq.core.orbit import CODE_ATTRACTED, CODE_CAPTURED, CODE_UNDECIDED, ClassBatch
from tanpq.lab.suites import (
    SUITES,
    check_capture_bounded,
    check_centers,
    check_multipliers,
    check_s2_bounded,
    check_separating_rays,
    check_symmetries,
    default_window,
    resolve_selection,
    run_suite,
)
from tanpq.render.plane import Window

PAIRS = [(1, 1), (2, 1), (1, 2), (2, 3)]


def test_resolve_selection():
    assert resolve_selection(["all"]) == list(SUITES)
    assert resolve_selection(["multipliers", "symmetries", "multipliers"]) == ["multipliers", "symmetries"]
    with pytest.raises(UnknownSuiteError) as info:
        resolve_selection(["nope"])
    assert "symmetries" in str(info.value) and "all" in info.value.valid


def test_empty_selection_passes(p11):
    certificates = run_suite(p11, [])
    assert certificates == []
    assert all_passed(certificates)


def test_run_suite_rejects_large_pq():
    with pytest.raises(PreconditionError):
        run_suite(FamilyParams(p=3, q=3), ["symmetries"])


def test_zero_samples_is_vacuous(p11):
    cert = check_symmetries(p11, 0)
    assert cert.passed and cert.measurements == []
    assert check_multipliers(p11, 0).passed


@pytest.mark.parametrize("pq", PAIRS)
def test_symmetries(pq):
    cert = check_symmetries(FamilyParams(p=pq[0], q=pq[1]), 500)
    assert cert.passed, cert.failures()


def test_multipliers_over_the_table():
    total = 0
    for p, q in PAIRS:
        cert = check_multipliers(FamilyParams(p=p, q=q), 30)
        assert cert.passed, cert.failures()
        total += next(m.value for m in cert.measurements if m.label == "shell samples")
    assert total >= 100


@pytest.mark.parametrize("pq", [(2, 1), (1, 2), (2, 3)])
def test_separating_rays_pq_even(pq):
    cert = check_separating_rays(FamilyParams(p=pq[0], q=pq[1]), 10.0, 500)
    assert cert.passed, cert.failures()


def test_separating_rays_pq_odd(p11):
    cert = check_separating_rays(p11, 10.0, 500)
    flags = [m for m in cert.measurements if m.label.startswith("ray ")]
    assert len(flags) == 2
    assert cert.passed, cert.failures()


def test_default_window(p11, p23):
    assert default_window(p11, 100).width == 8.0
    assert default_window(p23, 100).width == 6.0


def test_s2_needs_two_centers(p11):
    with pytest.raises(PreconditionError):
        check_s2_bounded(p11, Window.square(10 + 10j, 0.5, 20))


def test_capture_bounded(p11):
    cert = check_capture_bounded(p11, Window.square(0j, 8.0, 200))
    assert cert.passed, cert.failures()
    assert not cert.inconclusive


def test_capture_touching_edge_is_inconclusive(p11):
    cert = check_capture_bounded(p11, Window.square(0j, 1.0, 50))
    assert cert.inconclusive and not cert.passed


@pytest.mark.slow
def test_s2_bounded_with_image(p11, tmp_path):
    cert = check_s2_bounded(p11, Window.square(0j, 8.0, 800), out_dir=str(tmp_path))
    assert cert.passed, cert.failures()
    assert cert.artifacts and (tmp_path / "s2-bounded_p1_q1.ppm").exists()


@pytest.mark.slow
@pytest.mark.parametrize("pq", PAIRS)
def test_centers_suite(pq):
    cert = check_centers(FamilyParams(p=pq[0], q=pq[1]))
    assert cert.passed, cert.failures()


def test_run_suite_writes_certificates(p21, tmp_path):
    certificates = run_suite(p21, ["symmetries", "multipliers"], out_dir=str(tmp_path), samples=100)
    assert [c.name for c in certificates] == ["symmetries", "multipliers"]
    data = json.loads((tmp_path / "symmetries_p2_q1.json").read_text(encoding="utf-8"))
    assert data["name"] == "symmetries"
    assert data["params"] == {"p": 2, "q": 1}
    assert data["passed"] is True
    assert (tmp_path / "multipliers_p2_q1.json").exists()


def test_raising_suite_does_not_stop_the_run(p11, monkeypatch):
    def boom(ctx):
        raise RuntimeError("boom")

    def undecided(ctx):
        raise InconclusiveError("too coarse")

    monkeypatch.setitem(suites.SUITES, "s2-bounded", boom)
    monkeypatch.setitem(suites.SUITES, "capture-bounded", undecided)
    monkeypatch.setitem(
        suites.SUITES,
        "multipliers",
        lambda ctx: Certificate(name="multipliers", params=ctx.params, measurements=[Measurement.flag("ok", True)]),
    )
    certificates = run_suite(p11, ["s2-bounded", "capture-bounded", "multipliers"])
    failed, pending, fine = certificates
    assert not failed.passed and "RuntimeError: boom" in failed.error
    assert pending.inconclusive and not pending.passed
    assert fine.passed


def _classifier_by(rule):
    """Stand-in for classify_many that decides each lambda by rule(lams) -> codes."""

    def classify(params, lambdas, budget=None):
        lams = np.asarray(lambdas, dtype=np.complex128).reshape(-1)
        n = lams.size
        ints = np.zeros(n, dtype=np.int32)
        small = np.zeros(n, dtype=np.int8)
        return ClassBatch(
            rule(lams).astype(np.int8), ints, ints, small, np.zeros(n, np.complex128), ints, np.zeros(n, np.complex128), small, np.full(n, np.nan)
        )

    return classify


def test_near_boundary_uses_the_stated_distance(p11, monkeypatch):
    monkeypatch.setattr(suites, "classify_many", _classifier_by(lambda l: np.where(l.real > 0, CODE_CAPTURED, CODE_ATTRACTED)))
    near = suites._near_boundary(p11, np.array([1e-12 + 1j, 0.5 * suites.BOUNDARY_DISTANCE, 1.0 + 1j, -2.0]))
    assert near.tolist() == [True, True, False, False]


def test_decided_mismatch_off_a_boundary_fails(p11, monkeypatch):
    monkeypatch.setattr(suites, "classify_many", _classifier_by(lambda l: np.where(l.imag > 0, CODE_CAPTURED, CODE_ATTRACTED)))
    cert = check_symmetries(p11, 50)
    failing = {m.label for m in cert.failures()}
    assert "conjugation decided mismatches off class boundaries" in failing
    assert "conjugation undecided mismatch fraction" not in failing


def test_undecided_mismatches_are_bounded(p11, monkeypatch):
    monkeypatch.setattr(suites, "classify_many", _classifier_by(lambda l: np.where(l.imag > 0, CODE_UNDECIDED, CODE_CAPTURED)))
    cert = check_symmetries(p11, 50)
    failing = {m.label for m in cert.failures()}
    assert "conjugation undecided mismatch fraction" in failing
    assert "conjugation decided mismatches off class boundaries" not in failing
