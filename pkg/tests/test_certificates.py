"""Tests for certificate records and their JSON layout."""

import json
import math

from tanpq.core.family import FamilyParams
from tanpq.lab.certificates import (
    Certificate,
    Measurement,
    all_passed,
    any_inconclusive,
    write_certificate,
)


def test_measurement_tolerance():
    assert Measurement("x", 1.0, 1.05, 0.1).passed
    assert not Measurement("x", 1.0, 1.5, 0.1).passed
    assert not Measurement("x", math.nan, 0.0, 1.0).passed
    assert Measurement.flag("ok", True).passed
    assert not Measurement.flag("ok", False).passed
    assert Measurement.at_most("err", 1e-10, 1e-9).passed
    assert Measurement.record("info", 3.25).passed


def test_certificate_passes_only_when_all_pass():
    cert = Certificate(name="demo", params=FamilyParams(p=1, q=1))
    assert cert.passed
    cert.add(Measurement.flag("a", True)).add(Measurement.at_most("b", 2.0, 1.0))
    assert not cert.passed
    assert [m.label for m in cert.failures()] == ["b"]


def test_failed_and_inconclusive_certificates():
    params = FamilyParams(p=2, q=3)
    failed = Certificate.failed("centers", params, "RuntimeError: boom")
    assert not failed.passed and failed.error == "RuntimeError: boom"
    pending = Certificate(name="s2-bounded", params=params).mark_inconclusive("window too small")
    assert not pending.passed and pending.inconclusive
    assert any_inconclusive([failed, pending]) and not any_inconclusive([failed])
    assert all_passed([]) and not all_passed([failed])


def test_json_layout(tmp_path):
    cert = Certificate(name="symmetries", params=FamilyParams(p=1, q=2))
    cert.add(Measurement("dev", 1e-12, 0.0, 1e-9))
    cert.add(Measurement("broken", math.inf, 0.0, 1.0))
    cert.artifacts.append(tmp_path / "grid.ppm")
    path = tmp_path / "cert.json"
    write_certificate(cert, path)

    data = json.loads(path.read_text(encoding="utf-8"))
    assert list(data) == ["name", "params", "passed", "measurements", "artifacts"]
    assert data["params"] == {"p": 1, "q": 2}
    assert data["passed"] is False
    assert data["measurements"][0] == {"label": "dev", "value": 1e-12, "expected": 0.0, "tol": 1e-9}
    assert data["measurements"][1]["value"] is None
    assert data["artifacts"] == [str(tmp_path / "grid.ppm")]
