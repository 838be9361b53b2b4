"""
Certificates

Pass/fail records emitted by the verification suites. A certificate passes
exactly when every measurement lies within its tolerance; suites that could
not reach a verdict or that raised are recorded as failing, with a flag the
command line uses to pick its exit code.
"""

import json
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..core.family import FamilyParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Measurement:
    """One measured quantity with the value it should have and the allowed deviation."""

    label: str
    value: float
    expected: float
    tol: float

    @property
    def passed(self) -> bool:
        if not (math.isfinite(self.value) and math.isfinite(self.expected)):
            return False
        return abs(self.value - self.expected) <= self.tol

    @classmethod
    def flag(cls, label: str, ok: bool) -> "Measurement":
        """A boolean check encoded as 1.0 / 0.0 against an expected 1.0."""
        return cls(label=label, value=1.0 if ok else 0.0, expected=1.0, tol=0.0)

    @classmethod
    def at_most(cls, label: str, value: float, bound: float) -> "Measurement":
        """value in [0, bound], expressed as |value - 0| <= bound."""
        return cls(label=label, value=float(value), expected=0.0, tol=float(bound))

    @classmethod
    def record(cls, label: str, value: float) -> "Measurement":
        """Informational value; always within tolerance of itself."""
        value = float(value)
        return cls(label=label, value=value, expected=value, tol=0.0)


@dataclass
class Certificate:
    name: str
    params: FamilyParams
    measurements: List[Measurement] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    inconclusive: bool = False
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.measurements)

    def add(self, measurement: Measurement) -> "Certificate":
        self.measurements.append(measurement)
        return self

    def failures(self) -> List[Measurement]:
        return [m for m in self.measurements if not m.passed]

    @classmethod
    def failed(cls, name: str, params: FamilyParams, error: str) -> "Certificate":
        """Certificate for a suite that raised."""
        return cls(
            name=name,
            params=params,
            measurements=[Measurement.flag("completed", False)],
            error=error,
        )

    def mark_inconclusive(self, reason: str) -> "Certificate":
        logger.warning(f"{self.name} {self.params} inconclusive: {reason}")
        self.inconclusive = True
        self.error = reason
        self.measurements.append(Measurement.flag("completed", False))
        return self

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "params": {"p": self.params.p, "q": self.params.q},
            "passed": self.passed,
            "measurements": [
                {
                    "label": m.label,
                    "value": _json_number(m.value),
                    "expected": _json_number(m.expected),
                    "tol": _json_number(m.tol),
                }
                for m in self.measurements
            ],
            "artifacts": [str(a) for a in self.artifacts],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def _json_number(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def write_certificate(certificate: Certificate, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(certificate.to_json())
        f.write("\n")
    logger.info(f"Certificate {certificate.name} saved to {path}")


def all_passed(certificates: List[Certificate]) -> bool:
    """Overall verdict; an empty selection passes."""
    return all(c.passed for c in certificates)


def any_inconclusive(certificates: List[Certificate]) -> bool:
    return any(c.inconclusive for c in certificates)
