"""Verdicts and machine-readable certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Optional, Sequence


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNKNOWN = "unknown"
    IN = "in"
    OUT = "out"


def jsonable(value: Any) -> Any:
    """Evidence values as JSON: rationals and infinity become strings."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return "inf" if value == math.inf else repr(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_json"):
        return value.to_json()
    return str(value)


@dataclass
class Certificate:
    """A verdict for one named check, with the evidence that produced it."""

    name: str
    verdict: Verdict
    stage: str = ""
    evidence: dict[str, Any] = field(default_factory=dict)
    witness: Optional[str] = None  # series reference for In verdicts

    def to_json(self) -> dict:
        out = {"name": self.name, "verdict": self.verdict.value}
        if self.stage:
            out["stage"] = self.stage
        if self.witness is not None:
            out["witness"] = self.witness
        out["evidence"] = jsonable(self.evidence)
        return out


def check(name: str, ok: bool, **evidence: Any) -> Certificate:
    return Certificate(name, Verdict.PASS if ok else Verdict.FAIL, evidence=evidence)


def unknown(name: str, stage: str, message: str, analysis: Optional[dict] = None) -> Certificate:
    return Certificate(name, Verdict.UNKNOWN, stage=stage,
                       evidence={"reason": message, **(analysis or {})})


def combine(name: str, parts: Sequence[Certificate], **evidence: Any) -> Certificate:
    """Fail if any part fails, else Unknown at the first unknown stage, else Pass."""
    body = {"parts": [c.to_json() for c in parts], **evidence}
    for c in parts:
        if c.verdict == Verdict.FAIL:
            return Certificate(name, Verdict.FAIL, stage=c.stage or c.name, evidence=body)
    for c in parts:
        if c.verdict == Verdict.UNKNOWN:
            return Certificate(name, Verdict.UNKNOWN, stage=c.stage or c.name, evidence=body)
    return Certificate(name, Verdict.PASS, evidence=body)


def expect(cert: Certificate, verdict: Verdict) -> Certificate:
    """Turn an in/out membership verdict into pass/fail against a prediction."""
    if cert.verdict == Verdict.UNKNOWN:
        return cert
    ok = cert.verdict == verdict
    return Certificate(
        cert.name,
        Verdict.PASS if ok else Verdict.FAIL,
        stage=cert.stage,
        evidence={**cert.evidence, "observed": cert.verdict.value, "expected": verdict.value},
        witness=cert.witness,
    )
