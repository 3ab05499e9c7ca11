"""Canonical JSON, digests and the verification report record."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PASS", "FAIL", "INCONCLUSIVE", "VerificationReport", "canonical_json", "digest", "jsonable"]

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan
        return x if math.isfinite(x) else repr(x)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


@dataclass
class VerificationReport:
    lemma: str
    inputs: dict
    measurements: dict
    tolerance: float
    verdict: str
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return jsonable(
            {
                "lemma": self.lemma,
                "inputs": self.inputs,
                "measurements": self.measurements,
                "tolerance": self.tolerance,
                "verdict": self.verdict,
                "notes": self.notes,
            }
        )
