"""Result containers used by estimators and inequality checkers.

Every Monte-Carlo operation returns an (estimate, stderr, n) triple and
every inequality checker reports both sides of the bound plus slack, so
near-violations stay debuggable instead of collapsing into a boolean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Any


@dataclass(frozen=True)
class MCEstimate:
    """A Monte-Carlo estimate with its standard error and sample count."""

    value: float
    stderr: float
    n_samples: int

    def within(self, target: float, k_sigma: float = 3.0, extra: float = 0.0) -> bool:
        return abs(self.value - target) <= k_sigma * self.stderr + extra


def mc_mean(samples) -> MCEstimate:
    """Sample mean with standard error of the mean."""
    import numpy as np

    arr = np.asarray(samples, dtype=float).ravel()
    n = arr.size
    if n == 0:
        return MCEstimate(0.0, math.inf, 0)
    value = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(value, stderr, n)


@dataclass
class CheckResult:
    """Outcome of a single inequality check: lhs <= rhs (after scaling)."""

    name: str
    lhs: float
    rhs: float
    passed: bool
    slack: float
    bound_scale: float = 1.0
    vacuous: bool = False
    details: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_sides(
        name: str,
        lhs: float,
        rhs: float,
        *,
        bound_scale: float = 1.0,
        tol: float = 0.0,
        vacuous: bool = False,
        details: dict[str, Any] | None = None,
    ) -> "CheckResult":
        scaled = rhs * bound_scale
        passed = vacuous or (lhs <= scaled + tol)
        return CheckResult(
            name=name,
            lhs=float(lhs),
            rhs=float(scaled),
            passed=bool(passed),
            slack=float(scaled + tol - lhs),
            bound_scale=float(bound_scale),
            vacuous=vacuous,
            details=dict(details or {}),
        )

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = " (vacuous)" if self.vacuous else ""
        return (
            f"{status}{extra} {self.name}: lhs={self.lhs:.6g} "
            f"rhs={self.rhs:.6g} slack={self.slack:.3g}"
        )


@dataclass
class CheckSuiteResult:
    """A batch of check results with aggregate pass/fail."""

    name: str
    results: list[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        self.results.append(result)

    def extend(self, results) -> None:
        self.results.extend(results)

    @property
    def n_passed(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]


def to_jsonable(obj: Any) -> Any:
    """Convert dataclasses / numpy containers into plain JSON-serializable data."""
    import numpy as np

    if isinstance(obj, (MCEstimate, CheckResult)):
        return to_jsonable(asdict(obj))
    if hasattr(obj, "to_dict") and callable(obj.to_dict):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def canonical_json(payload: Any) -> str:
    """Deterministic JSON encoding: sorted keys, no whitespace drift."""
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))
