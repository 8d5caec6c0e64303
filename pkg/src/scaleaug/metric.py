"""Pareto Scale Balance: spread of per-scale losses times an accuracy-drop penalty.

Lower is better.  Also hosts the stats document schema shared with the
evaluator protocol, and a Pearson correlation helper for checking how well
a metric tracks final accuracy.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .policy import SCALES

DEFAULT_EPS = 1e-4


class MetricDomainError(ValueError):
    pass


class StatsSchemaError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleStats:
    losses: Mapping[str, float]
    ap_before: Mapping[str, float]
    ap_after: Mapping[str, float]
    overall_ap_after: float | None = None

    def __post_init__(self):
        for name in ("losses", "ap_before", "ap_after"):
            m = getattr(self, name)
            missing = [s for s in SCALES if s not in m]
            if missing:
                raise StatsSchemaError(f"{name}.{missing[0]}", "missing scale")
            extra = sorted(set(m) - set(SCALES))
            if extra:
                raise StatsSchemaError(f"{name}.{extra[0]}", "unknown scale")
            object.__setattr__(self, name, {s: float(m[s]) for s in SCALES})
        if any(v < 0 for v in self.losses.values()):
            raise MetricDomainError("losses must be non-negative")
        if any(v < 0 for v in (*self.ap_before.values(), *self.ap_after.values())):
            raise MetricDomainError("AP values must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "losses": dict(self.losses),
            "ap_before": dict(self.ap_before),
            "ap_after": dict(self.ap_after),
            "overall_ap_after": self.overall_ap_after,
        }


@dataclass(frozen=True)
class MetricValue:
    value: float
    std_component: float
    penalty_component: float
    dropped_scales: frozenset[str] = frozenset()

    @classmethod
    def failed(cls) -> "MetricValue":
        return cls(math.inf, math.inf, math.inf, frozenset())


def _scale_values(m: Mapping[str, float], name: str) -> list[float]:
    missing = [s for s in SCALES if s not in m]
    if missing:
        raise StatsSchemaError(f"{name}.{missing[0]}", "missing scale")
    return [float(m[s]) for s in SCALES]


def loss_std(losses: Mapping[str, float]) -> float:
    """Population standard deviation of the three per-scale losses."""
    xs = _scale_values(losses, "losses")
    mu = sum(xs) / len(xs)
    return math.sqrt(sum((x - mu) ** 2 for x in xs) / len(xs))


def penalty(ap_before: Mapping[str, float], ap_after: Mapping[str, float],
            eps: float = DEFAULT_EPS) -> tuple[float, frozenset[str]]:
    """Product of before/after AP ratios over the scales whose AP dropped.

    ``eps`` guards zero denominators; it is in the same unit as the APs.
    """
    if not eps > 0:
        raise MetricDomainError("eps must be positive")
    before = _scale_values(ap_before, "ap_before")
    after = _scale_values(ap_after, "ap_after")
    if any(v < 0 for v in before + after):
        raise MetricDomainError("AP values must be non-negative")
    phi = 1.0
    dropped = []
    for s, b, a in zip(SCALES, before, after):
        if a < b:
            dropped.append(s)
            phi *= b / max(a, eps)
    return phi, frozenset(dropped)


def pareto_scale_balance(stats: ScaleStats, eps: float = DEFAULT_EPS) -> MetricValue:
    std = loss_std(stats.losses)
    phi, dropped = penalty(stats.ap_before, stats.ap_after, eps)
    return MetricValue(std * phi, std, phi, dropped)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise MetricDomainError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise MetricDomainError("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance in one of the inputs")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------- schema ---


def stats_from_dict(doc: Any) -> ScaleStats:
    if not isinstance(doc, dict):
        raise StatsSchemaError("", "expected an object")
    allowed = {"losses", "ap_before", "ap_after", "overall_ap_after"}
    extra = sorted(set(doc) - allowed)
    if extra:
        raise StatsSchemaError(extra[0], "unknown field")
    maps = {}
    for key in ("losses", "ap_before", "ap_after"):
        if key not in doc:
            raise StatsSchemaError(key, "missing field")
        m = doc[key]
        if not isinstance(m, dict):
            raise StatsSchemaError(key, "expected an object")
        for s in SCALES:
            if s not in m:
                raise StatsSchemaError(f"{key}.{s}", "missing scale")
            v = m[s]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise StatsSchemaError(f"{key}.{s}", f"expected a finite number, got {v!r}")
            if v < 0:
                raise StatsSchemaError(f"{key}.{s}", "must be non-negative")
        extra = sorted(set(m) - set(SCALES))
        if extra:
            raise StatsSchemaError(f"{key}.{extra[0]}", "unknown scale")
        maps[key] = m
    overall = doc.get("overall_ap_after")
    if overall is not None and (isinstance(overall, bool) or not isinstance(overall, (int, float))):
        raise StatsSchemaError("overall_ap_after", f"expected a number, got {overall!r}")
    return ScaleStats(maps["losses"], maps["ap_before"], maps["ap_after"], overall)


def parse_stats(text: str) -> ScaleStats:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StatsSchemaError("", f"malformed JSON: {e}") from None
    return stats_from_dict(doc)


def serialize_stats(stats: ScaleStats) -> str:
    return json.dumps(stats.to_dict(), indent=2) + "\n"
