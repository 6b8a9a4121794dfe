"""Analytic cost model for the farm: scalability bound, speedup and
parallel efficiency, plus parameterized per-dimension cost scenarios for
the two canonical data-change regimes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .bsf import RunMetrics

DELTA_MODES = ("full", "one-row", "custom")
DEFAULT_LATENCY_NS = 10_000.0


@dataclass(frozen=True)
class CostParams:
    """Inputs to the cost formulas; measured (RunMetrics) or synthetic."""

    p_workers: int
    latency_ns: float
    t_s_ns: float
    t_r_ns: float
    t_p_ns: float
    t_w_ns: float

    def __post_init__(self):
        if self.p_workers < 1:
            raise ValueError("p_workers must be >= 1")
        for name in ("latency_ns", "t_s_ns", "t_r_ns", "t_p_ns", "t_w_ns"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def from_metrics(cls, m: RunMetrics, p_workers: int | None = None) -> "CostParams":
        return cls(p_workers if p_workers is not None else m.p_workers,
                   m.latency_ns, m.t_s_ns, m.t_r_ns, m.t_p_ns, m.t_w_ns)


def scalability_bound(p: CostParams) -> float:
    """Worker count beyond which adding workers reduces speedup:
    sqrt(t_w / (2L + t_s))."""
    denom = 2.0 * p.latency_ns + p.t_s_ns
    if denom <= 0.0:
        raise ZeroDivisionError("2L + t_s must be positive")
    return math.sqrt(p.t_w_ns / denom)


def speedup(p: CostParams) -> float:
    """Predicted speedup over the one-worker configuration.

    The sums on both sides are associated identically so that the value is
    exactly 1.0 at P = 1 for any parameters.
    """
    P = float(p.p_workers)
    head = 2.0 * p.latency_ns + p.t_s_ns
    numerator = P * (((head + p.t_r_ns) + p.t_p_ns) + p.t_w_ns)
    denominator = (((P * P) * head + P * p.t_r_ns) + P * p.t_p_ns) + p.t_w_ns
    if denominator <= 0.0:
        raise ZeroDivisionError("cost denominator must be positive")
    return numerator / denominator


def efficiency(p: CostParams) -> float:
    """Approximate parallel efficiency: 1 / (1 + overhead / t_w)."""
    if p.t_w_ns <= 0.0:
        raise ZeroDivisionError("t_w must be positive")
    P = float(p.p_workers)
    overhead = (P * P) * (2.0 * p.latency_ns + p.t_s_ns) + P * (p.t_r_ns + p.t_p_ns)
    return 1.0 / (1.0 + overhead / p.t_w_ns)


@dataclass(frozen=True)
class ScenarioModel:
    """Cost scenario for dimension n: asymptotic complexity shapes made
    concrete with calibration constants (ns per unit of each shape)."""

    n: int
    delta_mode: str = "one-row"
    custom_delta: float | None = None
    c_s: float = 1.0
    c_w: float = 1.0
    c_r: float = 1.0
    c_p: float = 1.0
    latency_ns: float = DEFAULT_LATENCY_NS

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if self.delta_mode not in DELTA_MODES:
            raise ValueError(f"delta_mode must be one of {DELTA_MODES}")
        if self.delta_mode == "custom" and self.custom_delta is None:
            raise ValueError("custom delta_mode requires custom_delta")
        for name in ("c_s", "c_w", "c_r", "c_p"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def delta(self) -> float:
        if self.delta_mode == "full":
            return 1.0
        if self.delta_mode == "one-row":
            return 1.0 / (2.0 * (self.n + 1))
        return float(self.custom_delta)


def delta_fraction(mode: str, n: int, custom: float | None = None) -> float:
    return ScenarioModel(n=n, delta_mode=mode, custom_delta=custom).delta()


def scenario_params(model: ScenarioModel, p_workers: int) -> CostParams:
    """Instantiate the per-iteration cost shapes at the model's dimension:
    t_s ~ delta(n)(n+1)^2 + (n+1), t_w ~ n^3 + n^2 + n, t_r ~ n, t_p ~ n^2."""
    n = float(model.n)
    d = model.delta()
    return CostParams(
        p_workers=p_workers,
        latency_ns=model.latency_ns,
        t_s_ns=model.c_s * (d * (n + 1.0) ** 2 + (n + 1.0)),
        t_w_ns=model.c_w * (n ** 3 + n ** 2 + n),
        t_r_ns=model.c_r * n,
        t_p_ns=model.c_p * n ** 2,
    )


def calibrate(measurements: Iterable[tuple[int, RunMetrics]], delta_mode: str = "one-row",
              custom_delta: float | None = None, latency_ns: float | None = None) -> ScenarioModel:
    """Fit the calibration constants from measured metrics by per-component
    least squares through the origin. One measurement gives an exact fit at
    that dimension; several trade error across dimensions.
    """
    pts = list(measurements)
    if not pts:
        raise ValueError("need at least one measurement")

    def fit(shape, value) -> float:
        num = sum(shape(n) * value(m) for n, m in pts)
        den = sum(shape(n) ** 2 for n, _ in pts)
        return max(num / den, 1e-30)

    def d_of(n: int) -> float:
        return delta_fraction(delta_mode, n, custom_delta)

    c_s = fit(lambda n: d_of(n) * (n + 1.0) ** 2 + (n + 1.0), lambda m: m.t_s_ns)
    c_w = fit(lambda n: float(n) ** 3 + n ** 2 + n, lambda m: m.t_w_ns)
    c_r = fit(lambda n: float(n), lambda m: m.t_r_ns)
    c_p = fit(lambda n: float(n) ** 2, lambda m: m.t_p_ns)
    if latency_ns is None:
        latency_ns = sum(m.latency_ns for _, m in pts) / len(pts)
    return ScenarioModel(n=pts[-1][0], delta_mode=delta_mode, custom_delta=custom_delta,
                         c_s=c_s, c_w=c_w, c_r=c_r, c_p=c_p, latency_ns=latency_ns)


class CurveRow(NamedTuple):
    p_workers: int
    speedup: float
    efficiency: float
    bound: float


CURVES_CSV_HEADER = "P,speedup_pred,efficiency_pred,bound"


def predict_curves(model: ScenarioModel, p_values: Iterable[int]) -> list[CurveRow]:
    """Speedup/efficiency/bound per worker count, for plotting and for the
    measured-versus-predicted comparison. The bound column is constant (it
    does not depend on P)."""
    rows = []
    for p in p_values:
        params = scenario_params(model, int(p))
        rows.append(CurveRow(int(p), speedup(params), efficiency(params),
                             scalability_bound(params)))
    if not rows:
        raise ValueError("need at least one worker count")
    return rows


def curves_to_csv(rows: Iterable[CurveRow], path) -> None:
    with open(path, "w") as fh:
        fh.write(CURVES_CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.p_workers},{r.speedup!r},{r.efficiency!r},{r.bound!r}\n")
