"""Comparison metrics over simulation traces and the controller ranking.

Settling time uses a band relative to the series' own peak deviation, so
all metrics are invariant under time translation; not-settled is reported
as math.inf, which also ranks it last without special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedScenarioError

SETTLING_BAND = 0.02
REACH_FRACTION = 1e-3  # |S| threshold fraction defining the post-reach window

# expected §-ordering: (faster, slower, strict)
EXPECTED_ORDER = (
    ("fsmcpss", "smcpss", False),
    ("smcpss", "fpss", True),
    ("fpss", "nopss", True),
    ("cpss", "nopss", True),
)


def settling_time(times, series, final_value: float, band_fraction: float = SETTLING_BAND) -> float:
    """Earliest elapsed time after which the series stays within
    band_fraction of its own peak deviation from final_value; inf if never."""
    if not 0.0 < band_fraction < 1.0:
        raise ValueError("band_fraction must be in (0, 1)")
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(series, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty series")
    dev = np.abs(y - final_value)
    threshold = band_fraction * dev.max()
    outside = np.nonzero(dev > threshold)[0]
    if outside.size == 0:
        return 0.0
    idx = outside[-1] + 1
    if idx >= y.size:
        return math.inf
    return float(t[idx] - t[0])


def peak_overshoot(series, final_value: float) -> float:
    """Peak excursion past final_value (relative to the initial step size).

    0 for a monotone approach. A zero step (initial == final) returns 0 for
    a constant series and nan otherwise (the zero-step flag).
    """
    y = np.asarray(series, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty series")
    step = abs(float(y[0]) - final_value)
    if y[0] >= final_value:
        excursion = max(final_value - float(y.min()), 0.0)
    else:
        excursion = max(float(y.max()) - final_value, 0.0)
    if step == 0.0:
        return 0.0 if excursion == 0.0 else math.nan
    return excursion / step


def integral_indices(times, series) -> tuple[float, float]:
    """Trapezoidal (ISE, ITAE) with time counted from the series start."""
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(series, dtype=np.float64)
    elapsed = t - t[0]
    ise = float(np.trapezoid(y * y, elapsed))
    itae = float(np.trapezoid(elapsed * np.abs(y), elapsed))
    return ise, itae


def chattering_index(u, window: tuple[int, int] | None = None) -> float:
    """Total variation of the control over a sample-index window [i0, i1]."""
    v = np.asarray(u, dtype=np.float64)
    if window is not None:
        i0, i1 = window
        v = v[i0:i1 + 1]
    if v.size < 2:
        return 0.0
    return float(np.abs(np.diff(v)).sum())


def reach_index(surface_series) -> int:
    """First sample with |S| <= REACH_FRACTION * |S(0)|; len(S) if never."""
    s = np.asarray(surface_series, dtype=np.float64)
    threshold = REACH_FRACTION * abs(float(s[0]))
    hit = np.abs(s) <= threshold
    if not hit.any():
        return len(s)
    return int(np.argmax(hit))


@dataclass
class MetricsRow:
    controller: str
    settling_time: float
    peak_overshoot: float
    ise: float
    itae: float
    chattering_index: float
    max_abs_surface: float
    rank: int = 0


@dataclass
class ComparisonReport:
    rows: list[MetricsRow]
    ordering_ok: bool
    violations: list[str]

    def by_controller(self, name: str) -> MetricsRow:
        for row in self.rows:
            if row.controller == name:
                return row
        raise KeyError(name)


def trace_metrics(trace) -> MetricsRow:
    """All §-comparison quantities of one trace, on the angle-error column."""
    t = trace.t
    y = trace.y
    ir = reach_index(trace.S)
    window = (ir, len(t) - 1) if ir < len(t) else None
    chat = chattering_index(trace.u, window) if window else 0.0
    ise, itae = integral_indices(t, y)
    return MetricsRow(
        controller=trace.meta.get("controller", "?"),
        settling_time=settling_time(t, y, 0.0),
        peak_overshoot=peak_overshoot(y, 0.0),
        ise=ise,
        itae=itae,
        chattering_index=chat,
        max_abs_surface=float(np.abs(trace.S).max()),
    )


def compare_report(traces: dict) -> ComparisonReport:
    """Rank controllers by settling time and check the expected ordering.

    `traces` maps controller name to a SimulationTrace; all traces must
    come from the same scenario (same grid), differing only in controller.
    """
    items = list(traces.items())
    if not items:
        raise MismatchedScenarioError("no traces")
    t0 = items[0][1].t
    for name, trace in items:
        if len(trace.t) != len(t0) or not np.array_equal(trace.t, t0):
            raise MismatchedScenarioError(f"{name}: time grid differs")
        if trace.meta.get("controller") not in (None, name):
            raise MismatchedScenarioError(f"{name}: trace from controller {trace.meta}")
    rows = [trace_metrics(trace) for _, trace in items]
    order = {name: i for i, (name, _) in enumerate(items)}
    ranked = sorted(rows, key=lambda r: (r.settling_time, order[r.controller]))
    for i, row in enumerate(ranked):
        row.rank = i + 1
    by_name = {row.controller: row for row in rows}
    violations = []
    for fast, slow, strict in EXPECTED_ORDER:
        if fast not in by_name or slow not in by_name:
            continue
        a = by_name[fast].settling_time
        b = by_name[slow].settling_time
        ok = a < b if strict else a <= b
        if not ok:
            op = "<" if strict else "<="
            violations.append(f"settling({fast}) {op} settling({slow}) failed: {a:g} vs {b:g}")
    return ComparisonReport(rows=ranked, ordering_ok=not violations, violations=violations)
