"""Closed-form window analysis: amplitudes, trends, and fault verdicts.

Only the parallel combination r2*r3/(r2+r3) of loads 2 and 3 is observable,
so a load-2 fault and a load-3 fault can only be told apart when the
measured parallel resistance lies in a region reachable by exactly one of
them given the known fault-multiplier ranges. The sampler restricts the
multipliers it draws to those identifiable regions; the analyzer rejects
windows where both hypotheses remain admissible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    CHANNELS,
    ActiveParams,
    CircuitConfig,
    FaultScenario,
    FaultTarget,
    TimeSeriesWindow,
    apply_fault,
)


class AmbiguousVerdict(RuntimeError):
    """More than one single-fault hypothesis explains the measured ratios."""


class Trend(enum.Enum):
    RISING = "rising"
    FALLING = "falling"
    STABLE = "stable"


class FaultDirection(enum.Enum):
    INCREASED = "increased"
    DECREASED = "decreased"
    NONE = "none"


@dataclass(frozen=True)
class RuleThresholds:
    trend_threshold: float = 0.05     # relative half-to-half change calling a trend
    fault_tolerance: float = 0.10     # relative ratio deviation calling a fault
    band_slack: float = 0.03          # widening of reachable bands before ruling a hypothesis out
    gen_margin: float = 0.01          # how far inside an identifiable zone the sampler stays
    trend_move_min: float = 0.08      # channel eligible as a clear mover
    trend_stable_max: float = 0.02    # channel eligible as clearly stable
    multiplier_up: tuple = (1.3, 2.0)
    multiplier_down: tuple = (0.5, 0.77)


@dataclass
class RuleReport:
    amp_first: np.ndarray            # per-channel max|x| over the first half
    amp_second: np.ndarray           # ... second half
    amp_whole: np.ndarray            # ... whole window
    trend: list                      # per-channel Trend
    verdict: FaultTarget
    direction: FaultDirection
    v1_rel: float                    # measured source amplitudes relative to nominal
    v2_rel: float
    r1_est: float                    # ohms, from second-half v_load1/current
    rpar_est: float                  # ohms, from second-half v_load23/current
    meta: dict = field(default_factory=dict)


def _rel_rpar_load2(m: float, cfg: CircuitConfig) -> float:
    """Parallel resistance (relative to nominal) when load 2 is scaled by m."""
    a, b = cfg.r2, cfg.r3
    return m * (a + b) / (m * a + b)


def _rel_rpar_load3(m: float, cfg: CircuitConfig) -> float:
    a, b = cfg.r2, cfg.r3
    return m * (a + b) / (a + m * b)


def _inv_rel_rpar_load2(y: float, cfg: CircuitConfig) -> float:
    a, b = cfg.r2, cfg.r3
    return y * b / (a + b - y * a)


def _inv_rel_rpar_load3(y: float, cfg: CircuitConfig) -> float:
    a, b = cfg.r2, cfg.r3
    return y * a / (a + b - y * b)


def _band(fn, m_range, cfg) -> tuple[float, float]:
    lo, hi = fn(m_range[0], cfg), fn(m_range[1], cfg)
    return (min(lo, hi), max(lo, hi))


def reachable_bands(cfg: CircuitConfig, th: RuleThresholds) -> dict:
    """Relative-r_parallel intervals reachable by load-2/load-3 faults."""
    return {
        (FaultTarget.LOAD2_RESISTANCE, "up"): _band(_rel_rpar_load2, th.multiplier_up, cfg),
        (FaultTarget.LOAD2_RESISTANCE, "down"): _band(_rel_rpar_load2, th.multiplier_down, cfg),
        (FaultTarget.LOAD3_RESISTANCE, "up"): _band(_rel_rpar_load3, th.multiplier_up, cfg),
        (FaultTarget.LOAD3_RESISTANCE, "down"): _band(_rel_rpar_load3, th.multiplier_down, cfg),
    }


def fault_multiplier_ranges(cfg: CircuitConfig, th: RuleThresholds) -> dict:
    """Per-target multiplier intervals the sampler may draw from.

    Sources and load 1 use the full configured ranges. For loads 2 and 3
    the interval is the preimage of the r_parallel region that is (a)
    beyond the fault tolerance and (b) outside the other load's
    slack-widened reachable band, shrunk by gen_margin.
    """
    bands = reachable_bands(cfg, th)
    tol, slack, margin = th.fault_tolerance, th.band_slack, th.gen_margin
    up, down = th.multiplier_up, th.multiplier_down

    ranges = {
        FaultTarget.SOURCE1_AMPLITUDE: {"up": up, "down": down},
        FaultTarget.SOURCE2_AMPLITUDE: {"up": up, "down": down},
        FaultTarget.LOAD1_RESISTANCE: {"up": up, "down": down},
    }

    # Load 2 increase: above load 3's widened reach and above tolerance.
    y_lo = max(1 + tol, bands[(FaultTarget.LOAD3_RESISTANCE, "up")][1] * (1 + slack)) + margin
    y_hi = bands[(FaultTarget.LOAD2_RESISTANCE, "up")][1]
    l2_up = (max(up[0], _inv_rel_rpar_load2(y_lo, cfg)), up[1])
    # Load 2 decrease: below load 3's widened reach.
    y_hi = min(1 - tol, bands[(FaultTarget.LOAD3_RESISTANCE, "down")][0] * (1 - slack)) - margin
    l2_down = (down[0], min(down[1], _inv_rel_rpar_load2(y_hi, cfg)))
    # Load 3 increase: above tolerance but below load 2's widened reach.
    y_lo = (1 + tol) * (1 + margin)
    y_hi = bands[(FaultTarget.LOAD2_RESISTANCE, "up")][0] * (1 - slack) - margin
    l3_up = (
        max(up[0], _inv_rel_rpar_load3(y_lo, cfg)),
        min(up[1], _inv_rel_rpar_load3(y_hi, cfg)),
    )
    # Load 3 decrease: below load 2's widened reach but above tolerance.
    y_lo = bands[(FaultTarget.LOAD2_RESISTANCE, "down")][1] * (1 + slack) + margin
    y_hi = (1 - tol) * (1 - margin)
    l3_down = (
        max(down[0], _inv_rel_rpar_load3(y_lo, cfg)),
        min(down[1], _inv_rel_rpar_load3(y_hi, cfg)),
    )

    for name, rng in (("load2 up", l2_up), ("load2 down", l2_down),
                      ("load3 up", l3_up), ("load3 down", l3_down)):
        if rng[0] >= rng[1]:
            raise ValueError(
                f"no identifiable multiplier range for {name}; "
                "adjust r2/r3 asymmetry or the fault tolerance"
            )
    ranges[FaultTarget.LOAD2_RESISTANCE] = {"up": l2_up, "down": l2_down}
    ranges[FaultTarget.LOAD3_RESISTANCE] = {"up": l3_up, "down": l3_down}
    return ranges


def _half_amplitudes(values: np.ndarray):
    m = values.shape[0]
    half = m // 2
    first = np.abs(values[:half]).max(axis=0)
    second = np.abs(values[half:]).max(axis=0)
    whole = np.abs(values).max(axis=0)
    return first, second, whole


def _trend_label(first: float, second: float, threshold: float) -> Trend:
    change = second / first - 1.0
    if change > threshold:
        return Trend.RISING
    if change < -threshold:
        return Trend.FALLING
    return Trend.STABLE


def analyze(window: TimeSeriesWindow, cfg: CircuitConfig,
            th: RuleThresholds | None = None) -> RuleReport:
    """Estimate amplitudes, per-channel trends, and a single-fault verdict.

    Verdict ratios use second-half amplitudes so that mid-window faults are
    judged in their settled state; for whole-window faults the two agree.
    Raises AmbiguousVerdict when no unique hypothesis fits.
    """
    th = th or RuleThresholds()
    first, second, whole = _half_amplitudes(window.values)
    trend = [_trend_label(first[c], second[c], th.trend_threshold)
             for c in range(len(CHANNELS))]

    a_nom = cfg.amplitude_nominal
    v1_rel = second[0] / a_nom
    v2_rel = second[1] / a_nom
    r1_est = second[3] / second[5]
    rpar_est = second[4] / second[5]
    r1_rel = r1_est / cfg.r1
    rpar_rel = rpar_est / cfg.r_parallel

    tol = th.fault_tolerance
    candidates = []
    if abs(v1_rel - 1) > tol:
        candidates.append((FaultTarget.SOURCE1_AMPLITUDE, v1_rel))
    if abs(v2_rel - 1) > tol:
        candidates.append((FaultTarget.SOURCE2_AMPLITUDE, v2_rel))
    if abs(r1_rel - 1) > tol:
        candidates.append((FaultTarget.LOAD1_RESISTANCE, r1_rel))
    if abs(rpar_rel - 1) > tol:
        bands = reachable_bands(cfg, th)
        direction = "up" if rpar_rel > 1 else "down"
        admissible = []
        for load in (FaultTarget.LOAD2_RESISTANCE, FaultTarget.LOAD3_RESISTANCE):
            lo, hi = bands[(load, direction)]
            if lo * (1 - th.band_slack) <= rpar_rel <= hi * (1 + th.band_slack):
                admissible.append(load)
        if len(admissible) != 1:
            raise AmbiguousVerdict(
                f"parallel resistance ratio {rpar_rel:.4f} admits "
                f"{len(admissible)} load hypotheses"
            )
        candidates.append((admissible[0], rpar_rel))

    if not candidates:
        verdict, direction = FaultTarget.NONE, FaultDirection.NONE
    elif len(candidates) == 1:
        verdict = candidates[0][0]
        direction = (FaultDirection.INCREASED if candidates[0][1] > 1
                     else FaultDirection.DECREASED)
    else:
        raise AmbiguousVerdict(
            "multiple ratios deviate; no single-fault hypothesis fits: "
            + ", ".join(t.value for t, _ in candidates)
        )

    return RuleReport(
        amp_first=first, amp_second=second, amp_whole=whole, trend=trend,
        verdict=verdict, direction=direction, v1_rel=v1_rel, v2_rel=v2_rel,
        r1_est=r1_est, rpar_est=rpar_est,
    )


def active_channel_amplitudes(cfg: CircuitConfig, scenario: FaultScenario) -> np.ndarray:
    """Noise-free per-channel amplitudes with the fault fully active."""
    p: ActiveParams = apply_fault(cfg, scenario, max(scenario.onset_index, 0))
    e = cfg.emf_amplitude(p.a1, p.a2)
    i = e / (p.r1 + p.r_parallel)
    return np.array([p.a1, p.a2, e, i * p.r1, i * p.r_parallel, i])


def clean_relative_changes(cfg: CircuitConfig, scenario: FaultScenario, m: int) -> np.ndarray:
    """Analytic second-half-vs-first-half amplitude change per channel.

    Zero everywhere unless the fault switches on mid-window.
    """
    if scenario.target is FaultTarget.NONE or scenario.onset_index == 0:
        return np.zeros(len(CHANNELS))
    if scenario.onset_index != m // 2:
        raise ValueError("analytic trend changes assume onset at 0 or m/2")
    nominal = cfg.nominal_channel_amplitudes()
    faulted = active_channel_amplitudes(cfg, scenario)
    return faulted / nominal - 1.0


def forecast_label(change: float, threshold: float) -> Trend:
    if change > threshold:
        return Trend.RISING
    if change < -threshold:
        return Trend.FALLING
    return Trend.STABLE
