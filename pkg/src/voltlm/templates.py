"""Task taxonomy, question/paraphrase banks, and answer text builders.

Answers follow a fixed perception / reasoning / conclusion shape and always
end with a single "Conclusion: <label>" line drawn from CANONICAL_LABELS.
"""

from __future__ import annotations

import enum

import numpy as np

from .circuit import CircuitConfig
from .rules import FaultDirection, FaultTarget, RuleReport, RuleThresholds, Trend


class TaskKind(enum.Enum):
    PRETRAIN_ANOMALY = "pretrain_anomaly"
    PRETRAIN_TEMPORAL = "pretrain_temporal"
    TREND_ANALYSIS = "trend_analysis"
    TREND_FORECAST = "trend_forecast"
    FAULT_JUDGEMENT = "fault_judgement"
    FAULT_DIAGNOSIS = "fault_diagnosis"
    FAULT_ANALYSIS = "fault_analysis"


EVAL_TASKS = (
    TaskKind.TREND_ANALYSIS,
    TaskKind.TREND_FORECAST,
    TaskKind.FAULT_JUDGEMENT,
    TaskKind.FAULT_DIAGNOSIS,
    TaskKind.FAULT_ANALYSIS,
)
TREND_TASKS = (TaskKind.TREND_ANALYSIS, TaskKind.TREND_FORECAST)
REASONING_TASKS = (
    TaskKind.FAULT_JUDGEMENT,
    TaskKind.FAULT_DIAGNOSIS,
    TaskKind.FAULT_ANALYSIS,
)

CANONICAL_LABELS = (
    "normal",
    "abnormal",
    "voltage source 1",
    "voltage source 2",
    "load 1",
    "load 2",
    "load 3",
    "rising",
    "falling",
    "stable",
)

COMPONENT_LABEL = {
    FaultTarget.NONE: "normal",
    FaultTarget.SOURCE1_AMPLITUDE: "voltage source 1",
    FaultTarget.SOURCE2_AMPLITUDE: "voltage source 2",
    FaultTarget.LOAD1_RESISTANCE: "load 1",
    FaultTarget.LOAD2_RESISTANCE: "load 2",
    FaultTarget.LOAD3_RESISTANCE: "load 3",
}

CHANNEL_PHRASES = (
    "voltage source 1",
    "voltage source 2",
    "the total emf",
    "the load 1 voltage",
    "the voltage across loads 2 and 3",
    "the main loop current",
)
CHANNEL_UNITS = ("volts", "volts", "volts", "volts", "volts", "amperes")

FAULT_PARAM_PHRASES = {
    FaultTarget.SOURCE1_AMPLITUDE: "the amplitude of voltage source 1",
    FaultTarget.SOURCE2_AMPLITUDE: "the amplitude of voltage source 2",
    FaultTarget.LOAD1_RESISTANCE: "the resistance of load 1",
    FaultTarget.LOAD2_RESISTANCE: "the resistance of load 2",
    FaultTarget.LOAD3_RESISTANCE: "the resistance of load 3",
}


class TemplateSlotMissing(KeyError):
    """A template asked for a slot the report/window does not provide."""


QUESTION_BANK = {
    TaskKind.TREND_ANALYSIS: (
        "How does the amplitude of {channel} evolve across the observed window?",
        "Analyze the trend of {channel} in the given time series.",
        "Does {channel} rise, fall, or stay stable over the window?",
        "Describe how the level of {channel} changes within the window.",
    ),
    TaskKind.TREND_FORECAST: (
        "Based on the observed window, forecast the trend of {channel} over the next window.",
        "How will {channel} evolve in the upcoming window relative to the start of this one?",
        "Predict whether {channel} will rise, fall, or stay stable going forward.",
        "What trend should we expect from {channel} after the observed window ends?",
    ),
    TaskKind.FAULT_JUDGEMENT: (
        "Judge whether the circuit operates normally in this window.",
        "Is there a fault anywhere in the circuit during the observed window?",
        "Decide if the recorded window shows normal or abnormal circuit behavior.",
        "Check the six recorded variables and state whether the circuit is healthy.",
    ),
    TaskKind.FAULT_DIAGNOSIS: (
        "Which component, if any, is faulty in this window?",
        "Diagnose the faulty component from the recorded variables.",
        "Identify the component whose parameter drifted in the observed window.",
        "Locate the fault in the circuit, or state that it is normal.",
    ),
    TaskKind.FAULT_ANALYSIS: (
        "Analyze the fault in this window and explain how it affects the circuit.",
        "Explain what went wrong in the circuit and how the change propagates.",
        "Work out which parameter drifted and describe its effect on the other variables.",
        "Give a full fault analysis for the observed window.",
    ),
}

PARAPHRASE_BANK = (
    "{q}",
    "Please {q_lower}",
    "{q} Explain your reasoning step by step.",
    "Given the recorded window, {q_lower}",
    "{q} Keep the analysis brief.",
    "You are monitoring the circuit. {q}",
)


def _lower_first(text: str) -> str:
    return text[0].lower() + text[1:] if text else text


def augment_question(question: str, seed: int) -> str:
    """Apply one stored paraphrase pattern; slot words survive verbatim."""
    pattern = PARAPHRASE_BANK[seed % len(PARAPHRASE_BANK)]
    return pattern.format(q=question, q_lower=_lower_first(question))


def pick_question(kind: TaskKind, rng: np.random.Generator, channel: int | None = None) -> str:
    if kind in (TaskKind.PRETRAIN_ANOMALY, TaskKind.PRETRAIN_TEMPORAL):
        return ""
    bank = QUESTION_BANK[kind]
    template = bank[int(rng.integers(len(bank)))]
    if "{channel}" in template:
        if channel is None:
            raise TemplateSlotMissing(f"{kind.value} question needs a query channel")
        return template.format(channel=CHANNEL_PHRASES[channel])
    return template


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _pct(x: float) -> str:
    return f"{x * 100:.1f}"


def _perception_all(report: RuleReport, cfg: CircuitConfig) -> str:
    a = report.amp_second
    return (
        f"Perception: voltage source 1 reads {_fmt(a[0])} volts and voltage source 2 "
        f"reads {_fmt(a[1])} volts against the {_fmt(cfg.amplitude_nominal)} volt nominal; "
        f"the load 1 voltage is {_fmt(a[3])} volts, the parallel load voltage is "
        f"{_fmt(a[4])} volts, and the main loop current is {_fmt(a[5])} amperes."
    )


def _trend_reason(change: float, th: RuleThresholds, label: Trend) -> str:
    thr = f"{th.trend_threshold * 100:g}"
    if label is Trend.RISING:
        return (f"the amplitude changed by {_pct(change)} percent, above the {thr} percent "
                "threshold, so the level moved up.")
    if label is Trend.FALLING:
        return (f"the amplitude changed by {_pct(change)} percent, beyond the {thr} percent "
                "threshold downward, so the level moved down.")
    return (f"the amplitude changed by {_pct(change)} percent, within the {thr} percent "
            "threshold, so the level held steady.")


def trend_analysis_answer(report: RuleReport, channel: int, th: RuleThresholds) -> tuple[str, str]:
    a1, a2 = report.amp_first[channel], report.amp_second[channel]
    unit = CHANNEL_UNITS[channel]
    label = report.trend[channel]
    change = a2 / a1 - 1.0
    answer = (
        f"Perception: {CHANNEL_PHRASES[channel]} has an amplitude of {_fmt(a1)} {unit} in the "
        f"first half of the window and {_fmt(a2)} {unit} in the second half.\n"
        f"Reasoning: {_trend_reason(change, th, label)}\n"
        f"Conclusion: {label.value}"
    )
    return answer, label.value


def trend_forecast_answer(report: RuleReport, channel: int, label: Trend,
                          cont_change: float, th: RuleThresholds) -> tuple[str, str]:
    a1, a2 = report.amp_first[channel], report.amp_second[channel]
    unit = CHANNEL_UNITS[channel]
    perception = (
        f"Perception: {CHANNEL_PHRASES[channel]} shows an amplitude of {_fmt(a1)} {unit} in the "
        f"first half of the window and {_fmt(a2)} {unit} in the second half."
    )
    if label is Trend.STABLE:
        reason = ("the operating point did not shift, and the circuit holds its operating "
                  "point, so the next window stays at the same level.")
    else:
        word = "above" if label is Trend.RISING else "below"
        reason = (f"the operating point shifted mid-window and the circuit holds its latest "
                  f"operating point, so the next window stays near {_fmt(a2)} {unit}, about "
                  f"{_pct(abs(cont_change))} percent {word} the start of this one.")
    answer = f"{perception}\nReasoning: {reason}\nConclusion: {label.value}"
    return answer, label.value


def _deviation_sentence(report: RuleReport, cfg: CircuitConfig) -> str:
    v = report.verdict
    if v is FaultTarget.SOURCE1_AMPLITUDE:
        return (f"the source 1 amplitude sits {_pct(abs(report.v1_rel - 1))} percent away from "
                "nominal while source 2 and both load ratios match nominal")
    if v is FaultTarget.SOURCE2_AMPLITUDE:
        return (f"the source 2 amplitude sits {_pct(abs(report.v2_rel - 1))} percent away from "
                "nominal while source 1 and both load ratios match nominal")
    if v is FaultTarget.LOAD1_RESISTANCE:
        return (f"the implied load 1 resistance is {_fmt(report.r1_est)} ohms against the "
                f"{_fmt(cfg.r1)} ohm nominal while the parallel resistance stays nominal")
    return (f"the implied parallel resistance is {_fmt(report.rpar_est)} ohms against the "
            f"{_fmt(cfg.r_parallel)} ohm nominal")


def fault_judgement_answer(report: RuleReport, cfg: CircuitConfig,
                           th: RuleThresholds) -> tuple[str, str]:
    tol = f"{th.fault_tolerance * 100:g}"
    if report.verdict is FaultTarget.NONE:
        reason = (f"both source amplitudes sit within {tol} percent of nominal, the implied "
                  f"load 1 resistance is {_fmt(report.r1_est)} ohms against {_fmt(cfg.r1)} "
                  f"nominal, and the parallel resistance is {_fmt(report.rpar_est)} ohms "
                  f"against {_fmt(cfg.r_parallel)} nominal, all within tolerance.")
        label = "normal"
    else:
        reason = f"{_deviation_sentence(report, cfg)}, outside the {tol} percent tolerance."
        label = "abnormal"
    answer = f"{_perception_all(report, cfg)}\nReasoning: {reason}\nConclusion: {label}"
    return answer, label


def _load_band_ohms(cfg: CircuitConfig, th: RuleThresholds, load: FaultTarget,
                    direction: str) -> tuple[float, float]:
    from .rules import reachable_bands

    lo, hi = reachable_bands(cfg, th)[(load, direction)]
    return lo * cfg.r_parallel, hi * cfg.r_parallel


def _diagnosis_reason(report: RuleReport, cfg: CircuitConfig, th: RuleThresholds) -> str:
    v, rp = report.verdict, report.rpar_est
    if v is FaultTarget.NONE:
        return ("every ratio stays within the "
                f"{th.fault_tolerance * 100:g} percent tolerance, so no component drifted.")
    if v in (FaultTarget.SOURCE1_AMPLITUDE, FaultTarget.SOURCE2_AMPLITUDE):
        return f"{_deviation_sentence(report, cfg)}, so the fault lies in {COMPONENT_LABEL[v]}."
    if v is FaultTarget.LOAD1_RESISTANCE:
        return (f"the implied load 1 resistance moved to {_fmt(report.r1_est)} ohms while the "
                "parallel resistance stayed nominal, so load 1 drifted.")
    up = report.direction is FaultDirection.INCREASED
    if v is FaultTarget.LOAD2_RESISTANCE:
        lo3, hi3 = _load_band_ohms(cfg, th, FaultTarget.LOAD3_RESISTANCE, "up" if up else "down")
        if up:
            return (f"the implied parallel resistance rose to {_fmt(rp)} ohms; a load 3 drift "
                    f"within range tops out near {_fmt(hi3)} ohms, so only a load 2 increase "
                    "explains it.")
        return (f"the implied parallel resistance fell to {_fmt(rp)} ohms; a load 3 drift "
                f"within range cannot fall below {_fmt(lo3)} ohms, so only a load 2 decrease "
                "explains it.")
    lo2, hi2 = _load_band_ohms(cfg, th, FaultTarget.LOAD2_RESISTANCE, "up" if up else "down")
    if up:
        return (f"the implied parallel resistance rose to {_fmt(rp)} ohms, short of the "
                f"{_fmt(lo2)} ohms a load 2 increase would produce but inside load 3's range, "
                "so load 3 drifted.")
    return (f"the implied parallel resistance fell to {_fmt(rp)} ohms, above the {_fmt(hi2)} "
            "ohms floor of a load 2 decrease but inside load 3's range, so load 3 drifted.")


def fault_diagnosis_answer(report: RuleReport, cfg: CircuitConfig,
                           th: RuleThresholds) -> tuple[str, str]:
    label = COMPONENT_LABEL[report.verdict]
    answer = (f"{_perception_all(report, cfg)}\n"
              f"Reasoning: {_diagnosis_reason(report, cfg, th)}\n"
              f"Conclusion: {label}")
    return answer, label


_EFFECT_CHAIN = {
    (FaultTarget.SOURCE1_AMPLITUDE, FaultDirection.INCREASED):
        "Raising the source 1 amplitude raises the total emf, lifting every load voltage "
        "and the loop current with it.",
    (FaultTarget.SOURCE1_AMPLITUDE, FaultDirection.DECREASED):
        "Lowering the source 1 amplitude lowers the total emf, dragging every load voltage "
        "and the loop current down with it.",
    (FaultTarget.SOURCE2_AMPLITUDE, FaultDirection.INCREASED):
        "Raising the source 2 amplitude raises the total emf, lifting every load voltage "
        "and the loop current with it.",
    (FaultTarget.SOURCE2_AMPLITUDE, FaultDirection.DECREASED):
        "Lowering the source 2 amplitude lowers the total emf, dragging every load voltage "
        "and the loop current down with it.",
    (FaultTarget.LOAD1_RESISTANCE, FaultDirection.INCREASED):
        "A higher load 1 resistance cuts the loop current, so the parallel voltage falls "
        "while load 1 keeps a larger share of the emf.",
    (FaultTarget.LOAD1_RESISTANCE, FaultDirection.DECREASED):
        "A lower load 1 resistance boosts the loop current, so the parallel voltage rises "
        "while load 1 keeps a smaller share of the emf.",
    (FaultTarget.LOAD2_RESISTANCE, FaultDirection.INCREASED):
        "A higher load 2 resistance raises the parallel resistance, cutting the loop current "
        "and the load 1 voltage while the parallel voltage rises.",
    (FaultTarget.LOAD2_RESISTANCE, FaultDirection.DECREASED):
        "A lower load 2 resistance lowers the parallel resistance, boosting the loop current "
        "and the load 1 voltage while the parallel voltage falls.",
    (FaultTarget.LOAD3_RESISTANCE, FaultDirection.INCREASED):
        "A higher load 3 resistance raises the parallel resistance, cutting the loop current "
        "and the load 1 voltage while the parallel voltage rises.",
    (FaultTarget.LOAD3_RESISTANCE, FaultDirection.DECREASED):
        "A lower load 3 resistance lowers the parallel resistance, boosting the loop current "
        "and the load 1 voltage while the parallel voltage falls.",
}


def fault_analysis_answer(report: RuleReport, cfg: CircuitConfig,
                          th: RuleThresholds) -> tuple[str, str]:
    label = COMPONENT_LABEL[report.verdict]
    if report.verdict is FaultTarget.NONE:
        chain = "All ratios match the design values, so the circuit behaves as built."
    else:
        chain = _EFFECT_CHAIN[(report.verdict, report.direction)]
    answer = (f"{_perception_all(report, cfg)}\n"
              f"Reasoning: {_diagnosis_reason(report, cfg, th)} {chain}\n"
              f"Conclusion: {label}")
    return answer, label


def pretrain_anomaly_answer(report: RuleReport) -> tuple[str, str]:
    if report.verdict is FaultTarget.NONE:
        text = "Component status: all components operate normally."
        label = "normal"
    else:
        word = "rose" if report.direction is FaultDirection.INCREASED else "fell"
        text = (f"Component status: {FAULT_PARAM_PHRASES[report.verdict]} {word} "
                "during the window.")
        label = COMPONENT_LABEL[report.verdict]
    return f"{text}\nConclusion: {label}", label


def pretrain_temporal_answer(report: RuleReport, channel: int,
                             th: RuleThresholds) -> tuple[str, str]:
    a = report.amp_whole
    label = report.trend[channel]
    summary = (
        f"Signal summary: voltage source 1 amplitude {_fmt(a[0])} volts, voltage source 2 "
        f"amplitude {_fmt(a[1])} volts, total emf {_fmt(a[2])} volts, load 1 voltage "
        f"{_fmt(a[3])} volts, loads 2 and 3 voltage {_fmt(a[4])} volts, main loop current "
        f"{_fmt(a[5])} amperes."
    )
    change = report.amp_second[channel] / report.amp_first[channel] - 1.0
    detail = (f"Across the window {CHANNEL_PHRASES[channel]} "
              f"{_trend_reason(change, th, label).replace('the amplitude changed', 'changed')}")
    return f"{summary}\n{detail}\nConclusion: {label.value}", label.value
