"""Dataset construction: simulate, label, render, split, serialize.

Every sample is generated from a seed derived from (root seed, task,
target, ordinal, attempt), so builds are reproducible bit-for-bit and
independent of generation order. Windows whose rule-based labels disagree
with the generating scenario (noise flukes, ambiguous verdicts) are
rejected and regenerated under a bounded budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import templates as T
from .circuit import CircuitConfig, FaultScenario, FaultTarget, TimeSeriesWindow, simulate
from .rules import (
    AmbiguousVerdict,
    FaultDirection,
    RuleReport,
    RuleThresholds,
    Trend,
    analyze,
    clean_relative_changes,
    fault_multiplier_ranges,
    forecast_label,
)
from .templates import TaskKind, augment_question, pick_question
from .util import derive_seed, rng_for, stable_id

FAULT_TARGETS = (
    FaultTarget.NONE,
    FaultTarget.SOURCE1_AMPLITUDE,
    FaultTarget.SOURCE2_AMPLITUDE,
    FaultTarget.LOAD1_RESISTANCE,
    FaultTarget.LOAD2_RESISTANCE,
    FaultTarget.LOAD3_RESISTANCE,
)

PRETRAIN_KINDS = (TaskKind.PRETRAIN_ANOMALY, TaskKind.PRETRAIN_TEMPORAL)


class RegenerationBudgetExceeded(RuntimeError):
    """Too many windows were rejected and regenerated during a build."""


class LabelMismatch(RuntimeError):
    """Rule-based label disagrees with the generating scenario."""


@dataclass
class QASample:
    id: str
    task: TaskKind
    series: np.ndarray
    question: str
    answer: str
    conclusion: str
    meta: dict

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "task": self.task.value,
            "series": self.series.tolist(),
            "question": self.question,
            "answer": self.answer,
            "conclusion": self.conclusion,
            "meta": self.meta,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "QASample":
        return QASample(
            id=obj["id"],
            task=TaskKind(obj["task"]),
            series=np.array(obj["series"], dtype=np.float64),
            question=obj["question"],
            answer=obj["answer"],
            conclusion=obj["conclusion"],
            meta=obj["meta"],
        )


@dataclass
class DatasetBundle:
    pretrain: list
    finetune_train: list
    finetune_val: list
    finetune_test: list
    manifest: dict

    def split(self, name: str) -> list:
        return {
            "pretrain": self.pretrain,
            "train": self.finetune_train,
            "val": self.finetune_val,
            "test": self.finetune_test,
        }[name]


def default_counts(pretrain_per_kind: int = 3300, train_per_task: int = 720,
                   val_per_task: int = 80, test_per_task: int = 100) -> dict:
    return {
        "pretrain": {k: pretrain_per_kind for k in PRETRAIN_KINDS},
        "train": {k: train_per_task for k in T.EVAL_TASKS},
        "val": {k: val_per_task for k in T.EVAL_TASKS},
        "test": {k: test_per_task for k in T.EVAL_TASKS},
    }


@dataclass
class DatasetSpec:
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    thresholds: RuleThresholds = field(default_factory=RuleThresholds)
    m_steps: int = 256
    seed: int = 0
    counts: dict = field(default_factory=default_counts)
    max_attempts: int = 12
    regen_budget: float = 0.10

    def validate(self):
        for split, per_task in self.counts.items():
            for task, n in per_task.items():
                if n < 0:
                    raise ValueError(f"negative count for {task} in split {split!r}")
                if split == "pretrain" and task not in PRETRAIN_KINDS:
                    raise ValueError(f"{task} not allowed in the pretrain split")
                if split != "pretrain" and task in PRETRAIN_KINDS:
                    raise ValueError(f"{task} only allowed in the pretrain split")


def _largest_remainder(total: int, buckets: int) -> list[int]:
    base, rem = divmod(total, buckets)
    return [base + (1 if i < rem else 0) for i in range(buckets)]


def _sample_scenario(task: TaskKind, target: FaultTarget, m: int, rng: np.random.Generator,
                     ranges: dict) -> FaultScenario:
    if target is FaultTarget.NONE:
        return FaultScenario(FaultTarget.NONE, 1.0, 0)
    direction = "up" if rng.random() < 0.5 else "down"
    lo, hi = ranges[target][direction]
    mult = float(rng.uniform(lo, hi))
    if task in T.TREND_TASKS:
        onset = m // 2
    elif task is TaskKind.PRETRAIN_TEMPORAL:
        onset = m // 2 if rng.random() < 0.5 else 0
    else:
        onset = 0
    return FaultScenario(target, mult, onset)


def _pick_query_channel(changes: np.ndarray, th: RuleThresholds,
                        rng: np.random.Generator) -> tuple[int, Trend]:
    movers = [c for c in range(len(changes)) if abs(changes[c]) >= th.trend_move_min]
    if movers:
        ch = movers[int(rng.integers(len(movers)))]
        return ch, Trend.RISING if changes[ch] > 0 else Trend.FALLING
    stables = [c for c in range(len(changes)) if abs(changes[c]) <= th.trend_stable_max]
    if not stables:
        raise LabelMismatch("no channel clear of the trend gray zone")
    return stables[int(rng.integers(len(stables)))], Trend.STABLE


def _check_fault_consistency(report: RuleReport, scenario: FaultScenario):
    if report.verdict is not scenario.target:
        raise LabelMismatch(
            f"verdict {report.verdict.value} != scenario {scenario.target.value}")
    if scenario.target is not FaultTarget.NONE:
        expected = (FaultDirection.INCREASED if scenario.multiplier > 1
                    else FaultDirection.DECREASED)
        if report.direction is not expected:
            raise LabelMismatch("direction disagrees with the scenario multiplier")


def _generate_one(task: TaskKind, target: FaultTarget, sim_seed: int,
                  spec: DatasetSpec, ranges: dict) -> tuple[TimeSeriesWindow, RuleReport]:
    """Simulate one window for (task, target) and verify its labels."""
    cfg, th, m = spec.circuit, spec.thresholds, spec.m_steps
    rng = rng_for(sim_seed, "scenario")
    scenario = _sample_scenario(task, target, m, rng, ranges)

    if task is TaskKind.TREND_FORECAST:
        full = simulate(cfg, scenario, 2 * m, sim_seed)
        visible = TimeSeriesWindow(values=full.values[:m], config=cfg,
                                   scenario=scenario, seed=sim_seed)
        continuation = full.values[m:]
    else:
        visible = simulate(cfg, scenario, m, sim_seed)
        continuation = None

    report = analyze(visible, cfg, th)

    if task in (TaskKind.PRETRAIN_ANOMALY, *T.REASONING_TASKS):
        _check_fault_consistency(report, scenario)
    if task in (TaskKind.TREND_ANALYSIS, TaskKind.PRETRAIN_TEMPORAL):
        changes = clean_relative_changes(cfg, scenario, m)
        ch, expected = _pick_query_channel(changes, th, rng)
        if report.trend[ch] is not expected:
            raise LabelMismatch(f"channel {ch} trend {report.trend[ch]} != {expected}")
        visible.extra["query_channel"] = ch
    if task is TaskKind.TREND_FORECAST:
        changes = clean_relative_changes(cfg, scenario, m)
        ch, expected = _pick_query_channel(changes, th, rng)
        cont_amp = float(np.abs(continuation[:, ch]).max())
        cont_change = cont_amp / float(report.amp_first[ch]) - 1.0
        if forecast_label(cont_change, th.trend_threshold) is not expected:
            raise LabelMismatch("continuation trend disagrees with analytic expectation")
        visible.extra["query_channel"] = ch
        visible.extra["forecast_label"] = expected
        visible.extra["forecast_change"] = cont_change
    return visible, report


def render_sample(kind: TaskKind, window: TimeSeriesWindow, report: RuleReport,
                  seed: int, th: RuleThresholds | None = None) -> QASample:
    """Fill the kind's templates from the report; deterministic in its inputs."""
    th = th or RuleThresholds()
    cfg = window.config
    rng = rng_for(seed, "render")

    channel = window.extra.get("query_channel")
    question = pick_question(kind, rng, channel)

    if kind is TaskKind.TREND_ANALYSIS:
        if channel is None:
            raise T.TemplateSlotMissing("trend analysis needs extra['query_channel']")
        answer, conclusion = T.trend_analysis_answer(report, channel, th)
    elif kind is TaskKind.TREND_FORECAST:
        if channel is None or "forecast_label" not in window.extra:
            raise T.TemplateSlotMissing("trend forecast needs forecast extras")
        answer, conclusion = T.trend_forecast_answer(
            report, channel, window.extra["forecast_label"],
            window.extra["forecast_change"], th)
    elif kind is TaskKind.FAULT_JUDGEMENT:
        answer, conclusion = T.fault_judgement_answer(report, cfg, th)
    elif kind is TaskKind.FAULT_DIAGNOSIS:
        answer, conclusion = T.fault_diagnosis_answer(report, cfg, th)
    elif kind is TaskKind.FAULT_ANALYSIS:
        answer, conclusion = T.fault_analysis_answer(report, cfg, th)
    elif kind is TaskKind.PRETRAIN_ANOMALY:
        answer, conclusion = T.pretrain_anomaly_answer(report)
    elif kind is TaskKind.PRETRAIN_TEMPORAL:
        if channel is None:
            raise T.TemplateSlotMissing("temporal pre-training needs extra['query_channel']")
        answer, conclusion = T.pretrain_temporal_answer(report, channel, th)
    else:
        raise ValueError(f"unknown task kind {kind}")

    meta = window.scenario.to_meta()
    meta["seed"] = window.seed
    sample_id = window.sample_id or stable_id(window.seed, kind.value)
    return QASample(id=sample_id, task=kind, series=window.values,
                    question=question, answer=answer, conclusion=conclusion, meta=meta)


def build_dataset(spec: DatasetSpec) -> DatasetBundle:
    """Generate, label, render, and split the full dataset."""
    spec.validate()
    ranges = fault_multiplier_ranges(spec.circuit, spec.thresholds)

    total_requested = sum(n for per_task in spec.counts.values() for n in per_task.values())
    budget = max(1, int(np.ceil(spec.regen_budget * total_requested)))
    regenerations = 0

    # Group eval-task counts: generate each (task, target) pool once, then
    # cut it into train/val/test by id order.
    split_order = ("train", "val", "test")
    quotas = {}
    for task in T.EVAL_TASKS:
        per_split = [
            _largest_remainder(spec.counts.get(s, {}).get(task, 0), len(FAULT_TARGETS))
            for s in split_order
        ]
        for t_idx, target in enumerate(FAULT_TARGETS):
            quotas[(task, target)] = [per_split[s][t_idx] for s in range(len(split_order))]

    splits = {name: [] for name in ("pretrain", *split_order)}

    def make_samples(task, target, count, tag):
        nonlocal regenerations
        out = []
        for ordinal in range(count):
            for attempt in range(spec.max_attempts):
                sim_seed = derive_seed(spec.seed, tag, task.value, target.value,
                                       ordinal, attempt)
                try:
                    window, report = _generate_one(task, target, sim_seed, spec, ranges)
                except (AmbiguousVerdict, LabelMismatch):
                    regenerations += 1
                    if regenerations > budget:
                        raise RegenerationBudgetExceeded(
                            f"more than {budget} regenerations "
                            f"({spec.regen_budget:.0%} of {total_requested} samples)")
                    continue
                window.sample_id = stable_id(spec.seed, tag, task.value, target.value,
                                             ordinal, attempt)
                sample = render_sample(task, window, report, sim_seed, spec.thresholds)
                if sample.question:
                    sample.question = augment_question(
                        sample.question, derive_seed(sim_seed, "augment"))
                out.append(sample)
                break
            else:
                raise RegenerationBudgetExceeded(
                    f"sample {task.value}/{target.value}#{ordinal} exhausted "
                    f"{spec.max_attempts} attempts")
        return out

    for kind in PRETRAIN_KINDS:
        count = spec.counts.get("pretrain", {}).get(kind, 0)
        per_target = _largest_remainder(count, len(FAULT_TARGETS))
        for target, n in zip(FAULT_TARGETS, per_target):
            splits["pretrain"].extend(make_samples(kind, target, n, "pretrain"))

    for task in T.EVAL_TASKS:
        for target in FAULT_TARGETS:
            q = quotas[(task, target)]
            pool = make_samples(task, target, sum(q), "finetune")
            pool.sort(key=lambda s: s.id)
            cursor = 0
            for split_name, take in zip(split_order, q):
                splits[split_name].extend(pool[cursor:cursor + take])
                cursor += take

    for name in splits:
        splits[name].sort(key=lambda s: s.id)

    manifest = {
        "seed": spec.seed,
        "m_steps": spec.m_steps,
        "regenerations": regenerations,
        "counts": {
            name: {task.value: sum(1 for s in samples if s.task is task)
                   for task in (*PRETRAIN_KINDS, *T.EVAL_TASKS)
                   if any(s.task is task for s in samples)}
            for name, samples in splits.items()
        },
    }
    return DatasetBundle(
        pretrain=splits["pretrain"],
        finetune_train=splits["train"],
        finetune_val=splits["val"],
        finetune_test=splits["test"],
        manifest=manifest,
    )


def write_jsonl(samples: list, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for s in samples:
            f.write(json.dumps(s.to_json_obj(), ensure_ascii=False,
                               separators=(",", ":")) + "\n")


def read_jsonl(path) -> list:
    samples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                samples.append(QASample.from_json_obj(json.loads(line)))
    return samples


def write_bundle(bundle: DatasetBundle, out_dir) -> dict:
    """Write all four splits plus the manifest; returns file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in ("pretrain", "train", "val", "test"):
        p = out_dir / f"{name}.jsonl"
        write_jsonl(bundle.split(name), p)
        paths[name] = str(p)
    manifest_path = out_dir / "dataset_manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(bundle.manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    paths["manifest"] = str(manifest_path)
    return paths
