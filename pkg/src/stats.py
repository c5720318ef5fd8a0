"""
Run-to-run statistics: per-sample mean/std/CV, per-condition aggregates,
baseline CV and fragile-sample selection.

Standard deviations use the sample (n - 1) denominator. CV is computed per
sample first and then averaged (``mean_cv``); the condition-level ratio
``mean_of_stds / mean_of_means`` is kept alongside as ``condition_cv``.
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.data_classes import (
    ConditionKey,
    ConditionStats,
    Metric,
    PerturbationKind,
    QuestionType,
    RunStats,
    ScoreRecord,
)
from src.errors import EmptyGroup, MixedKeys, NoComparablePairs, NonBaselineEntry, TooFewRuns, ZeroMean

logger = logging.getLogger(__name__)

SCORE_COLUMNS = [
    "sample_id",
    "model",
    "temperature",
    "perturbation",
    "question_type",
    "fact_count",
    "run_index",
    "metric",
    "value",
    "cached",
]


def per_sample_stats(
    scores: Sequence[float],
    sample_id: str,
    key: ConditionKey,
    metric: Metric = Metric.BERTSCORE_F1,
) -> RunStats:
    """Mean, sample std and CV of one sample's scores across repeated runs."""
    values = np.asarray(scores, dtype=np.float64)
    if values.size < 2:
        raise TooFewRuns(f"{sample_id}: {values.size} run(s), at least 2 required")
    if np.any((values < 0) | (values > 1)):
        raise ValueError(f"{sample_id}: scores outside [0, 1]")

    if values.min() == values.max():
        # identical runs: exact zero spread, no rounding residue
        mean, std = float(values[0]), 0.0
    else:
        mean, std = float(values.mean()), float(values.std(ddof=1))

    if mean == 0:
        if std != 0:
            raise ZeroMean(f"{sample_id}: mean is 0 with std {std}")
        cv = 0.0
    else:
        cv = std / mean
    return RunStats(sample_id=sample_id, key=key, metric=metric, n_runs=int(values.size), mean=mean, std=std, cv=cv)


def aggregate_condition(stats: Sequence[RunStats]) -> ConditionStats:
    if not stats:
        raise EmptyGroup("no per-sample stats to aggregate")
    key, metric = stats[0].key, stats[0].metric
    for s in stats:
        if s.key != key or s.metric != metric:
            raise MixedKeys(f"cannot aggregate {s.key}/{s.metric.value} with {key}/{metric.value}")

    mean_of_means = float(np.mean([s.mean for s in stats]))
    mean_of_stds = float(np.mean([s.std for s in stats]))
    mean_cv = float(np.mean([s.cv for s in stats]))
    condition_cv = mean_of_stds / mean_of_means if mean_of_means > 0 else 0.0
    return ConditionStats(
        key=key,
        metric=metric,
        n_samples=len(stats),
        mean_of_means=mean_of_means,
        mean_of_stds=mean_of_stds,
        mean_cv=mean_cv,
        condition_cv=condition_cv,
    )


def baseline_cv(condition_stats: Sequence[ConditionStats]) -> float:
    """Average mean_cv of the Original condition over the temperature grid."""
    if not condition_stats:
        raise EmptyGroup("no baseline entries")
    first = condition_stats[0]
    for c in condition_stats:
        if c.key.perturbation != PerturbationKind.ORIGINAL:
            raise NonBaselineEntry(f"{c.key.perturbation.value} entry in baseline input")
        if (c.key.model, c.key.question_type, c.metric) != (first.key.model, first.key.question_type, first.metric):
            raise MixedKeys("baseline entries must share model, question type and metric")
    return float(np.mean([c.mean_cv for c in condition_stats]))


def fragile_samples(
    run_stats: Iterable[RunStats],
    model: str,
    temperature: float,
    question_type: QuestionType,
    perturbation: PerturbationKind,
    metric: Optional[Metric] = None,
) -> Tuple[str, float]:
    """Sample with the largest drop from Original to ``perturbation``.

    Ties go to the lexicographically smallest sample id.
    """
    original: Dict[str, float] = {}
    perturbed: Dict[str, float] = {}
    metrics = set()
    for s in run_stats:
        k = s.key
        if k.model != model or k.question_type != question_type or abs(k.temperature - temperature) > 1e-9:
            continue
        if metric is not None and s.metric != metric:
            continue
        if k.perturbation == PerturbationKind.ORIGINAL:
            original[s.sample_id] = s.mean
        elif k.perturbation == perturbation:
            perturbed[s.sample_id] = s.mean
        else:
            continue
        metrics.add(s.metric)

    if len(metrics) > 1:
        raise MixedKeys(f"run stats span several metrics: {sorted(m.value for m in metrics)}")
    gaps = [(original[sid] - perturbed[sid], sid) for sid in original.keys() & perturbed.keys()]
    if not gaps:
        raise NoComparablePairs(
            f"no sample has both Original and {perturbation.value} at {model}, T={temperature}, {question_type.value}"
        )
    gap, sample_id = min(gaps, key=lambda g: (-g[0], g[1]))
    return sample_id, gap


# Table-level helpers


def scores_frame(records: Iterable[ScoreRecord]) -> pd.DataFrame:
    """ScoreRecords as a DataFrame in canonical column order (enums as strings)."""
    rows = [
        {
            "sample_id": r.sample_id,
            "model": r.model,
            "temperature": r.temperature,
            "perturbation": r.perturbation.value,
            "question_type": r.question_type.value,
            "fact_count": r.fact_count,
            "run_index": r.run_index,
            "metric": r.metric.value,
            "value": r.value,
            "cached": r.cached,
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


def compute_run_stats(records: Iterable[ScoreRecord]) -> List[RunStats]:
    """Per-sample stats for every (sample, condition, metric) with at least two runs."""
    groups: Dict[Tuple, List[float]] = defaultdict(list)
    for r in records:
        key = ConditionKey(r.model, r.temperature, r.perturbation, r.question_type)
        groups[(r.sample_id, key, r.metric)].append(r.value)

    out = []
    skipped = 0
    for (sample_id, key, metric), values in groups.items():
        if len(values) < 2:
            skipped += 1
            continue
        out.append(per_sample_stats(values, sample_id, key, metric))
    if skipped:
        logger.warning("Skipped %d sample groups with fewer than 2 runs", skipped)
    return sorted(out, key=_run_sort_key)


def compute_condition_stats(run_stats: Iterable[RunStats]) -> List[ConditionStats]:
    groups: Dict[Tuple, List[RunStats]] = defaultdict(list)
    for s in run_stats:
        groups[(s.key, s.metric)].append(s)
    return sorted((aggregate_condition(g) for g in groups.values()), key=_condition_sort_key)


def compute_baselines(condition_stats: Iterable[ConditionStats]) -> Dict[Tuple[str, QuestionType, Metric], float]:
    """baseline_cv per (model, question_type, metric)."""
    groups: Dict[Tuple, List[ConditionStats]] = defaultdict(list)
    for c in condition_stats:
        if c.key.perturbation == PerturbationKind.ORIGINAL:
            groups[(c.key.model, c.key.question_type, c.metric)].append(c)
    return {k: baseline_cv(v) for k, v in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value, kv[0][2].value))}


def _key_tuple(key: ConditionKey) -> Tuple:
    return (key.model, key.temperature, key.perturbation.value, key.question_type.value)


def _run_sort_key(s: RunStats) -> Tuple:
    return (*_key_tuple(s.key), s.metric.value, s.sample_id)


def _condition_sort_key(c: ConditionStats) -> Tuple:
    return (*_key_tuple(c.key), c.metric.value)
