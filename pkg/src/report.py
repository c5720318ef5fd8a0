"""
Byte-stable CSV tables and the artifact index
"""

import io
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import pandas as pd

from src.data_classes import (
    ConditionStats,
    Metric,
    PerturbationKind,
    QuestionType,
    RunStats,
    ScoreRecord,
)
from src.errors import ReportIOError
from src.stats import SCORE_COLUMNS, scores_frame
from src.utils import atomic_write_json, atomic_write_text, file_digest

logger = logging.getLogger(__name__)

SCORE_SORT = ["model", "temperature", "perturbation", "question_type", "sample_id", "run_index", "metric"]
FLOAT_FORMAT = "%.6f"

RUN_STATS_COLUMNS = [
    "model", "temperature", "perturbation", "question_type", "metric",
    "sample_id", "n_runs", "mean", "std", "cv",
]
CONDITION_STATS_COLUMNS = [
    "model", "temperature", "perturbation", "question_type", "metric",
    "n_samples", "mean_of_means", "mean_of_stds", "mean_cv", "condition_cv",
]
BASELINE_COLUMNS = ["model", "question_type", "metric", "baseline_cv"]


def _write_frame(df: pd.DataFrame, path: Union[str, Path]) -> None:
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    try:
        atomic_write_text(path, buf.getvalue())
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    logger.info("Wrote %d rows to %s", len(df), path)


def _temperature_column(df: pd.DataFrame) -> pd.DataFrame:
    df["temperature"] = df["temperature"].map(lambda t: f"{t:.2f}")
    return df


def emit_scores_csv(records: Iterable[ScoreRecord], path: Union[str, Path]) -> int:
    """Write scores.csv in canonical row order; returns the number of data rows."""
    df = scores_frame(records)
    df = df.sort_values(SCORE_SORT, kind="mergesort").reset_index(drop=True)
    df = _temperature_column(df)
    df["cached"] = df["cached"].map(lambda c: "true" if c else "false")
    _write_frame(df, path)
    return len(df)


def read_scores_csv(path: Union[str, Path]) -> List[ScoreRecord]:
    try:
        df = pd.read_csv(path, dtype={"sample_id": str, "model": str})
    except FileNotFoundError as e:
        raise ReportIOError(f"scores file not found: {path}") from e
    missing = set(SCORE_COLUMNS) - set(df.columns)
    if missing:
        raise ReportIOError(f"{path} lacks columns {sorted(missing)}")
    return [
        ScoreRecord(
            sample_id=row.sample_id,
            model=row.model,
            temperature=float(row.temperature),
            perturbation=PerturbationKind(row.perturbation),
            question_type=QuestionType(row.question_type),
            fact_count=int(row.fact_count),
            run_index=int(row.run_index),
            metric=Metric(row.metric),
            value=float(row.value),
            cached=str(row.cached).lower() == "true",
        )
        for row in df.itertuples(index=False)
    ]


def _key_fields(key) -> Dict:
    return {
        "model": key.model,
        "temperature": key.temperature,
        "perturbation": key.perturbation.value,
        "question_type": key.question_type.value,
    }


def emit_run_stats_csv(stats: Sequence[RunStats], path: Union[str, Path]) -> int:
    rows = [
        {**_key_fields(s.key), "metric": s.metric.value, "sample_id": s.sample_id,
         "n_runs": s.n_runs, "mean": s.mean, "std": s.std, "cv": s.cv}
        for s in stats
    ]
    df = pd.DataFrame(rows, columns=RUN_STATS_COLUMNS)
    df = df.sort_values(RUN_STATS_COLUMNS[:6], kind="mergesort")
    _write_frame(_temperature_column(df), path)
    return len(df)


def emit_condition_stats_csv(stats: Sequence[ConditionStats], path: Union[str, Path]) -> int:
    rows = [
        {**_key_fields(c.key), "metric": c.metric.value, "n_samples": c.n_samples,
         "mean_of_means": c.mean_of_means, "mean_of_stds": c.mean_of_stds,
         "mean_cv": c.mean_cv, "condition_cv": c.condition_cv}
        for c in stats
    ]
    df = pd.DataFrame(rows, columns=CONDITION_STATS_COLUMNS)
    df = df.sort_values(CONDITION_STATS_COLUMNS[:5], kind="mergesort")
    _write_frame(_temperature_column(df), path)
    return len(df)


def emit_baseline_csv(baselines: Dict[Tuple[str, QuestionType, Metric], float], path: Union[str, Path]) -> int:
    rows = [
        {"model": model, "question_type": qt.value, "metric": metric.value, "baseline_cv": value}
        for (model, qt, metric), value in baselines.items()
    ]
    df = pd.DataFrame(rows, columns=BASELINE_COLUMNS).sort_values(BASELINE_COLUMNS[:3], kind="mergesort")
    _write_frame(df, path)
    return len(df)


def write_artifact_index(paths: Iterable[Union[str, Path]], out_dir: Union[str, Path]) -> Dict[str, str]:
    """artifacts.json: path relative to out_dir -> sha256 of the file."""
    out_dir = Path(out_dir)
    index = {}
    for p in sorted(Path(p) for p in paths):
        try:
            name = str(p.relative_to(out_dir))
        except ValueError:
            name = str(p)
        index[name] = file_digest(p)
    try:
        atomic_write_json(out_dir / "artifacts.json", index)
    except OSError as e:
        raise ReportIOError(f"cannot write artifact index: {e}") from e
    return index
