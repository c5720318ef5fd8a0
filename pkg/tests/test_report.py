import json

import pytest

from src.charts import box_statistics, render_figure
from src.data_classes import (
    ConditionKey,
    ConditionStats,
    FigureKind,
    FigureSpec,
    Metric,
    PerturbationKind,
    QuestionType,
    RunStats,
    ScoreRecord,
)
from src.errors import MissingSeries, MixedKeys
from src.report import emit_baseline_csv, emit_scores_csv, read_scores_csv, write_artifact_index

ORIG = PerturbationKind.ORIGINAL
REMOVAL = PerturbationKind.SENTENCE_REMOVAL
BRIDGE = QuestionType.BRIDGE
TEMPS = [0.0, 1.0, 2.0]

HEADER = "sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,value,cached\n"


def _record(sample_id, t, run, value, model="m", kind=ORIG):
    return ScoreRecord(sample_id, model, t, kind, BRIDGE, 2, run, Metric.F1, value)


def test_empty_scores_csv(tmp_path):
    path = tmp_path / "scores.csv"
    assert emit_scores_csv([], path) == 0
    assert path.read_text(encoding="utf-8") == HEADER


def test_scores_csv_canonical_order(tmp_path):
    path = tmp_path / "scores.csv"
    records = [_record("b", 0.2, 0, 0.5), _record("a", 0.2, 1, 1.0), _record("a", 0.0, 0, 1 / 3)]
    assert emit_scores_csv(records, path) == 3
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1:] == [
        "a,m,0.00,Original,bridge,2,0,f1,0.333333,false",
        "a,m,0.20,Original,bridge,2,1,f1,1.000000,false",
        "b,m,0.20,Original,bridge,2,0,f1,0.500000,false",
    ]


def test_scores_csv_is_byte_stable(tmp_path):
    records = [_record(s, t, r, 0.25 * r) for s in "abc" for t in TEMPS for r in range(3)]
    emit_scores_csv(records, tmp_path / "one.csv")
    emit_scores_csv(list(reversed(records)), tmp_path / "two.csv")
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_read_scores_csv(tmp_path):
    emit_scores_csv([_record("a", 0.2, 1, 0.5)], tmp_path / "scores.csv")
    (record,) = read_scores_csv(tmp_path / "scores.csv")
    assert record == _record("a", 0.2, 1, 0.5)


def test_baseline_csv(tmp_path):
    emit_baseline_csv({("m", BRIDGE, Metric.F1): 0.05}, tmp_path / "baseline_cv.csv")
    assert (tmp_path / "baseline_cv.csv").read_text().splitlines() == [
        "model,question_type,metric,baseline_cv",
        "m,bridge,f1,0.050000",
    ]


def test_box_statistics_median():
    stats = box_statistics([round(0.1 * i, 1) for i in range(1, 11)])
    assert stats["med"] == pytest.approx(0.55)
    assert stats["q1"] == pytest.approx(0.325)
    assert stats["q3"] == pytest.approx(0.775)
    assert (stats["whislo"], stats["whishi"]) == (0.1, 1.0)
    assert len(stats["fliers"]) == 0


def test_box_statistics_flier():
    stats = box_statistics([0.5, 0.5, 0.5, 0.5, 0.0])
    assert list(stats["fliers"]) == [0.0]


def _condition(t, kind=ORIG, qt=BRIDGE, mean=0.8, std=0.0, cv=0.0):
    return ConditionStats(ConditionKey("m", t, kind, qt), Metric.F1, 4, mean, std, cv, cv)


def _spec(tmp_path, kind, name="fig.svg", **kwargs):
    base = dict(
        kind=kind,
        output_path=str(tmp_path / name),
        metric=Metric.F1,
        question_type=BRIDGE,
        models=["m"],
        perturbations=[ORIG, REMOVAL],
        temperatures=TEMPS,
    )
    base.update(kwargs)
    return FigureSpec(**base)


def test_cv_trend_baseline_annotation(tmp_path):
    stats = [_condition(t, kind, cv=0.05) for t in TEMPS for kind in (ORIG, REMOVAL)]
    path = render_figure(_spec(tmp_path, FigureKind.CV_TREND), condition_stats=stats, baselines={"m": 0.05})
    svg = path.read_text(encoding="utf-8")
    assert "baseline CV: 0.050" in svg
    assert svg.lstrip().startswith("<?xml")


def test_temperature_trend_constant_stats_is_deterministic(tmp_path):
    stats = [_condition(t, kind) for t in TEMPS for kind in (ORIG, REMOVAL)]
    first = render_figure(_spec(tmp_path, FigureKind.TEMPERATURE_TREND, "a.svg"), condition_stats=stats)
    second = render_figure(_spec(tmp_path, FigureKind.TEMPERATURE_TREND, "b.svg"), condition_stats=stats)
    assert first.read_bytes() == second.read_bytes()


def test_missing_point_needs_allow_gaps(tmp_path):
    stats = [_condition(t, kind) for t in TEMPS for kind in (ORIG, REMOVAL) if (t, kind) != (2.0, REMOVAL)]
    with pytest.raises(MissingSeries):
        render_figure(_spec(tmp_path, FigureKind.TEMPERATURE_TREND), condition_stats=stats)
    assert render_figure(_spec(tmp_path, FigureKind.TEMPERATURE_TREND, allow_gaps=True), condition_stats=stats).exists()


def test_mixed_question_types_rejected(tmp_path):
    stats = [_condition(t, kind, qt) for t in TEMPS for kind in (ORIG, REMOVAL) for qt in QuestionType]
    with pytest.raises(MixedKeys):
        render_figure(_spec(tmp_path, FigureKind.TEMPERATURE_TREND, question_type=None), condition_stats=stats)


def test_score_boxplot(tmp_path):
    run_stats = [
        RunStats(f"s{i}", ConditionKey("m", t, kind, BRIDGE), Metric.F1, 3, 0.1 * i, 0.0, 0.0)
        for i in range(1, 11)
        for t in TEMPS
        for kind in (ORIG, REMOVAL)
    ]
    path = render_figure(_spec(tmp_path, FigureKind.SCORE_BOXPLOT), run_stats=run_stats)
    assert "T=1.0" in path.read_text(encoding="utf-8")


def test_artifact_index(tmp_path):
    (tmp_path / "figures").mkdir()
    (tmp_path / "figures" / "x.svg").write_text("<svg/>")
    (tmp_path / "scores.csv").write_text(HEADER)
    index = write_artifact_index([tmp_path / "scores.csv", tmp_path / "figures" / "x.svg"], tmp_path)
    assert sorted(index) == ["figures/x.svg", "scores.csv"]
    assert json.loads((tmp_path / "artifacts.json").read_text()) == index
