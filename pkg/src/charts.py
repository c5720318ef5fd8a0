"""
Static SVG figures: score and CV trends over temperature, score boxplots

Quartiles use linear interpolation between order statistics; whiskers reach
the furthest points within 1.5 x IQR of the box.
"""

import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

from src.config import COLORS, PERTURBATION_COLORS
from src.data_classes import (
    ConditionStats,
    FigureKind,
    FigureSpec,
    Metric,
    PerturbationKind,
    RunStats,
)
from src.errors import MissingSeries, MixedKeys, ReportIOError
from src.utils import format_temperature

logger = logging.getLogger(__name__)

# <text> elements and fixed element ids: same input, same bytes
SVG_RC = {
    "svg.fonttype": "none",
    "svg.hashsalt": "rag-temperature-bench",
    "font.family": "DejaVu Sans",
    "axes.edgecolor": COLORS["gray"],
    "axes.labelcolor": COLORS["text"],
    "text.color": COLORS["text"],
    "xtick.color": COLORS["text_muted"],
    "ytick.color": COLORS["text_muted"],
}

PANEL_WIDTH = 3.6
PANEL_HEIGHT = 3.0


def box_statistics(values: Sequence[float], whis: float = 1.5) -> Dict:
    """Box-plot statistics in the form ``Axes.bxp`` expects."""
    data = np.sort(np.asarray(values, dtype=np.float64))
    if data.size == 0:
        raise MissingSeries("no values for box statistics")
    q1, med, q3 = np.percentile(data, [25, 50, 75], method="linear")
    iqr = q3 - q1
    low, high = q1 - whis * iqr, q3 + whis * iqr
    inside = data[(data >= low) & (data <= high)]
    return {
        "med": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whislo": float(inside.min()),
        "whishi": float(inside.max()),
        "fliers": data[(data < low) | (data > high)],
        "mean": float(data.mean()),
    }


def _figure(n_panels: int) -> Tuple[Figure, List]:
    fig = Figure(figsize=(PANEL_WIDTH * n_panels, PANEL_HEIGHT))
    axes = fig.subplots(1, n_panels, sharey=True, squeeze=False)[0]
    fig.set_facecolor("white")
    return fig, list(axes)


def _save(fig: Figure, path: str) -> Path:
    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ReportIOError(f"cannot write figure {out}: {e}") from e
    logger.info("Wrote %s", out)
    return out


def _metric_label(metric: Metric) -> str:
    return {Metric.BERTSCORE_F1: "BERTScore F1", Metric.EMBED_COSINE: "Embedding cosine"}.get(metric, metric.value)


def _select(
    spec: FigureSpec, stats: Iterable[ConditionStats]
) -> Dict[Tuple[str, PerturbationKind], Dict[float, ConditionStats]]:
    """Series per (model, perturbation): temperature -> stats."""
    series: Dict[Tuple[str, PerturbationKind], Dict[float, ConditionStats]] = defaultdict(dict)
    for c in stats:
        k = c.key
        if c.metric != spec.metric or k.model not in spec.models or k.perturbation not in spec.perturbations:
            continue
        if spec.question_type is not None and k.question_type != spec.question_type:
            continue
        if k.temperature in series[(k.model, k.perturbation)]:
            raise MixedKeys(f"{k.model}/{k.perturbation.value} at T={k.temperature} appears twice; set question_type")
        series[(k.model, k.perturbation)][k.temperature] = c

    if not spec.allow_gaps:
        for model in spec.models:
            for kind in spec.perturbations:
                have = series.get((model, kind), {})
                missing = [t for t in spec.temperatures if t not in have]
                if missing:
                    raise MissingSeries(f"{model}/{kind.value} has no {spec.metric.value} data at T={missing}")
    return series


def _trend_axes(ax, model: str, spec: FigureSpec, ylabel: Optional[str]) -> None:
    ax.set_title(model, fontsize=9)
    ax.set_xlabel("Temperature")
    if ylabel:
        ax.set_ylabel(ylabel)
    ax.set_xticks(spec.temperatures[:: max(1, len(spec.temperatures) // 6)])
    ax.grid(True, color=COLORS["gray_light"], linewidth=0.5)


def temperature_trend(spec: FigureSpec, stats: Iterable[ConditionStats]) -> Path:
    """Mean score per perturbation over temperature with a +/- std band."""
    series = _select(spec, stats)
    with mpl.rc_context(SVG_RC):
        fig, axes = _figure(len(spec.models))
        for i, (ax, model) in enumerate(zip(axes, spec.models)):
            for kind in spec.perturbations:
                points = series.get((model, kind), {})
                temps = sorted(points)
                if not temps:
                    continue
                mean = np.array([points[t].mean_of_means for t in temps])
                std = np.array([points[t].mean_of_stds for t in temps])
                color = PERTURBATION_COLORS[kind]
                ax.plot(temps, mean, color=color, linewidth=1.5, label=kind.value)
                ax.fill_between(temps, mean - std, mean + std, color=color, alpha=0.15, linewidth=0)
            _trend_axes(ax, model, spec, _metric_label(spec.metric) if i == 0 else None)
        axes[0].legend(fontsize=7, loc="lower left")
        fig.suptitle(spec.title or f"{_metric_label(spec.metric)} vs temperature", fontsize=10)
        return _save(fig, spec.output_path)


def cv_trend(
    spec: FigureSpec,
    stats: Iterable[ConditionStats],
    baselines: Dict[str, float],
) -> Path:
    """mean_cv per perturbation over temperature; baseline CV per model as a dotted line."""
    series = _select(spec, stats)
    with mpl.rc_context(SVG_RC):
        fig, axes = _figure(len(spec.models))
        for i, (ax, model) in enumerate(zip(axes, spec.models)):
            for kind in spec.perturbations:
                points = series.get((model, kind), {})
                temps = sorted(points)
                if temps:
                    ax.plot(
                        temps,
                        [points[t].mean_cv for t in temps],
                        color=PERTURBATION_COLORS[kind],
                        linewidth=1.5,
                        label=kind.value,
                    )
            if model in baselines:
                value = baselines[model]
                ax.axhline(value, color=COLORS["gray"], linestyle=":", linewidth=1.2)
                ax.text(
                    0.03,
                    0.97,
                    f"baseline CV: {value:.3f}",
                    transform=ax.transAxes,
                    ha="left",
                    va="top",
                    fontsize=8,
                    color=COLORS["text_muted"],
                )
            _trend_axes(ax, model, spec, "Coefficient of variation" if i == 0 else None)
        axes[0].legend(fontsize=7, loc="upper right")
        fig.suptitle(spec.title or f"CV of {_metric_label(spec.metric)} vs temperature", fontsize=10)
        return _save(fig, spec.output_path)


def score_boxplot(spec: FigureSpec, run_stats: Iterable[RunStats]) -> Path:
    """Per-perturbation boxes of per-sample mean scores at each configured temperature."""
    if not spec.temperatures:
        raise MissingSeries("score boxplot needs explicit temperatures")
    values: Dict[Tuple[str, float, PerturbationKind], List[float]] = defaultdict(list)
    for s in run_stats:
        k = s.key
        if s.metric != spec.metric or k.model not in spec.models or k.perturbation not in spec.perturbations:
            continue
        if spec.question_type is not None and k.question_type != spec.question_type:
            continue
        values[(k.model, k.temperature, k.perturbation)].append(s.mean)

    with mpl.rc_context(SVG_RC):
        fig, axes = _figure(len(spec.models))
        width = 0.8 / max(1, len(spec.perturbations))
        for i, (ax, model) in enumerate(zip(axes, spec.models)):
            for j, kind in enumerate(spec.perturbations):
                boxes, positions = [], []
                for x, t in enumerate(spec.temperatures):
                    data = values.get((model, t, kind))
                    if not data:
                        if spec.allow_gaps:
                            continue
                        raise MissingSeries(f"{model}/{kind.value} has no per-sample scores at T={t}")
                    boxes.append(box_statistics(data))
                    positions.append(x + (j - (len(spec.perturbations) - 1) / 2) * width)
                if not boxes:
                    continue
                color = PERTURBATION_COLORS[kind]
                ax.bxp(
                    boxes,
                    positions=positions,
                    widths=width * 0.9,
                    showfliers=True,
                    patch_artist=True,
                    boxprops={"facecolor": color, "alpha": 0.5, "edgecolor": color},
                    medianprops={"color": COLORS["text"]},
                    flierprops={"marker": "o", "markersize": 3, "markeredgecolor": color},
                )
                ax.plot([], [], color=color, linewidth=6, alpha=0.5, label=kind.value)
            ax.set_xticks(range(len(spec.temperatures)))
            ax.set_xticklabels([f"T={format_temperature(t)}" for t in spec.temperatures])
            ax.set_title(model, fontsize=9)
            if i == 0:
                ax.set_ylabel(_metric_label(spec.metric))
        axes[0].legend(fontsize=7, loc="lower left")
        fig.suptitle(spec.title or f"{_metric_label(spec.metric)} distribution", fontsize=10)
        return _save(fig, spec.output_path)


def render_figure(
    spec: FigureSpec,
    condition_stats: Sequence[ConditionStats] = (),
    run_stats: Sequence[RunStats] = (),
    baselines: Optional[Dict[str, float]] = None,
) -> Path:
    if not spec.models or not spec.perturbations:
        raise MissingSeries("figure needs at least one model and one perturbation")
    if spec.kind == FigureKind.TEMPERATURE_TREND:
        return temperature_trend(spec, condition_stats)
    if spec.kind == FigureKind.CV_TREND:
        return cv_trend(spec, condition_stats, baselines or {})
    if spec.kind == FigureKind.SCORE_BOXPLOT:
        return score_boxplot(spec, run_stats)
    raise ValueError(f"unknown figure kind {spec.kind}")
