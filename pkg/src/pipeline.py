"""
Condition expansion and resumable, staged benchmark orchestration

Stages and the files they leave in the output directory:

    sample    samples.json
    perturb   perturbed.jsonl
    refprep   references.json
    generate  generations.jsonl (append-only journal), manifest.json
    score     scores.csv
    stats     run_stats.csv, condition_stats.csv, baseline_cv.csv
    report    figures/*.svg, artifacts.json
    fragile   fragile.csv

Generation results are matched to work items by item id, never by completion
order. Every stage after generation is a deterministic reduction.
"""

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
import requests
from tqdm import tqdm

from src.api import ChatBackend, HttpChatBackend, HttpClient, generate
from src.cache import FileCache
from src.charts import render_figure
from src.config import QUESTION_TYPES, RNG_ALGORITHM, RunConfig
from src.data_classes import (
    ConditionKey,
    ConditionStats,
    FigureKind,
    FigureSpec,
    GenerationRequest,
    ItemStatus,
    Metric,
    PerturbationKind,
    PerturbedSample,
    QASample,
    ReferenceAnswer,
    ReferenceSource,
    RunManifest,
    RunStats,
    SamplePlan,
    ScoreRecord,
    WorkItem,
)
from src.dataset import dump_dataset, load_dataset, stratified_sample
from src.embeddings import HttpTokenEmbedder, Scorer, SentenceEmbedder, SidecarTokenEmbedder
from src.errors import (
    DatasetNotFound,
    HarnessError,
    InvalidConfig,
    ManifestMismatch,
    MissingSeries,
    NoComparablePairs,
)
from src.lexicon import load_lexicon
from src.mock_llm import MockChatBackend
from src.perturb import TitleEntityDetector, apply_perturbation, evidence_context
from src.prompts import build_rag_prompt
from src.refproc import generate_references, load_overrides
from src.report import (
    emit_baseline_csv,
    emit_condition_stats_csv,
    emit_run_stats_csv,
    emit_scores_csv,
    read_scores_csv,
    write_artifact_index,
)
from src.stats import compute_baselines, compute_condition_stats, compute_run_stats, fragile_samples
from src.utils import atomic_write_json, atomic_write_text, canonical_json, derive_seed

logger = logging.getLogger(__name__)

SAMPLES_FILE = "samples.json"
PERTURBED_FILE = "perturbed.jsonl"
REFERENCES_FILE = "references.json"
JOURNAL_FILE = "generations.jsonl"
MANIFEST_FILE = "manifest.json"
SCORES_FILE = "scores.csv"
RUN_STATS_FILE = "run_stats.csv"
CONDITION_STATS_FILE = "condition_stats.csv"
BASELINE_FILE = "baseline_cv.csv"
FRAGILE_FILE = "fragile.csv"
FIGURES_DIR = "figures"

# journal entries between manifest checkpoints
MANIFEST_SAVE_EVERY = 50


# Condition matrix


def condition_groups(config: RunConfig) -> List[ConditionKey]:
    config.validate()
    return [
        ConditionKey(model, temperature, kind, qt)
        for model in config.models
        for temperature in config.temperatures
        for kind in config.perturbations
        for qt in QUESTION_TYPES
    ]


def expand_conditions(config: RunConfig, samples: Sequence[QASample] = ()) -> Tuple[int, List[WorkItem]]:
    """(condition-group count, work items) for ``config`` over ``samples``.

    Items are ordered by sample, model, temperature, perturbation, run.
    """
    groups = len(condition_groups(config))
    items = [
        WorkItem(
            sample_id=sample.id,
            question_type=sample.question_type,
            fact_count=sample.fact_count,
            model=model,
            temperature=temperature,
            perturbation=kind,
            run_index=run,
        )
        for sample in samples
        for model in config.models
        for temperature in config.temperatures
        for kind in config.perturbations
        for run in range(config.runs_per_condition)
    ]
    return groups, items


# Manifest


def new_manifest(config: RunConfig, items: Iterable[WorkItem]) -> RunManifest:
    return RunManifest(
        config_digest=config.digest(),
        rng=RNG_ALGORITHM,
        config=config.to_dict(),
        items={item.item_id: ItemStatus.PENDING.value for item in items},
    )


def save_manifest(manifest: RunManifest, path: Union[str, Path]) -> None:
    atomic_write_json(path, asdict(manifest))


def load_manifest(path: Union[str, Path]) -> RunManifest:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ManifestMismatch(f"manifest not found: {path}") from e
    return RunManifest(**raw)


# Persistence helpers


def perturbed_to_record(perturbed: PerturbedSample) -> Dict:
    return json.loads(canonical_json(asdict(perturbed)))


def references_to_json(references: Dict[str, ReferenceAnswer]) -> Dict:
    return {
        sid: {"text": r.text, "source": r.source.value, "raw": r.raw}
        for sid, r in sorted(references.items())
    }


def load_references(path: Union[str, Path]) -> Dict[str, ReferenceAnswer]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise HarnessError(f"references not found: {path}; run refprep first") from e
    return {
        sid: ReferenceAnswer(sid, entry["text"], ReferenceSource(entry["source"]), entry.get("raw"))
        for sid, entry in raw.items()
    }


class BenchmarkRunner:
    """Runs the stages for one RunConfig inside its output directory.

    ``backends`` maps model names to ready backends and takes precedence over
    the configured endpoints.
    """

    def __init__(
        self,
        config: RunConfig,
        session: Optional[requests.Session] = None,
        backends: Optional[Dict[str, ChatBackend]] = None,
        progress: Optional[bool] = None,
    ):
        self.config = config.validate()
        self.out_dir = Path(config.output_dir)
        self.cache = FileCache(config.cache_dir)
        self.session = session
        self.progress = progress
        self._backends: Dict[str, ChatBackend] = dict(backends or {})
        self._lock = threading.Lock()
        self.backend_calls = 0

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _bar(self, iterable, **kwargs):
        # None lets tqdm hide the bar when stderr is not a terminal
        disable = None if self.progress is None else not self.progress
        return tqdm(iterable, disable=disable, **kwargs)

    # Backends

    def backend(self, model: str) -> ChatBackend:
        with self._lock:
            if model not in self._backends:
                if self.config.mock:
                    self._backends[model] = MockChatBackend()
                else:
                    self._backends[model] = HttpChatBackend(self.config.backend_for(model), session=self.session)
            return self._backends[model]

    def reference_backend(self) -> ChatBackend:
        ref = self.config.reference
        if self.config.mock or ref.backend is None or ref.model in self._backends:
            return self.backend(ref.model)
        if ref.backend not in self.config.backends:
            raise InvalidConfig(f"reference backend {ref.backend!r} is not configured")
        return HttpChatBackend(self.config.backends[ref.backend], session=self.session)

    def build_scorer(self) -> Scorer:
        scorers = self.config.scorers
        token_embedder = None
        if scorers.token_embedder is not None:
            te = scorers.token_embedder
            if te.kind == "sidecar":
                if not te.path:
                    raise InvalidConfig("sidecar token embedder needs a path")
                token_embedder = SidecarTokenEmbedder(te.path)
            elif te.kind == "http":
                api_key = None
                url = te.url
                if te.backend is not None:
                    if te.backend not in self.config.backends:
                        raise InvalidConfig(f"token embedder backend {te.backend!r} is not configured")
                    backend = self.config.backends[te.backend]
                    url = url or backend.base_url
                    api_key = os.environ.get(backend.api_key_env)
                if not url:
                    raise InvalidConfig("http token embedder needs a url or a backend")
                client = HttpClient(url, api_key=api_key, session=self.session, name="token-embedder")
                token_embedder = HttpTokenEmbedder(client, te.path or "/token-embeddings", te.model, self.cache)
            else:
                raise InvalidConfig(f"unknown token embedder kind {te.kind!r}")

        sentence_embedder = None
        if scorers.sentence_embedder is not None:
            se = scorers.sentence_embedder
            if se.backend not in self.config.backends:
                raise InvalidConfig(f"sentence embedder backend {se.backend!r} is not configured")
            source = HttpChatBackend(self.config.backends[se.backend], session=self.session)
            sentence_embedder = SentenceEmbedder(source, se.model, self.cache)
        return Scorer(self.config.metrics, token_embedder, sentence_embedder)

    # Stage: sample

    def sample(self) -> List[QASample]:
        if not self.config.dataset:
            raise DatasetNotFound("no dataset configured")
        pool = load_dataset(self.config.dataset, strict=self.config.strict)
        samples = stratified_sample(pool, SamplePlan(per_cell=self.config.per_cell, seed=self.config.seed))
        dump_dataset(samples, self.path(SAMPLES_FILE))
        logger.info("Sampled %d questions into %s", len(samples), self.path(SAMPLES_FILE))
        return samples

    def load_samples(self) -> List[QASample]:
        if self.path(SAMPLES_FILE).exists():
            return load_dataset(self.path(SAMPLES_FILE), strict=True)
        return self.sample()

    # Stage: perturb

    def perturb(
        self, samples: Sequence[QASample]
    ) -> Tuple[Dict[Tuple[str, PerturbationKind], PerturbedSample], Dict[Tuple[str, PerturbationKind], str]]:
        """Perturbed samples per (sample id, kind) and an error per failed pair."""
        config = self.config
        lexicon = load_lexicon(config.lexicon) if config.lexicon else None
        detector = TitleEntityDetector()
        perturbed: Dict[Tuple[str, PerturbationKind], PerturbedSample] = {}
        failures: Dict[Tuple[str, PerturbationKind], str] = {}
        lines = []
        for sample in samples:
            for kind in config.perturbations:
                try:
                    p = apply_perturbation(
                        sample,
                        kind,
                        derive_seed(config.seed, "perturb", sample.id, kind),
                        lexicon=lexicon,
                        prefix=config.prefix,
                        detector=detector,
                        replacement_policy=config.replacement_policy,
                        noise_words=config.noise_words,
                    )
                except HarnessError as e:
                    logger.warning("Cannot apply %s to %s: %s", kind.value, sample.id, e)
                    failures[(sample.id, kind)] = f"{type(e).__name__}: {e}"
                    continue
                if p.flags:
                    logger.debug("%s/%s flagged %s", sample.id, kind.value, p.flags)
                perturbed[(sample.id, kind)] = p
                lines.append(canonical_json(perturbed_to_record(p)))
        atomic_write_text(self.path(PERTURBED_FILE), "".join(line + "\n" for line in lines))
        logger.info("Perturbed %d (sample, kind) pairs, %d failed", len(perturbed), len(failures))
        return perturbed, failures

    # Stage: refprep

    def refprep(self, samples: Sequence[QASample]) -> Tuple[Dict[str, ReferenceAnswer], Dict[str, str]]:
        config = self.config
        references, failures = generate_references(
            samples,
            self.reference_backend(),
            self.cache,
            config.reference,
            overrides=load_overrides(config.reference.overrides),
            max_tokens=config.max_tokens,
            seed=config.seed if config.mock else None,
            concurrency=config.concurrency,
        )
        atomic_write_json(self.path(REFERENCES_FILE), references_to_json(references))
        return references, failures

    # Stage: generate

    def request_for(self, item: WorkItem, perturbed: PerturbedSample) -> GenerationRequest:
        context = evidence_context(perturbed) if self.config.context_mode == "supporting" else perturbed.context
        seed = None
        if self.config.mock:
            seed = derive_seed(
                self.config.seed, "generate", item.sample_id, item.model, f"{item.temperature:.2f}", item.perturbation
            )
        return GenerationRequest(
            model=item.model,
            messages=build_rag_prompt(perturbed.query, context),
            temperature=item.temperature,
            max_tokens=self.config.max_tokens,
            run_index=item.run_index,
            seed=seed,
        )

    def _run_item(
        self,
        item: WorkItem,
        perturbed: Dict[Tuple[str, PerturbationKind], PerturbedSample],
        perturb_failures: Dict[Tuple[str, PerturbationKind], str],
    ) -> Dict:
        entry = {"item_id": item.item_id}
        pair = (item.sample_id, item.perturbation)
        if pair in perturb_failures:
            return {**entry, "status": ItemStatus.FAILED.value, "error": perturb_failures[pair]}
        try:
            result = generate(self.request_for(item, perturbed[pair]), self.backend(item.model), self.cache)
        except HarnessError as e:
            logger.warning("Item %s failed: %s", item.item_id, e)
            return {**entry, "status": ItemStatus.FAILED.value, "error": f"{type(e).__name__}: {e}"}
        except Exception as e:
            # unexpected backend fault: record it against this item only
            logger.exception("Item %s failed unexpectedly", item.item_id)
            return {**entry, "status": ItemStatus.FAILED.value, "error": f"{type(e).__name__}: {e}"}
        if not result.from_cache:
            with self._lock:
                self.backend_calls += 1
        return {
            **entry,
            "status": ItemStatus.DONE.value,
            "text": result.text,
            "finish_reason": result.finish_reason.value,
            "attempts": result.attempts,
            "from_cache": result.from_cache,
            "latency_ms": result.latency_ms,
        }

    def _record(self, journal, manifest: RunManifest, entry: Dict) -> None:
        journal.write(canonical_json(entry) + "\n")
        journal.flush()
        item_id = entry["item_id"]
        manifest.items[item_id] = entry["status"]
        if entry["status"] == ItemStatus.FAILED.value:
            manifest.errors[item_id] = entry["error"]
        else:
            manifest.errors.pop(item_id, None)

    def generate(
        self,
        manifest: RunManifest,
        items: Sequence[WorkItem],
        perturbed: Dict[Tuple[str, PerturbationKind], PerturbedSample],
        perturb_failures: Dict[Tuple[str, PerturbationKind], str],
        limit: Optional[int] = None,
    ) -> RunManifest:
        """Execute pending and failed items; done items are never touched.

        On interruption queued items stay pending, in-flight items are waited
        for and journaled, and the manifest is saved before re-raising.
        """
        by_id = {item.item_id: item for item in items}
        todo = [by_id[item_id] for item_id in manifest.pending() if item_id in by_id]
        if limit is not None:
            todo = todo[: max(0, limit)]
        logger.info("Generating %d of %d work items", len(todo), len(manifest.items))

        journal_path = self.path(JOURNAL_FILE)
        journal_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path = self.path(MANIFEST_FILE)
        journaled = set()
        try:
            with ThreadPoolExecutor(max_workers=self.config.concurrency) as pool, open(
                journal_path, "a", encoding="utf-8"
            ) as journal:
                futures = {pool.submit(self._run_item, item, perturbed, perturb_failures): item for item in todo}
                try:
                    for n, future in enumerate(
                        self._bar(as_completed(futures), total=len(futures), desc="generate"), 1
                    ):
                        entry = future.result()
                        self._record(journal, manifest, entry)
                        journaled.add(entry["item_id"])
                        if n % MANIFEST_SAVE_EVERY == 0:
                            save_manifest(manifest, manifest_path)
                except BaseException:
                    for future in futures:
                        future.cancel()
                    pool.shutdown(wait=True)
                    # finished work is cached already; journal it so resume does not redo it
                    for future in futures:
                        if future.cancelled() or future.exception() is not None:
                            continue
                        entry = future.result()
                        if entry["item_id"] not in journaled:
                            self._record(journal, manifest, entry)
                    logger.error("Generation interrupted; continue with --resume %s", manifest_path)
                    raise
        finally:
            save_manifest(manifest, manifest_path)
        logger.info(
            "Generation: %d done, %d failed, %d pending, %d backend calls",
            manifest.count(ItemStatus.DONE),
            manifest.count(ItemStatus.FAILED),
            manifest.count(ItemStatus.PENDING),
            self.backend_calls,
        )
        return manifest

    def read_journal(self) -> Dict[str, Dict]:
        """Latest journal entry per item id."""
        entries: Dict[str, Dict] = {}
        path = self.path(JOURNAL_FILE)
        if not path.exists():
            return entries
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except ValueError:
                    # a torn final line from an interrupted write
                    logger.warning("Ignoring unreadable journal line %d", line_no)
                    continue
                if entry.get("status") == ItemStatus.DONE.value or entry["item_id"] not in entries:
                    entries[entry["item_id"]] = entry
        return entries

    def reconcile(self, manifest: RunManifest) -> RunManifest:
        """Bring manifest statuses up to date with the journal."""
        for item_id, entry in self.read_journal().items():
            if item_id in manifest.items:
                manifest.items[item_id] = entry["status"]
                if entry["status"] == ItemStatus.DONE.value:
                    manifest.errors.pop(item_id, None)
                elif "error" in entry:
                    manifest.errors[item_id] = entry["error"]
        return manifest

    # Stage: score

    def score(
        self,
        items: Sequence[WorkItem],
        references: Dict[str, ReferenceAnswer],
        scorer: Optional[Scorer] = None,
        manifest: Optional[RunManifest] = None,
    ) -> List[ScoreRecord]:
        scorer = scorer or self.build_scorer()
        entries = self.read_journal()
        records: List[ScoreRecord] = []
        failed = 0
        for item in self._bar(items, desc="score"):
            entry = entries.get(item.item_id)
            if entry is None or entry["status"] != ItemStatus.DONE.value:
                continue
            reference = references.get(item.sample_id)
            if reference is None:
                failed += 1
                if manifest is not None:
                    manifest.errors[f"score:{item.item_id}"] = "no reference answer"
                continue
            try:
                values = scorer.score(entry["text"], reference.text)
            except HarnessError as e:
                failed += 1
                logger.warning("Scoring %s failed: %s", item.item_id, e)
                if manifest is not None:
                    manifest.errors[f"score:{item.item_id}"] = f"{type(e).__name__}: {e}"
                continue
            for metric, value in values.items():
                records.append(
                    ScoreRecord(
                        sample_id=item.sample_id,
                        model=item.model,
                        temperature=item.temperature,
                        perturbation=item.perturbation,
                        question_type=item.question_type,
                        fact_count=item.fact_count,
                        run_index=item.run_index,
                        metric=metric,
                        value=value,
                        cached=bool(entry.get("from_cache", False)),
                    )
                )
        rows = emit_scores_csv(records, self.path(SCORES_FILE))
        logger.info("Scored %d rows, %d items could not be scored", rows, failed)
        return records

    # Stage: stats

    def stats(
        self, records: Sequence[ScoreRecord]
    ) -> Tuple[List[RunStats], List[ConditionStats], Dict[Tuple, float]]:
        run_stats = compute_run_stats(records)
        condition_stats = compute_condition_stats(run_stats)
        baselines = compute_baselines(condition_stats)
        emit_run_stats_csv(run_stats, self.path(RUN_STATS_FILE))
        emit_condition_stats_csv(condition_stats, self.path(CONDITION_STATS_FILE))
        emit_baseline_csv(baselines, self.path(BASELINE_FILE))
        return run_stats, condition_stats, baselines

    # Stage: report

    def report_metric(self, records: Sequence[ScoreRecord]) -> Optional[Metric]:
        present = {r.metric for r in records}
        if self.config.report.metric in present:
            return self.config.report.metric
        for metric in self.config.metrics:
            if metric in present:
                logger.info(
                    "%s not scored; figures use %s", self.config.report.metric.value, metric.value
                )
                return metric
        return None

    def report(
        self,
        records: Sequence[ScoreRecord],
        run_stats: Sequence[RunStats],
        condition_stats: Sequence[ConditionStats],
        baselines: Dict[Tuple, float],
        allow_gaps: bool = False,
    ) -> List[Path]:
        config = self.config
        written = [self.path(name) for name in (SCORES_FILE, RUN_STATS_FILE, CONDITION_STATS_FILE, BASELINE_FILE)]
        metric = self.report_metric(records)
        if config.report.figures and metric is not None:
            box_temperatures = [t for t in config.report.boxplot_temperatures if t in config.temperatures]
            for qt in QUESTION_TYPES:
                model_baselines = {m: v for (m, q, met), v in baselines.items() if q == qt and met == metric}
                for kind in FigureKind:
                    spec = FigureSpec(
                        kind=kind,
                        output_path=str(self.path(FIGURES_DIR) / f"{kind.value}_{qt.value}.svg"),
                        metric=metric,
                        question_type=qt,
                        models=list(config.models),
                        perturbations=list(config.perturbations),
                        temperatures=box_temperatures if kind == FigureKind.SCORE_BOXPLOT else list(config.temperatures),
                        allow_gaps=allow_gaps,
                    )
                    try:
                        written.append(render_figure(spec, condition_stats, run_stats, model_baselines))
                    except MissingSeries as e:
                        logger.warning("Skipping figure %s: %s", spec.output_path, e)
        write_artifact_index([p for p in written if p.exists()], self.out_dir)
        return written

    # Stage: fragile

    def fragile(self, run_stats: Sequence[RunStats], metric: Metric) -> pd.DataFrame:
        """Most fragile sample for every (model, temperature, question type, perturbation)."""
        rows = []
        for model in self.config.models:
            for temperature in self.config.temperatures:
                for qt in QUESTION_TYPES:
                    for kind in self.config.perturbations:
                        if kind == PerturbationKind.ORIGINAL:
                            continue
                        try:
                            sample_id, gap = fragile_samples(run_stats, model, temperature, qt, kind, metric)
                        except NoComparablePairs:
                            continue
                        rows.append(
                            {
                                "model": model,
                                "temperature": f"{temperature:.2f}",
                                "question_type": qt.value,
                                "perturbation": kind.value,
                                "metric": metric.value,
                                "sample_id": sample_id,
                                "gap": gap,
                            }
                        )
        df = pd.DataFrame(
            rows, columns=["model", "temperature", "question_type", "perturbation", "metric", "sample_id", "gap"]
        )
        buf = df.to_csv(index=False, float_format="%.6f", lineterminator="\n")
        atomic_write_text(self.path(FRAGILE_FILE), buf)
        logger.info("Wrote %d fragile samples to %s", len(df), self.path(FRAGILE_FILE))
        return df

    # Whole run

    def run(self, limit: Optional[int] = None, manifest: Optional[RunManifest] = None) -> RunManifest:
        samples = self.load_samples() if manifest is not None else self.sample()
        groups, items = expand_conditions(self.config, samples)
        logger.info("%d condition groups, %d work items", groups, len(items))
        if manifest is None:
            manifest = new_manifest(self.config, items)
            self.path(JOURNAL_FILE).unlink(missing_ok=True)
            save_manifest(manifest, self.path(MANIFEST_FILE))
        elif set(manifest.items) != {item.item_id for item in items}:
            raise ManifestMismatch("manifest work items differ from the expanded configuration")

        perturbed, perturb_failures = self.perturb(samples)
        manifest.flags = {
            f"{sample_id}|{kind.value}": list(p.flags)
            for (sample_id, kind), p in sorted(perturbed.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
            if p.flags
        }
        references, ref_failures = self.refprep(samples)
        for sample_id, error in ref_failures.items():
            manifest.errors[f"reference:{sample_id}"] = error
        for key in [k for k in manifest.errors if k.startswith("reference:")]:
            if key.split(":", 1)[1] in references:
                manifest.errors.pop(key)

        self.generate(manifest, items, perturbed, perturb_failures, limit)
        if manifest.count(ItemStatus.PENDING):
            logger.info(
                "%d items still pending; continue with --resume %s",
                manifest.count(ItemStatus.PENDING),
                self.path(MANIFEST_FILE),
            )
            return manifest

        for key in [k for k in manifest.errors if k.startswith("score:")]:
            manifest.errors.pop(key)
        records = self.score(items, references, manifest=manifest)
        run_stats, condition_stats, baselines = self.stats(records)
        written = self.report(
            records, run_stats, condition_stats, baselines, allow_gaps=bool(manifest.errors)
        )
        manifest.artifacts = write_artifact_index([p for p in written if p.exists()], self.out_dir)
        save_manifest(manifest, self.path(MANIFEST_FILE))
        return manifest


def run_benchmark(
    config: RunConfig,
    limit: Optional[int] = None,
    session: Optional[requests.Session] = None,
    backends: Optional[Dict[str, ChatBackend]] = None,
) -> RunManifest:
    """Run every stage; per-item failures are recorded in the manifest, not raised."""
    return BenchmarkRunner(config, session=session, backends=backends).run(limit=limit)


def resume(
    manifest_path: Union[str, Path],
    config: RunConfig,
    limit: Optional[int] = None,
    session: Optional[requests.Session] = None,
    backends: Optional[Dict[str, ChatBackend]] = None,
) -> RunManifest:
    """Continue a run: only pending and failed items are executed."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    if manifest.config_digest != config.digest():
        raise ManifestMismatch(
            f"config digest {config.digest()[:12]} does not match manifest {manifest.config_digest[:12]}"
        )
    config = config.with_overrides(output_dir=str(manifest_path.parent))
    runner = BenchmarkRunner(config, session=session, backends=backends)
    runner.reconcile(manifest)
    return runner.run(limit=limit, manifest=manifest)


def load_scores(config: RunConfig) -> List[ScoreRecord]:
    return read_scores_csv(Path(config.output_dir) / SCORES_FILE)
