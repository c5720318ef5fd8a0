import json
from pathlib import Path

import pytest
import requests

from src.api import HttpChatBackend
from src.config import BackendConfig, RunConfig, load_config
from src.data_classes import ItemStatus, Metric, PerturbationKind, QuestionType
from src.errors import InvalidConfig, ManifestMismatch
from src.mock_llm import MockChatBackend
from src.pipeline import (
    JOURNAL_FILE,
    MANIFEST_FILE,
    SCORES_FILE,
    BenchmarkRunner,
    condition_groups,
    expand_conditions,
    load_manifest,
    load_scores,
    resume,
    run_benchmark,
)
from src.stats import compute_condition_stats, compute_run_stats
from tests.conftest import FakeSession

ROOT = Path(__file__).parent.parent


def test_default_grid_has_440_groups():
    groups, items = expand_conditions(RunConfig())
    assert groups == 440
    assert items == []


def test_full_grid_config_expands_to_440_groups():
    assert len(condition_groups(load_config(ROOT / "configs" / "full_grid.yaml"))) == 440


def test_small_grid(mock_config):
    assert len(condition_groups(mock_config())) == 16


def test_empty_model_list():
    with pytest.raises(InvalidConfig):
        RunConfig(models=[]).validate()


def test_work_items_cover_the_matrix(mock_config):
    config = mock_config()
    runner = BenchmarkRunner(config, progress=False)
    _, items = expand_conditions(config, runner.sample())
    assert len(items) == 12 * 1 * 2 * 4 * 3
    assert len({item.item_id for item in items}) == len(items)


def test_mock_run_completes(mock_config):
    config = mock_config()
    manifest = run_benchmark(config)
    assert manifest.count(ItemStatus.DONE) == 288
    assert manifest.errors == {}
    out = Path(config.output_dir)
    for name in ("samples.json", "perturbed.jsonl", "references.json", JOURNAL_FILE, MANIFEST_FILE, SCORES_FILE,
                 "run_stats.csv", "condition_stats.csv", "baseline_cv.csv", "artifacts.json"):
        assert (out / name).exists(), name
    saved = load_manifest(out / MANIFEST_FILE)
    assert saved.config_digest == config.digest()
    assert saved.rng == "numpy.PCG64/1"
    assert "scores.csv" in saved.artifacts

    records = load_scores(config)
    assert {r.metric for r in records} == {Metric.EM, Metric.F1, Metric.ROUGEL}
    assert len(records) == 288 * 3


def test_rerun_is_served_from_cache(mock_config):
    config = mock_config()
    first = BenchmarkRunner(config, progress=False)
    first.run()
    assert first.backend_calls == 288

    backend = MockChatBackend()
    second = BenchmarkRunner(config, backends={"mock-reader": backend}, progress=False)
    manifest = second.run()
    assert manifest.count(ItemStatus.DONE) == 288
    assert second.backend_calls == 0
    assert backend.calls == 0
    assert all(r.cached for r in load_scores(config))


@pytest.mark.parametrize(
    "error",
    [requests.ConnectionError("connection refused"), requests.exceptions.ChunkedEncodingError("connection broken")],
)
def test_unreachable_backend_only_fails_its_items(mock_config, error):
    config = mock_config(models=["mock-reader", "remote-model"], temperatures=[0.0])
    session = FakeSession(handler=lambda url, payload: error)
    remote = HttpChatBackend(
        BackendConfig(name="remote", base_url="http://remote.invalid/v1", max_attempts=2, base_delay=0.0),
        session=session,
        api_key="unused",
    )
    manifest = run_benchmark(config, backends={"remote-model": remote})

    failed = [k for k, s in manifest.items.items() if s == ItemStatus.FAILED.value]
    done = [k for k, s in manifest.items.items() if s == ItemStatus.DONE.value]
    assert len(failed) == len(done) == 144
    assert all("|remote-model|" in k for k in failed)
    assert all("|mock-reader|" in k for k in done)
    assert set(manifest.errors) == set(failed)
    assert all("BackendError" in e for e in manifest.errors.values())
    assert len(session.calls) == 144 * 2
    assert {r.model for r in load_scores(config)} == {"mock-reader"}


class CrashingBackend:
    name = "crashing"
    max_temperature = 2.0

    def complete(self, request):
        raise RuntimeError("decoder blew up")


class InterruptingBackend(MockChatBackend):
    """Mock reader that raises KeyboardInterrupt once ``after`` calls have been served."""

    def __init__(self, after: int):
        super().__init__()
        self.after = after

    def complete(self, request):
        if self.calls >= self.after:
            raise KeyboardInterrupt
        return super().complete(request)


def test_unexpected_backend_error_only_fails_its_items(mock_config):
    config = mock_config(models=["mock-reader", "broken-model"], temperatures=[0.0])
    manifest = run_benchmark(config, backends={"broken-model": CrashingBackend()})

    failed = [k for k, s in manifest.items.items() if s == ItemStatus.FAILED.value]
    assert len(failed) == manifest.count(ItemStatus.DONE) == 144
    assert all("|broken-model|" in k for k in failed)
    assert all(manifest.errors[k] == "RuntimeError: decoder blew up" for k in failed)


def test_hard_interrupt_then_resume(mock_config, tmp_path):
    def variant(name, **kwargs):
        return mock_config(
            cache_dir=str(tmp_path / name / "cache"), output_dir=str(tmp_path / name / "out"), **kwargs
        )

    clean = variant("clean")
    run_benchmark(clean)

    # 12 reference calls, then 28 work items before the interrupt
    config = variant("interrupted", concurrency=1)
    manifest_path = Path(config.output_dir) / MANIFEST_FILE
    with pytest.raises(KeyboardInterrupt):
        run_benchmark(config, backends={"mock-reader": InterruptingBackend(after=40)})

    saved = load_manifest(manifest_path)
    assert saved.count(ItemStatus.DONE) == 28
    assert saved.count(ItemStatus.PENDING) == 260
    assert not (Path(config.output_dir) / SCORES_FILE).exists()

    backend = MockChatBackend()
    finished = resume(manifest_path, config, backends={"mock-reader": backend})
    assert finished.count(ItemStatus.DONE) == 288
    assert backend.calls == 260
    assert (Path(config.output_dir) / SCORES_FILE).read_bytes() == (Path(clean.output_dir) / SCORES_FILE).read_bytes()


def test_duplicate_targets_are_flagged_in_manifest(mock_config, write_json, toy_records):
    # toy-16 has four facts; its last two now point at the same sentence
    toy_records[16]["supporting_facts"][3] = ["Beta 16", 0]
    config = mock_config(
        dataset=write_json(toy_records, "repeated.json"),
        temperatures=[0.0],
        runs_per_condition=1,
        per_cell=4,
    )
    run_benchmark(config)

    flags = load_manifest(Path(config.output_dir) / MANIFEST_FILE).flags
    flagged = {key for key, values in flags.items() if "duplicate_target" in values}
    assert flagged == {
        "toy-16|SentenceReplacement",
        "toy-16|SentenceRemoval",
        "toy-16|NerReplacement",
    }


def test_limit_then_resume(mock_config):
    config = mock_config()
    partial = run_benchmark(config, limit=278)
    assert partial.count(ItemStatus.DONE) == 278
    assert partial.count(ItemStatus.PENDING) == 10
    manifest_path = Path(config.output_dir) / MANIFEST_FILE
    assert not (Path(config.output_dir) / SCORES_FILE).exists()

    backend = MockChatBackend()
    finished = resume(manifest_path, config, backends={"mock-reader": backend})
    assert finished.count(ItemStatus.DONE) == 288
    assert backend.calls == 10
    assert (Path(config.output_dir) / SCORES_FILE).exists()

    again = MockChatBackend()
    unchanged = resume(manifest_path, config, backends={"mock-reader": again})
    assert again.calls == 0
    assert unchanged.items == finished.items


def test_resume_rejects_edited_config(mock_config):
    config = mock_config()
    run_benchmark(config, limit=5)
    with pytest.raises(ManifestMismatch):
        resume(Path(config.output_dir) / MANIFEST_FILE, config.with_overrides(seed=8))


def test_resume_needs_a_manifest(mock_config, tmp_path):
    with pytest.raises(ManifestMismatch):
        resume(tmp_path / "missing" / MANIFEST_FILE, mock_config())


def test_fragile_table(mock_config):
    config = mock_config()
    runner = BenchmarkRunner(config, progress=False)
    runner.run()
    run_stats, _, _ = runner.stats(load_scores(config))
    df = runner.fragile(run_stats, Metric.F1)
    # 2 temperatures x 2 question types x 3 perturbations besides Original
    assert len(df) == 12
    assert set(df["perturbation"]) == {"SentenceReplacement", "SentenceRemoval", "NerReplacement"}
    assert (Path(config.output_dir) / "fragile.csv").exists()


@pytest.mark.slow
def test_variability_grows_with_temperature(mock_config):
    config = mock_config(per_cell=4, temperatures=[0.0, 0.2, 1.0, 2.0])
    manifest = run_benchmark(config)
    assert manifest.count(ItemStatus.DONE) == 24 * 4 * 4 * 3

    conditions = compute_condition_stats(compute_run_stats(load_scores(config)))
    series = {}
    for c in conditions:
        if c.metric == Metric.F1:
            series.setdefault((c.key.perturbation, c.key.question_type), {})[c.key.temperature] = c.mean_cv
    assert len(series) == 4 * 2
    for (kind, qt), by_t in series.items():
        assert by_t[0.0] == 0.0, (kind, qt)
        assert by_t[2.0] > by_t[0.2], (kind, qt)


@pytest.mark.slow
def test_runs_are_reproducible(mock_config, tmp_path):
    def variant(name):
        return mock_config(cache_dir=str(tmp_path / name / "cache"), output_dir=str(tmp_path / name / "out"))

    scores = {}
    digests = {}
    for name in ("first", "second"):
        config = variant(name)
        digests[name] = run_benchmark(config).config_digest
        scores[name] = (Path(config.output_dir) / SCORES_FILE).read_bytes()

    interrupted = variant("interrupted")
    run_benchmark(interrupted, limit=100)
    resume(Path(interrupted.output_dir) / MANIFEST_FILE, interrupted)
    scores["interrupted"] = (Path(interrupted.output_dir) / SCORES_FILE).read_bytes()

    assert digests["first"] == digests["second"]
    assert scores["first"] == scores["second"] == scores["interrupted"]

    manifest = json.loads((Path(interrupted.output_dir) / MANIFEST_FILE).read_text())
    assert manifest["config_digest"] == digests["first"]


def test_perturbation_failures_are_recorded(mock_config, write_json, toy_records):
    # a 2-fact record whose second document has no spare sentence
    toy_records[0]["context"][1][1] = ["Beta 0 was born in city0."]
    config = mock_config(
        dataset=write_json(toy_records, "broken.json"),
        perturbations=[PerturbationKind.ORIGINAL, PerturbationKind.SENTENCE_REPLACEMENT],
        temperatures=[0.0],
        per_cell=4,
    )
    manifest = run_benchmark(config)
    failed = {k for k, s in manifest.items.items() if s == ItemStatus.FAILED.value}
    assert failed == {f"toy-00|mock-reader|0.00|SentenceReplacement|{r}" for r in range(3)}
    assert all("NoIrrelevantSentence" in manifest.errors[k] for k in failed)


def test_question_types_in_samples(mock_config):
    samples = BenchmarkRunner(mock_config(), progress=False).sample()
    assert {s.question_type for s in samples} == set(QuestionType)
    assert {s.fact_count for s in samples} == {2, 3, 4}
