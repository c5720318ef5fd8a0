"""
HotpotQA loading, validation and stratified sampling
"""

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from src.data_classes import Document, QASample, QuestionType, SamplePlan, SupportingFact
from src.errors import DatasetNotFound, InsufficientCell, ParseError, SchemaError
from src.utils import atomic_write_text, derive_seed

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("question", "answer", "type", "supporting_facts", "context")


def _parse_record(record: Any, index: int) -> Tuple[str, Dict[str, Any]]:
    """Check the structural shape of one record; raises ParseError."""
    if not isinstance(record, dict):
        raise ParseError(f"expected an object, got {type(record).__name__}", index)
    sample_id = record.get("_id", record.get("id"))
    if not isinstance(sample_id, str) or not sample_id:
        raise ParseError("missing or empty 'id'", index)
    missing = [f for f in REQUIRED_FIELDS if f not in record]
    if missing:
        raise ParseError(f"missing fields {missing}", index)
    for name in ("question", "answer", "type"):
        if not isinstance(record[name], str):
            raise ParseError(f"field {name!r} must be a string", index)
    context = record["context"]
    if not isinstance(context, list):
        raise ParseError("'context' must be a list", index)
    for entry in context:
        if (
            not isinstance(entry, (list, tuple))
            or len(entry) != 2
            or not isinstance(entry[0], str)
            or not isinstance(entry[1], list)
            or not all(isinstance(s, str) for s in entry[1])
        ):
            raise ParseError("context entries must be [title, [sentence, ...]]", index)
    facts = record["supporting_facts"]
    if not isinstance(facts, list):
        raise ParseError("'supporting_facts' must be a list", index)
    for fact in facts:
        if (
            not isinstance(fact, (list, tuple))
            or len(fact) != 2
            or not isinstance(fact[0], str)
            or isinstance(fact[1], bool)
            or not isinstance(fact[1], int)
        ):
            raise ParseError("supporting facts must be [title, sentence_index]", index)
    return sample_id, record


def _build_sample(sample_id: str, record: Dict[str, Any]) -> QASample:
    """Build a QASample and enforce its invariants; raises SchemaError."""
    try:
        question_type = QuestionType(record["type"])
    except ValueError:
        raise SchemaError(f"unknown question type {record['type']!r}", sample_id) from None

    documents = []
    for title, sentences in record["context"]:
        if not title:
            raise SchemaError("document with empty title", sample_id)
        documents.append(Document(title=title, sentences=tuple(sentences), degenerate=not sentences))

    # HotpotQA titles are unique per record in practice; the first match wins
    by_title = {}
    for doc in documents:
        by_title.setdefault(doc.title, doc)

    facts = []
    for title, sentence_index in record["supporting_facts"]:
        doc = by_title.get(title)
        if doc is None:
            raise SchemaError(f"supporting fact names absent title {title!r}", sample_id)
        if not 0 <= sentence_index < len(doc.sentences):
            raise SchemaError(
                f"supporting fact ({title!r}, {sentence_index}) out of range "
                f"for {len(doc.sentences)} sentences",
                sample_id,
            )
        facts.append(SupportingFact(title=title, sentence_index=sentence_index))

    return QASample(
        id=sample_id,
        question=record["question"],
        gold_answer=record["answer"],
        question_type=question_type,
        context=tuple(documents),
        supporting_facts=tuple(facts),
    )


def load_dataset(path: Union[str, Path], strict: bool = False) -> List[QASample]:
    """Load a HotpotQA-format JSON array.

    Records violating QASample invariants are skipped with a warning, or raise
    SchemaError when ``strict`` is set. Structurally malformed records always
    raise ParseError.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise DatasetNotFound(f"dataset file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e

    if not isinstance(data, list):
        raise ParseError(f"{path} must contain a JSON array of records")

    samples = []
    skipped = 0
    for index, record in enumerate(data):
        sample_id, record = _parse_record(record, index)
        try:
            samples.append(_build_sample(sample_id, record))
        except SchemaError as e:
            if strict:
                raise
            skipped += 1
            logger.warning("Skipping invalid record %d: %s", index, e)

    if skipped:
        logger.warning("Skipped %d of %d records from %s", skipped, len(data), path)
    logger.info("Loaded %d samples from %s", len(samples), path)
    return samples


def sample_to_record(sample: QASample) -> Dict[str, Any]:
    """Inverse of loading: the HotpotQA record for a sample."""
    return {
        "_id": sample.id,
        "question": sample.question,
        "answer": sample.gold_answer,
        "type": sample.question_type.value,
        "supporting_facts": [[f.title, f.sentence_index] for f in sample.supporting_facts],
        "context": [[d.title, list(d.sentences)] for d in sample.context],
    }


def dump_dataset(samples: List[QASample], path: Union[str, Path]) -> None:
    records = [sample_to_record(s) for s in samples]
    atomic_write_text(path, json.dumps(records, indent=1, ensure_ascii=False) + "\n")


def _canonical_order(sample: QASample) -> Tuple[int, str, str]:
    return (sample.fact_count, sample.question_type.value, sample.id)


def stratified_sample(samples: List[QASample], plan: SamplePlan) -> List[QASample]:
    """Draw ``plan.per_cell`` samples from every (fact_count, question_type) cell.

    Each candidate is ranked by a digest of (seed, id), so the selection
    depends only on the id set and the seed, never on input order.
    """
    by_id: Dict[str, QASample] = {}
    for sample in samples:
        if sample.id in by_id:
            logger.warning("Duplicate sample id %r; keeping the first occurrence", sample.id)
            continue
        by_id[sample.id] = sample

    cells: Dict[Tuple[int, QuestionType], List[QASample]] = defaultdict(list)
    for sample in by_id.values():
        cells[(sample.fact_count, sample.question_type)].append(sample)

    selected = []
    for cell in plan.cells:
        population = cells.get(cell, [])
        logger.info(
            "Cell fact_count=%d type=%s: %d candidates", cell[0], cell[1].value, len(population)
        )
        if len(population) < plan.per_cell:
            raise InsufficientCell((cell[0], cell[1].value), len(population), plan.per_cell)
        ranked = sorted(population, key=lambda s: (derive_seed(plan.seed, "sample", s.id), s.id))
        selected.extend(ranked[: plan.per_cell])

    return sorted(selected, key=_canonical_order)


def supporting_sentences(sample: QASample) -> List[Tuple[str, int, str]]:
    """Resolve supporting-fact pointers to (title, index, sentence text)."""
    out = []
    for fact in sample.supporting_facts:
        doc = sample.document(fact.title)
        out.append((fact.title, fact.sentence_index, doc.sentences[fact.sentence_index]))
    return out
