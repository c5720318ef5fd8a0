"""
Data classes for the benchmark harness
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ConfigError, DimensionMismatch, EmptyEmbeddings


class QuestionType(str, Enum):
    BRIDGE = "bridge"
    COMPARISON = "comparison"


class PerturbationKind(str, Enum):
    ORIGINAL = "Original"
    SENTENCE_REPLACEMENT = "SentenceReplacement"
    SENTENCE_REMOVAL = "SentenceRemoval"
    NER_REPLACEMENT = "NerReplacement"
    WORD_REORDERING = "WordReordering"
    SOURCE_REORDERING = "SourceReordering"
    RANDOM_NOISE_INJECTION = "RandomNoiseInjection"
    SYNONYM_REPLACEMENT = "SynonymReplacement"
    ANTONYM_REPLACEMENT = "AntonymReplacement"
    PREFIX_INJECTION = "PrefixInjection"


CORE_PERTURBATIONS = (
    PerturbationKind.SENTENCE_REPLACEMENT,
    PerturbationKind.SENTENCE_REMOVAL,
    PerturbationKind.NER_REPLACEMENT,
)


# Dataset

@dataclass(frozen=True)
class Document:
    title: str
    sentences: Tuple[str, ...]
    degenerate: bool = False


@dataclass(frozen=True)
class SupportingFact:
    title: str
    sentence_index: int


@dataclass(frozen=True)
class QASample:
    id: str
    question: str
    gold_answer: str
    question_type: QuestionType
    context: Tuple[Document, ...]
    supporting_facts: Tuple[SupportingFact, ...]

    @property
    def fact_count(self) -> int:
        return len(self.supporting_facts)

    def document(self, title: str) -> Optional[Document]:
        for doc in self.context:
            if doc.title == title:
                return doc
        return None


@dataclass(frozen=True)
class SamplePlan:
    per_cell: int
    seed: int
    fact_counts: Tuple[int, ...] = (2, 3, 4)
    question_types: Tuple[QuestionType, ...] = (QuestionType.BRIDGE, QuestionType.COMPARISON)

    @property
    def cells(self) -> List[Tuple[int, QuestionType]]:
        return [(n, qt) for n in self.fact_counts for qt in self.question_types]


# Perturbation

@dataclass(frozen=True)
class Edit:
    """One step of an edit log.

    ``sentence_index`` refers to the context as it stands when the edit is
    applied. ``span`` is a character span inside that sentence.
    """

    op: str
    title: Optional[str] = None
    sentence_index: Optional[int] = None
    span: Optional[Tuple[int, int]] = None
    before: Optional[str] = None
    after: Optional[str] = None
    permutation: Optional[Tuple[int, ...]] = None
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class PerturbedSample:
    base: str
    kind: PerturbationKind
    context: Tuple[Document, ...]
    query: str
    edits: Tuple[Edit, ...]
    seed: int
    support: Tuple[SupportingFact, ...]
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Lexicon:
    synonyms: Dict[str, Tuple[str, ...]]
    antonyms: Dict[str, Tuple[str, ...]]
    noise: Tuple[str, ...]


# Generation

class FinishReason(str, Enum):
    STOP = "stop"
    LENGTH = "length"
    ERROR = "error"


@dataclass(frozen=True)
class GenerationRequest:
    model: str
    messages: Tuple[Dict[str, str], ...]
    temperature: float
    max_tokens: int = 1000
    run_index: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature {self.temperature} outside [0.0, 2.0]")
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.run_index < 0:
            raise ConfigError(f"run_index must be >= 0, got {self.run_index}")


@dataclass(frozen=True)
class Completion:
    """What a backend returns before caching metadata is attached."""

    text: str
    finish_reason: FinishReason
    attempts: int = 1


@dataclass(frozen=True)
class GenerationResult:
    text: str
    finish_reason: FinishReason
    attempts: int
    from_cache: bool
    latency_ms: int


@dataclass(frozen=True, eq=False)
class MockModel:
    """Toy language model: one logit row per position, optional bigram table.

    Position ``p`` uses ``logits[min(p, rows - 1)]`` plus ``bigram[prev]`` when
    a bigram table is present.
    """

    vocabulary: Tuple[str, ...]
    logits: np.ndarray
    max_length: int
    bigram: Optional[np.ndarray] = None
    eos: Optional[str] = None

    def __post_init__(self):
        table = np.atleast_2d(np.asarray(self.logits, dtype=np.float64))
        if table.shape[1] != len(self.vocabulary):
            raise DimensionMismatch(
                f"logit rows have {table.shape[1]} entries for {len(self.vocabulary)} tokens"
            )
        object.__setattr__(self, "logits", table)
        if self.bigram is not None:
            bigram = np.asarray(self.bigram, dtype=np.float64)
            if bigram.shape != (len(self.vocabulary), len(self.vocabulary)):
                raise DimensionMismatch(f"bigram table has shape {bigram.shape}")
            object.__setattr__(self, "bigram", bigram)
        if self.eos is not None and self.eos not in self.vocabulary:
            raise ConfigError(f"eos token {self.eos!r} not in vocabulary")


# Reference processing

class ReferenceSource(str, Enum):
    GENERATED = "generated"
    CACHED = "cached"
    MANUAL_OVERRIDE = "manual-override"


@dataclass(frozen=True)
class ReferenceAnswer:
    sample_id: str
    text: str
    source: ReferenceSource
    raw: Optional[str] = None


# Metrics

class Metric(str, Enum):
    EM = "em"
    F1 = "f1"
    ROUGE1 = "rouge1"
    ROUGE2 = "rouge2"
    ROUGEL = "rougeL"
    BERTSCORE_F1 = "bertscore_f1"
    EMBED_COSINE = "embed_cosine"


LEXICAL_METRICS = (Metric.EM, Metric.F1, Metric.ROUGE1, Metric.ROUGE2, Metric.ROUGEL)
SEMANTIC_METRICS = (Metric.BERTSCORE_F1, Metric.EMBED_COSINE)


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    model: str
    temperature: float
    perturbation: PerturbationKind
    question_type: QuestionType
    fact_count: int
    run_index: int
    metric: Metric
    value: float
    cached: bool = False

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"score {self.value} outside [0, 1] for {self.metric.value}")


@dataclass(frozen=True, eq=False)
class TokenEmbeddings:
    tokens: Tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if len(self.tokens) == 0 or vectors.size == 0:
            raise EmptyEmbeddings("token embedding set is empty")
        if vectors.shape[0] != len(self.tokens):
            raise DimensionMismatch(
                f"{len(self.tokens)} tokens but {vectors.shape[0]} vectors"
            )
        if not np.all(np.isfinite(vectors)):
            raise ValueError("token embeddings contain non-finite values")
        object.__setattr__(self, "vectors", vectors)


# Statistics

@dataclass(frozen=True)
class ConditionKey:
    model: str
    temperature: float
    perturbation: PerturbationKind
    question_type: QuestionType


@dataclass(frozen=True)
class RunStats:
    sample_id: str
    key: ConditionKey
    metric: Metric
    n_runs: int
    mean: float
    std: float
    cv: float


@dataclass(frozen=True)
class ConditionStats:
    key: ConditionKey
    metric: Metric
    n_samples: int
    mean_of_means: float
    mean_of_stds: float
    mean_cv: float
    condition_cv: float


# Reporting

class FigureKind(str, Enum):
    TEMPERATURE_TREND = "temperature_trend"
    CV_TREND = "cv_trend"
    SCORE_BOXPLOT = "score_boxplot"


@dataclass
class FigureSpec:
    kind: FigureKind
    output_path: str
    metric: Metric
    question_type: Optional[QuestionType] = None
    models: List[str] = field(default_factory=list)
    perturbations: List[PerturbationKind] = field(default_factory=list)
    temperatures: List[float] = field(default_factory=list)
    allow_gaps: bool = False
    title: Optional[str] = None


# Orchestration

class ItemStatus(str, Enum):
    PENDING = "pending"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class WorkItem:
    sample_id: str
    question_type: QuestionType
    fact_count: int
    model: str
    temperature: float
    perturbation: PerturbationKind
    run_index: int

    @property
    def item_id(self) -> str:
        return (
            f"{self.sample_id}|{self.model}|{self.temperature:.2f}|"
            f"{self.perturbation.value}|{self.run_index}"
        )


@dataclass
class RunManifest:
    config_digest: str
    rng: str
    config: Dict
    items: Dict[str, str] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    # perturbation flags per "sample_id|kind"
    flags: Dict[str, List[str]] = field(default_factory=dict)

    def count(self, status: ItemStatus) -> int:
        return sum(1 for s in self.items.values() if s == status.value)

    def pending(self) -> List[str]:
        return [k for k, s in self.items.items() if s != ItemStatus.DONE.value]
