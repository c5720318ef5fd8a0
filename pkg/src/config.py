"""
Configuration constants and run configuration for the benchmark harness
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from src.data_classes import Metric, PerturbationKind, QuestionType
from src.errors import InvalidConfig
from src.utils import digest

# Default experimental grid: 5 models x 11 temperatures
# x 4 perturbation conditions x 2 question types = 440 condition groups.
DEFAULT_MODELS = [
    "gpt-3.5-turbo",
    "gpt-4o",
    "Llama-3.1-8B-Instruct",
    "Llama-3.2-1B-Instruct",
    "deepseek-reasoner",
]
DEFAULT_TEMPERATURES = [round(0.2 * i, 1) for i in range(11)]
DEFAULT_PERTURBATIONS = [
    PerturbationKind.ORIGINAL,
    PerturbationKind.SENTENCE_REPLACEMENT,
    PerturbationKind.SENTENCE_REMOVAL,
    PerturbationKind.NER_REPLACEMENT,
]
QUESTION_TYPES = [QuestionType.BRIDGE, QuestionType.COMPARISON]
DEFAULT_METRICS = [
    Metric.EM,
    Metric.F1,
    Metric.ROUGE1,
    Metric.ROUGE2,
    Metric.ROUGEL,
    Metric.BERTSCORE_F1,
]
DEFAULT_RUNS = 3
DEFAULT_MAX_TOKENS = 1000
DEFAULT_PER_CELL = 100
DEFAULT_SEED = 2025
MAX_TEMPERATURE = 2.0
TEMPERATURE_DECIMALS = 2

RNG_ALGORITHM = "numpy.PCG64/1"

# HTTP retry policy
RETRY_MAX_ATTEMPTS = 5
RETRY_BASE_DELAY = 1.0
RETRY_STATUSES = frozenset({408, 409, 425, 429, 500, 502, 503, 504})
REQUEST_TIMEOUT = 60

# Mock reader: logit of the intended token, every other token sits at 0
MOCK_CONFIDENCE = 6.0
MOCK_EOS = "</s>"

MASK_TOKEN = "[MASK]"

CONTEXT_MODES = ("supporting", "full")
REPLACEMENT_POLICIES = ("error", "degrade-to-removal")

# Operational settings that do not change results; excluded from the config digest
OPERATIONAL_FIELDS = ("cache_dir", "output_dir", "concurrency")

# Light figure palette
COLORS = {
    "background": "#f8fafc",
    "text": "#1e293b",
    "text_muted": "#64748b",
    "accent": "#6366f1",
    "green": "#10b981",
    "red": "#f43f5e",
    "blue": "#3b82f6",
    "purple": "#a855f7",
    "cyan": "#06b6d4",
    "orange": "#f97316",
    "pink": "#ec4899",
    "gray": "#94a3b8",
    "gray_light": "#cbd5e1",
}

PERTURBATION_COLORS = {
    PerturbationKind.ORIGINAL: COLORS["blue"],
    PerturbationKind.SENTENCE_REPLACEMENT: COLORS["orange"],
    PerturbationKind.SENTENCE_REMOVAL: COLORS["red"],
    PerturbationKind.NER_REPLACEMENT: COLORS["green"],
    PerturbationKind.WORD_REORDERING: COLORS["purple"],
    PerturbationKind.SOURCE_REORDERING: COLORS["cyan"],
    PerturbationKind.RANDOM_NOISE_INJECTION: COLORS["pink"],
    PerturbationKind.SYNONYM_REPLACEMENT: COLORS["accent"],
    PerturbationKind.ANTONYM_REPLACEMENT: COLORS["text_muted"],
    PerturbationKind.PREFIX_INJECTION: COLORS["gray"],
}


@dataclass
class BackendConfig:
    name: str
    base_url: str
    path: str = "/chat/completions"
    embeddings_path: str = "/embeddings"
    models: List[str] = field(default_factory=list)
    timeout: float = REQUEST_TIMEOUT
    max_attempts: int = RETRY_MAX_ATTEMPTS
    base_delay: float = RETRY_BASE_DELAY
    max_temperature: float = MAX_TEMPERATURE

    @property
    def api_key_env(self) -> str:
        return f"{self.name.upper().replace('-', '_')}_API_KEY"


@dataclass
class ReferenceConfig:
    model: str = "gpt-4o"
    backend: Optional[str] = None
    # provider default sampling
    temperature: float = 1.0
    overrides: Optional[str] = None


@dataclass
class TokenEmbedderConfig:
    kind: str = "http"
    url: Optional[str] = None
    path: Optional[str] = None
    model: str = "roberta-large"
    backend: Optional[str] = None


@dataclass
class SentenceEmbedderConfig:
    backend: str = "openai"
    model: str = "text-embedding-3-small"


@dataclass
class ScorerConfig:
    token_embedder: Optional[TokenEmbedderConfig] = None
    sentence_embedder: Optional[SentenceEmbedderConfig] = None


@dataclass
class ReportConfig:
    metric: Metric = Metric.BERTSCORE_F1
    boxplot_temperatures: List[float] = field(default_factory=lambda: [0.0, 1.0, 2.0])
    figures: bool = True


@dataclass
class RunConfig:
    dataset: Optional[str] = None
    per_cell: int = DEFAULT_PER_CELL
    seed: int = DEFAULT_SEED
    strict: bool = False
    models: List[str] = field(default_factory=lambda: list(DEFAULT_MODELS))
    backends: Dict[str, BackendConfig] = field(default_factory=dict)
    temperatures: List[float] = field(default_factory=lambda: list(DEFAULT_TEMPERATURES))
    perturbations: List[PerturbationKind] = field(default_factory=lambda: list(DEFAULT_PERTURBATIONS))
    runs_per_condition: int = DEFAULT_RUNS
    max_tokens: int = DEFAULT_MAX_TOKENS
    metrics: List[Metric] = field(default_factory=lambda: list(DEFAULT_METRICS))
    context_mode: str = "supporting"
    replacement_policy: str = "error"
    prefix: Optional[str] = None
    lexicon: Optional[str] = None
    noise_words: int = 1
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    scorers: ScorerConfig = field(default_factory=ScorerConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    concurrency: int = 4
    cache_dir: str = ".cache"
    output_dir: str = "out"
    mock: bool = False

    def validate(self) -> "RunConfig":
        if not self.models:
            raise InvalidConfig("at least one model is required")
        if not self.metrics:
            raise InvalidConfig("at least one metric is required")
        if not self.temperatures:
            raise InvalidConfig("temperature grid is empty")
        bad = [t for t in self.temperatures if not 0.0 <= t <= MAX_TEMPERATURE]
        if bad:
            raise InvalidConfig(f"temperatures outside [0, {MAX_TEMPERATURE}]: {bad}")
        # item ids and scores.csv carry temperatures with two decimals
        fine = [t for t in self.temperatures if abs(t - round(t, TEMPERATURE_DECIMALS)) > 1e-9]
        if fine:
            raise InvalidConfig(f"temperatures need at most {TEMPERATURE_DECIMALS} decimals: {fine}")
        if len({round(t, TEMPERATURE_DECIMALS) for t in self.temperatures}) != len(self.temperatures):
            raise InvalidConfig("temperature grid contains duplicates")
        if not self.perturbations:
            raise InvalidConfig("at least one perturbation is required")
        if self.runs_per_condition < 1:
            raise InvalidConfig("runs_per_condition must be >= 1")
        if self.max_tokens < 1:
            raise InvalidConfig("max_tokens must be >= 1")
        if self.per_cell < 0:
            raise InvalidConfig("per_cell must be >= 0")
        if self.concurrency < 1:
            raise InvalidConfig("concurrency must be >= 1")
        if self.context_mode not in CONTEXT_MODES:
            raise InvalidConfig(f"context_mode must be one of {CONTEXT_MODES}")
        if self.replacement_policy not in REPLACEMENT_POLICIES:
            raise InvalidConfig(f"replacement_policy must be one of {REPLACEMENT_POLICIES}")
        if PerturbationKind.PREFIX_INJECTION in self.perturbations and not self.prefix:
            raise InvalidConfig("PrefixInjection requires a prefix")
        return self

    def backend_for(self, model: str) -> BackendConfig:
        for backend in self.backends.values():
            if model in backend.models:
                return backend
        if len(self.backends) == 1:
            return next(iter(self.backends.values()))
        raise InvalidConfig(f"no backend configured for model {model!r}")

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def digest(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in OPERATIONAL_FIELDS}
        return digest(payload)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides).validate()


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def _build(cls, raw: Optional[Dict[str, Any]], section: str):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise InvalidConfig(f"section {section!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise InvalidConfig(f"unknown keys in {section!r}: {unknown}")
    return cls(**raw)


def config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    """Build a validated RunConfig from a plain mapping (parsed YAML)."""
    raw = dict(raw or {})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise InvalidConfig(f"unknown config keys: {unknown}")

    try:
        if "backends" in raw:
            raw["backends"] = {
                name: _build(BackendConfig, {"name": name, **(spec or {})}, f"backends.{name}")
                for name, spec in (raw["backends"] or {}).items()
            }
        if "perturbations" in raw:
            raw["perturbations"] = [PerturbationKind(p) for p in raw["perturbations"]]
        if "metrics" in raw:
            raw["metrics"] = [Metric(m) for m in raw["metrics"]]
        if "temperatures" in raw:
            raw["temperatures"] = [float(t) for t in raw["temperatures"]]
        if "reference" in raw:
            raw["reference"] = _build(ReferenceConfig, raw["reference"], "reference")
        if "scorers" in raw:
            scorers = dict(raw["scorers"] or {})
            raw["scorers"] = ScorerConfig(
                token_embedder=_build(TokenEmbedderConfig, scorers.pop("token_embedder", None), "scorers.token_embedder"),
                sentence_embedder=_build(
                    SentenceEmbedderConfig, scorers.pop("sentence_embedder", None), "scorers.sentence_embedder"
                ),
            )
            if scorers:
                raise InvalidConfig(f"unknown keys in 'scorers': {sorted(scorers)}")
        if "report" in raw:
            report = _build(ReportConfig, raw["report"], "report")
            report.metric = Metric(report.metric)
            raw["report"] = report
    except (TypeError, ValueError) as e:
        if isinstance(e, InvalidConfig):
            raise
        raise InvalidConfig(str(e)) from e

    return RunConfig(**raw).validate()


def load_config(path: Union[str, Path, None]) -> RunConfig:
    """Load a YAML run configuration; ``None`` yields the default config."""
    if path is None:
        return RunConfig().validate()
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        raise InvalidConfig(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise InvalidConfig(f"config file {path} is not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise InvalidConfig(f"config file {path} must contain a mapping")
    return config_from_dict(raw)
