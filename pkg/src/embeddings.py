"""
Embedding providers and the configured scorer

Token-embedding HTTP schema::

    POST <url>/<path>   {"model": "...", "text": "..."}
    200                 {"tokens": ["..."], "vectors": [[...], ...]}

Sidecar file: JSON mapping sha256(text) -> {"tokens": [...], "vectors": [[...]]}.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Union

import numpy as np

from src.api import HttpClient
from src.cache import EMBEDDINGS, FileCache
from src.data_classes import LEXICAL_METRICS, Metric, TokenEmbeddings
from src.errors import BackendError, EmptyText
from src.metrics import bertscore_greedy, lexical_scores
from src.utils import digest, text_digest

logger = logging.getLogger(__name__)


class TokenEmbedder(Protocol):
    def token_embeddings(self, text: str) -> TokenEmbeddings: ...


class VectorSource(Protocol):
    def embed(self, texts: Sequence[str], model: str) -> List[List[float]]: ...


def _to_token_embeddings(payload: Dict) -> TokenEmbeddings:
    return TokenEmbeddings(tokens=tuple(payload["tokens"]), vectors=np.asarray(payload["vectors"], dtype=np.float64))


class HttpTokenEmbedder:
    def __init__(self, client: HttpClient, path: str, model: str, cache: Optional[FileCache] = None):
        self.client = client
        self.path = path
        self.model = model
        self.cache = cache

    def token_embeddings(self, text: str) -> TokenEmbeddings:
        key = digest({"kind": "token", "model": self.model, "text": text_digest(text)})
        if self.cache is not None:
            stored = self.cache.read(EMBEDDINGS, key)
            if stored is not None:
                return _to_token_embeddings(stored)
        data, attempts = self.client.post_json(self.path, {"model": self.model, "text": text})
        try:
            body = {"tokens": list(data["tokens"]), "vectors": [list(map(float, v)) for v in data["vectors"]]}
        except (KeyError, TypeError, ValueError) as e:
            raise BackendError("malformed token-embedding response", 200, attempts) from e
        embeddings = _to_token_embeddings(body)
        if self.cache is not None:
            self.cache.write(EMBEDDINGS, key, body, model=self.model, kind="token")
        return embeddings


class SidecarTokenEmbedder:
    """Precomputed token embeddings keyed by text digest."""

    def __init__(self, path: Union[str, Path]):
        try:
            with open(path, "r", encoding="utf-8") as f:
                self.table = json.load(f)
        except FileNotFoundError as e:
            raise BackendError(f"token-embedding sidecar not found: {path}") from e
        logger.info("Loaded %d sidecar embedding sets from %s", len(self.table), path)

    def token_embeddings(self, text: str) -> TokenEmbeddings:
        entry = self.table.get(text_digest(text))
        if entry is None:
            raise BackendError(f"no sidecar embeddings for text {text_digest(text)[:12]}")
        return _to_token_embeddings(entry)


class SentenceEmbedder:
    """One vector per text from an embeddings endpoint, cached by (model, text digest)."""

    def __init__(self, source: VectorSource, model: str, cache: Optional[FileCache] = None):
        self.source = source
        self.model = model
        self.cache = cache

    def embed(self, text: str) -> np.ndarray:
        key = digest({"kind": "sentence", "model": self.model, "text": text_digest(text)})
        if self.cache is not None:
            stored = self.cache.read(EMBEDDINGS, key)
            if stored is not None:
                return np.asarray(stored["vector"], dtype=np.float64)
        vector = [float(v) for v in self.source.embed([text], self.model)[0]]
        if self.cache is not None:
            self.cache.write(EMBEDDINGS, key, {"vector": vector}, model=self.model, kind="sentence")
        return np.asarray(vector, dtype=np.float64)


def embed_cosine(pred: str, ref: str, embedder: SentenceEmbedder) -> float:
    """Cosine similarity of two sentence embeddings, clamped to [0, 1]."""
    if not pred.strip() or not ref.strip():
        raise EmptyText("cannot embed empty text")
    a, b = embedder.embed(pred), embedder.embed(ref)
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, 0.0, 1.0))


class Scorer:
    """Scores one prediction against its reference for the configured metrics.

    Semantic metrics without a configured provider are reported absent, never
    substituted. An empty prediction scores 0 on semantic metrics.
    """

    def __init__(
        self,
        metrics: Iterable[Metric],
        token_embedder: Optional[TokenEmbedder] = None,
        sentence_embedder: Optional[SentenceEmbedder] = None,
    ):
        self.metrics = list(metrics)
        self.token_embedder = token_embedder
        self.sentence_embedder = sentence_embedder
        self.absent = [
            m
            for m in self.metrics
            if (m == Metric.BERTSCORE_F1 and token_embedder is None)
            or (m == Metric.EMBED_COSINE and sentence_embedder is None)
        ]
        if self.absent:
            logger.warning("No embedding provider for %s; these metrics are omitted", [m.value for m in self.absent])

    @property
    def active(self) -> List[Metric]:
        return [m for m in self.metrics if m not in self.absent]

    def score(self, pred: str, ref: str) -> Dict[Metric, float]:
        active = self.active
        values = lexical_scores(pred, ref, [m for m in active if m in LEXICAL_METRICS])
        if Metric.BERTSCORE_F1 in active:
            if pred.strip():
                _, _, f1 = bertscore_greedy(
                    self.token_embedder.token_embeddings(pred), self.token_embedder.token_embeddings(ref)
                )
                values[Metric.BERTSCORE_F1] = f1
            else:
                values[Metric.BERTSCORE_F1] = 0.0
        if Metric.EMBED_COSINE in active:
            values[Metric.EMBED_COSINE] = embed_cosine(pred, ref, self.sentence_embedder) if pred.strip() else 0.0
        return {m: values[m] for m in active}
