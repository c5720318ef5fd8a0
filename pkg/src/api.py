"""
HTTP access to chat-completions compatible backends, with retries and caching
"""

import logging
import os
import time
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import backoff
import requests

from src.cache import GENERATIONS, FileCache, request_key
from src.config import RETRY_BASE_DELAY, RETRY_MAX_ATTEMPTS, RETRY_STATUSES, REQUEST_TIMEOUT, BackendConfig
from src.data_classes import Completion, FinishReason, GenerationRequest, GenerationResult
from src.errors import BackendError, ConfigError

logger = logging.getLogger(__name__)

# transport failures worth another attempt; other RequestExceptions fail the call
TRANSIENT_ERRORS = (requests.ConnectionError, requests.Timeout, requests.exceptions.ChunkedEncodingError)


class ChatBackend(Protocol):
    name: str
    max_temperature: float

    def complete(self, request: GenerationRequest) -> Completion: ...


class _Retryable(Exception):
    def __init__(self, message: str, status: Optional[int]):
        super().__init__(message)
        self.status = status


class HttpClient:
    """JSON POST client with exponential backoff and full jitter.

    Throttling, server errors and connection failures are retried up to
    ``max_attempts`` times; any other 4xx fails at once.
    """

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        timeout: float = REQUEST_TIMEOUT,
        max_attempts: int = RETRY_MAX_ATTEMPTS,
        base_delay: float = RETRY_BASE_DELAY,
        session: Optional[requests.Session] = None,
        name: str = "http",
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.session = session or requests.Session()
        self.name = name

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _log_backoff(self, details: Dict[str, Any]) -> None:
        logger.warning(
            "%s: attempt %d failed (%s), retrying in %.2fs",
            self.name,
            details["tries"],
            details.get("exception"),
            details.get("wait", 0.0),
        )

    def post_json(self, path: str, payload: Dict[str, Any]) -> Tuple[Any, int]:
        """POST payload and return (decoded JSON, attempts used)."""
        url = f"{self.base_url}/{path.lstrip('/')}"
        attempts = 0

        @backoff.on_exception(
            backoff.expo,
            _Retryable,
            max_tries=self.max_attempts,
            jitter=backoff.full_jitter,
            on_backoff=self._log_backoff,
            factor=self.base_delay,
        )
        def _post() -> Any:
            nonlocal attempts
            attempts += 1
            try:
                resp = self.session.post(url, json=payload, headers=self._headers(), timeout=self.timeout)
            except TRANSIENT_ERRORS as e:
                raise _Retryable(f"{type(e).__name__}: {e}", None) from e
            except requests.RequestException as e:
                raise BackendError(f"{self.name}: {type(e).__name__}: {e}", None, attempts) from e
            if resp.status_code in RETRY_STATUSES:
                raise _Retryable(f"HTTP {resp.status_code}", resp.status_code)
            if resp.status_code >= 400:
                raise BackendError(
                    f"{self.name}: HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code, attempts
                )
            try:
                return resp.json()
            except ValueError as e:
                raise BackendError(f"{self.name}: response is not JSON", resp.status_code, attempts) from e

        try:
            return _post(), attempts
        except _Retryable as e:
            raise BackendError(
                f"{self.name}: giving up after {attempts} attempts ({e})", e.status, attempts
            ) from e


class HttpChatBackend:
    """Chat-completions backend (``model, messages, temperature, max_tokens``)."""

    def __init__(
        self,
        config: BackendConfig,
        session: Optional[requests.Session] = None,
        api_key: Optional[str] = None,
    ):
        self.config = config
        if api_key is None:
            api_key = os.environ.get(config.api_key_env)
            if not api_key:
                logger.debug("%s is not set; sending requests without auth", config.api_key_env)
        self.client = HttpClient(
            config.base_url,
            api_key=api_key,
            timeout=config.timeout,
            max_attempts=config.max_attempts,
            base_delay=config.base_delay,
            session=session,
            name=config.name,
        )

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def max_temperature(self) -> float:
        return self.config.max_temperature

    def complete(self, request: GenerationRequest) -> Completion:
        payload = {
            "model": request.model,
            "messages": list(request.messages),
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        data, attempts = self.client.post_json(self.config.path, payload)
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as e:
            raise BackendError(f"{self.name}: malformed completion response", 200, attempts) from e
        finish = FinishReason.LENGTH if choice.get("finish_reason") == "length" else FinishReason.STOP
        return Completion(text=text, finish_reason=finish, attempts=attempts)

    def embed(self, texts: Sequence[str], model: str) -> List[List[float]]:
        """Sentence embeddings, one vector per input text, in input order."""
        data, attempts = self.client.post_json(self.config.embeddings_path, {"model": model, "input": list(texts)})
        try:
            rows = sorted(data["data"], key=lambda row: row.get("index", 0))
            vectors = [row["embedding"] for row in rows]
        except (KeyError, TypeError) as e:
            raise BackendError(f"{self.name}: malformed embeddings response", 200, attempts) from e
        if len(vectors) != len(texts):
            raise BackendError(f"{self.name}: {len(vectors)} embeddings for {len(texts)} texts", 200, attempts)
        return vectors


def generate(request: GenerationRequest, backend: ChatBackend, cache: FileCache) -> GenerationResult:
    """Cached generation: a hit returns the stored text with attempts=0."""
    if request.temperature > backend.max_temperature:
        raise ConfigError(
            f"temperature {request.temperature} exceeds {backend.name} limit {backend.max_temperature}"
        )
    key = request_key(request)
    stored = cache.read(GENERATIONS, key)
    if stored is not None:
        return GenerationResult(
            text=stored["text"],
            finish_reason=FinishReason(stored["finish_reason"]),
            attempts=0,
            from_cache=True,
            latency_ms=0,
        )

    start = time.perf_counter()
    completion = backend.complete(request)
    latency_ms = int(round((time.perf_counter() - start) * 1000))
    cache.write(
        GENERATIONS,
        key,
        {"text": completion.text, "finish_reason": completion.finish_reason.value},
        model=request.model,
        temperature=request.temperature,
        max_tokens=request.max_tokens,
        run_index=request.run_index,
    )
    return GenerationResult(
        text=completion.text,
        finish_reason=completion.finish_reason,
        attempts=max(1, completion.attempts),
        from_cache=False,
        latency_ms=latency_ms,
    )
