"""
Temperature-scaled sampling and a deterministic mock language model

    p_k = exp(l_k / T) / sum_i exp(l_i / T)

T = 0 is treated as greedy argmax (lowest index on ties).
"""

import logging
from typing import Dict, List, Sequence

import numpy as np

from src.config import MAX_TEMPERATURE, MOCK_CONFIDENCE, MOCK_EOS
from src.data_classes import Completion, FinishReason, GenerationRequest, GenerationResult, MockModel
from src.errors import ConfigError, EmptyLogits, NonFiniteLogit
from src.metrics import normalize
from src.prompts import REF_INSTRUCTION

logger = logging.getLogger(__name__)


def temperature_softmax(logits: Sequence[float], temperature: float) -> np.ndarray:
    """Probability vector for ``logits`` at temperature ``temperature``."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyLogits("logits must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteLogit("logits contain NaN or infinity")
    if not np.isfinite(temperature) or temperature < 0:
        raise ConfigError(f"temperature must be >= 0, got {temperature}")

    if temperature == 0:
        out = np.zeros_like(arr)
        out[int(np.argmax(arr))] = 1.0
        return out

    # max-logit subtraction keeps exp() finite at small T
    weights = np.exp((arr - arr.max()) / temperature)
    return weights / weights.sum()


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats."""
    p = np.asarray(probs, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _draw(cumulative: np.ndarray, u: float) -> int:
    idx = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
    return min(idx, len(cumulative) - 1)


def mock_generate(request: GenerationRequest, model: MockModel) -> GenerationResult:
    """Sample a token sequence from ``model`` at the request temperature.

    The generator is seeded by (seed, run_index), so identical inputs give
    identical text.
    """
    if request.seed is None:
        raise ConfigError("mock generation requires request.seed")
    rng = np.random.Generator(np.random.PCG64([int(request.seed), int(request.run_index)]))
    temperature = request.temperature
    rows = model.logits.shape[0]

    static = None
    if model.bigram is None:
        static = [np.cumsum(temperature_softmax(row, temperature)) for row in model.logits]

    limit = min(model.max_length, request.max_tokens)
    tokens: List[str] = []
    finish = FinishReason.LENGTH
    prev = None
    for position in range(limit):
        row = min(position, rows - 1)
        if static is not None:
            cumulative = static[row]
        else:
            logits = model.logits[row]
            if prev is not None:
                logits = logits + model.bigram[prev]
            cumulative = np.cumsum(temperature_softmax(logits, temperature))
        idx = _draw(cumulative, rng.random())
        token = model.vocabulary[idx]
        if model.eos is not None and token == model.eos:
            finish = FinishReason.STOP
            break
        tokens.append(token)
        prev = idx

    return GenerationResult(
        text=" ".join(tokens),
        finish_reason=finish,
        attempts=1,
        from_cache=False,
        latency_ms=0,
    )


def _user_content(messages: Sequence[Dict[str, str]]) -> str:
    users = [m.get("content", "") for m in messages if m.get("role") == "user"]
    return users[-1] if users else ""


def intended_answer(messages: Sequence[Dict[str, str]]) -> List[str]:
    """Greedy output of the mock reader for a prompt.

    Picks the context line sharing the most normalized tokens with the
    question (first line on ties). For a reference prompt the only candidate
    is the short answer line.
    """
    question = ""
    candidates = []
    for line in _user_content(messages).splitlines():
        line = line.strip()
        if not line or line.startswith("Title:") or line == REF_INSTRUCTION:
            continue
        if line.startswith("Question:"):
            question = line[len("Question:"):].strip()
        elif line.startswith("Answer:"):
            candidates.append(line[len("Answer:"):].strip())
        else:
            candidates.append(line)

    if not candidates:
        return question.split()
    wanted = set(normalize(question))
    best = max(
        enumerate(candidates),
        key=lambda item: (len(wanted & set(normalize(item[1]))), -item[0]),
    )[1]
    return best.split()


def mock_model_for_prompt(
    messages: Sequence[Dict[str, str]], confidence: float = MOCK_CONFIDENCE
) -> MockModel:
    """A MockModel whose greedy path is ``intended_answer(messages)`` then EOS.

    The vocabulary is every whitespace token of the prompt; the intended token
    at each position gets logit ``confidence`` and all others 0.
    """
    intended = intended_answer(messages)
    words = set()
    for message in messages:
        words.update(message.get("content", "").split())
    words.update(intended)
    words.discard(MOCK_EOS)
    vocabulary = tuple(sorted(words)) + (MOCK_EOS,)
    index = {token: i for i, token in enumerate(vocabulary)}

    logits = np.zeros((len(intended) + 1, len(vocabulary)))
    for position, token in enumerate(intended):
        logits[position, index[token]] = confidence
    logits[len(intended), index[MOCK_EOS]] = confidence
    return MockModel(
        vocabulary=vocabulary,
        logits=logits,
        max_length=2 * len(intended) + 2,
        eos=MOCK_EOS,
    )


class MockChatBackend:
    """Offline backend: every prompt is answered by its mock reader."""

    name = "mock"
    max_temperature = MAX_TEMPERATURE

    def __init__(self, confidence: float = MOCK_CONFIDENCE):
        self.confidence = confidence
        self.calls = 0

    def complete(self, request: GenerationRequest) -> Completion:
        self.calls += 1
        model = mock_model_for_prompt(request.messages, self.confidence)
        result = mock_generate(request, model)
        return Completion(text=result.text, finish_reason=result.finish_reason, attempts=1)
