"""
Answer scoring: exact match, token F1, ROUGE-1/2/L and greedy-matching
embedding score over externally supplied token embeddings.

Every function here is pure; endpoint-backed scoring lives in src.embeddings.
"""

import re
import string
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from src.data_classes import LEXICAL_METRICS, Metric, TokenEmbeddings
from src.errors import DimensionMismatch, EmptyEmbeddings

_PUNCTUATION = set(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize(text: str) -> List[str]:
    """Lowercase, strip punctuation, drop articles, split on whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCTUATION)
    text = _ARTICLES.sub(" ", text)
    return text.split()


def exact_match(pred: str, ref: str) -> int:
    return int(normalize(pred) == normalize(ref))


def _overlap_f1(overlap: int, n_pred: int, n_ref: int) -> float:
    # 2PR/(P+R) written so that swapping the arguments is bit-identical
    if overlap == 0:
        return 0.0
    return min(1.0, 2.0 * overlap / (n_pred + n_ref))


def token_f1(pred: str, ref: str) -> float:
    pred_tokens, ref_tokens = normalize(pred), normalize(ref)
    if not pred_tokens and not ref_tokens:
        return 1.0
    if not pred_tokens or not ref_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(ref_tokens)
    return _overlap_f1(sum(common.values()), len(pred_tokens), len(ref_tokens))


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length by dynamic programming."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_counts(pred_tokens: Sequence[str], ref_tokens: Sequence[str], variant: str) -> Tuple[int, int, int]:
    """(matches, prediction units, reference units) for a ROUGE variant."""
    if variant == "L":
        return lcs_length(pred_tokens, ref_tokens), len(pred_tokens), len(ref_tokens)
    if variant not in ("1", "2"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    n = int(variant)
    pred_grams, ref_grams = ngrams(pred_tokens, n), ngrams(ref_tokens, n)
    matches = sum((pred_grams & ref_grams).values())
    return matches, sum(pred_grams.values()), sum(ref_grams.values())


def rouge(pred: str, ref: str, variant: str = "L") -> float:
    """ROUGE F1 on normalized tokens for variant "1", "2" or "L"."""
    variant = str(variant).upper()
    pred_tokens, ref_tokens = normalize(pred), normalize(ref)
    matches, n_pred, n_ref = rouge_counts(pred_tokens, ref_tokens, variant)
    if n_pred == 0 and n_ref == 0:
        # too short for any n-gram on either side
        return float(pred_tokens == ref_tokens)
    if n_pred == 0 or n_ref == 0:
        return 0.0
    return _overlap_f1(matches, n_pred, n_ref)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def bertscore_greedy(pred_emb: TokenEmbeddings, ref_emb: TokenEmbeddings) -> Tuple[float, float, float]:
    """Greedy-matching precision, recall and F1 over token embeddings.

    Cosine similarities are clamped to [0, 1] before aggregation. No idf
    weighting and no baseline rescaling.
    """
    if pred_emb.vectors.size == 0 or ref_emb.vectors.size == 0:
        raise EmptyEmbeddings("token embedding set is empty")
    if pred_emb.vectors.shape[1] != ref_emb.vectors.shape[1]:
        raise DimensionMismatch(
            f"embedding dimensions differ: {pred_emb.vectors.shape[1]} vs {ref_emb.vectors.shape[1]}"
        )
    sim = np.clip(_unit_rows(pred_emb.vectors) @ _unit_rows(ref_emb.vectors).T, 0.0, 1.0)
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall == 0:
        return precision, recall, 0.0
    f1 = min(1.0, 2 * precision * recall / (precision + recall))
    return precision, recall, f1


_LEXICAL = {
    Metric.EM: lambda p, r: float(exact_match(p, r)),
    Metric.F1: token_f1,
    Metric.ROUGE1: lambda p, r: rouge(p, r, "1"),
    Metric.ROUGE2: lambda p, r: rouge(p, r, "2"),
    Metric.ROUGEL: lambda p, r: rouge(p, r, "L"),
}


def lexical_scores(pred: str, ref: str, metrics: Iterable[Metric] = LEXICAL_METRICS) -> Dict[Metric, float]:
    """Lexical metric values for one prediction; non-lexical metrics are skipped."""
    return {m: _LEXICAL[m](pred, ref) for m in metrics if m in _LEXICAL}
