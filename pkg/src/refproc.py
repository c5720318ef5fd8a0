"""
Sentence-form reference answers built from short gold answers
"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import yaml

from src.api import ChatBackend, generate
from src.cache import FileCache
from src.config import DEFAULT_MAX_TOKENS, ReferenceConfig
from src.data_classes import GenerationRequest, QASample, ReferenceAnswer, ReferenceSource
from src.errors import EmptyGeneration, HarnessError
from src.prompts import build_ref_prompt
from src.utils import derive_seed

logger = logging.getLogger(__name__)

# A period ending one of these words does not end a sentence. "no." must
# stay out of this list: yes/no answers split after it.
ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.", "ft.",
        "gen.", "col.", "lt.", "sgt.", "capt.", "gov.", "sen.", "rep.", "rev.",
        "inc.", "ltd.", "co.", "corp.", "vs.", "etc.", "approx.", "dept.",
        "e.g.", "i.e.", "u.s.", "u.k.", "u.n.", "a.m.", "p.m.",
        "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.",
        "oct.", "nov.", "dec.",
    }
)

_TERMINAL = re.compile(r"[.!?]+(?=\s|$)")
_INITIAL = re.compile(r"[A-Z]\.")
_YES_NO = re.compile(r"(yes|no)\b", re.IGNORECASE)
_OPENERS = "\"'([{"


def _is_abbreviation(text: str, end: int) -> bool:
    word = text[:end].split()[-1].lstrip(_OPENERS)
    return word.lower() in ABBREVIATIONS or bool(_INITIAL.fullmatch(word))


def sentence_ends(text: str) -> List[int]:
    """End offsets (exclusive) of every sentence in ``text``."""
    ends = []
    for match in _TERMINAL.finditer(text):
        if match.group().endswith(".") and _is_abbreviation(text, match.end()):
            continue
        ends.append(match.end())
    return ends


def extract_reference(generated: str) -> str:
    """First sentence of a generation, or the first two when it opens with Yes/No.

    The result is always a prefix of the stripped input.
    """
    text = generated.strip()
    if not text:
        raise EmptyGeneration("generation is empty")
    wanted = 2 if _YES_NO.match(text) else 1
    ends = sentence_ends(text)
    if len(ends) < wanted:
        return text
    return text[: ends[wanted - 1]]


def load_overrides(path: Union[str, Path, None]) -> Dict[str, str]:
    """Hand-checked references: a YAML/JSON mapping sample_id -> text."""
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        raise HarnessError(f"reference override file not found: {path}") from e
    if not isinstance(raw, dict):
        raise HarnessError(f"reference override file {path} must contain a mapping")
    overrides = {}
    for sample_id, text in raw.items():
        if not isinstance(text, str) or not text.strip():
            raise HarnessError(f"override for {sample_id!r} must be a non-empty string")
        overrides[str(sample_id)] = text.strip()
    logger.info("Loaded %d reference overrides from %s", len(overrides), path)
    return overrides


def reference_request(
    sample: QASample,
    config: ReferenceConfig,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    seed: Optional[int] = None,
) -> GenerationRequest:
    return GenerationRequest(
        model=config.model,
        messages=build_ref_prompt(sample.question, sample.gold_answer),
        temperature=config.temperature,
        max_tokens=max_tokens,
        run_index=0,
        seed=None if seed is None else derive_seed(seed, "reference", sample.id),
    )


def generate_references(
    samples: Sequence[QASample],
    backend: ChatBackend,
    cache: FileCache,
    config: ReferenceConfig,
    overrides: Optional[Dict[str, str]] = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    seed: Optional[int] = None,
    concurrency: int = 4,
) -> Tuple[Dict[str, ReferenceAnswer], Dict[str, str]]:
    """Reference answers per sample id, plus an error message per failed id.

    ``seed`` is only needed by the mock backend.
    """
    overrides = overrides or {}
    references: Dict[str, ReferenceAnswer] = {}
    failures: Dict[str, str] = {}

    pending = []
    for sample in samples:
        if sample.id in overrides:
            references[sample.id] = ReferenceAnswer(sample.id, overrides[sample.id], ReferenceSource.MANUAL_OVERRIDE)
        else:
            pending.append(sample)

    def _one(sample: QASample) -> ReferenceAnswer:
        result = generate(reference_request(sample, config, max_tokens, seed), backend, cache)
        source = ReferenceSource.CACHED if result.from_cache else ReferenceSource.GENERATED
        return ReferenceAnswer(sample.id, extract_reference(result.text), source, raw=result.text)

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {sample.id: pool.submit(_one, sample) for sample in pending}
        for sample_id, future in futures.items():
            try:
                references[sample_id] = future.result()
            except Exception as e:  # one failed reference never stops the batch
                logger.error("Reference for %s failed: %s", sample_id, e)
                failures[sample_id] = f"{type(e).__name__}: {e}"

    logger.info(
        "References: %d ready (%d overrides), %d failed",
        len(references),
        len(samples) - len(pending),
        len(failures),
    )
    return references, failures
