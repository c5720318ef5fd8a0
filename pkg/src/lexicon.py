"""
Lexicon loading for word-level perturbations
"""

import logging
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import yaml

from src.data_classes import Lexicon
from src.errors import MissingLexicon

logger = logging.getLogger(__name__)


def _word_lists(raw: Any, word: str, field: str) -> Tuple[str, ...]:
    values = raw.get(field) or []
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise MissingLexicon(f"lexicon entry {word!r}: {field} must be a list of strings")
    return tuple(v for v in values if v)


def build_lexicon(raw: Dict[str, Any]) -> Lexicon:
    """Build a Lexicon from ``{"words": {word: {synonyms, antonyms}}, "noise": [...]}``."""
    if not isinstance(raw, dict):
        raise MissingLexicon("lexicon must be a mapping")
    synonyms: Dict[str, Tuple[str, ...]] = {}
    antonyms: Dict[str, Tuple[str, ...]] = {}
    for word, entry in (raw.get("words") or {}).items():
        entry = entry or {}
        key = str(word).lower()
        syn = _word_lists(entry, key, "synonyms")
        ant = _word_lists(entry, key, "antonyms")
        # keys are only present with a non-empty list
        if syn:
            synonyms[key] = synonyms.get(key, ()) + syn
        if ant:
            antonyms[key] = antonyms.get(key, ()) + ant
    noise = tuple(str(w) for w in (raw.get("noise") or []) if str(w).strip())
    return Lexicon(synonyms=synonyms, antonyms=antonyms, noise=noise)


def load_lexicon(path: Union[str, Path]) -> Lexicon:
    """Load a YAML (or JSON) lexicon file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise MissingLexicon(f"lexicon file not found: {path}") from None
    lexicon = build_lexicon(raw)
    logger.info(
        "Loaded lexicon %s: %d synonym keys, %d antonym keys, %d noise words",
        path,
        len(lexicon.synonyms),
        len(lexicon.antonyms),
        len(lexicon.noise),
    )
    return lexicon
