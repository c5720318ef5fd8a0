"""
Utility functions for the benchmark harness
"""

import hashlib
import json
import logging
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: Union[int, str] = logging.INFO) -> None:
    """Configure root logging once for the command-line entry point."""
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _json_default(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set, frozenset)):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(payload: Any) -> str:
    """Serialize payload with sorted keys and no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=_json_default)


def digest(payload: Any) -> str:
    """sha256 hex digest of the canonical JSON form of payload."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_digest(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def derive_seed(base: int, *labels: Any) -> int:
    """Derive a 64-bit sub-seed from a base seed and a sequence of labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base)).encode("utf-8"))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label.value if isinstance(label, Enum) else label).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator using the algorithm recorded in every run manifest."""
    return np.random.Generator(np.random.PCG64(seed))


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write text to path through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: Union[str, Path], payload: Dict[str, Any]) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, default=_json_default) + "\n")


def format_temperature(value: float) -> str:
    """Format a temperature for labels and file names (T=0.2 -> '0.2')."""
    return f"{value:.1f}" if round(value, 1) == value else f"{value:g}"
