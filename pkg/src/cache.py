"""
Content-addressed on-disk cache for generations and embeddings

Layout: ``<root>/<namespace>/<key[:2]>/<key>.json``. Every record carries a
header with its own key and a digest of its body; a mismatch on read raises
CacheCorruption. Writes go through a temporary file and an atomic rename, so
concurrent readers never see a partial record.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from src.data_classes import GenerationRequest
from src.errors import CacheCorruption
from src.utils import atomic_write_text, canonical_json, digest

logger = logging.getLogger(__name__)

GENERATIONS = "generations"
EMBEDDINGS = "embeddings"


def request_key(request: GenerationRequest) -> str:
    """Cache key for a generation request; wall-clock metadata never enters it."""
    payload = {
        "model": request.model,
        "messages": list(request.messages),
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "run_index": request.run_index,
    }
    if request.seed is not None:
        payload["seed"] = request.seed
    return digest(payload)


class FileCache:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def path_for(self, namespace: str, key: str) -> Path:
        return self.root / namespace / key[:2] / f"{key}.json"

    def read(self, namespace: str, key: str) -> Optional[Dict[str, Any]]:
        """Stored body for ``key`` or None on a miss."""
        path = self.path_for(namespace, key)
        if not path.exists():
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            header, body = record["header"], record["body"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise CacheCorruption(f"unreadable cache record {path}: {e}") from e
        if header.get("key") != key or header.get("body_digest") != digest(body):
            raise CacheCorruption(f"digest mismatch in cache record {path}")
        return body

    def write(self, namespace: str, key: str, body: Dict[str, Any], **header: Any) -> Path:
        path = self.path_for(namespace, key)
        record = {
            "header": {**header, "key": key, "body_digest": digest(body)},
            "body": body,
        }
        atomic_write_text(path, canonical_json(record) + "\n")
        logger.debug("Cached %s/%s", namespace, key[:12])
        return path
