"""Text encoders producing one embedding vector per message.

Two encoder families:

* ``hashed-ngram@1`` (default, built in): a deterministic lexical encoder.
  Lowercased word tokens and character trigrams are hashed (SHA-1, stable
  across platforms and runs) into a fixed-dimension count vector.  No model
  files, no downloads, byte-reproducible forever.
* anything else, e.g. ``sentence-transformers/all-MiniLM-L6-v2@main``: loaded
  as a pretrained sentence-transformers model pinned to the given revision.
  Raises :class:`EncoderUnavailableError` when the model cannot be loaded
  (not installed, not cached, no network).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

DEFAULT_MODEL = "hashed-ngram@1"

_HASH_DIM = 512
_WORD_RE = re.compile(r"[\w']+")


class SimgenError(Exception):
    pass


class EncoderUnavailableError(SimgenError):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    message: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or not np.any(v):
            raise SimgenError(f"embedding for {self.message!r} must be finite and nonzero")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


def _stable_bucket(feature: str, dim: int) -> int:
    digest = hashlib.sha1(feature.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dim


def _hashed_ngram_vector(message: str, dim: int = _HASH_DIM) -> np.ndarray:
    text = message.lower()
    features = _WORD_RE.findall(text)
    padded = f" {text} "
    features += [padded[i:i + 3] for i in range(len(padded) - 2)]
    vec = np.zeros(dim)
    for feat in features:
        vec[_stable_bucket(feat, dim)] += 1.0
    return vec


def _load_transformer(name: str, revision: str | None):
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise EncoderUnavailableError(
            f"model unavailable: sentence-transformers is not installed ({exc})"
        ) from exc
    try:
        return SentenceTransformer(name, revision=revision)
    except Exception as exc:  # model missing, no network, corrupt cache
        raise EncoderUnavailableError(f"model unavailable: {name!r} ({exc})") from exc


def embed(messages: list[str], model: str = DEFAULT_MODEL) -> list[EmbeddingRecord]:
    """One embedding per message; deterministic for a pinned model version."""
    if not messages:
        raise SimgenError("no messages to embed")
    for i, msg in enumerate(messages):
        if not msg.strip():
            raise SimgenError(f"empty message at index {i}")

    name, _, revision = model.partition("@")
    if name == "hashed-ngram":
        vectors = [_hashed_ngram_vector(m) for m in messages]
    else:
        encoder = _load_transformer(name, revision or None)
        vectors = list(np.asarray(encoder.encode(list(messages)), dtype=float))
    return [EmbeddingRecord(m, v) for m, v in zip(messages, vectors)]
