"""Embedding contract shared by ingestion and query time.

The reference embedder is a deterministic hashed bag-of-tokens model:
lowercase, split on non-alphanumerics, hash each token to a bucket in
[0, dim), accumulate counts, L2-normalize. It makes retrieval tests exact.
A remote HTTP embedder with the same contract covers production use.
"""

from __future__ import annotations

import re
import zlib
from typing import Protocol, Sequence

import httpx
import numpy as np

DEFAULT_DIM = 256

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def is_empty_embedding(vector: np.ndarray) -> bool:
    """True for the zero vector produced by empty text; the index layer skips these."""
    return not np.any(vector)


class Embedder(Protocol):
    dim: int

    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashedBagEmbedder:
    """Deterministic reference embedder. Stateless after construction."""

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed_text(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        for token in _TOKEN_RE.findall(text.lower()):
            bucket = zlib.crc32(token.encode("utf-8")) % self.dim
            vec[bucket] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= np.float32(norm)
        return vec

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed_text(t) for t in texts]


class RemoteEmbedder:
    """HTTP embedding client: POST {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(self, endpoint: str, dim: int, api_key: str = "", timeout_s: float = 60.0, transport=None):
        self.endpoint = endpoint
        self.dim = dim
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        response = self._client.post(self.endpoint, json={"texts": list(texts)}, headers=self._headers)
        response.raise_for_status()
        vectors = response.json()["vectors"]
        if len(vectors) != len(texts):
            raise ValueError(f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts")
        out = []
        for values in vectors:
            vec = np.asarray(values, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise ValueError(f"embedding endpoint returned dim {vec.shape}, expected ({self.dim},)")
            out.append(vec)
        return out

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]
