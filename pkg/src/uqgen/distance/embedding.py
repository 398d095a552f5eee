"""Embedding providers and the cosine similarity used for semantic performance."""

from __future__ import annotations

import hashlib
import math
import os
import threading
from typing import Sequence

import httpx

from ..errors import ConfigError, ProviderError
from .ngram import tokenize


class EmbeddingProvider:
    id: str = "abstract"
    dimension: int = 0

    def embed(self, text: str) -> list[float]:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[list[float]]:
        raise NotImplementedError


class HashedBagProvider(EmbeddingProvider):
    """Deterministic offline embedding: hashed token counts, L2-normalized.

    Each lowercased whitespace token is hashed (blake2b) to one of ``dimension``
    buckets. No model download, identical across processes and platforms.
    """

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ConfigError("embedding dimension must be positive")
        self.dimension = dimension
        self.id = f"hashed-bag-{dimension}"

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dimension

    def embed_many(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            vec = [0.0] * self.dimension
            for tok in tokenize(text):
                vec[self._bucket(tok)] += 1.0
            norm = math.sqrt(math.fsum(v * v for v in vec))
            out.append([v / norm for v in vec] if norm > 0 else vec)
        return out


class RemoteEmbeddingProvider(EmbeddingProvider):
    """HTTP embedding service: POST {"texts": [...]} -> {"vectors": [[...], ...]}.

    ``model_id`` labels the provider (e.g. ``all-mpnet-base-v2`` for text,
    ``codebert-base`` for code); the service decides which model actually runs.
    """

    def __init__(
        self,
        url: str | None = None,
        token: str | None = None,
        model_id: str = "all-mpnet-base-v2",
        dimension: int = 768,
        timeout: float = 30.0,
        max_retries: int = 2,
        client: httpx.Client | None = None,
    ):
        self.url = url or os.environ.get("UQGEN_EMBED_URL")
        if not self.url:
            raise ConfigError("remote embedding provider needs a URL (UQGEN_EMBED_URL)")
        self.token = token if token is not None else os.environ.get("UQGEN_EMBED_TOKEN")
        self.id = f"remote:{model_id}"
        self.dimension = dimension
        self.timeout = timeout
        self.max_retries = max_retries
        self._client = client or httpx.Client(timeout=timeout)
        self._cache: dict[str, list[float]] = {}
        self._lock = threading.Lock()

    def _post(self, texts: list[str]) -> list[list[float]]:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = self._client.post(self.url, json={"texts": texts}, headers=headers, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last = exc
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last = ProviderError(self.id, f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise ProviderError(self.id, f"HTTP {resp.status_code}: {resp.text[:200]}", retriable=False)
            try:
                vectors = resp.json()["vectors"]
            except (ValueError, KeyError, TypeError):
                raise ProviderError(self.id, "malformed response (missing 'vectors')", retriable=False) from None
            if len(vectors) != len(texts) or any(len(v) != self.dimension for v in vectors):
                raise ProviderError(self.id, "vector count or dimension mismatch", retriable=False)
            return [[float(x) for x in v] for v in vectors]
        raise ProviderError(self.id, f"request failed after retries: {last}")

    def embed_many(self, texts: Sequence[str]) -> list[list[float]]:
        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            vectors = self._post(missing)
            with self._lock:
                self._cache.update(zip(missing, vectors))
        with self._lock:
            return [self._cache[t] for t in texts]


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    nu = math.sqrt(math.fsum(x * x for x in u))
    nv = math.sqrt(math.fsum(x * x for x in v))
    if nu == 0 or nv == 0:
        raise ValueError("cosine undefined for a zero vector")
    c = math.fsum(x * y for x, y in zip(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def embed_cos(a: str, b: str, provider: EmbeddingProvider) -> float:
    """Cosine similarity of the two embeddings mapped to [0, 1] via (cos + 1) / 2.

    Texts that embed to the zero vector (e.g. empty strings) score 0.
    """
    if a == b and a.strip():
        return 1.0
    va, vb = provider.embed_many([a, b])
    try:
        c = cosine(va, vb)
    except ValueError:
        return 0.0
    return (c + 1.0) / 2.0


_DEFAULT_PROVIDER = HashedBagProvider()


def default_provider() -> EmbeddingProvider:
    return _DEFAULT_PROVIDER


def make_provider(spec: str | None) -> EmbeddingProvider:
    """Build a provider from an id: ``hashed`` / ``hashed:<dim>`` / ``remote`` / ``remote:<model-id>``."""
    spec = (spec or "hashed").strip()
    kind, _, arg = spec.partition(":")
    if kind == "hashed":
        return HashedBagProvider(int(arg)) if arg else _DEFAULT_PROVIDER
    if kind == "remote":
        return RemoteEmbeddingProvider(model_id=arg or "all-mpnet-base-v2")
    raise ConfigError(f"unknown embedding provider {spec!r}")
