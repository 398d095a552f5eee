"""Persistent response cache wrapping any Generator.

Layout under ``store_path`` (a directory):

* ``generations.jsonl`` -- append-only, one ``{"key": ..., "record": <Generation cache record>}`` per line
* ``index.jsonl`` -- sidecar, one ``{"key": ..., "offset": <byte offset in generations.jsonl>}`` per line

A missing or damaged index is rebuilt by scanning the data file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Sequence

from ..core import Generation, Prompt, generation_from_record, generation_to_record
from .base import Generator

log = logging.getLogger(__name__)

DATA_FILE = "generations.jsonl"
INDEX_FILE = "index.jsonl"


def cache_key(
    backend_id: str,
    prompt_text: str,
    temperature: float,
    seed: int | None,
    max_tokens: int,
    topk: int,
    forced_prefix: Sequence[str] = (),
) -> str:
    payload = json.dumps(
        [backend_id, prompt_text, float(temperature), seed, max_tokens, topk, list(forced_prefix)],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CachedGenerator(Generator):
    def __init__(self, inner: Generator, store_path: str | os.PathLike):
        self.inner = inner
        self.id = inner.id
        self.capabilities = inner.capabilities
        self.max_topk = inner.max_topk
        self.joiner = inner.joiner
        self.stop_token = getattr(inner, "stop_token", None)
        self.root = Path(store_path)
        self.root.mkdir(parents=True, exist_ok=True)
        self.data_path = self.root / DATA_FILE
        self.index_path = self.root / INDEX_FILE
        self._lock = threading.Lock()
        self._index: dict[str, int] = {}
        self.hits = 0
        self.misses = 0
        self._load_index()

    def prompt_key(self, prompt: Prompt) -> str:
        return self.inner.prompt_key(prompt)

    def _load_index(self) -> None:
        if not self.data_path.exists():
            return
        size = self.data_path.stat().st_size
        try:
            with open(self.index_path, encoding="utf-8") as fh:
                for line in fh:
                    entry = json.loads(line)
                    if entry["offset"] >= size:
                        raise ValueError("offset past end of data file")
                    self._index[entry["key"]] = int(entry["offset"])
            return
        except (OSError, ValueError, KeyError, TypeError):
            log.warning("cache index %s missing or damaged; rebuilding", self.index_path)
        self._index.clear()
        with open(self.data_path, "rb") as fh:
            offset = 0
            for raw in fh:
                try:
                    self._index[json.loads(raw)["key"]] = offset
                except (ValueError, KeyError, TypeError):
                    pass
                offset += len(raw)
        with open(self.index_path, "w", encoding="utf-8") as fh:
            for key, off in self._index.items():
                fh.write(json.dumps({"key": key, "offset": off}) + "\n")

    def _read(self, key: str) -> Generation | None:
        offset = self._index.get(key)
        if offset is None:
            return None
        try:
            with open(self.data_path, "rb") as fh:
                fh.seek(offset)
                entry = json.loads(fh.readline())
            if entry["key"] != key:
                raise ValueError("key mismatch")
            return generation_from_record(entry["record"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            log.warning("corrupt cache record for key %s (%s); treating as miss", key[:12], exc)
            return None

    def _write(self, key: str, g: Generation) -> None:
        line = json.dumps({"key": key, "record": generation_to_record(g)}, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            if key in self._index and self._read(key) is not None:
                return
            with open(self.data_path, "ab") as fh:
                offset = fh.tell()
                fh.write(line.encode("utf-8"))
            with open(self.index_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "offset": offset}) + "\n")
            self._index[key] = offset

    def _through(self, prompt: Prompt, forced, temperature, seed, max_tokens, topk, call) -> Generation:
        if temperature > 0 and seed is None:
            g = call()
            return dataclasses.replace(g, meta={**g.meta, "cache": "skipped"})
        key = cache_key(self.id, self.inner.prompt_key(prompt), temperature, seed, max_tokens, topk, forced)
        with self._lock:
            hit = self._read(key)
        if hit is not None:
            self.hits += 1
            return dataclasses.replace(hit, prompt_id=prompt.id)
        self.misses += 1
        g = call()
        self._write(key, g)
        return g

    def generate(self, prompt, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        return self._through(
            prompt, (), temperature, seed, max_tokens, topk,
            lambda: self.inner.generate(prompt, temperature, seed, max_tokens, topk),
        )

    def generate_forced(self, prompt, forced_prefix, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        return self._through(
            prompt, tuple(forced_prefix), temperature, seed, max_tokens, topk,
            lambda: self.inner.generate_forced(prompt, forced_prefix, temperature, seed, max_tokens, topk),
        )


def cached(g: Generator, store_path: str | os.PathLike) -> CachedGenerator:
    return CachedGenerator(g, store_path)
