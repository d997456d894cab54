"""Embedding providers and the TF-IDF ranking baseline.

Three provider kinds: `remote` talks to an HTTP embeddings endpoint with
batching, retry, and a content-addressed disk cache; `local_hash` is a
deterministic trigram-hash embedder used offline and in tests; `tfidf`
has no vectors of its own and is served by `tfidf_rank`.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import AuthError, DimensionMismatch, NetworkError, ZeroVector
from .hashing import fnv1a64

_BACKOFF_BASE = 0.5
_cache_lock = threading.Lock()


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int
    provider_tag: str

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.shape[0] != self.dim or self.dim <= 0:
            raise DimensionMismatch(f"expected a {self.dim}-vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains non-finite values")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str  # remote | local_hash | tfidf
    dim: int
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env: str = "INVRANK_API_KEY"
    max_batch: int = 64
    retries: int = 3
    cache_dir: str | None = None
    seed: int = 0
    max_inflight: int = 4

    def __post_init__(self):
        if self.kind not in ("remote", "local_hash", "tfidf"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote" and not (self.endpoint_url and self.model_name):
            raise ValueError("remote provider requires endpoint_url and model_name")
        if self.dim <= 0:
            raise ValueError("dim must be positive")

    @property
    def tag(self) -> str:
        if self.kind == "remote":
            return self.model_name
        return f"local-hash-d{self.dim}-s{self.seed}"


def embed(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    """Embed texts in order; identical text never hits the network twice."""
    if not texts:
        raise ValueError("texts must be nonempty")
    if cfg.kind == "local_hash":
        return [_hash_embed(t, cfg) for t in texts]
    if cfg.kind == "remote":
        return _remote_embed(texts, cfg)
    raise ValueError(f"provider kind {cfg.kind!r} does not produce embeddings")


def _hash_embed(text: str, cfg: ProviderConfig) -> EmbeddingVector:
    data = text.encode("utf-8")
    grams = (
        [data[i : i + 3] for i in range(len(data) - 2)] if len(data) >= 3 else [data]
    )
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for gram in grams:
        h = fnv1a64(gram, cfg.seed)
        sign = 1.0 if h & 1 == 0 else -1.0
        vec[(h >> 1) % cfg.dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec /= norm
    return EmbeddingVector(vec, cfg.dim, cfg.tag)


def _cache_path(cfg: ProviderConfig, text: str) -> Path | None:
    if not cfg.cache_dir:
        return None
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return Path(cfg.cache_dir) / cfg.tag / f"{digest}.json"


def _cache_read(path: Path | None) -> list[float] | None:
    if path is None or not path.is_file():
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)["embedding"]


def _cache_write(path: Path | None, values: list[float]):
    if path is None:
        return
    with _cache_lock:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"embedding": values}, fh)
        tmp.replace(path)


def _remote_embed(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    results: list[np.ndarray | None] = [None] * len(texts)
    misses: list[int] = []
    for i, text in enumerate(texts):
        cached = _cache_read(_cache_path(cfg, text))
        if cached is not None:
            results[i] = np.asarray(cached, dtype=np.float64)
        else:
            misses.append(i)

    if misses:
        batches = [misses[i : i + cfg.max_batch] for i in range(0, len(misses), cfg.max_batch)]
        workers = max(1, min(cfg.max_inflight, len(batches)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for batch, vectors in zip(
                batches, pool.map(lambda b: _post_batch([texts[i] for i in b], cfg), batches)
            ):
                for i, vec in zip(batch, vectors):
                    results[i] = vec
                    _cache_write(_cache_path(cfg, texts[i]), vec.tolist())

    return [EmbeddingVector(v, cfg.dim, cfg.tag) for v in results]


def _post_batch(batch: list[str], cfg: ProviderConfig) -> list[np.ndarray]:
    import os

    key = os.environ.get(cfg.api_key_env)
    if not key:
        raise AuthError(f"environment variable {cfg.api_key_env} is not set")
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    payload = {"model": cfg.model_name, "input": batch}
    last_error = None
    for attempt in range(cfg.retries):
        try:
            resp = requests.post(cfg.endpoint_url, json=payload, headers=headers, timeout=60)
            if resp.status_code in (401, 403):
                raise AuthError(f"embedding service rejected credentials ({resp.status_code})")
            resp.raise_for_status()
            data = resp.json()["data"]
            vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in data]
            if len(vectors) != len(batch):
                raise NetworkError("embedding service returned wrong item count")
            for v in vectors:
                if v.shape != (cfg.dim,):
                    raise DimensionMismatch(
                        f"service returned dim {v.shape}, expected {cfg.dim}"
                    )
            return vectors
        except (AuthError, DimensionMismatch):
            raise
        except (requests.RequestException, KeyError, ValueError, NetworkError) as exc:
            last_error = exc
            if attempt + 1 < cfg.retries:
                time.sleep(_BACKOFF_BASE * 2**attempt)
    raise NetworkError(f"embedding request failed after {cfg.retries} attempts: {last_error}")


def cosine_abs(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Absolute cosine similarity in [0, 1]."""
    if u.dim != v.dim:
        raise DimensionMismatch(f"dims differ: {u.dim} vs {v.dim}")
    nu = float(np.linalg.norm(u.values))
    nv = float(np.linalg.norm(v.values))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine of a zero vector is undefined")
    c = abs(float(np.dot(u.values, v.values)) / (nu * nv))
    return min(c, 1.0)


# --- TF-IDF baseline ----------------------------------------------------------

_TOKEN_SPLIT = re.compile(r"[\s()]+")


def _tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text) if t]


def _tfidf_vectors(docs: list[str]) -> list[dict[str, float]]:
    counts = [Counter(_tokenize(d)) for d in docs]
    n = len(docs)
    df = Counter()
    for c in counts:
        df.update(c.keys())
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}
    vecs = []
    for c in counts:
        vec = {t: tf * idf[t] for t, tf in c.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm > 0:
            vec = {t: w / norm for t, w in vec.items()}
        vecs.append(vec)
    return vecs


def tfidf_rank(problem, cands):
    """Rank candidates by TF-IDF cosine against the problem text."""
    from .ranker import make_ranked_list

    if not cands:
        raise ValueError("need at least one candidate")
    vecs = _tfidf_vectors([problem.raw_text] + [c.raw_text for c in cands])
    pvec = vecs[0]
    scored = []
    for cand, cvec in zip(cands, vecs[1:]):
        small, large = (pvec, cvec) if len(pvec) < len(cvec) else (cvec, pvec)
        score = sum(w * large.get(t, 0.0) for t, w in small.items())
        scored.append((cand.id, score, cand.generation_index))
    return make_ranked_list(problem.id, scored)
