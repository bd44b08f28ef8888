"""Deterministic local text embeddings.

A hashed bag-of-tokens projection: each token is hashed into one of
``dimension`` buckets, bucket counts are accumulated, and the vector is
L2-normalized. No model weights, no randomness, identical output across
processes.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np

from .core import ValidationError
from .llm import tokenize


class Embedder(Protocol):
    """Anything that maps text to a fixed-size vector."""

    @property
    def dimension(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...


def _bucket(token: str, dimension: int) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dimension


def local_embed(text: str, dimension: int = 256) -> np.ndarray:
    """Embed text into `dimension` buckets; unit length for non-empty input."""
    if dimension < 8:
        raise ValidationError("embedding dimension must be at least 8")
    vec = np.zeros(dimension, dtype=np.float64)
    for token in tokenize(text):
        vec[_bucket(token, dimension)] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class HashEmbedder:
    """Embedder backed by :func:`local_embed`."""

    def __init__(self, dimension: int = 256):
        if dimension < 8:
            raise ValidationError("embedding dimension must be at least 8")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, text: str) -> np.ndarray:
        return local_embed(text, self._dimension)
