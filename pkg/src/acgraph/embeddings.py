"""Node-embedding storage and the hashed bag-of-words fallback featurizer.

Embedding files are little-endian binary::

    magic   4 bytes  b"ACEV"
    version u16      1
    dim     u32
    count   u64
    records count times:
        key_len u16
        key     key_len bytes, UTF-8, "graph_id/node_id"
        vector  dim * f32

Values are upcast to float64 on load (exact for f32 payloads). Readers
reject unknown versions, truncated records, and non-finite values.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .corpus import Corpus
from .errors import FormatError, MissingEmbedding, NonFiniteValue, ValidationError
from .graphs import AssuranceGraph

MAGIC = b"ACEV"
VERSION = 1


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray]

    def __post_init__(self):
        for key, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"embedding {key!r} has shape {vec.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vec)):
                raise NonFiniteValue(f"embedding {key!r} contains NaN or infinity")


def node_key(graph_id: str, node_id: str) -> str:
    return f"{graph_id}/{node_id}"


def load_embeddings(path) -> EmbeddingTable:
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(fmt: str, offset: int):
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise FormatError(f"{path}: truncated at byte {offset}")
        return struct.unpack_from(fmt, blob, offset), offset + size

    (magic,), off = take("<4s", 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    (version,), off = take("<H", off)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (dim,), off = take("<I", off)
    (count,), off = take("<Q", off)

    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (key_len,), off = take("<H", off)
        if off + key_len > len(blob):
            raise FormatError(f"{path}: truncated at byte {off}")
        key = blob[off:off + key_len].decode("utf-8")
        off += key_len
        vec_bytes = dim * 4
        if off + vec_bytes > len(blob):
            raise FormatError(f"{path}: truncated at byte {off}")
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"{path}: embedding {key!r} contains NaN or infinity")
        entries[key] = vec
    return EmbeddingTable(dim=int(dim), entries=entries)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHIQ", MAGIC, VERSION, table.dim, len(table.entries)))
        for key, vec in table.entries.items():
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValidationError(f"embedding key too long: {key[:40]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def featurize_hashed(text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Signed hashed bag-of-words: lowercase, whitespace-tokenize, hash each
    token to one of ``dim`` buckets with a +/-1 sign, accumulate, then
    L2-normalize. Empty text yields the zero vector. Stable across runs and
    platforms (keyed blake2b, not the salted builtin hash)."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    key = seed.to_bytes(8, "little", signed=True)
    for token in text.lower().split():
        digest = hashlib.blake2b(token.encode("utf-8"), key=key,
                                 digest_size=9).digest()
        bucket = int.from_bytes(digest[:8], "little") % dim
        sign = 1.0 if digest[8] & 1 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class AttachPolicy(str, Enum):
    STRICT = "strict"
    FALLBACK_HASH = "fallback_hash"


def _with_features(g: AssuranceGraph, feats: list[np.ndarray]) -> AssuranceGraph:
    nodes = tuple(replace(n, feature=f) for n, f in zip(g.nodes, feats))
    return replace(g, nodes=nodes)


def attach_embeddings(corpus: Corpus, table: EmbeddingTable,
                      policy: AttachPolicy = AttachPolicy.STRICT,
                      hash_seed: int = 0) -> Corpus:
    """Return a corpus whose nodes carry feature vectors from the table.

    STRICT raises MissingEmbedding on the first absent key; FALLBACK_HASH
    substitutes a hashed bag-of-words vector of the table's dimension.
    Graph structure is never changed.
    """
    graphs = []
    for g in corpus.graphs:
        feats = []
        for n in g.nodes:
            key = node_key(g.graph_id, n.id)
            vec = table.entries.get(key)
            if vec is None:
                if policy is AttachPolicy.STRICT:
                    raise MissingEmbedding(key)
                vec = featurize_hashed(n.text, table.dim, hash_seed)
            feats.append(vec)
        graphs.append(_with_features(g, feats))
    return Corpus(graphs=tuple(graphs), embedding_dim=table.dim)


def attach_hashed(corpus: Corpus, dim: int = 256, seed: int = 0) -> Corpus:
    """Featurize every node with the hashed bag-of-words fallback; lets the
    whole pipeline run without a precomputed embedding file."""
    graphs = [
        _with_features(g, [featurize_hashed(n.text, dim, seed) for n in g.nodes])
        for g in corpus.graphs
    ]
    return Corpus(graphs=tuple(graphs), embedding_dim=dim)
