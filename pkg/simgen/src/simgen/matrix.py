"""Turn embeddings into a semantic-loss matrix file.

Loss weight between messages i and j is one minus the cosine similarity of
their embeddings, clamped into [0, 1] (real encoders can produce negative
cosines).  The file uses the consumer's ``similarity.json`` schema with an
extra ``provenance`` block recording the encoder and the raw cosine values,
so clamping never loses information.
"""

from __future__ import annotations

import json

import numpy as np

from .encoders import EmbeddingRecord, SimgenError


def cosine_matrix(records: list[EmbeddingRecord]) -> np.ndarray:
    if len(records) < 2:
        raise SimgenError("need at least 2 messages for a similarity matrix")
    vectors = np.stack([r.vector for r in records])
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise SimgenError("zero-norm embedding")
    unit = vectors / norms[:, None]
    phi = unit @ unit.T
    phi = (phi + phi.T) / 2.0  # kill rounding asymmetry from the matmul
    # identical vectors have cosine exactly 1; don't let matmul rounding
    # leave residual loss between duplicated messages
    for i in range(len(records)):
        phi[i, i] = 1.0
        for j in range(i + 1, len(records)):
            if np.array_equal(vectors[i], vectors[j]):
                phi[i, j] = phi[j, i] = 1.0
    return phi


def loss_matrix(records: list[EmbeddingRecord]) -> np.ndarray:
    a = np.clip(1.0 - cosine_matrix(records), 0.0, 1.0)
    np.fill_diagonal(a, 0.0)
    return a


def similarity_payload(records: list[EmbeddingRecord], model: str) -> dict:
    phi = cosine_matrix(records)
    a = np.clip(1.0 - phi, 0.0, 1.0)
    np.fill_diagonal(a, 0.0)
    return {
        "schema": 1,
        "M": len(records),
        "messages": [r.message for r in records],
        "A": [[float(v) for v in row] for row in a],
        "provenance": {
            "generator": "simgen",
            "model": model,
            "raw_cosine": [[float(v) for v in row] for row in phi],
        },
    }


def write_similarity(records: list[EmbeddingRecord], path, model: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(similarity_payload(records, model), fh, indent=1, allow_nan=False)
        fh.write("\n")
