"""Similarity-matrix generation from message embeddings."""

from .encoders import (
    DEFAULT_MODEL,
    EmbeddingRecord,
    EncoderUnavailableError,
    SimgenError,
    embed,
)
from .matrix import cosine_matrix, loss_matrix, similarity_payload, write_similarity

__version__ = "0.1.0"
