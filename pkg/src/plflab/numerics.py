"""Probability primitives shared by the rest of the package.

Everything works on float64 arrays. A batch of probability vectors is a
``(B, C)`` array; single vectors are 1-d.
"""
import numpy as np

from .exceptions import DegenerateVectorError, EmptyBatchError, InvalidInputError

LOG_CLAMP = 1e-7


def softmax_scaled(logits, beta=1.0):
    """``exp(beta * l_c) / sum_i exp(beta * l_i)`` along the last axis.

    Accepts a single logit vector or a ``(B, C)`` batch.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta!r}")
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("logits must be finite")
    z = beta * logits
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def argmax_class(probs):
    # np.argmax returns the first maximal index, which is the tie-break we want
    return np.argmax(np.asarray(probs), axis=-1)


def batch_max_confidence(batch):
    """Mean over rows of the per-row maximum probability."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise EmptyBatchError("confidence statistics need at least one row")
    return float(batch.max(axis=1).mean())


def normalize_sum(v):
    v = np.asarray(v, dtype=np.float64)
    total = v.sum()
    if not total > 0:
        raise DegenerateVectorError("cannot normalize a vector with zero sum")
    return v / total


def clamped_log(p):
    return np.log(np.maximum(p, LOG_CLAMP))
