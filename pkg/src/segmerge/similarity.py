"""Head-averaged cosine similarity.

Each d-dimensional vector splits into ``heads`` contiguous channel groups of
d/heads channels; the score is the mean over groups of the per-group cosine.
Because each group is normalized independently, the mean of per-group cosines
equals the dot product of the per-group-normalized full vectors divided by the
head count, which is what the vectorized kernel computes.

``pairwise_scores`` is the single numeric recipe both the production merger
and the brute-force oracle use (float64 normalization, one matmul), so their
scores agree bit-for-bit and selection never diverges on rounding.
"""

from __future__ import annotations

import numpy as np

from .errors import CNotDividingD, ZeroNormHead


def _split_heads(vector: np.ndarray, heads: int) -> np.ndarray:
    d = vector.shape[-1]
    if d % heads != 0:
        raise CNotDividingD(f"{heads} heads do not divide dimension {d}")
    return vector.reshape(*vector.shape[:-1], heads, d // heads)


def head_similarity(p: np.ndarray, q: np.ndarray, heads: int) -> float:
    """Score in [-1, 1] for one token pair; symmetric in (p, q).

    Raises ZeroNormHead when any head slice of either vector has zero norm;
    the pipeline maps that condition to -inf instead of calling this.
    Elementwise-equal head slices score exactly 1.0.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"vectors must share one shape, got {p.shape} and {q.shape}")
    ph = _split_heads(p, heads)
    qh = _split_heads(q, heads)
    total = 0.0
    for c in range(heads):
        pn = float(np.sqrt(np.sum(ph[c] * ph[c])))
        qn = float(np.sqrt(np.sum(qh[c] * qh[c])))
        if pn == 0.0 or qn == 0.0:
            raise ZeroNormHead(f"zero-norm head slice at head {c}")
        if np.array_equal(ph[c], qh[c]):
            total += 1.0
        else:
            cos = float(np.dot(ph[c], qh[c])) / (pn * qn)
            total += min(1.0, max(-1.0, cos))
    return total / heads


def normalize_heads(vectors: np.ndarray, heads: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-head unit-normalized float64 copy of (n, d) float32 rows.

    Returns (normalized (n, d) float64, flagged (n,) bool) where flagged marks
    rows with at least one zero-norm head slice; their zero slices are left as
    zeros rather than dividing by zero.
    """
    work = vectors.astype(np.float64)
    grouped = _split_heads(work, heads)
    norms = np.sqrt(np.sum(grouped * grouped, axis=-1))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = grouped / safe[..., None]
    return unit.reshape(work.shape), zero.any(axis=-1)


def pairwise_scores(a: np.ndarray, b: np.ndarray,
                    heads: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All-pairs head-averaged cosines between float32 row sets a and b.

    Returns (scores (|a|, |b|) float64, a_flagged, b_flagged); rows or columns
    of tokens with a zero-norm head slice are set to -inf so they are merged
    only as a last resort.
    """
    unit_a, flag_a = normalize_heads(a, heads)
    unit_b, flag_b = normalize_heads(b, heads)
    scores = (unit_a @ unit_b.T) / heads
    if flag_a.any():
        scores[flag_a, :] = -np.inf
    if flag_b.any():
        scores[:, flag_b] = -np.inf
    return scores, flag_a, flag_b
