"""Iterative bipartite soft-matching: reduce a segment's tokens to a target count.

Each step splits the current token list into a source set P and a destination
set Q, scores every cross-set pair with head-averaged cosine similarity, keeps
each source's single best edge, and merges the top-r edges by (weighted)
average pooling. Survivors keep their relative order, with merged results
staying at the destination's position, so repeating the step walks the count
down a schedule until exactly the target remains.

Determinism contract: ties in edge ranking break on lower (p index, q index)
in the current list; the alternating partition takes even positions first
(overflowing into odd positions only when r exceeds the even count); the
seeded partition draws from the documented splitmix64 stream for
(partition_seed, segment_index). Merge accumulation runs in float64 in a fixed
order (destination first, then sources ascending by p index) and rounds to
float32 once per step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import MergeConfig
from .errors import CNotDividingD, MTooLarge
from .rng import SplitMix64, derive, sample_k
from .segmentation import SegmentView
from .similarity import pairwise_scores
from .types import SegmentFeature, Token

logger = logging.getLogger(__name__)

Provenance = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class MergeStep:
    """Record of one merge step over a list of ``tokens_before`` tokens."""

    tokens_before: int
    removed: int
    pairs: tuple[tuple[int, int, float], ...]  # (p, q, score), selection order
    zero_norm_tokens: tuple[int, ...] = ()
    pair_evals: int = 0

    @property
    def tokens_after(self) -> int:
        return self.tokens_before - self.removed


@dataclass(frozen=True)
class MergePlan:
    """Full per-segment trace: step sizes, selected edges, work counters."""

    segment_index: int
    initial_count: int
    final_count: int
    steps: tuple[MergeStep, ...]

    @property
    def similarity_evals(self) -> int:
        return sum(step.pair_evals for step in self.steps)

    def to_text(self) -> str:
        lines = [
            f"segment {self.segment_index}: R0={self.initial_count} "
            f"M={self.final_count} steps={len(self.steps)} "
            f"similarity_evals={self.similarity_evals}"
        ]
        for i, step in enumerate(self.steps):
            lines.append(f"step {i}: R={step.tokens_before} r={step.removed}")
            for p, q, score in step.pairs:
                lines.append(f"  p={p} q={q} score={score:.6f}")
        return "\n".join(lines)


def merge_schedule(start: int, target: int, rule: str = "halving",
                   step: int = 1) -> list[int]:
    """Per-step removal counts taking ``start`` tokens down to ``target``.

    halving removes half the tokens per step while the halved count stays at
    or above twice the target, then finishes with one direct step to the
    target; fixed removes ``step`` tokens per step (clamped at the end). The
    counts always sum to start - target and every entry is at least 1.
    """
    if target < 1:
        raise MTooLarge("target token count must be positive")
    if start < target:
        raise MTooLarge(f"cannot grow {start} tokens to {target}")
    removals = []
    current = start
    if rule == "halving":
        while current > target:
            half = current // 2
            nxt = half if half >= 2 * target else target
            removals.append(current - nxt)
            current = nxt
    elif rule == "fixed":
        if step < 1:
            raise ValueError("fixed schedule step must be positive")
        while current > target:
            removals.append(min(step, current - target))
            current -= removals[-1]
    else:
        raise ValueError(f"unknown schedule rule {rule!r}")
    return removals


def _partition_indices(count: int, source_count: int, rule: str,
                       rng: SplitMix64 | None) -> tuple[np.ndarray, np.ndarray]:
    if rule == "alternating":
        zigzag = np.concatenate([np.arange(0, count, 2), np.arange(1, count, 2)])
        return np.sort(zigzag[:source_count]), np.sort(zigzag[source_count:])
    if rule == "random":
        if rng is None:
            rng = SplitMix64(derive(0, 0))
        return sample_k(rng, count, source_count)
    raise ValueError(f"unknown partition rule {rule!r}")


def bipartition(tokens: list[Token], r: int, rule: str = "alternating",
                rng: SplitMix64 | None = None) -> tuple[list[Token], list[Token]]:
    """Split tokens into disjoint (P, Q) with |P| = r, per the partition rule.

    Alternating assigns positions 0, 2, 4, ... to P until r are taken (odd
    positions follow once the evens run out); the seeded rule draws an
    r-subset from ``rng``. Both sides preserve ascending position order.
    """
    count = len(tokens)
    if not 1 <= r < count:
        raise ValueError(f"need 1 <= r < {count}, got r={r}")
    p_idx, q_idx = _partition_indices(count, r, rule, rng)
    return [tokens[i] for i in p_idx], [tokens[i] for i in q_idx]


class _TokenArrays:
    """Mutable working state for the array engine."""

    __slots__ = ("vectors", "weights", "provenance")

    def __init__(self, vectors: np.ndarray, weights: np.ndarray,
                 provenance: list[Provenance | None]):
        self.vectors = vectors
        self.weights = weights
        self.provenance = provenance

    @classmethod
    def from_tokens(cls, tokens: list[Token]) -> "_TokenArrays":
        vectors = np.stack([t.vector for t in tokens])
        weights = np.asarray([t.weight for t in tokens], dtype=np.int64)
        return cls(vectors, weights, [t.provenance for t in tokens])

    @classmethod
    def from_view(cls, view: SegmentView) -> "_TokenArrays":
        provenance: list[Provenance | None] = [
            ((int(f), int(p)),) for f, p in view.provenance
        ]
        count = view.token_count
        return cls(view.vectors, np.ones(count, dtype=np.int64), provenance)

    def to_tokens(self) -> tuple[Token, ...]:
        return tuple(
            Token(vector=self.vectors[i], weight=int(self.weights[i]),
                  provenance=self.provenance[i])
            for i in range(len(self.weights))
        )


def _merge_group(state: _TokenArrays, dest: int, sources: list[int],
                 weighting: str) -> tuple[np.ndarray, int, Provenance | None]:
    """Merged (vector, weight, provenance) for one destination and its sources.

    Accumulates in float64, destination term first then sources ascending,
    and rounds to float32 once; size weighting divides by total weight,
    plain weighting by the participant count.
    """
    acc = state.vectors[dest].astype(np.float64)
    if weighting == "size":
        acc = acc * state.weights[dest]
        for p in sources:
            acc = acc + state.vectors[p].astype(np.float64) * state.weights[p]
        divisor = int(state.weights[dest]) + int(sum(state.weights[p] for p in sources))
    else:
        for p in sources:
            acc = acc + state.vectors[p].astype(np.float64)
        divisor = 1 + len(sources)
    weight = int(state.weights[dest]) + int(sum(state.weights[p] for p in sources))
    parts = [state.provenance[dest]] + [state.provenance[p] for p in sources]
    if any(part is None for part in parts):
        provenance = None
    else:
        provenance = tuple(pair for part in parts for pair in part)  # type: ignore[union-attr]
    return (acc / divisor).astype(np.float32), weight, provenance


def _merge_step_arrays(state: _TokenArrays, r: int, config: MergeConfig,
                       rng: SplitMix64 | None,
                       tiebreak_bug: bool = False) -> tuple[_TokenArrays, MergeStep]:
    count = len(state.weights)
    if not 1 <= r <= count - 1:
        raise ValueError(f"need 1 <= r <= {count - 1}, got r={r}")
    source_count = max((count + 1) // 2, r)
    p_idx, q_idx = _partition_indices(count, source_count, config.partition, rng)
    scores, p_flagged, q_flagged = pairwise_scores(
        state.vectors[p_idx], state.vectors[q_idx], config.similarity_heads)

    best_pos = np.argmax(scores, axis=1)  # first maximum, so lowest q wins ties
    best = scores[np.arange(len(p_idx)), best_pos]
    rank_tiebreak = np.arange(len(p_idx))
    if tiebreak_bug:  # test hook: deliberately reversed tie-breaking
        rank_tiebreak = rank_tiebreak[::-1].copy()
    order = np.lexsort((rank_tiebreak, -best))
    selected = order[:r]

    flagged = np.concatenate([p_idx[p_flagged], q_idx[q_flagged]])
    if flagged.size:
        logger.warning("zero-norm head slices on %d token(s); their edges score -inf",
                       flagged.size)

    by_dest: dict[int, list[int]] = {}
    for i in selected:
        by_dest.setdefault(int(q_idx[best_pos[i]]), []).append(int(p_idx[i]))

    new_vectors = state.vectors.copy()
    new_weights = state.weights.copy()
    new_provenance = list(state.provenance)
    for dest, sources in by_dest.items():
        sources.sort()
        vector, weight, provenance = _merge_group(state, dest, sources,
                                                  config.weighting)
        new_vectors[dest] = vector
        new_weights[dest] = weight
        new_provenance[dest] = provenance

    keep = np.ones(count, dtype=bool)
    keep[p_idx[selected]] = False
    survivors = np.flatnonzero(keep)
    record = MergeStep(
        tokens_before=count,
        removed=r,
        pairs=tuple((int(p_idx[i]), int(q_idx[best_pos[i]]), float(best[i]))
                    for i in selected),
        zero_norm_tokens=tuple(int(i) for i in np.sort(flagged)),
        pair_evals=len(p_idx) * len(q_idx),
    )
    return _TokenArrays(new_vectors[survivors], new_weights[survivors],
                        [new_provenance[i] for i in survivors]), record


def merge_step(tokens: list[Token], r: int, config: MergeConfig,
               rng: SplitMix64 | None = None) -> tuple[list[Token], MergeStep]:
    """One merge step over an explicit token list; returns R - r tokens.

    Under the random partition rule, draws come from ``rng`` when given
    (callers running multiple steps thread one stream through); otherwise a
    fresh stream for (partition_seed, segment 0) is used.
    """
    if config.partition == "random" and rng is None:
        rng = SplitMix64(derive(config.partition_seed, 0))
    state, record = _merge_step_arrays(_TokenArrays.from_tokens(tokens), r,
                                       config, rng)
    return list(state.to_tokens()), record


def merge_segment(view: SegmentView, config: MergeConfig,
                  _tiebreak_bug: bool = False) -> tuple[SegmentFeature, MergePlan]:
    """Reduce one segment to exactly ``config.tokens_per_segment`` tokens.

    Pure given (view, config): the seeded partition stream is derived from
    (partition_seed, segment_index), so segments can merge concurrently and
    still reproduce bit-identical results in any order.
    """
    target = config.tokens_per_segment
    if target > view.token_count:
        raise MTooLarge(
            f"segment holds {view.token_count} tokens, cannot emit {target}")
    if view.vectors.shape[1] % config.similarity_heads != 0:
        raise CNotDividingD(
            f"{config.similarity_heads} heads do not divide "
            f"dimension {view.vectors.shape[1]}")
    rng = None
    if config.partition == "random":
        rng = SplitMix64(derive(config.partition_seed, view.segment_index))
    state = _TokenArrays.from_view(view)
    steps = []
    for r in merge_schedule(view.token_count, target, config.schedule,
                            config.fixed_step):
        state, record = _merge_step_arrays(state, r, config, rng,
                                           tiebreak_bug=_tiebreak_bug)
        steps.append(record)
    plan = MergePlan(segment_index=view.segment_index,
                     initial_count=view.token_count,
                     final_count=target, steps=tuple(steps))
    return SegmentFeature(view.segment_index, state.to_tokens()), plan
