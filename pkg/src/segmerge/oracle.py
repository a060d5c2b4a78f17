"""Brute-force reference merger for differential testing.

Same observable contract as :func:`segmerge.merging.merge_segment`, written
with no optimizations: plain Python loops build the partition, scan every
candidate edge, rank with an explicit stable sort, and merge with per-element
arithmetic. Nothing is cached between steps. Scores come from the one shared
numeric kernel (:func:`segmerge.similarity.pairwise_scores`) so that rounding
never masks an orchestration bug; everything downstream of the scores is
independent of the production path.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .config import MergeConfig
from .errors import CNotDividingD, InputTooLargeForOracle, MTooLarge
from .merging import merge_segment
from .rng import SplitMix64, derive, sample_k
from .segmentation import SegmentView
from .similarity import pairwise_scores
from .types import SegmentFeature, Token

ORACLE_MAX_TOKENS = 4096

_SelectedEdge = tuple[int, int, float]
_OracleToken = tuple[np.ndarray, int, tuple]  # (vector f32, weight, provenance)


def _schedule(start: int, target: int, config: MergeConfig) -> list[int]:
    removals = []
    current = start
    while current > target:
        if config.schedule == "halving":
            half = current // 2
            following = half if half >= 2 * target else target
            removals.append(current - following)
            current = following
        else:
            removals.append(min(config.fixed_step, current - target))
            current -= removals[-1]
    return removals


def _step(tokens: list[_OracleToken], r: int, config: MergeConfig,
          stream: SplitMix64 | None) -> tuple[list[_OracleToken], list[_SelectedEdge]]:
    count = len(tokens)
    source_count = max((count + 1) // 2, r)
    if config.partition == "alternating":
        zigzag = list(range(0, count, 2)) + list(range(1, count, 2))
        p_list = sorted(zigzag[:source_count])
        q_list = sorted(zigzag[source_count:])
    else:
        chosen, rest = sample_k(stream, count, source_count)
        p_list = [int(i) for i in chosen]
        q_list = [int(i) for i in rest]

    scores, _, _ = pairwise_scores(np.stack([tokens[i][0] for i in p_list]),
                                   np.stack([tokens[i][0] for i in q_list]),
                                   config.similarity_heads)

    edges = []
    for i, p in enumerate(p_list):
        best_j = 0
        best_score = scores[i, 0]
        for j in range(1, len(q_list)):
            if scores[i, j] > best_score:
                best_score = scores[i, j]
                best_j = j
        edges.append((float(best_score), p, q_list[best_j]))
    edges = sorted(edges, key=lambda edge: (-edge[0], edge[1]))
    selected = [(p, q, score) for score, p, q in edges[:r]]

    merged_into: dict[int, list[int]] = {}
    for p, q, _ in selected:
        merged_into.setdefault(q, []).append(p)
    removed = {p for p, _, _ in selected}

    dim = tokens[0][0].shape[0]
    replacements: dict[int, _OracleToken] = {}
    for dest, sources in merged_into.items():
        sources = sorted(sources)
        dest_vector, dest_weight, dest_prov = tokens[dest]
        values = []
        for k in range(dim):
            if config.weighting == "size":
                acc = float(dest_vector[k]) * dest_weight
                for p in sources:
                    acc = acc + float(tokens[p][0][k]) * tokens[p][1]
                acc = acc / (dest_weight + sum(tokens[p][1] for p in sources))
            else:
                acc = float(dest_vector[k])
                for p in sources:
                    acc = acc + float(tokens[p][0][k])
                acc = acc / (1 + len(sources))
            values.append(np.float32(acc))
        weight = dest_weight + sum(tokens[p][1] for p in sources)
        provenance = tuple(dest_prov)
        for p in sources:
            provenance = provenance + tuple(tokens[p][2])
        replacements[dest] = (np.asarray(values, dtype=np.float32), weight,
                              provenance)

    survivors = []
    for index in range(count):
        if index in removed:
            continue
        survivors.append(replacements.get(index, tokens[index]))
    return survivors, selected


def _states(view: SegmentView, config: MergeConfig
            ) -> Iterator[tuple[list[_SelectedEdge], list[_OracleToken]]]:
    tokens: list[_OracleToken] = [
        (np.array(view.vectors[i], dtype=np.float32), 1,
         ((int(view.provenance[i, 0]), int(view.provenance[i, 1])),))
        for i in range(view.token_count)
    ]
    stream = None
    if config.partition == "random":
        stream = SplitMix64(derive(config.partition_seed, view.segment_index))
    for r in _schedule(view.token_count, config.tokens_per_segment, config):
        tokens, selected = _step(tokens, r, config, stream)
        yield selected, tokens


def oracle_merge_segment(view: SegmentView,
                         config: MergeConfig) -> SegmentFeature:
    """Quadratic reference implementation of merge_segment."""
    if view.token_count > ORACLE_MAX_TOKENS:
        raise InputTooLargeForOracle(
            f"{view.token_count} tokens exceed the oracle cap of "
            f"{ORACLE_MAX_TOKENS}")
    if config.tokens_per_segment > view.token_count:
        raise MTooLarge(
            f"segment holds {view.token_count} tokens, cannot emit "
            f"{config.tokens_per_segment}")
    if view.vectors.shape[1] % config.similarity_heads != 0:
        raise CNotDividingD(
            f"{config.similarity_heads} heads do not divide "
            f"dimension {view.vectors.shape[1]}")
    tokens: list[_OracleToken] = [
        (np.array(view.vectors[i], dtype=np.float32), 1,
         ((int(view.provenance[i, 0]), int(view.provenance[i, 1])),))
        for i in range(view.token_count)
    ]
    for selected, tokens in _states(view, config):
        pass
    return SegmentFeature(view.segment_index, tuple(
        Token(vector=vector, weight=weight, provenance=provenance)
        for vector, weight, provenance in tokens
    ))


def features_identical(a: SegmentFeature, b: SegmentFeature) -> bool:
    """Bitwise equality of token vectors, weights, and provenance."""
    if len(a.tokens) != len(b.tokens):
        return False
    for ta, tb in zip(a.tokens, b.tokens):
        if ta.weight != tb.weight or ta.provenance != tb.provenance:
            return False
        if ta.vector.dtype != tb.vector.dtype:
            return False
        if not np.array_equal(ta.vector, tb.vector):
            return False
    return True


def first_divergence(view: SegmentView, config: MergeConfig,
                     tiebreak_bug: bool = False) -> int | None:
    """First step index where production and oracle disagree, None if never.

    Compares the per-step selected edges, then the final token states; used
    by the differential check command to localize failures.
    """
    fast_feature, plan = merge_segment(view, config, _tiebreak_bug=tiebreak_bug)
    oracle_tokens: list[_OracleToken] = []
    for i, (selected, tokens) in enumerate(_states(view, config)):
        oracle_tokens = tokens
        fast_pairs = [(p, q) for p, q, _ in plan.steps[i].pairs]
        oracle_pairs = [(p, q) for p, q, _ in selected]
        if fast_pairs != oracle_pairs:
            return i
    oracle_feature = oracle_merge_segment(view, config)
    if not features_identical(fast_feature, oracle_feature):
        return max(len(plan.steps) - 1, 0)
    return None
