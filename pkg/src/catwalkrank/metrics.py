"""Ranking quality measures for scored groups.

A group (one competition year) has one true judge score and one predicted
score per participant.  True scores are first turned into integer ratings
(best participant gets the largest rating), then compared against the
predicted ordering with NDCG and Kendall's tau.
"""

import warnings

import numpy as np

from .errors import EmptySet, InvalidArgument, InvalidInput, ShapeError

__all__ = [
    "ratings_from_scores",
    "order_by_score",
    "dcg",
    "ndcg",
    "pairwise_labels",
    "concordance",
    "kendall_tau",
    "winner_predicted_rank",
]


def _as_scores(x, name):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite values")
    return a


def order_by_score(scores):
    """Indices ordered best-first by score, ties broken by original index."""
    s = _as_scores(scores, "scores")
    return np.argsort(-s, kind="stable")


def ratings_from_scores(true_scores):
    """Integer ratings from true scores: the best of n items gets n, the worst 1.

    Ties keep input order (the earlier index receives the better rating)
    and trigger a warning, since tied judge scores have no defined order.
    """
    s = _as_scores(true_scores, "true_scores")
    n = s.size
    if n == 0:
        raise EmptySet("no scores given")
    if np.unique(s).size < n:
        warnings.warn("tied true scores: earlier index gets the better rating")
    order = np.argsort(-s, kind="stable")
    ratings = np.empty(n, dtype=np.int64)
    ratings[order] = np.arange(n, 0, -1)
    return ratings


def dcg(gains, b):
    """Discounted cumulative gain of `gains` listed in predicted order.

    Position j contributes (2**gain - 1) / log2(max(2, j)), so the top two
    positions share the same discount.
    """
    g = np.asarray(gains, dtype=np.float64)[:b]
    j = np.arange(1, g.size + 1)
    return float(np.sum((np.exp2(g) - 1.0) / np.log2(np.maximum(j, 2))))


def ndcg(predicted_order, ratings, b=None):
    """Normalized DCG of a predicted ordering against integer ratings.

    `predicted_order` is a permutation of range(n), best-first.  `ratings`
    is indexed by item, not by position.  `b` truncates the sum to the top
    b positions and defaults to n.
    """
    order = np.asarray(predicted_order)
    r = np.asarray(ratings, dtype=np.float64)
    if order.ndim != 1 or r.ndim != 1 or order.size != r.size:
        raise ShapeError(
            f"order and ratings must be 1-D of equal length, got {order.shape} and {r.shape}"
        )
    n = r.size
    if n == 0:
        raise EmptySet("empty ranking")
    if not np.array_equal(np.sort(order), np.arange(n)):
        raise InvalidArgument("predicted_order is not a permutation of range(n)")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise InvalidArgument("ratings must be finite and non-negative")
    if b is None:
        b = n
    if not 1 <= b <= n:
        raise InvalidArgument(f"b must be in [1, {n}], got {b}")
    ideal = dcg(np.sort(r)[::-1], b)
    if ideal == 0.0:
        # all-zero ratings: any order is ideal
        return 1.0
    return dcg(r[order], b) / ideal


def pairwise_labels(scores):
    """Preference label for every pair (l, k) with l < k: +1 if the l-th
    score is strictly higher, else -1 (ties count as -1)."""
    s = _as_scores(scores, "scores")
    if s.size < 2:
        raise InvalidArgument("need at least two scores to form pairs")
    lidx, kidx = np.triu_indices(s.size, k=1)
    return np.where(s[lidx] > s[kidx], 1, -1).astype(np.int64)


def concordance(predicted_scores, true_scores):
    """Counts (C, D) of pairs ordered the same / differently by the two
    score vectors, under the pairwise labelling above."""
    p = _as_scores(predicted_scores, "predicted_scores")
    t = _as_scores(true_scores, "true_scores")
    if p.size != t.size:
        raise ShapeError(f"length mismatch: {p.size} predicted vs {t.size} true")
    lp = pairwise_labels(p)
    lt = pairwise_labels(t)
    d = int(np.sum(lp != lt))
    return lp.size - d, d


def kendall_tau(predicted_scores, true_scores):
    """Kendall rank correlation (C - D) / (C + D) over all pairs."""
    c, d = concordance(predicted_scores, true_scores)
    return (c - d) / (c + d)


def winner_predicted_rank(predicted_scores, true_scores):
    """1-based position of the true winner in the predicted ordering."""
    p = _as_scores(predicted_scores, "predicted_scores")
    t = _as_scores(true_scores, "true_scores")
    if p.size != t.size:
        raise ShapeError(f"length mismatch: {p.size} predicted vs {t.size} true")
    if t.size == 0:
        raise EmptySet("no scores given")
    winner = int(np.argmax(t))
    order = order_by_score(p)
    return int(np.nonzero(order == winner)[0][0]) + 1
