import itertools
import math

import numpy as np
import pytest

from catwalkrank.errors import EmptySet, InvalidArgument, InvalidInput, ShapeError
from catwalkrank.metrics import (
    concordance,
    dcg,
    kendall_tau,
    ndcg,
    order_by_score,
    pairwise_labels,
    ratings_from_scores,
    winner_predicted_rank,
)


def brute_dcg(gains, b):
    """Direct transcription of the definition, position by position."""
    total = 0.0
    for j, g in enumerate(gains[:b], start=1):
        total += (2.0 ** g - 1.0) / math.log2(max(2, j))
    return total


def brute_kendall(pred, true):
    """Count pairs explicitly with the tie-to--1 labelling."""
    n = len(pred)
    c = d = 0
    for l in range(n):
        for k in range(l + 1, n):
            yp = 1 if pred[l] > pred[k] else -1
            yt = 1 if true[l] > true[k] else -1
            if yp == yt:
                c += 1
            else:
                d += 1
    return c, d


def test_ratings_basic():
    assert ratings_from_scores([9.1, 7.4, 8.0]).tolist() == [3, 1, 2]
    assert ratings_from_scores([9.1, 8.7]).tolist() == [2, 1]
    r = ratings_from_scores(np.arange(10, dtype=float))
    assert sorted(r.tolist()) == list(range(1, 11))
    assert r[-1] == 10  # highest score gets N_q


def test_ratings_ties_stable_and_warn():
    with pytest.warns(UserWarning, match="tied"):
        r = ratings_from_scores([9.0, 9.0, 8.0])
    assert r.tolist() == [3, 2, 1]


def test_ratings_errors():
    with pytest.raises(EmptySet):
        ratings_from_scores([])
    with pytest.raises(InvalidInput):
        ratings_from_scores([1.0, np.nan])


def test_dcg_hand_values():
    # ratings (3,1,2) in predicted order
    expected = 7.0 / 1.0 + 1.0 / 1.0 + 3.0 / math.log2(3)
    assert dcg([3, 1, 2], 3) == pytest.approx(expected, abs=1e-12)
    # top-two positions share the log2(2)=1 discount
    assert dcg([3, 1], 2) == dcg([1, 3], 2)


def test_ndcg_reversed_hand_case():
    ratings = np.array([3, 2, 1])
    reversed_order = np.array([2, 1, 0])
    got = ndcg(reversed_order, ratings)
    num = 1.0 + 3.0 + 7.0 / math.log2(3)
    den = 7.0 + 3.0 + 1.0 / math.log2(3)
    assert got == pytest.approx(num / den, abs=1e-12)
    assert got == pytest.approx(0.7917, abs=5e-5)


def test_ndcg_perfect_is_exactly_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        scores = rng.permutation(n).astype(float)
        ratings = ratings_from_scores(scores)
        assert ndcg(order_by_score(scores), ratings) == 1.0


def test_ndcg_top_two_swap_is_free():
    ratings = np.array([4, 3, 2, 1])
    ideal = np.array([0, 1, 2, 3])
    swapped = np.array([1, 0, 2, 3])
    assert ndcg(swapped, ratings) == pytest.approx(1.0, abs=1e-15)


def test_ndcg_maximized_only_by_ideal_orders():
    # brute force over all permutations: NDCG as computed equals 1 exactly
    # when the order's DCG reaches the permutation maximum
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        ratings = ratings_from_scores(rng.permutation(n).astype(float))
        best = max(brute_dcg(ratings[list(p)], n) for p in itertools.permutations(range(n)))
        for p in itertools.permutations(range(n)):
            val = ndcg(np.array(p), ratings)
            assert 0.0 <= val <= 1.0 + 1e-15
            if brute_dcg(ratings[list(p)], n) == pytest.approx(best, abs=1e-9):
                assert val == pytest.approx(1.0, abs=1e-12)
            else:
                assert val < 1.0


def test_ndcg_cutoff_and_errors():
    ratings = np.array([3, 2, 1])
    order = np.array([0, 1, 2])
    assert ndcg(order, ratings, b=1) == 1.0
    with pytest.raises(InvalidArgument):
        ndcg(order, ratings, b=0)
    with pytest.raises(InvalidArgument):
        ndcg(order, ratings, b=4)
    with pytest.raises(InvalidArgument):
        ndcg(np.array([0, 0, 2]), ratings)
    with pytest.raises(ShapeError):
        ndcg(np.array([0, 1]), ratings)
    with pytest.raises(EmptySet):
        ndcg(np.array([], dtype=int), np.array([]))


def test_kendall_trivial_cases():
    s = np.arange(10, dtype=float)
    assert kendall_tau(s, s) == 1.0
    assert kendall_tau(-s, s) == -1.0
    # D=10 out of 45 pairs
    assert 1.0 - 2.0 * 10.0 / 45.0 == pytest.approx(0.5555555555555556)


def test_kendall_sign_asymmetry_of_ties():
    # ties map to -1 in both lists, which counts as agreement
    assert kendall_tau([1.0, 1.0], [5.0, 5.0]) == 1.0
    assert kendall_tau([2.0, 1.0], [5.0, 5.0]) == -1.0


def test_kendall_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(500):
        n = int(rng.integers(2, 8))
        pred = rng.normal(size=n)
        true = np.round(rng.uniform(0, 10, size=n), 1)
        c, d = brute_kendall(pred, true)
        gc, gd = concordance(pred, true)
        assert (gc, gd) == (c, d)
        assert gc + gd == n * (n - 1) // 2
        assert kendall_tau(pred, true) == pytest.approx((c - d) / (c + d), abs=1e-15)
        assert kendall_tau(pred, true) == pytest.approx(1.0 - 2.0 * d / (c + d), abs=1e-12)


def test_metrics_invariant_to_monotone_transform():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        pred = rng.normal(size=n)
        true = rng.normal(size=n)
        ratings = ratings_from_scores(true)
        transformed = 3.0 * pred + 7.0  # strictly increasing
        assert kendall_tau(pred, true) == kendall_tau(transformed, true)
        assert ndcg(order_by_score(pred), ratings) == ndcg(order_by_score(transformed), ratings)


def test_pairwise_labels_orientation():
    # label for pair (l, k) answers "does l beat k"
    labels = pairwise_labels([9.0, 8.5, 8.5])
    assert labels.tolist() == [1, 1, -1]  # (0,1), (0,2), (1,2): tie -> -1


def test_kendall_errors():
    with pytest.raises(ShapeError):
        kendall_tau([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(InvalidArgument):
        kendall_tau([1.0], [1.0])
    with pytest.raises(InvalidInput):
        kendall_tau([1.0, np.inf], [1.0, 2.0])


def test_winner_predicted_rank():
    true = np.array([7.0, 9.5, 8.0])
    assert winner_predicted_rank([0.1, 0.9, 0.5], true) == 1
    assert winner_predicted_rank([0.9, 0.1, 0.5], true) == 3
    # ties in predictions: stable order by index
    assert winner_predicted_rank([0.5, 0.5, 0.5], true) == 2
    with pytest.raises(ShapeError):
        winner_predicted_rank([1.0], true)
