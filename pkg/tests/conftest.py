"""Shared fixtures and brute-force oracles used across the test modules."""

import numpy as np
import pytest

from wildlabel import LabeledSet, Membership, OOD_LABEL, WildPool


def make_pool(scores, membership=None, class_labels=None, ids=None, features=None):
    """Build a pool straight from arrays, bypassing the samplers."""
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    if ids is None:
        ids = np.arange(n)
    if membership is None:
        membership = np.full(n, Membership.ID, dtype=int)
    if class_labels is None:
        class_labels = np.where(np.asarray(membership) == Membership.SEMANTIC, OOD_LABEL, 1)
    return WildPool(
        ids=np.asarray(ids, dtype=int),
        scores=scores,
        membership=np.asarray(membership, dtype=int),
        class_labels=np.asarray(class_labels, dtype=int),
        features=None if features is None else np.asarray(features, dtype=float),
    )


def random_labeled_set(rng, n, score_span=10.0, duplicate_rate=0.3):
    """Labeled set with random scores (duplicates included) and random labels."""
    scores = rng.uniform(-score_span, score_span, size=n)
    dup = rng.random(n) < duplicate_rate
    if n > 1:
        scores[dup] = rng.choice(scores, size=dup.sum())
    labels = np.where(rng.random(n) < 0.5, OOD_LABEL, rng.integers(1, 4, size=n))
    return LabeledSet.from_arrays(np.arange(n), scores, labels)


def brute_force_argmax(labeled, wild_scores):
    """Candidate-by-candidate scan of the count objective, no prefix tricks."""
    wild_scores = np.asarray(wild_scores, dtype=float)
    median = float(np.median(wild_scores))
    if len(labeled) == 0:
        return median, 0
    scores = labeled.scores
    signs = labeled.signs()
    distinct = np.unique(scores)
    candidates = [distinct[0] - 1.0]
    candidates += [(a + b) / 2.0 for a, b in zip(distinct[:-1], distinct[1:])]
    candidates.append(distinct[-1] + 1.0)
    best_value = None
    best_cand = None
    for cand in candidates:
        value = int(signs[scores <= cand].sum())
        if (
            best_value is None
            or value > best_value
            or (value == best_value and abs(cand - median) < abs(best_cand - median))
        ):
            best_value = value
            best_cand = cand
    return float(best_cand), int(best_value)


def pairwise_auroc(id_scores, ood_scores):
    wins = ties = 0
    for o in ood_scores:
        for i in id_scores:
            if o > i:
                wins += 1
            elif o == i:
                ties += 1
    return (wins + 0.5 * ties) / (len(id_scores) * len(ood_scores))


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
