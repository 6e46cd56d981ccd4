"""Labeling strategies: which wild examples get sent to the annotator.

Every strategy spends a budget of k oracle calls (reporting any unspent
remainder when the pool runs dry on a side) and returns the labeled set
together with its hidden-tag composition. Composition is evaluation-only;
no selection decision reads the hidden tags except the two oracle-region
baselines, which are upper-bound references by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .pools import Membership, WildPool, composition_counts
from .search import LabeledSet, Phase1Result, phase1_search

ORACLE_REGION_MODES = ("most-cov", "least-sem", "mixed")


@dataclass(frozen=True)
class SelectionResult:
    labeled: LabeledSet
    composition: tuple[int, int, int]
    mu_hat: float | None
    unspent: int
    phase1: Phase1Result | None = None


def _check_budget(pool: WildPool, k: int) -> None:
    if k <= 0:
        raise ConfigurationError(f"budget must be positive, got {k}")
    if k > len(pool):
        raise ConfigurationError(f"budget {k} exceeds pool size {len(pool)}")
    if not pool.scored:
        raise InputError("pool must be scored before selection")


def _label_indices(pool: WildPool, indices, oracle, labeled: LabeledSet | None = None) -> LabeledSet:
    if labeled is None:
        labeled = LabeledSet()
    for idx in indices:
        example = pool.example(int(idx))
        labeled.insert(example.example_id, example.raw_score, int(oracle(example)))
    return labeled


def _result(pool: WildPool, labeled: LabeledSet, mu_hat=None, unspent=0, phase1=None) -> SelectionResult:
    return SelectionResult(
        labeled=labeled,
        composition=composition_counts(pool, labeled.ids),
        mu_hat=mu_hat,
        unspent=unspent,
        phase1=phase1,
    )


def _top_indices(pool: WildPool, candidates: np.ndarray, k: int) -> np.ndarray:
    """k highest-score candidates; equal scores prefer the smaller id."""
    order = np.lexsort((pool.ids[candidates], -pool.scores[candidates]))
    return candidates[order[:k]]


def _bottom_indices(pool: WildPool, candidates: np.ndarray, k: int) -> np.ndarray:
    """k lowest-score candidates; equal scores prefer the smaller id."""
    order = np.lexsort((pool.ids[candidates], pool.scores[candidates]))
    return candidates[order[:k]]


def aha_select(pool: WildPool, k: int, oracle, seed: int, rule: str = "keep-max") -> SelectionResult:
    """Adaptive two-phase labeling around the estimated threshold.

    Phase 1 spends k/2 labels on noisy binary search for the threshold
    muHat. Phase 2 spends the rest (plus any phase-1 rollover, split evenly
    between the sides) on the k/4 highest-score unlabeled examples at or
    below muHat and the k/4 lowest-score unlabeled examples above it; a
    deficit on one side shifts to the other.
    """
    _check_budget(pool, k)
    if k % 4 != 0:
        raise ConfigurationError(f"adaptive selection needs a budget divisible by 4, got {k}")

    phase1 = phase1_search(pool, k // 2, oracle, seed, rule=rule)
    labeled = phase1.labeled.copy()
    mu_hat = phase1.mu_hat

    phase2_budget = k // 2 + phase1.unspent
    below_quota = phase2_budget - phase2_budget // 2
    above_quota = phase2_budget // 2

    unlabeled = np.flatnonzero(~np.isin(pool.ids, np.array(labeled.ids, dtype=pool.ids.dtype)))
    below = unlabeled[pool.scores[unlabeled] <= mu_hat]
    above = unlabeled[pool.scores[unlabeled] > mu_hat]

    take_below = min(below_quota, len(below))
    shifted = above_quota + (below_quota - take_below)
    take_above = min(shifted, len(above))
    leftover = shifted - take_above
    extra_below = min(leftover, len(below) - take_below)
    take_below += extra_below
    unspent = leftover - extra_below

    picks = np.concatenate(
        (_top_indices(pool, below, take_below), _bottom_indices(pool, above, take_above))
    )
    labeled = _label_indices(pool, picks, oracle, labeled)
    return _result(pool, labeled, mu_hat=mu_hat, unspent=unspent, phase1=phase1)


def top_k_select(pool: WildPool, k: int, oracle) -> SelectionResult:
    """Label the k most OOD-looking examples (largest scores, ties by id)."""
    _check_budget(pool, k)
    picks = _top_indices(pool, np.arange(len(pool)), k)
    return _result(pool, _label_indices(pool, picks, oracle))


def tpr_threshold(id_scores: np.ndarray, tpr: float) -> float:
    """Smallest observed ID score with at least a tpr fraction of ID scores
    strictly below it (nearest rank); falls back to the maximum when no
    observed score qualifies."""
    id_scores = np.asarray(id_scores, dtype=float)
    if len(id_scores) == 0:
        raise InputError("id scores must be nonempty")
    if not 0.0 < tpr <= 1.0:
        raise InputError(f"tpr must lie in (0, 1], got {tpr}")
    v = np.sort(id_scores)
    needed = tpr * len(v)
    distinct = np.unique(v)
    below = np.searchsorted(v, distinct, side="left")
    ok = np.flatnonzero(below >= needed - 1e-12)
    if len(ok) == 0:
        return float(distinct[-1])
    return float(distinct[ok[0]])


def near_boundary_select(
    pool: WildPool, labeled_id_scores: np.ndarray, k: int, oracle
) -> SelectionResult:
    """Label the k/2 nearest examples on each side of the 95th-percentile
    ID score, a one-shot stand-in for threshold-centered labeling."""
    _check_budget(pool, k)
    lam = tpr_threshold(labeled_id_scores, 0.95)

    below_quota = k - k // 2
    above_quota = k // 2
    indices = np.arange(len(pool))
    below = indices[pool.scores <= lam]
    above = indices[pool.scores > lam]

    def nearest(candidates: np.ndarray, quota: int) -> np.ndarray:
        dist = np.abs(pool.scores[candidates] - lam)
        order = np.lexsort((pool.ids[candidates], dist))
        return candidates[order[:quota]]

    take_below = min(below_quota, len(below))
    shifted = above_quota + (below_quota - take_below)
    take_above = min(shifted, len(above))
    leftover = shifted - take_above
    extra_below = min(leftover, len(below) - take_below)
    unspent = leftover - extra_below

    picks = np.concatenate((nearest(below, take_below + extra_below), nearest(above, take_above)))
    labeled = _label_indices(pool, picks, oracle)
    return _result(pool, labeled, unspent=unspent)


def oracle_region_select(pool: WildPool, k: int, oracle, mode: str) -> SelectionResult:
    """Truth-peeking reference regions.

    most-cov: top k by score among examples at or below the maximum
    covariate score. least-sem: bottom k among examples at or above the
    minimum semantic score. mixed: half from each, duplicates dropped and
    backfilled alternately from the two ranked lists.
    """
    _check_budget(pool, k)
    if mode not in ORACLE_REGION_MODES:
        raise ConfigurationError(f"oracle region mode must be one of {ORACLE_REGION_MODES}, got {mode!r}")

    indices = np.arange(len(pool))

    def most_cov_ranked() -> np.ndarray:
        cov = pool.scores[pool.membership == Membership.COVARIATE]
        if len(cov) == 0:
            raise ConfigurationError("most-cov region needs covariate examples in the pool")
        candidates = indices[pool.scores <= cov.max()]
        return _top_indices(pool, candidates, len(candidates))

    def least_sem_ranked() -> np.ndarray:
        sem = pool.scores[pool.membership == Membership.SEMANTIC]
        if len(sem) == 0:
            raise ConfigurationError("least-sem region needs semantic examples in the pool")
        candidates = indices[pool.scores >= sem.min()]
        return _bottom_indices(pool, candidates, len(candidates))

    if mode == "most-cov":
        picks = most_cov_ranked()[:k]
    elif mode == "least-sem":
        picks = least_sem_ranked()[:k]
    else:
        mc = list(most_cov_ranked())
        ls = list(least_sem_ranked())
        half = k // 2
        chosen: dict[int, None] = {}
        for idx in mc[:half]:
            chosen.setdefault(int(idx), None)
        for idx in ls[: k - half]:
            chosen.setdefault(int(idx), None)
        mc_rest = iter(mc[half:])
        ls_rest = iter(ls[k - half :])
        turn = 0
        while len(chosen) < k:
            progressed = False
            for source in (mc_rest, ls_rest) if turn == 0 else (ls_rest, mc_rest):
                for idx in source:
                    if int(idx) not in chosen:
                        chosen[int(idx)] = None
                        progressed = True
                        break
                if progressed:
                    break
            if not progressed:
                break
            turn = 1 - turn
        picks = np.array(list(chosen), dtype=int)
    labeled = _label_indices(pool, picks, oracle)
    unspent = k - len(labeled)
    return _result(pool, labeled, unspent=unspent)


def random_select(pool: WildPool, k: int, oracle, seed: int) -> SelectionResult:
    """Label k examples drawn uniformly without replacement."""
    _check_budget(pool, k)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=k, replace=False)
    labeled = _label_indices(pool, picks, oracle)
    return _result(pool, labeled)
