"""Labeling strategies: budget accounting, region semantics, baselines."""

import numpy as np
import pytest

from wildlabel import (
    ConfigurationError,
    GaussianMixture,
    Membership,
    OOD_LABEL,
    ScoreMixtureSpec,
    aha_select,
    near_boundary_select,
    oracle_label,
    oracle_region_select,
    random_select,
    sample_score_wild,
    skewed_score_pool,
    symmetric_score_pool,
    top_k_select,
    tpr_threshold,
)

from conftest import make_pool


@pytest.fixture(scope="module")
def pool():
    # all three memberships present so every strategy is exercisable
    spec = ScoreMixtureSpec(
        pi_c=0.2,
        pi_s=0.3,
        in_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
        cov_density=GaussianMixture((1.0,), (1.2,), (1.0,)),
        sem_density=GaussianMixture((3.0,), (1.0,), (1.0,)),
        pool_size=2000,
    )
    return sample_score_wild(spec, 42)


def select(pool, strategy, k, seed=0):
    if strategy == "aha":
        return aha_select(pool, k, oracle_label, seed)
    if strategy == "topk":
        return top_k_select(pool, k, oracle_label)
    if strategy == "boundary":
        id_like = pool.scores[pool.membership == Membership.ID]
        return near_boundary_select(pool, id_like, k, oracle_label)
    if strategy == "random":
        return random_select(pool, k, oracle_label, seed)
    return oracle_region_select(pool, k, oracle_label, strategy)


ALL_STRATEGIES = ["aha", "topk", "boundary", "most-cov", "least-sem", "mixed", "random"]


class TestBudgetAccounting:
    @pytest.mark.parametrize("strategy", ALL_STRATEGIES)
    def test_labeled_plus_unspent_equals_budget(self, pool, strategy):
        result = select(pool, strategy, 100)
        assert len(result.labeled) + result.unspent == 100
        assert sum(result.composition) == len(result.labeled)

    @pytest.mark.parametrize("strategy", ALL_STRATEGIES)
    def test_no_duplicate_labels(self, pool, strategy):
        result = select(pool, strategy, 100)
        ids = result.labeled.ids
        assert len(ids) == len(set(ids))

    def test_budget_validation(self, pool):
        with pytest.raises(ConfigurationError):
            top_k_select(pool, 0, oracle_label)
        with pytest.raises(ConfigurationError):
            top_k_select(pool, len(pool) + 1, oracle_label)
        with pytest.raises(ConfigurationError):
            aha_select(pool, 102, oracle_label, 0)  # not divisible by 4


class TestTopK:
    def test_matches_full_sort_oracle(self, pool):
        k = 150
        result = top_k_select(pool, k, oracle_label)
        order = np.lexsort((pool.ids, -pool.scores))
        want = sorted(int(pool.ids[i]) for i in order[:k])
        assert sorted(result.labeled.ids) == want

    def test_whole_pool(self):
        small = sample_score_wild(skewed_score_pool(pool_size=40), 3)
        result = top_k_select(small, 40, oracle_label)
        assert sorted(result.labeled.ids) == sorted(int(i) for i in small.ids)

    def test_score_ties_break_by_id(self):
        tied = make_pool([5.0, 5.0, 5.0, 1.0], ids=[30, 10, 20, 1])
        result = top_k_select(tied, 2, oracle_label)
        assert sorted(result.labeled.ids) == [10, 20]


class TestTprThreshold:
    def test_nearest_rank_on_1_to_100(self):
        assert tpr_threshold(np.arange(1, 101, dtype=float), 0.95) == 96.0

    def test_nearest_rank_on_0_to_99(self):
        assert tpr_threshold(np.arange(100, dtype=float), 0.95) == 95.0

    def test_identical_scores_fall_back_to_that_value(self):
        assert tpr_threshold(np.full(50, 7.0), 0.95) == 7.0

    def test_tpr_one_returns_max(self):
        assert tpr_threshold(np.array([1.0, 2.0, 9.0]), 1.0) == 9.0

    def test_matches_naive_scan(self, rng):
        for _ in range(100):
            scores = np.round(rng.normal(size=int(rng.integers(1, 60))), 1)
            tpr = float(rng.uniform(0.05, 1.0))
            got = tpr_threshold(scores, tpr)
            naive = None
            for v in np.unique(scores):
                if np.sum(scores < v) >= tpr * len(scores) - 1e-12:
                    naive = float(v)
                    break
            if naive is None:
                naive = float(scores.max())
            assert got == naive

    def test_validation(self):
        with pytest.raises(Exception):
            tpr_threshold(np.array([]), 0.95)
        with pytest.raises(Exception):
            tpr_threshold(np.array([1.0]), 0.0)


class TestNearBoundary:
    def test_matches_distance_oracle(self, pool):
        id_scores = pool.scores[pool.membership == Membership.ID]
        k = 80
        result = near_boundary_select(pool, id_scores, k, oracle_label)
        lam = tpr_threshold(id_scores, 0.95)
        below = [(abs(s - lam), int(i)) for i, s in zip(pool.ids, pool.scores) if s <= lam]
        above = [(abs(s - lam), int(i)) for i, s in zip(pool.ids, pool.scores) if s > lam]
        want = sorted(i for _, i in sorted(below)[: k // 2]) + sorted(
            i for _, i in sorted(above)[: k // 2]
        )
        assert sorted(result.labeled.ids) == sorted(want)

    def test_one_sided_pool_shifts_quota(self):
        # everything sits at or below the threshold, so the whole budget
        # lands on the below side
        scores = np.arange(20, dtype=float)
        p = make_pool(scores)
        result = near_boundary_select(p, scores, 10, oracle_label)
        assert len(result.labeled) == 10
        assert result.unspent == 0


class TestAha:
    def test_deterministic(self, pool):
        a = aha_select(pool, 100, oracle_label, seed=6)
        b = aha_select(pool, 100, oracle_label, seed=6)
        assert a.labeled.ids == b.labeled.ids
        assert a.mu_hat == b.mu_hat

    def test_phase1_embedded_and_mu_hat_consistent(self, pool):
        result = aha_select(pool, 100, oracle_label, seed=6)
        assert result.phase1 is not None
        assert result.mu_hat == result.phase1.mu_hat
        assert len(result.phase1.labeled) <= 50

    def test_phase2_never_relabels_phase1(self, pool):
        result = aha_select(pool, 100, oracle_label, seed=2)
        assert len(result.labeled.ids) == len(set(result.labeled.ids)) == 100

    def test_phase2_takes_nearest_on_each_side(self, pool):
        result = aha_select(pool, 100, oracle_label, seed=9)
        mu = result.mu_hat
        phase1_ids = set(result.phase1.labeled.ids)
        phase2_ids = set(result.labeled.ids) - phase1_ids
        spent_p2 = len(phase2_ids)
        # reconstruct the intended picks: among unlabeled-after-phase-1,
        # the highest scores <= mu and the lowest scores > mu
        rest = [
            (float(s), int(i))
            for i, s in zip(pool.ids, pool.scores)
            if int(i) not in phase1_ids
        ]
        below = sorted((x for x in rest if x[0] <= mu), key=lambda t: (-t[0], t[1]))
        above = sorted((x for x in rest if x[0] > mu), key=lambda t: (t[0], t[1]))
        quota_below = spent_p2 - spent_p2 // 2
        want = {i for _, i in below[:quota_below]} | {i for _, i in above[: spent_p2 // 2]}
        assert phase2_ids == want

    def test_phase2_contiguous_in_score_order(self, pool):
        # the two phase-2 runs are contiguous in the pool's score order once
        # phase-1 labels are removed
        result = aha_select(pool, 100, oracle_label, seed=13)
        phase1_ids = set(result.phase1.labeled.ids)
        phase2_ids = set(result.labeled.ids) - phase1_ids
        order = [
            int(pool.ids[i])
            for i in np.lexsort((pool.ids, pool.scores))
            if int(pool.ids[i]) not in phase1_ids
        ]
        flags = [i in phase2_ids for i in order]
        runs = sum(
            1 for j in range(len(flags)) if flags[j] and (j == 0 or not flags[j - 1])
        )
        assert runs <= 2

    def test_disjoint_supports_label_around_the_gap(self):
        # non-OOD mass at 0..9, semantic mass at 100..109: mu lands in the
        # gap and phase 2 brackets it
        scores = np.concatenate([np.arange(10.0), np.arange(100.0, 110.0)])
        membership = [Membership.ID] * 10 + [Membership.SEMANTIC] * 10
        p = make_pool(scores, membership=membership)
        result = aha_select(p, 8, oracle_label, seed=1)
        labels = np.asarray(result.labeled.labels)
        if (labels == OOD_LABEL).any() and (labels != OOD_LABEL).any():
            assert 9.0 < result.mu_hat < 100.0

    def test_exhaustive_budget(self):
        p = make_pool(np.arange(4, dtype=float))
        result = aha_select(p, 4, oracle_label, seed=0)
        assert sorted(result.labeled.ids) == [0, 1, 2, 3]
        assert result.unspent == 0


class TestOracleRegions:
    def test_most_cov_stays_at_or_below_max_covariate(self, pool):
        result = oracle_region_select(pool, 200, oracle_label, "most-cov")
        cov_max = pool.scores[pool.membership == Membership.COVARIATE].max()
        chosen = [pool.scores[pool.id_to_index[i]] for i in result.labeled.ids]
        assert max(chosen) <= cov_max

    def test_least_sem_stays_at_or_above_min_semantic(self, pool):
        result = oracle_region_select(pool, 200, oracle_label, "least-sem")
        sem_min = pool.scores[pool.membership == Membership.SEMANTIC].min()
        chosen = [pool.scores[pool.id_to_index[i]] for i in result.labeled.ids]
        assert min(chosen) >= sem_min

    def test_covariate_at_global_max_turns_most_cov_into_top_k(self):
        scores = np.arange(30, dtype=float)
        membership = [Membership.ID] * 29 + [Membership.COVARIATE]
        p = make_pool(scores, membership=membership)
        got = oracle_region_select(p, 5, oracle_label, "most-cov")
        want = top_k_select(p, 5, oracle_label)
        assert sorted(got.labeled.ids) == sorted(want.labeled.ids)

    def test_mixed_deduplicates_and_backfills(self, pool):
        result = oracle_region_select(pool, 200, oracle_label, "mixed")
        assert len(result.labeled) == 200
        assert len(set(result.labeled.ids)) == 200

    def test_mixed_reports_unspent_when_regions_run_dry(self):
        # gap examples belong to neither region, so the union cannot cover k
        scores = np.arange(10, dtype=float)
        membership = (
            [Membership.COVARIATE] * 2 + [Membership.ID] * 6 + [Membership.SEMANTIC] * 2
        )
        p = make_pool(scores, membership=membership)
        result = oracle_region_select(p, 10, oracle_label, "mixed")
        assert result.unspent == 6
        assert len(result.labeled) == 4

    def test_missing_membership_rejected(self):
        p = make_pool(np.arange(5, dtype=float))  # all ID
        with pytest.raises(ConfigurationError):
            oracle_region_select(p, 2, oracle_label, "most-cov")
        with pytest.raises(ConfigurationError):
            oracle_region_select(p, 2, oracle_label, "least-sem")

    def test_unknown_mode_rejected(self, pool):
        with pytest.raises(ConfigurationError):
            oracle_region_select(pool, 10, oracle_label, "centroid")


class TestRandom:
    def test_deterministic_per_seed(self, pool):
        a = random_select(pool, 50, oracle_label, seed=3)
        b = random_select(pool, 50, oracle_label, seed=3)
        c = random_select(pool, 50, oracle_label, seed=4)
        assert a.labeled.ids == b.labeled.ids
        assert a.labeled.ids != c.labeled.ids

    def test_whole_pool(self):
        small = sample_score_wild(skewed_score_pool(pool_size=25), 5)
        result = random_select(small, 25, oracle_label, seed=1)
        assert sorted(result.labeled.ids) == sorted(int(i) for i in small.ids)

    def test_composition_tracks_pool_proportions(self):
        big = sample_score_wild(skewed_score_pool(pool_size=10000), 6)
        result = random_select(big, 2000, oracle_label, seed=2)
        n_id, n_cov, n_sem = result.composition
        assert abs(n_sem / 2000 - 0.3) < 0.05
        assert n_cov == 0  # this spec has pi_c = 0


class TestCompositionBlindness:
    @pytest.mark.parametrize("strategy", ["topk", "boundary", "random"])
    def test_selection_ignores_hidden_tags(self, strategy, rng):
        scores = rng.normal(size=300)
        membership = rng.integers(0, 3, size=300)
        a = make_pool(scores.copy(), membership=membership.copy())
        b = make_pool(scores.copy(), membership=rng.permutation(membership))
        if strategy == "boundary":
            ref = np.sort(scores)[:150]
            ra = near_boundary_select(a, ref, 40, oracle_label)
            rb = near_boundary_select(b, ref, 40, oracle_label)
        elif strategy == "topk":
            ra = top_k_select(a, 40, oracle_label)
            rb = top_k_select(b, 40, oracle_label)
        else:
            ra = random_select(a, 40, oracle_label, seed=8)
            rb = random_select(b, 40, oracle_label, seed=8)
        assert ra.labeled.ids == rb.labeled.ids


class TestCorrectionProxy:
    def test_threshold_centered_band_maximizes_corrections(self):
        # a detector thresholding at the analytic crossing of a symmetric
        # two-Gaussian pool is contradicted most often by labels collected
        # in the band centered exactly there
        pool_spec = symmetric_score_pool(pool_size=20000)
        p = sample_score_wild(pool_spec, 12)
        lam_star = 2.0
        is_sem = p.membership == Membership.SEMANTIC

        def corrections(center, k=500):
            dist = np.abs(p.scores - center)
            band = np.argsort(dist)[:k]
            above = p.scores[band] > lam_star
            return int(np.sum(~is_sem[band] & above) + np.sum(is_sem[band] & ~above))

        centered = corrections(lam_star)
        for off_center in (0.5, 1.0, 3.0, 3.5):
            assert centered > corrections(off_center)
