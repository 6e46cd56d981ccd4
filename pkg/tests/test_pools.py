"""Pool generation, the analytic objective, and pool serialization."""

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import brentq

from wildlabel import (
    ConfigurationError,
    CovariateShift,
    FeatureMixtureSpec,
    GaussianBlob,
    GaussianMixture,
    InputError,
    Membership,
    OOD_LABEL,
    ScoreMixtureSpec,
    WildExample,
    analytic_max_ambiguity,
    composition_counts,
    oracle_label,
    read_pool,
    sample_feature_wild,
    sample_score_wild,
    skewed_score_pool,
    symmetric_score_pool,
    three_cluster_field,
    wild_median,
    write_pool,
)

from conftest import make_pool


def _example(membership, class_label):
    return WildExample(example_id=0, raw_score=0.0, membership=membership, class_label=class_label)


class TestOracle:
    def test_semantic_gets_ood_symbol(self):
        assert oracle_label(_example(Membership.SEMANTIC, OOD_LABEL)) == OOD_LABEL

    def test_id_and_covariate_reveal_class(self):
        assert oracle_label(_example(Membership.ID, 3)) == 3
        assert oracle_label(_example(Membership.COVARIATE, 1)) == 1


class TestGaussianMixture:
    def test_pdf_matches_scipy(self, rng):
        mix = GaussianMixture((0.0, 3.0, -1.0), (1.0, 0.5, 2.0), (0.2, 0.5, 0.3))
        x = rng.uniform(-8, 8, size=200)
        expected = (
            0.2 * stats.norm.pdf(x, 0.0, 1.0)
            + 0.5 * stats.norm.pdf(x, 3.0, 0.5)
            + 0.3 * stats.norm.pdf(x, -1.0, 2.0)
        )
        np.testing.assert_allclose(mix.pdf(x), expected, rtol=1e-12)

    def test_cdf_matches_scipy(self, rng):
        mix = GaussianMixture((0.0, 4.0), (1.0, 1.0), (0.7, 0.3))
        x = rng.uniform(-6, 10, size=100)
        expected = 0.7 * stats.norm.cdf(x, 0.0, 1.0) + 0.3 * stats.norm.cdf(x, 4.0, 1.0)
        np.testing.assert_allclose(mix.cdf(x), expected, rtol=1e-12)

    def test_unnormalized_weights_are_normalized(self):
        a = GaussianMixture((0.0,), (1.0,), (1.0,))
        b = GaussianMixture((0.0,), (1.0,), (17.0,))
        x = np.linspace(-3, 3, 11)
        np.testing.assert_allclose(a.pdf(x), b.pdf(x))

    def test_sampling_is_seed_deterministic(self):
        mix = GaussianMixture((0.0, 5.0), (1.0, 1.0), (0.5, 0.5))
        a = mix.sample(np.random.default_rng(7), 50)
        b = mix.sample(np.random.default_rng(7), 50)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize(
        "means,stds,weights",
        [
            ((), (), ()),
            ((0.0,), (0.0,), (1.0,)),
            ((0.0,), (-1.0,), (1.0,)),
            ((0.0,), (1.0,), (-0.5,)),
            ((0.0, 1.0), (1.0,), (1.0,)),
        ],
    )
    def test_invalid_components_rejected(self, means, stds, weights):
        with pytest.raises(ConfigurationError):
            GaussianMixture(means, stds, weights)


class TestScoreSampling:
    def test_deterministic_and_sized(self):
        spec = skewed_score_pool(pool_size=500)
        a = sample_score_wild(spec, 11)
        b = sample_score_wild(spec, 11)
        assert len(a) == 500
        np.testing.assert_array_equal(a.scores, b.scores)
        np.testing.assert_array_equal(a.membership, b.membership)
        np.testing.assert_array_equal(a.class_labels, b.class_labels)

    def test_different_seeds_differ(self):
        spec = skewed_score_pool(pool_size=500)
        a = sample_score_wild(spec, 1)
        b = sample_score_wild(spec, 2)
        assert not np.array_equal(a.scores, b.scores)

    def test_membership_fractions_converge(self):
        spec = ScoreMixtureSpec(
            pi_c=0.25,
            pi_s=0.35,
            in_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
            cov_density=GaussianMixture((1.0,), (1.0,), (1.0,)),
            sem_density=GaussianMixture((4.0,), (1.0,), (1.0,)),
            pool_size=40000,
        )
        pool = sample_score_wild(spec, 3)
        frac_cov = np.mean(pool.membership == Membership.COVARIATE)
        frac_sem = np.mean(pool.membership == Membership.SEMANTIC)
        assert abs(frac_cov - 0.25) < 0.01
        assert abs(frac_sem - 0.35) < 0.01

    def test_class_labels_cover_range_and_semantic_has_none(self):
        spec = skewed_score_pool(pool_size=2000, num_classes=3)
        pool = sample_score_wild(spec, 5)
        sem = pool.membership == Membership.SEMANTIC
        assert set(pool.class_labels[~sem]) == {1, 2, 3}
        assert set(pool.class_labels[sem]) == {OOD_LABEL}

    def test_semantic_scores_follow_their_density(self):
        # semantic component centered far right: its scores should average high
        spec = skewed_score_pool(pool_size=20000)
        pool = sample_score_wild(spec, 9)
        sem_mean = pool.scores[pool.membership == Membership.SEMANTIC].mean()
        in_mean = pool.scores[pool.membership == Membership.ID].mean()
        assert abs(sem_mean - 3.0) < 0.1
        assert abs(in_mean - 0.0) < 0.1

    def test_invalid_rates_rejected(self):
        good = GaussianMixture((0.0,), (1.0,), (1.0,))
        with pytest.raises(ConfigurationError):
            ScoreMixtureSpec(pi_c=0.7, pi_s=0.5, in_density=good, cov_density=good, sem_density=good, pool_size=10)
        with pytest.raises(ConfigurationError):
            ScoreMixtureSpec(pi_c=-0.1, pi_s=0.5, in_density=good, cov_density=good, sem_density=good, pool_size=10)


class TestAnalyticObjective:
    def test_skewed_crossing_matches_closed_form(self):
        # equating 0.7 phi(x) = 0.3 phi(x - 3) and solving for x gives
        # nu* = (2 ln(7/3) + 9) / 6; the grid argmax must land within two steps
        spec = skewed_score_pool()
        nu, curve = analytic_max_ambiguity(spec, grid_resolution=20001)
        closed_form = (2.0 * np.log(7.0 / 3.0) + 9.0) / 6.0
        step = curve.grid[1] - curve.grid[0]
        assert abs(nu - closed_form) <= 2 * step

    def test_symmetric_crossing_at_midpoint(self):
        nu, curve = analytic_max_ambiguity(symmetric_score_pool(), grid_resolution=20001)
        step = curve.grid[1] - curve.grid[0]
        assert abs(nu - 2.0) <= 2 * step

    def test_argmax_matches_direct_quadrature(self):
        # independent oracle: integrate the signed density gap on a dense grid
        spec = ScoreMixtureSpec(
            pi_c=0.1,
            pi_s=0.4,
            in_density=GaussianMixture((0.0, 1.0), (1.0, 0.7), (0.6, 0.4)),
            cov_density=GaussianMixture((0.5,), (1.2,), (1.0,)),
            sem_density=GaussianMixture((3.5, 5.0), (0.8, 1.0), (0.5, 0.5)),
            pool_size=100,
        )
        nu, _ = analytic_max_ambiguity(spec, grid_resolution=4001)
        lo, hi = spec.support_bounds()
        grid = np.linspace(lo, hi, 200001)
        non_sem = (1.0 - spec.pi_c - spec.pi_s) * spec.in_density.pdf(grid) + spec.pi_c * spec.cov_density.pdf(grid)
        sem = spec.pi_s * spec.sem_density.pdf(grid)
        objective = np.cumsum(non_sem - sem) * (grid[1] - grid[0])
        oracle_argmax = grid[int(np.argmax(objective))]
        assert abs(nu - oracle_argmax) < 2 * (hi - lo) / 4000

    def test_curve_value_is_cumulative_gap(self):
        spec = skewed_score_pool()
        _, curve = analytic_max_ambiguity(spec, grid_resolution=2001)
        assert curve.values.shape == curve.grid.shape
        # objective starts near zero mass and the max is positive for this spec
        assert curve.values[0] == pytest.approx(0.0, abs=1e-3)
        assert curve.values.max() > 0.0

    def test_grid_resolution_validation(self):
        with pytest.raises(ConfigurationError):
            analytic_max_ambiguity(skewed_score_pool(), grid_resolution=1)


class TestWildMedian:
    def test_matches_root_of_cdf(self):
        spec = skewed_score_pool()
        med = wild_median(spec)
        oracle = brentq(lambda x: spec.wild_cdf(x) - 0.5, -10, 10)
        assert med == pytest.approx(oracle, abs=1e-6)
        assert spec.wild_cdf(med) == pytest.approx(0.5, abs=1e-9)


class TestFeatureSampling:
    def test_shapes_and_determinism(self):
        spec = three_cluster_field(pool_size=600)
        a_in, a_pool, a_splits = sample_feature_wild(spec, 21)
        b_in, b_pool, b_splits = sample_feature_wild(spec, 21)
        assert a_pool.features.shape == (600, 2)
        assert len(a_in) == 600 and a_in.features.shape[1] == 2
        np.testing.assert_array_equal(a_pool.features, b_pool.features)
        np.testing.assert_array_equal(a_in.labels, b_in.labels)
        np.testing.assert_array_equal(a_splits.sem_features, b_splits.sem_features)
        assert not a_pool.scored  # scores arrive only via score_pool

    def test_labeled_set_covers_all_classes(self):
        spec = three_cluster_field(pool_size=400)
        s_in, _, _ = sample_feature_wild(spec, 4)
        assert set(s_in.labels) == {1, 2, 3}

    def test_covariate_examples_are_shifted_class_blobs(self):
        spec = FeatureMixtureSpec(
            pi_c=0.5,
            pi_s=0.0,
            class_blobs=(GaussianBlob((0.0, 0.0), 0.1), GaussianBlob((0.0, 1.0), 0.1)),
            semantic_blobs=(),
            covariate_shift=CovariateShift((5.0, 0.0), 1.0),
            pool_size=4000,
            labeled_size=10,
            heldout_sizes=(10, 10, 0),
        )
        _, pool, _ = sample_feature_wild(spec, 8)
        cov = pool.features[pool.membership == Membership.COVARIATE]
        ins = pool.features[pool.membership == Membership.ID]
        assert abs(cov[:, 0].mean() - 5.0) < 0.05
        assert abs(ins[:, 0].mean() - 0.0) < 0.05

    def test_semantic_blobs_drawn_uniformly(self):
        spec = FeatureMixtureSpec(
            pi_c=0.0,
            pi_s=0.9,
            class_blobs=(GaussianBlob((0.0, 0.0), 0.5), GaussianBlob((0.0, 3.0), 0.5)),
            semantic_blobs=(GaussianBlob((-40.0, 0.0), 0.5), GaussianBlob((40.0, 0.0), 0.5)),
            covariate_shift=CovariateShift((0.0, 0.0), 1.0),
            pool_size=4000,
            labeled_size=10,
            heldout_sizes=(10, 0, 10),
        )
        _, pool, _ = sample_feature_wild(spec, 13)
        sem = pool.features[pool.membership == Membership.SEMANTIC]
        right = np.mean(sem[:, 0] > 0)
        assert abs(right - 0.5) < 0.03  # binomial slack at n approx 4000

    def test_heldout_sizes_respected(self):
        spec = three_cluster_field(pool_size=300)
        _, _, splits = sample_feature_wild(spec, 2)
        assert splits.id_features.shape == (1000, 2)
        assert splits.cov_features.shape == (1000, 2)
        assert splits.sem_features.shape == (1000, 2)
        assert set(splits.id_labels) <= {1, 2, 3}


class TestPoolStructure:
    def test_composition_counts(self):
        pool = make_pool(
            [0.1, 0.2, 0.3, 0.4],
            membership=[Membership.ID, Membership.COVARIATE, Membership.SEMANTIC, Membership.ID],
        )
        assert composition_counts(pool, [0, 1, 2, 3]) == (2, 1, 1)
        assert composition_counts(pool, [2]) == (0, 0, 1)
        assert composition_counts(pool, []) == (0, 0, 0)

    def test_score_order_breaks_ties_by_id(self):
        pool = make_pool([1.0, 0.5, 0.5], ids=[10, 7, 3])
        np.testing.assert_array_equal(pool.ids[pool.score_order], [3, 7, 10])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InputError):
            make_pool([0.0, 1.0], ids=[5, 5])

    def test_with_scores_returns_new_pool(self):
        pool = make_pool([np.nan, np.nan])
        scored = pool.with_scores(np.array([1.0, 2.0]))
        assert scored is not pool
        assert not pool.scored
        assert scored.scored


class TestPoolIo:
    def test_round_trip(self, tmp_path, rng):
        spec = skewed_score_pool(pool_size=50)
        pool = sample_score_wild(spec, 31)
        path = tmp_path / "pool.csv"
        write_pool(pool, path, reveal_truth=True)
        back = read_pool(path)
        np.testing.assert_allclose(back.scores, pool.scores)
        np.testing.assert_array_equal(back.ids, pool.ids)
        np.testing.assert_array_equal(back.membership, pool.membership)

    def test_hidden_columns_absent_by_default(self, tmp_path):
        pool = sample_score_wild(skewed_score_pool(pool_size=20), 1)
        path = tmp_path / "pool.csv"
        write_pool(pool, path)
        header = path.read_text().splitlines()[0]
        assert "membership" not in header
        assert "classLabel" not in header
