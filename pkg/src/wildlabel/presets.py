"""Canned pool specifications and training configs used by the demos and tests.

These are deliberately small, fully synthetic benchmarks. The score-space pools
keep every quantity analytically computable; the feature-space benchmark is
tuned so that the interesting failure modes of naive labeling actually show up
(see `three_cluster_field`).
"""

from __future__ import annotations

import math

from .learner import TrainConfig
from .pools import (
    CovariateShift,
    FeatureMixtureSpec,
    GaussianBlob,
    GaussianMixture,
    ScoreMixtureSpec,
)

__all__ = [
    "skewed_score_pool",
    "symmetric_score_pool",
    "three_cluster_field",
    "scorer_config",
    "joint_config",
]


def skewed_score_pool(pool_size: int = 20000, pi_s: float = 0.3, num_classes: int = 2) -> ScoreMixtureSpec:
    """Unbalanced two-component score pool: 0.7 N(0,1) inliers, 0.3 N(3,1) semantic.

    The signed disagreement between the two densities has a single, closed-form
    maximizer: nu* = (2 ln(7/3) + 9) / 6 when pi_s = 0.3 (equate the weighted
    pdfs and solve the quadratic in the exponent). Handy when a test wants to
    compare a search result against ground truth.
    """
    return ScoreMixtureSpec(
        pi_c=0.0,
        pi_s=pi_s,
        in_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
        cov_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
        sem_density=GaussianMixture((3.0,), (1.0,), (1.0,)),
        pool_size=pool_size,
        num_classes=num_classes,
    )


def symmetric_score_pool(pool_size: int = 20000, num_classes: int = 2) -> ScoreMixtureSpec:
    """Equal-weight N(0,1) / N(4,1) pool; by symmetry the crossover sits at 2.0."""
    return ScoreMixtureSpec(
        pi_c=0.0,
        pi_s=0.5,
        in_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
        cov_density=GaussianMixture((0.0,), (1.0,), (1.0,)),
        sem_density=GaussianMixture((4.0,), (1.0,), (1.0,)),
        pool_size=pool_size,
        num_classes=num_classes,
    )


# Feature-space benchmark geometry. Three ID classes sit on a ring of radius 3;
# the semantic mass is split between three blobs chosen for what they do to a
# linear scorer trained on the clean ID set:
#
#   * an outer "wedge" blob on the 30-degree ray, past the ring, midway between
#     two class directions. Max-logit grows only half as fast along a between-
#     class ray as along a class ray, so this blob scores high-energy (wild-
#     looking) yet stays linearly separable from every ID cluster;
#   * a "central" blob near the logit tie point. It owns the very top of the
#     energy ranking but no linear boundary can carve it away from the ID
#     classes, so a labeling rule that spends its whole budget on the top of
#     the ranking keeps paying for examples its detector cannot use;
#   * a thin "bridge" blob between the center and the wedge, which keeps the
#     cumulative novelty-vs-inlier tally climbing through the gap so the tally
#     has a single dominant peak rather than two competing ones.
#
# Weights are expressed by repeating blobs because the sampler draws blobs
# uniformly: 11/16 wedge, 4/16 central, 1/16 bridge.
_RING_RADIUS = 3.0
_RAY = math.pi / 6.0  # the between-class direction the outer blobs sit on


def three_cluster_field(pool_size: int = 12000) -> FeatureMixtureSpec:
    """Three-class 2-D benchmark with mixed covariate + semantic contamination."""
    wedge = GaussianBlob((3.7 * math.cos(_RAY), 3.7 * math.sin(_RAY)), 0.65)
    central = GaussianBlob((0.15, 0.35), 0.85)
    bridge = GaussianBlob((1.9 * math.cos(_RAY), 1.9 * math.sin(_RAY)), 0.6)
    class_angles = (math.pi / 2.0, 7.0 * math.pi / 6.0, 11.0 * math.pi / 6.0)
    return FeatureMixtureSpec(
        pi_c=0.4,
        pi_s=0.3,
        class_blobs=tuple(
            GaussianBlob((_RING_RADIUS * math.cos(a), _RING_RADIUS * math.sin(a)), 0.8)
            for a in class_angles
        ),
        semantic_blobs=(wedge,) * 11 + (central,) * 4 + (bridge,),
        covariate_shift=CovariateShift((0.35, 0.25), 0.62),
        pool_size=pool_size,
        labeled_size=600,
        heldout_sizes=(1000, 1000, 1000),
    )


def scorer_config(seed: int) -> TrainConfig:
    """Config for the initial ID-only classifier whose energies rank the pool."""
    return TrainConfig(epochs=300, learning_rate=0.2, seed=seed)


def joint_config(seed: int) -> TrainConfig:
    """Config for the post-labeling classifier + detector fit."""
    return TrainConfig(
        alpha=10.0,
        learning_rate=0.2,
        epochs=300,
        batch_size=0,
        hidden_width=0,
        seed=seed,
    )
