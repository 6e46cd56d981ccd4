"""Synthetic wild pools drawn from controllable Gaussian mixtures.

A wild pool mixes in-distribution, covariate-shifted, and semantically
novel examples. Each example carries a hidden membership tag and a hidden
class label; a simulated annotator (`oracle_label`) reveals the class of
non-semantic examples and answers OOD for semantic ones. Pools come in two
modes: score-space pools carry a raw scalar score per example and no
features, feature-space pools carry feature vectors that must be scored by
a trained classifier before threshold search can run.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import bisect
from scipy.special import ndtr

from .errors import ConfigurationError, InputError

#: Label value the annotator returns for semantically novel examples.
OOD_LABEL = -1

_FRACTION_WARN_TOL = 0.05
_FRACTION_WARN_MIN_N = 1000


class Membership(IntEnum):
    """Hidden provenance tag of a wild example."""

    ID = 0
    COVARIATE = 1
    SEMANTIC = 2


@dataclass(frozen=True)
class WildExample:
    """Single-example view into a pool. The membership and class label are
    hidden ground truth; selection code must only consult them through the
    labeling oracle."""

    example_id: int
    raw_score: float
    membership: Membership
    class_label: int
    features: np.ndarray | None = None


def oracle_label(example: WildExample) -> int:
    """Simulated annotator: OOD_LABEL iff the example is semantic novelty,
    otherwise the hidden class label."""
    if example.membership is Membership.SEMANTIC:
        return OOD_LABEL
    return int(example.class_label)


@dataclass(eq=False)
class WildPool:
    """Columnar pool of wild examples.

    Treated as immutable after creation: scoring returns a new pool via
    `with_scores` instead of mutating in place. `scores` is NaN for
    feature-space pools that have not been scored yet.
    """

    ids: np.ndarray
    scores: np.ndarray
    membership: np.ndarray
    class_labels: np.ndarray
    features: np.ndarray | None = None
    seed: int | None = None
    spec: object = None

    def __post_init__(self):
        n = len(self.ids)
        if len(self.scores) != n or len(self.membership) != n or len(self.class_labels) != n:
            raise InputError("pool columns have mismatched lengths")
        if self.features is not None and len(self.features) != n:
            raise InputError("pool features length does not match ids")
        if len(np.unique(self.ids)) != n:
            raise InputError("pool example ids are not unique")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def scored(self) -> bool:
        return bool(np.isfinite(self.scores).all()) if len(self) else True

    def example(self, index: int) -> WildExample:
        feats = self.features[index] if self.features is not None else None
        return WildExample(
            example_id=int(self.ids[index]),
            raw_score=float(self.scores[index]),
            membership=Membership(int(self.membership[index])),
            class_label=int(self.class_labels[index]),
            features=feats,
        )

    def with_scores(self, scores: np.ndarray) -> "WildPool":
        scores = np.asarray(scores, dtype=float)
        if scores.shape != self.scores.shape:
            raise InputError("replacement scores have the wrong shape")
        return replace(self, scores=scores)

    @cached_property
    def score_order(self) -> np.ndarray:
        """Indices that sort the pool by (score, id) ascending."""
        return np.lexsort((self.ids, self.scores))

    @cached_property
    def sorted_scores(self) -> np.ndarray:
        return self.scores[self.score_order]

    @cached_property
    def id_to_index(self) -> dict:
        return {int(i): pos for pos, i in enumerate(self.ids)}


def composition_counts(pool: WildPool, example_ids: Sequence[int]) -> tuple[int, int, int]:
    """Hidden-tag composition (nId, nCov, nSem) of a set of pool ids.

    Evaluation-only: selection decisions never depend on this."""
    idx = np.array([pool.id_to_index[int(i)] for i in example_ids], dtype=int)
    mem = pool.membership[idx] if len(idx) else np.array([], dtype=int)
    return (
        int(np.sum(mem == Membership.ID)),
        int(np.sum(mem == Membership.COVARIATE)),
        int(np.sum(mem == Membership.SEMANTIC)),
    )


# ---------------------------------------------------------------------------
# one-dimensional Gaussian mixtures (score-space mode)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted mixture of 1-D normal components."""

    means: tuple[float, ...]
    stds: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.means) == len(self.stds) == len(self.weights)) or not self.means:
            raise ConfigurationError("mixture components: means, stds, weights must be equal-length and nonempty")
        if any(s <= 0 for s in self.stds):
            raise ConfigurationError("mixture stds must be positive")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ConfigurationError("mixture weights must be nonnegative with positive sum")

    @property
    def _normalized_weights(self) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        return w / w.sum()

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)[..., None]
        mu = np.asarray(self.means)
        sd = np.asarray(self.stds)
        z = (x - mu) / sd
        comp = np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * sd)
        return comp @ self._normalized_weights

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)[..., None]
        z = (x - np.asarray(self.means)) / np.asarray(self.stds)
        return ndtr(z) @ self._normalized_weights

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        w = self._normalized_weights
        comp = rng.choice(len(w), size=size, p=w)
        mu = np.asarray(self.means)[comp]
        sd = np.asarray(self.stds)[comp]
        return rng.normal(mu, sd)

    def support_bounds(self, n_std: float = 8.0) -> tuple[float, float]:
        lo = min(m - n_std * s for m, s in zip(self.means, self.stds))
        hi = max(m + n_std * s for m, s in zip(self.means, self.stds))
        return lo, hi


def _check_mixture_rates(pi_c: float, pi_s: float) -> None:
    if not (0.0 <= pi_c <= 1.0):
        raise ConfigurationError(f"pi_c must lie in [0, 1], got {pi_c}")
    if not (0.0 <= pi_s <= 1.0):
        raise ConfigurationError(f"pi_s must lie in [0, 1], got {pi_s}")
    if pi_c + pi_s > 1.0:
        raise ConfigurationError(f"pi_c + pi_s must not exceed 1, got {pi_c + pi_s}")


@dataclass(frozen=True)
class ScoreMixtureSpec:
    """Analytically controllable score-space wild mixture.

    The wild score density is (1 - piC - piS) * inDensity + piC * covDensity
    + piS * semDensity. Class labels of non-semantic examples are uniform
    over [1..numClasses]; they matter only to the labeling oracle.
    """

    pi_c: float
    pi_s: float
    in_density: GaussianMixture
    cov_density: GaussianMixture
    sem_density: GaussianMixture
    pool_size: int
    num_classes: int = 2

    def __post_init__(self):
        _check_mixture_rates(self.pi_c, self.pi_s)
        if self.pool_size <= 0:
            raise ConfigurationError(f"pool_size must be positive, got {self.pool_size}")
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be at least 2, got {self.num_classes}")

    def wild_pdf(self, x) -> np.ndarray:
        p_in = 1.0 - self.pi_c - self.pi_s
        return (
            p_in * self.in_density.pdf(x)
            + self.pi_c * self.cov_density.pdf(x)
            + self.pi_s * self.sem_density.pdf(x)
        )

    def wild_cdf(self, x) -> np.ndarray:
        p_in = 1.0 - self.pi_c - self.pi_s
        return (
            p_in * self.in_density.cdf(x)
            + self.pi_c * self.cov_density.cdf(x)
            + self.pi_s * self.sem_density.cdf(x)
        )

    def support_bounds(self, n_std: float = 8.0) -> tuple[float, float]:
        bounds = [
            m.support_bounds(n_std)
            for m in (self.in_density, self.cov_density, self.sem_density)
        ]
        return min(b[0] for b in bounds), max(b[1] for b in bounds)


def _warn_on_fraction_drift(membership: np.ndarray, pi_c: float, pi_s: float) -> None:
    n = len(membership)
    if n < _FRACTION_WARN_MIN_N:
        return
    target = np.array([1.0 - pi_c - pi_s, pi_c, pi_s])
    got = np.array([np.mean(membership == t) for t in (Membership.ID, Membership.COVARIATE, Membership.SEMANTIC)])
    drift = np.abs(got - target).max()
    if drift > _FRACTION_WARN_TOL:
        warnings.warn(
            f"empirical membership fractions {got.round(4).tolist()} deviate from "
            f"{target.round(4).tolist()} by {drift:.4f} (> {_FRACTION_WARN_TOL})",
            stacklevel=3,
        )


def _sample_memberships(rng: np.random.Generator, n: int, pi_c: float, pi_s: float) -> np.ndarray:
    probs = np.array([1.0 - pi_c - pi_s, pi_c, pi_s])
    return rng.choice(3, size=n, p=probs).astype(np.int8)


def sample_score_wild(spec: ScoreMixtureSpec, seed: int) -> WildPool:
    """Draw a score-space wild pool. Pure function of (spec, seed)."""
    rng = np.random.default_rng(seed)
    n = spec.pool_size
    membership = _sample_memberships(rng, n, spec.pi_c, spec.pi_s)

    scores = np.empty(n, dtype=float)
    for tag, density in (
        (Membership.ID, spec.in_density),
        (Membership.COVARIATE, spec.cov_density),
        (Membership.SEMANTIC, spec.sem_density),
    ):
        mask = membership == tag
        count = int(mask.sum())
        if count:
            scores[mask] = density.sample(rng, count)

    class_labels = rng.integers(1, spec.num_classes + 1, size=n)
    class_labels[membership == Membership.SEMANTIC] = OOD_LABEL

    _warn_on_fraction_drift(membership, spec.pi_c, spec.pi_s)
    return WildPool(
        ids=np.arange(n, dtype=np.int64),
        scores=scores,
        membership=membership,
        class_labels=class_labels,
        seed=seed,
        spec=spec,
    )


# ---------------------------------------------------------------------------
# feature-space mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBlob:
    """Isotropic Gaussian blob in feature space."""

    mean: tuple[float, ...]
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigurationError(f"blob scale must be positive, got {self.scale}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        mean = np.asarray(self.mean, dtype=float)
        return mean + self.scale * rng.standard_normal((size, mean.shape[0]))


@dataclass(frozen=True)
class CovariateShift:
    """Shift applied to every class blob to produce covariate examples:
    the mean moves by `offset` and the noise scale multiplies by `scale_factor`."""

    offset: tuple[float, ...]
    scale_factor: float = 1.0

    def __post_init__(self):
        if self.scale_factor <= 0:
            raise ConfigurationError(f"covariate scale_factor must be positive, got {self.scale_factor}")

    def apply(self, blob: GaussianBlob) -> GaussianBlob:
        mean = tuple(m + o for m, o in zip(blob.mean, self.offset))
        return GaussianBlob(mean=mean, scale=blob.scale * self.scale_factor)


@dataclass(frozen=True)
class FeatureMixtureSpec:
    """Feature-space wild mixture with a clean labeled ID set and held-out
    evaluation splits.

    class_blobs[c] generates class c + 1. Covariate examples come from the
    shifted class blobs and keep their class labels; semantic examples come
    from `semantic_blobs` (chosen uniformly) and have no class.
    """

    pi_c: float
    pi_s: float
    class_blobs: tuple[GaussianBlob, ...]
    semantic_blobs: tuple[GaussianBlob, ...]
    covariate_shift: CovariateShift
    pool_size: int
    labeled_size: int
    heldout_sizes: tuple[int, int, int] = (1000, 1000, 1000)

    def __post_init__(self):
        _check_mixture_rates(self.pi_c, self.pi_s)
        if len(self.class_blobs) < 2:
            raise ConfigurationError("class_blobs: need at least 2 classes")
        if self.pi_s > 0 and not self.semantic_blobs:
            raise ConfigurationError("semantic_blobs must be nonempty when pi_s > 0")
        if self.pool_size <= 0:
            raise ConfigurationError(f"pool_size must be positive, got {self.pool_size}")
        if self.labeled_size <= 0:
            raise ConfigurationError(f"labeled_size must be positive, got {self.labeled_size}")
        if any(s < 0 for s in self.heldout_sizes):
            raise ConfigurationError(f"heldout_sizes must be nonnegative, got {self.heldout_sizes}")
        dims = {len(b.mean) for b in self.class_blobs} | {len(b.mean) for b in self.semantic_blobs}
        dims.add(len(self.covariate_shift.offset))
        if len(dims) != 1:
            raise ConfigurationError("class_blobs, semantic_blobs, covariate_shift: inconsistent dimensions")

    @property
    def num_classes(self) -> int:
        return len(self.class_blobs)

    @property
    def dim(self) -> int:
        return len(self.class_blobs[0].mean)


@dataclass(frozen=True)
class LabeledIdSet:
    """Clean in-distribution training set (features, labels in [1..K])."""

    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class TestSplits:
    """Held-out evaluation data. Any split may be None (metric then absent)."""

    id_features: np.ndarray | None = None
    id_labels: np.ndarray | None = None
    cov_features: np.ndarray | None = None
    cov_labels: np.ndarray | None = None
    sem_features: np.ndarray | None = None


def _sample_class_points(
    rng: np.random.Generator, blobs: Sequence[GaussianBlob], labels: np.ndarray, dim: int
) -> np.ndarray:
    out = np.empty((len(labels), dim), dtype=float)
    for c, blob in enumerate(blobs, start=1):
        mask = labels == c
        count = int(mask.sum())
        if count:
            out[mask] = blob.sample(rng, count)
    return out


def sample_feature_wild(
    spec: FeatureMixtureSpec, seed: int
) -> tuple[LabeledIdSet, WildPool, TestSplits]:
    """Draw the labeled ID set, the unscored wild pool, and held-out splits.

    Pure function of (spec, seed). Pool scores start as NaN; score them with
    a trained classifier before running threshold search.
    """
    rng = np.random.default_rng(seed)
    k = spec.num_classes
    d = spec.dim
    shifted = tuple(spec.covariate_shift.apply(b) for b in spec.class_blobs)

    labels_in = rng.integers(1, k + 1, size=spec.labeled_size)
    x_in = _sample_class_points(rng, spec.class_blobs, labels_in, d)
    labeled = LabeledIdSet(features=x_in, labels=labels_in)

    n = spec.pool_size
    membership = _sample_memberships(rng, n, spec.pi_c, spec.pi_s)
    class_labels = rng.integers(1, k + 1, size=n)
    class_labels[membership == Membership.SEMANTIC] = OOD_LABEL

    features = np.empty((n, d), dtype=float)
    id_mask = membership == Membership.ID
    cov_mask = membership == Membership.COVARIATE
    sem_mask = membership == Membership.SEMANTIC
    if id_mask.any():
        features[id_mask] = _sample_class_points(rng, spec.class_blobs, np.where(id_mask, class_labels, 0), d)[id_mask]
    if cov_mask.any():
        features[cov_mask] = _sample_class_points(rng, shifted, np.where(cov_mask, class_labels, 0), d)[cov_mask]
    n_sem = int(sem_mask.sum())
    if n_sem:
        which = rng.integers(0, len(spec.semantic_blobs), size=n_sem)
        sem_points = np.empty((n_sem, d), dtype=float)
        for b_idx, blob in enumerate(spec.semantic_blobs):
            m = which == b_idx
            if m.any():
                sem_points[m] = blob.sample(rng, int(m.sum()))
        features[sem_mask] = sem_points

    pool = WildPool(
        ids=np.arange(n, dtype=np.int64),
        scores=np.full(n, np.nan),
        membership=membership,
        class_labels=class_labels,
        features=features,
        seed=seed,
        spec=spec,
    )

    n_id, n_cov, n_sem_h = spec.heldout_sizes
    id_y = rng.integers(1, k + 1, size=n_id)
    id_x = _sample_class_points(rng, spec.class_blobs, id_y, d)
    cov_y = rng.integers(1, k + 1, size=n_cov)
    cov_x = _sample_class_points(rng, shifted, cov_y, d)
    sem_x = None
    if n_sem_h and spec.semantic_blobs:
        which = rng.integers(0, len(spec.semantic_blobs), size=n_sem_h)
        sem_x = np.empty((n_sem_h, d), dtype=float)
        for b_idx, blob in enumerate(spec.semantic_blobs):
            m = which == b_idx
            if m.any():
                sem_x[m] = blob.sample(rng, int(m.sum()))
    splits = TestSplits(
        id_features=id_x if n_id else None,
        id_labels=id_y if n_id else None,
        cov_features=cov_x if n_cov else None,
        cov_labels=cov_y if n_cov else None,
        sem_features=sem_x,
    )

    _warn_on_fraction_drift(membership, spec.pi_c, spec.pi_s)
    return labeled, pool, splits


# ---------------------------------------------------------------------------
# analytic maximum-ambiguity threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveCurve:
    """Sampled cumulative ambiguity objective over a score grid."""

    grid: np.ndarray
    values: np.ndarray


_TIE_TOL = 1e-9


def wild_median(spec: ScoreMixtureSpec) -> float:
    """Median of the full wild score mixture, found by bisection on its CDF."""
    lo, hi = spec.support_bounds()
    return float(bisect(lambda x: spec.wild_cdf(x) - 0.5, lo, hi, xtol=1e-12))


def analytic_max_ambiguity(
    spec: ScoreMixtureSpec, grid_resolution: int = 20001
) -> tuple[float, ObjectiveCurve]:
    """Closed-form maximum-ambiguity threshold of a score mixture.

    Integrates the signed density (1 - piC - piS) * pIn + piC * pCov
    - piS * pSem on a uniform grid spanning 8 standard deviations beyond
    every component mean, and returns the grid point maximizing the
    cumulative integral. Ties within 1e-9 of the maximum break toward the
    point closest to the wild mixture median.
    """
    if grid_resolution < 1000:
        raise ConfigurationError(f"grid_resolution must be at least 1000, got {grid_resolution}")
    lo, hi = spec.support_bounds()
    grid = np.linspace(lo, hi, grid_resolution)
    p_in = 1.0 - spec.pi_c - spec.pi_s
    signed = (
        p_in * spec.in_density.pdf(grid)
        + spec.pi_c * spec.cov_density.pdf(grid)
        - spec.pi_s * spec.sem_density.pdf(grid)
    )
    values = cumulative_trapezoid(signed, grid, initial=0.0)
    best = values.max()
    tied = np.flatnonzero(values >= best - _TIE_TOL)
    median = wild_median(spec)
    pick = tied[np.argmin(np.abs(grid[tied] - median))]
    return float(grid[pick]), ObjectiveCurve(grid=grid, values=values)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def write_pool(pool: WildPool, path, reveal_truth: bool = False) -> None:
    """Write a pool as columnar text: id,score always; membership and
    classLabel only when reveal_truth is set (test fixtures)."""
    buf = io.StringIO()
    if reveal_truth:
        buf.write("id,score,membership,classLabel\n")
        for i in range(len(pool)):
            buf.write(
                f"{int(pool.ids[i])},{float(pool.scores[i])!r},"
                f"{Membership(int(pool.membership[i])).name},{int(pool.class_labels[i])}\n"
            )
    else:
        buf.write("id,score\n")
        for i in range(len(pool)):
            buf.write(f"{int(pool.ids[i])},{float(pool.scores[i])!r}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_pool(path) -> WildPool:
    """Read a pool written by `write_pool`. Pools without truth columns get
    ID membership and class label 1 placeholders."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    has_truth = "membership" in header
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    scores = np.array([float(r[1]) for r in rows], dtype=float)
    if has_truth:
        membership = np.array([Membership[r[2]].value for r in rows], dtype=np.int8)
        class_labels = np.array([int(r[3]) for r in rows], dtype=np.int64)
    else:
        membership = np.zeros(len(rows), dtype=np.int8)
        class_labels = np.ones(len(rows), dtype=np.int64)
    return WildPool(ids=ids, scores=scores, membership=membership, class_labels=class_labels)
