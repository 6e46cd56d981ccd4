"""OOD scores over classifier logits.

Every score follows the same global orientation: larger means more OOD.
Functions accept a single logit vector or a batch with logits on the last
axis.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import ConfigurationError, InputError, UsageError
from .pools import WildPool

SCORE_KINDS = ("msp", "entropy", "margin", "energy")


def _check_logits(logits) -> np.ndarray:
    arr = np.asarray(logits, dtype=float)
    if arr.shape[-1] < 2:
        raise InputError(f"logits need at least 2 classes, got {arr.shape[-1]}")
    if not np.isfinite(arr).all():
        raise InputError("logits contain non-finite values")
    return arr


def msp_score(logits) -> np.ndarray:
    """One minus the maximum softmax probability."""
    p = softmax(_check_logits(logits), axis=-1)
    return 1.0 - p.max(axis=-1)


def entropy_score(logits) -> np.ndarray:
    """Shannon entropy of the softmax distribution (natural log)."""
    arr = _check_logits(logits)
    logp = arr - logsumexp(arr, axis=-1, keepdims=True)
    return -np.sum(np.exp(logp) * logp, axis=-1)


def margin_score(logits) -> np.ndarray:
    """Negated gap between the two largest softmax probabilities."""
    p = softmax(_check_logits(logits), axis=-1)
    top2 = np.partition(p, -2, axis=-1)[..., -2:]
    return -(top2[..., 1] - top2[..., 0])


def energy_score(logits, temperature: float = 1.0) -> np.ndarray:
    """Negative temperature-scaled log-sum-exp of the logits."""
    if temperature <= 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    arr = _check_logits(logits)
    return -temperature * logsumexp(arr / temperature, axis=-1)


def score_logits(logits, kind: str, temperature: float = 1.0) -> np.ndarray:
    if kind == "msp":
        return msp_score(logits)
    if kind == "entropy":
        return entropy_score(logits)
    if kind == "margin":
        return margin_score(logits)
    if kind == "energy":
        return energy_score(logits, temperature)
    raise InputError(f"unknown score kind {kind!r}, expected one of {SCORE_KINDS}")


def score_pool(pool: WildPool, classifier, kind: str, temperature: float = 1.0) -> WildPool:
    """Score every pooled example with the classifier's logits.

    Returns a new pool with rawScore filled; the input pool is untouched.
    """
    if pool.features is None:
        raise UsageError("score_pool needs a feature-space pool; this pool carries raw scores already")
    if len(pool) == 0:
        return pool.with_scores(pool.scores.copy())
    if classifier.weights.shape[1] != pool.features.shape[1]:
        raise InputError(
            f"classifier expects {classifier.weights.shape[1]}-dimensional features, "
            f"pool has {pool.features.shape[1]}"
        )
    logits = classifier.logits(pool.features)
    if logits.shape[0] != len(pool):
        raise InputError("classifier produced a logit row count different from the pool size")
    return pool.with_scores(np.asarray(score_logits(logits, kind, temperature), dtype=float))
