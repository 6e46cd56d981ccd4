"""Noisy binary search for the maximum-disambiguation threshold.

The search maintains a score interval believed to contain the threshold
where the count objective

    L(s) = #{labeled, score <= s, label != OOD} - #{labeled, score <= s, label = OOD}

is maximized. Each step labels one uniformly drawn in-interval example and
shrinks the interval to the best window of in-interval examples, with the
window width fixed by a shrink factor so that after half the labeling
budget the interval is expected to pin down a single example.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, IntervalExhausted
from .pools import OOD_LABEL, WildPool

WINDOW_RULES = ("keep-max", "literal")


class ConfInterval(NamedTuple):
    """Closed score interval [low, high]; infinities mean unbounded."""

    low: float
    high: float


FULL_INTERVAL = ConfInterval(-math.inf, math.inf)


class LabeledSet:
    """Human-labeled examples kept sorted by (score, id) ascending."""

    def __init__(self):
        self._entries: list[tuple[float, int, int]] = []
        self._ids: set[int] = set()

    @classmethod
    def from_arrays(cls, ids, scores, labels) -> "LabeledSet":
        ids = np.asarray(ids)
        scores = np.asarray(scores, dtype=float)
        labels = np.asarray(labels)
        if len({len(ids), len(scores), len(labels)}) != 1:
            raise InputError("labeled set arrays have mismatched lengths")
        out = cls()
        order = np.lexsort((ids, scores))
        out._entries = [
            (float(scores[i]), int(ids[i]), int(labels[i])) for i in order
        ]
        out._ids = {int(i) for i in ids}
        if len(out._ids) != len(ids):
            raise InputError("labeled set contains duplicate example ids")
        return out

    def insert(self, example_id: int, score: float, label: int) -> None:
        example_id = int(example_id)
        if example_id in self._ids:
            raise InputError(f"example {example_id} is already labeled")
        if not math.isfinite(score):
            raise InputError(f"labeled score must be finite, got {score}")
        _bisect.insort(self._entries, (float(score), example_id, int(label)))
        self._ids.add(example_id)

    def copy(self) -> "LabeledSet":
        out = LabeledSet()
        out._entries = list(self._entries)
        out._ids = set(self._ids)
        return out

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, example_id: int) -> bool:
        return int(example_id) in self._ids

    def __iter__(self) -> Iterator[tuple[float, int, int]]:
        return iter(self._entries)

    @property
    def ids(self) -> list[int]:
        return [e[1] for e in self._entries]

    @property
    def scores(self) -> np.ndarray:
        return np.array([e[0] for e in self._entries], dtype=float)

    @property
    def labels(self) -> np.ndarray:
        return np.array([e[2] for e in self._entries], dtype=int)

    def signs(self) -> np.ndarray:
        """+1 per non-OOD label, -1 per OOD label, in score order."""
        return np.array([1 if e[2] != OOD_LABEL else -1 for e in self._entries], dtype=int)


def shrink_factor(pool_size: int, budget: int) -> float:
    """Per-step interval shrink c = poolSize ** (2 / budget), so that
    c ** (budget / 2) equals the pool size."""
    if pool_size < 2:
        raise ConfigurationError(f"pool_size must be at least 2, got {pool_size}")
    if budget < 2:
        raise ConfigurationError(f"budget must be at least 2, got {budget}")
    return float(pool_size) ** (2.0 / budget)


def empirical_argmax(labeled: LabeledSet, wild_scores: np.ndarray) -> tuple[float, int]:
    """Maximize the count objective over candidate thresholds.

    Candidates are midpoints between consecutive distinct labeled scores
    plus one sentinel below the minimum and one above the maximum. Ties
    break toward the candidate closest to the median wild score; an empty
    labeled set returns (median, 0).
    """
    wild_scores = np.asarray(wild_scores, dtype=float)
    if len(wild_scores) == 0:
        raise InputError("wild_scores must be nonempty")
    if np.any(np.diff(wild_scores) < 0):
        raise InputError("wild_scores must be sorted ascending")
    median = float(np.median(wild_scores))
    if len(labeled) == 0:
        return median, 0

    scores = labeled.scores
    signs = labeled.signs()
    distinct, first_index = np.unique(scores, return_index=True)
    prefix = np.cumsum(signs)
    # objective at a threshold just past distinct score j = prefix through
    # the last entry carrying that score
    group_end = np.append(first_index[1:], len(scores)) - 1
    values = np.concatenate(([0], prefix[group_end]))
    candidates = np.concatenate(
        (
            [distinct[0] - 1.0],
            (distinct[:-1] + distinct[1:]) / 2.0,
            [distinct[-1] + 1.0],
        )
    )
    best = values.max()
    tied = np.flatnonzero(values == best)
    pick = tied[np.argmin(np.abs(candidates[tied] - median))]
    return float(candidates[pick]), int(values[pick])


def _window_width(m: int, c: float) -> int:
    # nearest integer to m / c with half-way cases rounding down, floor 1;
    # rounding halves up would stall repeated halving at 3 in-interval
    # examples instead of reaching 2
    return max(1, math.ceil(m / c - 0.5))


def _in_interval_slice(pool: WildPool, interval: ConfInterval) -> tuple[int, int]:
    sorted_scores = pool.sorted_scores
    lo = int(np.searchsorted(sorted_scores, interval.low, side="left"))
    hi = int(np.searchsorted(sorted_scores, interval.high, side="right"))
    return lo, hi


def in_interval_count(pool: WildPool, interval: ConfInterval) -> int:
    lo, hi = _in_interval_slice(pool, interval)
    return hi - lo


def conf_update(
    labeled: LabeledSet,
    pool: WildPool,
    interval: ConfInterval,
    c: float,
    rule: str = "keep-max",
) -> ConfInterval:
    """Shrink the interval to the best window of in-interval pool examples.

    Pool examples inside [low, high] are ordered by (score, id); the window
    width is the in-interval count divided by the shrink factor. Under the
    default keep-max rule the window (i, j = i + w) maximizes
    min(L(i), L(j)) of the in-interval prefix objective; the literal rule
    minimizes max(L(i), L(j)) instead. Ties prefer the window centered
    closest to the middle of the interval, then the smaller left index.
    Returns the scores of the window's end examples.
    """
    if rule not in WINDOW_RULES:
        raise ConfigurationError(f"window rule must be one of {WINDOW_RULES}, got {rule!r}")
    if not c > 1.0:
        raise ConfigurationError(f"shrink factor must exceed 1, got {c}")
    if interval.low > interval.high:
        raise InputError(f"interval low {interval.low} exceeds high {interval.high}")
    lo, hi = _in_interval_slice(pool, interval)
    m = hi - lo
    if m == 0:
        raise IntervalExhausted(f"no pool examples inside [{interval.low}, {interval.high}]")
    w = _window_width(m, c)
    if w >= m:
        return interval

    order = pool.score_order[lo:hi]
    signs = np.zeros(m, dtype=int)
    if len(labeled):
        id_to_pos = {int(pool.ids[idx]): pos for pos, idx in enumerate(order)}
        for score, example_id, label in labeled:
            pos = id_to_pos.get(example_id)
            if pos is not None:
                signs[pos] = 1 if label != OOD_LABEL else -1
    prefix = np.cumsum(signs)

    left = prefix[:-w]
    right = prefix[w:]
    if rule == "keep-max":
        crit = -np.minimum(left, right)  # minimize, i.e. maximize the min
    else:
        crit = np.maximum(left, right)
    # window (i, i + w) in 1-based terms is (i + 1, i + 1 + w), centered at
    # i + 1 + w / 2; the interval's middle index is (m + 1) / 2
    center_dist = np.abs(np.arange(len(crit)) + 1.0 + w / 2.0 - (m + 1) / 2.0)
    ranking = np.lexsort((np.arange(len(crit)), center_dist, crit))
    i = int(ranking[0])
    sorted_scores = pool.sorted_scores
    return ConfInterval(float(sorted_scores[lo + i]), float(sorted_scores[lo + i + w]))


@dataclass(frozen=True)
class Phase1Step:
    """One search step: which example was drawn and what it did to the interval."""

    t: int
    drawn_id: int
    label: int
    interval: ConfInterval
    in_interval: int


@dataclass(frozen=True)
class Phase1Result:
    mu_hat: float
    objective_value: int
    labeled: LabeledSet
    steps: tuple[Phase1Step, ...]
    unspent: int

    @property
    def trace(self) -> list[ConfInterval]:
        return [s.interval for s in self.steps]


def phase1_search(
    pool: WildPool,
    budget_half: int,
    oracle,
    seed: int,
    rule: str = "keep-max",
) -> Phase1Result:
    """Adaptive threshold search spending up to budget_half labels.

    Each step draws a uniform unlabeled example from the current interval,
    labels it through the oracle, and shrinks the interval. Terminates
    early (reporting unspent budget) once the interval has no unlabeled
    example left. The returned threshold maximizes the count objective over
    all labels gathered, not just those in the final interval.
    """
    n = len(pool)
    if budget_half < 1:
        raise ConfigurationError(f"budget_half must be at least 1, got {budget_half}")
    if budget_half > n:
        raise ConfigurationError(f"budget_half {budget_half} exceeds pool size {n}")
    if not pool.scored:
        raise InputError("pool must be scored before threshold search")
    c = shrink_factor(n, 2 * budget_half)

    rng = np.random.default_rng(seed)
    labeled = LabeledSet()
    interval = FULL_INTERVAL
    order = pool.score_order
    sorted_ids = pool.ids[order]
    labeled_mask = np.zeros(n, dtype=bool)  # indexed by sorted position
    steps: list[Phase1Step] = []
    unspent = 0

    for t in range(1, budget_half + 1):
        lo, hi = _in_interval_slice(pool, interval)
        open_positions = lo + np.flatnonzero(~labeled_mask[lo:hi])
        if len(open_positions) == 0:
            unspent = budget_half - (t - 1)
            break
        pos = int(open_positions[rng.integers(len(open_positions))])
        labeled_mask[pos] = True
        pool_index = int(order[pos])
        example = pool.example(pool_index)
        label = int(oracle(example))
        labeled.insert(int(sorted_ids[pos]), float(example.raw_score), label)
        interval = conf_update(labeled, pool, interval, c, rule=rule)
        steps.append(
            Phase1Step(
                t=t,
                drawn_id=int(sorted_ids[pos]),
                label=label,
                interval=interval,
                in_interval=in_interval_count(pool, interval),
            )
        )

    mu_hat, value = empirical_argmax(labeled, pool.sorted_scores)
    return Phase1Result(
        mu_hat=mu_hat,
        objective_value=value,
        labeled=labeled,
        steps=tuple(steps),
        unspent=unspent,
    )
