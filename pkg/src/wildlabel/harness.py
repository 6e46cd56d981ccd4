"""Experiment orchestration: configs, cell execution, and reports.

Configs are flat structured text, one `section.key = value` per line with
`#` comments. A run crosses strategies x budgets x seeds; every cell is
reproducible in isolation because all of its randomness derives from the
seed value by stable hashing. The pool stream depends on the seed only, so
strategies compared at the same seed see the same pool; the selection and
retraining streams also hash in the strategy and budget.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .learner import MetricsReport, TrainConfig, evaluate, train_classifier, train_joint
from .pools import (
    OOD_LABEL,
    CovariateShift,
    FeatureMixtureSpec,
    GaussianBlob,
    GaussianMixture,
    LabeledIdSet,
    ScoreMixtureSpec,
    WildPool,
    Membership,
    oracle_label,
    sample_feature_wild,
    sample_score_wild,
)
from .scores import SCORE_KINDS, score_logits, score_pool
from .search import WINDOW_RULES
from .strategies import (
    ORACLE_REGION_MODES,
    SelectionResult,
    aha_select,
    near_boundary_select,
    oracle_region_select,
    random_select,
    top_k_select,
)

logger = logging.getLogger(__name__)

STRATEGY_NAMES = ("aha", "topk", "boundary", "most-cov", "least-sem", "mixed", "random")
_SCORE_MODE_STRATEGIES = ("aha", "topk", "most-cov", "least-sem", "mixed", "random")

CSV_COLUMNS = (
    "strategy",
    "budget",
    "seed",
    "oodAcc",
    "idAcc",
    "fpr95",
    "auroc",
    "nId",
    "nCov",
    "nSem",
    "muHat",
    "unspent",
)

_AGG_METRICS = (
    ("oodAcc", "ood_acc"),
    ("idAcc", "id_acc"),
    ("fpr95", "fpr95"),
    ("auroc", "auroc"),
    ("nId", "n_id"),
    ("nCov", "n_cov"),
    ("nSem", "n_sem"),
    ("muHat", "mu_hat"),
    ("unspent", "unspent"),
)


def derive_seed(*parts) -> int:
    """Stable 64-bit stream seed hashed from the given parts."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ConfigurationError(f"config line {lineno}: key {key!r} is missing its section prefix")
        if key in mapping:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        mapping[key] = value.strip()
    return mapping


class _Conf:
    """Typed accessors over the flat mapping; every error names its key."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = mapping
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.mapping

    def raw(self, key: str, default=None, required=False) -> str | None:
        if key in self.mapping:
            self.used.add(key)
            return self.mapping[key]
        if required:
            raise ConfigurationError(f"missing required config key {key!r}")
        return default

    def _typed(self, key, cast, typename, default, required):
        value = self.raw(key, None, required)
        if value is None:
            return default
        try:
            return cast(value)
        except (ValueError, TypeError):
            raise ConfigurationError(f"config key {key!r}: expected {typename}, got {value!r}") from None

    def get_int(self, key, default=None, required=False):
        return self._typed(key, int, "an integer", default, required)

    def get_float(self, key, default=None, required=False):
        return self._typed(key, float, "a number", default, required)

    def get_bool(self, key, default=None, required=False):
        def cast(v):
            lv = v.lower()
            if lv in ("true", "yes", "1", "on"):
                return True
            if lv in ("false", "no", "0", "off"):
                return False
            raise ValueError(v)

        return self._typed(key, cast, "a boolean", default, required)

    def get_list(self, key, default=None, required=False):
        value = self.raw(key, None, required)
        if value is None:
            return default
        return [item.strip() for item in value.split(",") if item.strip()]

    def get_int_list(self, key, default=None, required=False):
        items = self.get_list(key, None, required)
        if items is None:
            return default
        try:
            return [int(i) for i in items]
        except ValueError:
            raise ConfigurationError(f"config key {key!r}: expected comma-separated integers") from None

    def get_float_list(self, key, default=None, required=False):
        items = self.get_list(key, None, required)
        if items is None:
            return default
        try:
            return [float(i) for i in items]
        except ValueError:
            raise ConfigurationError(f"config key {key!r}: expected comma-separated numbers") from None

    def get_mixture(self, key, default=None, required=False):
        value = self.raw(key, None, required)
        if value is None:
            return default
        means, stds, weights = [], [], []
        for part in value.split(";"):
            part = part.strip()
            if not part:
                continue
            fields = [f.strip() for f in part.split(",")]
            if len(fields) != 3:
                raise ConfigurationError(
                    f"config key {key!r}: each component must be 'mean,std,weight', got {part!r}"
                )
            try:
                m, s, w = (float(f) for f in fields)
            except ValueError:
                raise ConfigurationError(f"config key {key!r}: non-numeric component {part!r}") from None
            means.append(m)
            stds.append(s)
            weights.append(w)
        if not means:
            raise ConfigurationError(f"config key {key!r}: no mixture components given")
        return GaussianMixture(tuple(means), tuple(stds), tuple(weights))

    def get_points(self, key, default=None, required=False):
        value = self.raw(key, None, required)
        if value is None:
            return default
        points = []
        for part in value.split("|"):
            part = part.strip()
            if not part:
                continue
            try:
                points.append(tuple(float(f) for f in part.split(",")))
            except ValueError:
                raise ConfigurationError(f"config key {key!r}: non-numeric point {part!r}") from None
        if not points:
            raise ConfigurationError(f"config key {key!r}: no points given")
        if len({len(p) for p in points}) != 1:
            raise ConfigurationError(f"config key {key!r}: points have inconsistent dimensions")
        return points

    def reject_unknown(self):
        unknown = sorted(set(self.mapping) - self.used)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    pool_spec: ScoreMixtureSpec | FeatureMixtureSpec
    strategies: tuple[str, ...]
    budgets: tuple[int, ...]
    seeds: tuple[int, ...]
    score_kind: str = "energy"
    temperature: float = 1.0
    window_rule: str = "keep-max"
    train: TrainConfig = TrainConfig()
    output_dir: str = "runs"
    grid_resolution: int = 20001

    def __post_init__(self):
        if self.mode not in ("score", "feature"):
            raise ConfigurationError(f"pool.mode must be 'score' or 'feature', got {self.mode!r}")
        if not self.strategies:
            raise ConfigurationError("run.strategies must list at least one strategy")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigurationError(f"run.strategies: unknown strategy {s!r}, expected one of {STRATEGY_NAMES}")
            if self.mode == "score" and s not in _SCORE_MODE_STRATEGIES:
                raise ConfigurationError(f"run.strategies: {s!r} needs a feature-space pool (it scores the clean ID set)")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigurationError("run.strategies contains duplicates")
        if not self.budgets:
            raise ConfigurationError("run.budgets must list at least one budget")
        for k in self.budgets:
            if k <= 0:
                raise ConfigurationError(f"run.budgets: budgets must be positive, got {k}")
            if k > self.pool_spec.pool_size:
                raise ConfigurationError(f"run.budgets: budget {k} exceeds pool.size {self.pool_spec.pool_size}")
            if "aha" in self.strategies and k % 4 != 0:
                raise ConfigurationError(f"run.budgets: the aha strategy needs budgets divisible by 4, got {k}")
        if not self.seeds:
            raise ConfigurationError("run.seeds must list at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("run.seeds contains duplicates")
        if self.score_kind not in SCORE_KINDS:
            raise ConfigurationError(f"run.score must be one of {SCORE_KINDS}, got {self.score_kind!r}")
        if self.temperature <= 0:
            raise ConfigurationError(f"run.temperature must be positive, got {self.temperature}")
        if self.window_rule not in WINDOW_RULES:
            raise ConfigurationError(f"run.window_rule must be one of {WINDOW_RULES}, got {self.window_rule!r}")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    return config_from_mapping(parse_config_text(text))


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    conf = _Conf(mapping)
    mode = conf.raw("pool.mode", required=True)
    size = conf.get_int("pool.size", required=True)
    pi_c = conf.get_float("pool.pi_c", required=True)
    pi_s = conf.get_float("pool.pi_s", required=True)

    if mode == "score":
        in_density = conf.get_mixture("score.in_density", required=True)
        sem_density = conf.get_mixture("score.sem_density", required=True)
        cov_density = conf.get_mixture("score.cov_density", default=in_density)
        spec = ScoreMixtureSpec(
            pi_c=pi_c,
            pi_s=pi_s,
            in_density=in_density,
            cov_density=cov_density,
            sem_density=sem_density,
            pool_size=size,
            num_classes=conf.get_int("pool.classes", default=2),
        )
    elif mode == "feature":
        class_means = conf.get_points("feature.class_means", required=True)
        class_scale = conf.get_float("feature.class_scale", default=1.0)
        sem_means = conf.get_points("feature.semantic_means", default=[])
        sem_scale = conf.get_float("feature.semantic_scale", default=1.0)
        sem_scales = conf.get_float_list("feature.semantic_scales", default=None)
        if sem_scales is None:
            sem_scales = [sem_scale] * len(sem_means)
        elif conf.has("feature.semantic_scale"):
            raise ConfigurationError(
                "feature.semantic_scale and feature.semantic_scales are mutually exclusive"
            )
        elif len(sem_scales) == 1:
            sem_scales = sem_scales * len(sem_means)
        elif len(sem_scales) != len(sem_means):
            raise ConfigurationError(
                f"feature.semantic_scales: expected 1 or {len(sem_means)} values, got {len(sem_scales)}"
            )
        # Integer replication counts: the sampler picks semantic blobs uniformly,
        # so listing a blob w times gives it w times the mass.
        sem_weights = conf.get_int_list("feature.semantic_weights", default=None)
        if sem_weights is None:
            sem_weights = [1] * len(sem_means)
        elif len(sem_weights) != len(sem_means):
            raise ConfigurationError(
                f"feature.semantic_weights: expected {len(sem_means)} values, got {len(sem_weights)}"
            )
        if any(w < 1 for w in sem_weights):
            raise ConfigurationError("feature.semantic_weights: weights must be positive integers")
        dim = len(class_means[0])
        offset = conf.get_points("feature.covariate_offset", default=[tuple(0.0 for _ in range(dim))])[0]
        spec = FeatureMixtureSpec(
            pi_c=pi_c,
            pi_s=pi_s,
            class_blobs=tuple(GaussianBlob(m, class_scale) for m in class_means),
            semantic_blobs=tuple(
                GaussianBlob(m, s)
                for m, s, w in zip(sem_means, sem_scales, sem_weights)
                for _ in range(w)
            ),
            covariate_shift=CovariateShift(offset, conf.get_float("feature.covariate_scale", default=1.0)),
            pool_size=size,
            labeled_size=conf.get_int("feature.labeled_size", default=500),
            heldout_sizes=(
                conf.get_int("feature.heldout_id", default=1000),
                conf.get_int("feature.heldout_cov", default=1000),
                conf.get_int("feature.heldout_sem", default=1000),
            ),
        )
    else:
        raise ConfigurationError(f"pool.mode must be 'score' or 'feature', got {mode!r}")

    train = TrainConfig(
        alpha=conf.get_float("train.alpha", default=10.0),
        learning_rate=conf.get_float("train.lr", default=0.2),
        epochs=conf.get_int("train.epochs", default=300),
        batch_size=conf.get_int("train.batch_size", default=0),
        hidden_width=conf.get_int("train.hidden_width", default=0),
        cosine_decay=conf.get_bool("train.cosine_decay", default=False),
        detector_include_wild_id=conf.get_bool("train.detector_include_wild_id", default=False),
    )
    cfg = ExperimentConfig(
        mode=mode,
        pool_spec=spec,
        strategies=tuple(conf.get_list("run.strategies", required=True)),
        budgets=tuple(conf.get_int_list("run.budgets", required=True)),
        seeds=tuple(conf.get_int_list("run.seeds", required=True)),
        score_kind=conf.raw("run.score", default="energy"),
        temperature=conf.get_float("run.temperature", default=1.0),
        window_rule=conf.raw("run.window_rule", default="keep-max"),
        train=train,
        output_dir=conf.raw("run.output_dir", default="runs"),
        grid_resolution=conf.get_int("run.grid_resolution", default=20001),
    )
    conf.reject_unknown()
    return cfg


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


@dataclass
class SeedContext:
    """Everything one seed shares across its cells."""

    seed: int
    pool: WildPool
    s_in: LabeledIdSet | None = None
    splits: object = None
    id_scores: np.ndarray | None = None


@dataclass
class RunRecord:
    strategy: str
    budget: int
    seed: int
    composition: tuple[int, int, int]
    mu_hat: float | None
    unspent: int
    metrics: MetricsReport | None
    wall_time: float
    selection: SelectionResult | None = None
    loss_trace: list | None = None


@dataclass(frozen=True)
class CellFailure:
    strategy: str
    budget: int
    seed: int
    error: str


@dataclass(frozen=True)
class AggregateRecord:
    strategy: str
    budget: int
    seeds: int
    means: dict
    ses: dict


@dataclass
class RunReport:
    rows: list[RunRecord]
    aggregates: list[AggregateRecord]
    failures: list[CellFailure]
    config: ExperimentConfig


class ExperimentRunner:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._contexts: dict[int, SeedContext] = {}

    def context(self, seed: int) -> SeedContext:
        if seed in self._contexts:
            return self._contexts[seed]
        cfg = self.cfg
        pool_seed = derive_seed("pool", seed)
        if cfg.mode == "score":
            ctx = SeedContext(seed=seed, pool=sample_score_wild(cfg.pool_spec, pool_seed))
        else:
            s_in, pool, splits = sample_feature_wild(cfg.pool_spec, pool_seed)
            scorer_cfg = replace(cfg.train, seed=derive_seed("score-train", seed))
            scorer = train_classifier(s_in, scorer_cfg, num_classes=cfg.pool_spec.num_classes)
            pool = score_pool(pool, scorer, cfg.score_kind, cfg.temperature)
            id_scores = np.asarray(
                score_logits(scorer.logits(s_in.features), cfg.score_kind, cfg.temperature), dtype=float
            )
            ctx = SeedContext(seed=seed, pool=pool, s_in=s_in, splits=splits, id_scores=id_scores)
        self._contexts[seed] = ctx
        return ctx

    def run_cell(self, strategy: str, budget: int, seed: int) -> RunRecord:
        cfg = self.cfg
        ctx = self.context(seed)
        start = time.perf_counter()
        strat_seed = derive_seed("select", seed, strategy, budget)

        if strategy == "aha":
            selection = aha_select(ctx.pool, budget, oracle_label, strat_seed, rule=cfg.window_rule)
        elif strategy == "topk":
            selection = top_k_select(ctx.pool, budget, oracle_label)
        elif strategy == "boundary":
            selection = near_boundary_select(ctx.pool, ctx.id_scores, budget, oracle_label)
        elif strategy in ORACLE_REGION_MODES:
            selection = oracle_region_select(ctx.pool, budget, oracle_label, strategy)
        elif strategy == "random":
            selection = random_select(ctx.pool, budget, oracle_label, strat_seed)
        else:
            raise ConfigurationError(f"unknown strategy {strategy!r}")

        metrics = None
        loss_trace = None
        if cfg.mode == "feature":
            pool = ctx.pool
            idx = np.array([pool.id_to_index[i] for i in selection.labeled.ids], dtype=int)
            labels = selection.labeled.labels
            ood_mask = labels == OOD_LABEL
            sem_x = pool.features[idx[ood_mask]] if ood_mask.any() else None
            cov = None
            if (~ood_mask).any():
                cov = LabeledIdSet(features=pool.features[idx[~ood_mask]], labels=labels[~ood_mask])
            train_cfg = replace(cfg.train, seed=derive_seed("train", seed, strategy, budget))
            clf, det, loss_trace = train_joint(
                ctx.s_in, cov, sem_x, train_cfg, num_classes=cfg.pool_spec.num_classes
            )
            metrics = evaluate(clf, det, ctx.splits)

        return RunRecord(
            strategy=strategy,
            budget=budget,
            seed=seed,
            composition=selection.composition,
            mu_hat=selection.mu_hat,
            unspent=selection.unspent,
            metrics=metrics,
            wall_time=time.perf_counter() - start,
            selection=selection,
            loss_trace=loss_trace,
        )

    def run(self) -> RunReport:
        rows: list[RunRecord] = []
        failures: list[CellFailure] = []
        for strategy in self.cfg.strategies:
            for budget in self.cfg.budgets:
                for seed in self.cfg.seeds:
                    try:
                        rows.append(self.run_cell(strategy, budget, seed))
                    except Exception as exc:  # noqa: BLE001 - cell isolation
                        logger.warning("cell (%s, %d, %d) failed: %s", strategy, budget, seed, exc)
                        failures.append(CellFailure(strategy, budget, seed, f"{type(exc).__name__}: {exc}"))
        aggregates = [
            self._aggregate(strategy, budget, rows)
            for strategy in self.cfg.strategies
            for budget in self.cfg.budgets
        ]
        return RunReport(rows=rows, aggregates=aggregates, failures=failures, config=self.cfg)

    @staticmethod
    def _aggregate(strategy: str, budget: int, rows: list[RunRecord]) -> AggregateRecord:
        cell_rows = [r for r in rows if r.strategy == strategy and r.budget == budget]
        means: dict = {}
        ses: dict = {}
        for name, _ in _AGG_METRICS:
            values = [_row_value(r, name) for r in cell_rows]
            values = [v for v in values if v is not None]
            if not values:
                means[name] = None
                ses[name] = None
                continue
            arr = np.asarray(values, dtype=float)
            means[name] = float(arr.mean())
            ses[name] = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) >= 2 else None
        return AggregateRecord(strategy=strategy, budget=budget, seeds=len(cell_rows), means=means, ses=ses)


def _row_value(row: RunRecord, column: str):
    if column == "oodAcc":
        return None if row.metrics is None else row.metrics.ood_acc
    if column == "idAcc":
        return None if row.metrics is None else row.metrics.id_acc
    if column == "fpr95":
        return None if row.metrics is None else row.metrics.fpr95
    if column == "auroc":
        return None if row.metrics is None else row.metrics.auroc
    if column == "nId":
        return row.composition[0]
    if column == "nCov":
        return row.composition[1]
    if column == "nSem":
        return row.composition[2]
    if column == "muHat":
        return row.mu_hat
    if column == "unspent":
        return row.unspent
    raise KeyError(column)


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run every (strategy, budget, seed) cell and aggregate per cell group."""
    return ExperimentRunner(cfg).run()


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: RunReport, out_dir, fmt: str = "csv") -> list[str]:
    """Write the per-run file and the aggregate file; returns the paths.

    Emitted files are a pure function of the report values, so reruns of a
    deterministic experiment produce byte-identical bytes. Wall times stay
    in memory only.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"report format must be 'csv' or 'json', got {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    runs_path = os.path.join(out_dir, f"runs.{fmt}")
    agg_path = os.path.join(out_dir, f"aggregates.{fmt}")

    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in report.rows:
            cells = [row.strategy, str(row.budget), str(row.seed)]
            cells += [_fmt(_row_value(row, c)) for c in CSV_COLUMNS[3:]]
            buf.write(",".join(cells) + "\n")
        _atomic_write(runs_path, buf.getvalue())

        buf = io.StringIO()
        header = ["strategy", "budget", "seeds"]
        for name, _ in _AGG_METRICS:
            header += [f"{name}Mean", f"{name}Se"]
        buf.write(",".join(header) + "\n")
        for agg in report.aggregates:
            cells = [agg.strategy, str(agg.budget), str(agg.seeds)]
            for name, _ in _AGG_METRICS:
                cells += [_fmt(agg.means[name]), _fmt(agg.ses[name])]
            buf.write(",".join(cells) + "\n")
        _atomic_write(agg_path, buf.getvalue())
    else:
        runs = []
        for row in report.rows:
            d = {"strategy": row.strategy, "budget": row.budget, "seed": row.seed}
            for c in CSV_COLUMNS[3:]:
                d[c] = _row_value(row, c)
            runs.append(d)
        _atomic_write(runs_path, json.dumps({"runs": runs}, indent=2, sort_keys=True) + "\n")
        aggs = []
        for agg in report.aggregates:
            d = {"strategy": agg.strategy, "budget": agg.budget, "seeds": agg.seeds}
            for name, _ in _AGG_METRICS:
                d[f"{name}Mean"] = agg.means[name]
                d[f"{name}Se"] = agg.ses[name]
            aggs.append(d)
        failures = [
            {"strategy": f.strategy, "budget": f.budget, "seed": f.seed, "error": f.error}
            for f in report.failures
        ]
        _atomic_write(
            agg_path,
            json.dumps({"aggregates": aggs, "failures": failures}, indent=2, sort_keys=True) + "\n",
        )
    return [runs_path, agg_path]


def emit_histograms(pool: WildPool, path, bins: int = 60) -> None:
    """Per-membership score histograms on one shared bin grid."""
    scores = pool.scores
    edges = np.histogram_bin_edges(scores, bins=bins)
    buf = io.StringIO()
    buf.write("binLow,binHigh,id,covariate,semantic\n")
    counts = {
        tag: np.histogram(scores[pool.membership == tag], bins=edges)[0]
        for tag in (Membership.ID, Membership.COVARIATE, Membership.SEMANTIC)
    }
    for i in range(len(edges) - 1):
        buf.write(
            f"{edges[i]!r},{edges[i + 1]!r},"
            f"{counts[Membership.ID][i]},{counts[Membership.COVARIATE][i]},{counts[Membership.SEMANTIC][i]}\n"
        )
    _atomic_write(path, buf.getvalue())


def emit_phase1_trace(record: RunRecord, path) -> None:
    """One JSON line per search step: t, drawn id, label, interval, count."""
    steps = record.selection.phase1.steps if record.selection and record.selection.phase1 else ()
    buf = io.StringIO()
    for s in steps:
        buf.write(
            json.dumps(
                {
                    "t": s.t,
                    "id": s.drawn_id,
                    "label": s.label,
                    "low": s.interval.low,
                    "high": s.interval.high,
                    "inInterval": s.in_interval,
                },
                sort_keys=True,
            )
            + "\n"
        )
    _atomic_write(path, buf.getvalue())


def emit_loss_trace(record: RunRecord, path) -> None:
    buf = io.StringIO()
    buf.write("epoch,ceLoss,detectorLoss,total\n")
    for epoch, (ce, det, total) in enumerate(record.loss_trace or ()):
        buf.write(f"{epoch},{ce!r},{det!r},{total!r}\n")
    _atomic_write(path, buf.getvalue())
