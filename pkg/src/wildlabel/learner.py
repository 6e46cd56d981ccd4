"""Joint training of a classifier and an OOD detector on human labels.

The classifier is multinomial logistic regression trained by cross entropy
on the clean ID set plus every human-labeled non-OOD wild example. The
detector is a scalar score g(x) (linear, or one tanh hidden layer) trained
to keep g positive on ID data and negative on human-labeled semantic
novelty, through a sigmoid relaxation of the two-sided 0/1 level-set risk:

    mean over ID of sigmoid(-g(x)) + mean over semantic of sigmoid(g(x~))

weighted by alpha against the cross entropy. Internally g is ID-positive;
reported detector scores are negated so that, as everywhere else, larger
means more OOD.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_softmax, softmax
from scipy.stats import rankdata

from .errors import ConfigurationError, InputError, TrainingError
from .pools import LabeledIdSet, TestSplits
from .strategies import tpr_threshold

logger = logging.getLogger(__name__)


@dataclass
class ClassifierParams:
    """Multinomial logistic classifier: logits = x @ weights.T + biases."""

    weights: np.ndarray  # (K, d)
    biases: np.ndarray  # (K,)

    @classmethod
    def zeros(cls, num_classes: int, dim: int) -> "ClassifierParams":
        if num_classes < 2:
            raise ConfigurationError(f"classifier needs at least 2 classes, got {num_classes}")
        return cls(np.zeros((num_classes, dim)), np.zeros(num_classes))

    def logits(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weights.T + self.biases


def _discriminant_start(
    x_pos: np.ndarray, x_neg: np.ndarray, direction: np.ndarray | None = None
) -> tuple[np.ndarray, float] | tuple[None, None]:
    """Linear start (w, b) aiming g = w.x + b positive on x_pos, negative on x_neg.

    w points along the centroid gap (or a caller-supplied direction), scaled to
    give roughly unit margins at the centroids. The bias places the boundary
    midway between the facing tails of the two projection clouds rather than
    between the centroids: when the negatives hug one edge of the positive
    cloud, the centroid midplane starts with whole positive clusters on the
    wrong side, which the saturating risk then cannot pull back.
    """
    if direction is None:
        gap = x_pos.mean(axis=0) - x_neg.mean(axis=0)
    else:
        gap = np.asarray(direction, dtype=float)
    proj_pos = x_pos @ gap
    proj_neg = x_neg @ gap
    spread = float(proj_pos.mean() - proj_neg.mean())
    if not np.isfinite(spread) or abs(spread) < 1e-12:
        return None, None
    w = gap * (2.0 / spread)  # centroid margins ~ +/-1 regardless of gap norm
    lo = float(np.quantile(x_pos @ w, 0.02))
    hi = float(np.quantile(x_neg @ w, 0.98))
    return w, -(lo + hi) / 2.0


@dataclass
class DetectorParams:
    """Scalar detector g(x); hidden arrays are empty when the model is linear."""

    hidden_weights: np.ndarray  # (H, d); H = 0 means linear
    hidden_biases: np.ndarray  # (H,)
    out_weights: np.ndarray  # (H,) or (d,) when linear
    out_bias: float

    @classmethod
    def initial(
        cls,
        dim: int,
        hidden_width: int,
        rng: np.random.Generator,
        x_pos: np.ndarray | None = None,
        x_neg: np.ndarray | None = None,
    ) -> "DetectorParams":
        """Starting parameters, warm-started from the data when both sides exist.

        The sigmoid level-set risk is flat wherever a whole cluster sits far on
        the wrong side, and descent from an uninformed start routinely stalls
        there (the weight direction settles long before the bias catches up).
        Seeding the boundary at the centroid midplane starts descent inside the
        basin that actually separates the two sides; with no negatives to aim
        at we fall back to zeros (linear) or small uniform noise (hidden layer).
        """
        if hidden_width < 0:
            raise ConfigurationError(f"hidden_width must be nonnegative, got {hidden_width}")
        direction = None
        if x_pos is not None and x_neg is not None and len(x_pos) and len(x_neg):
            direction, bias = _discriminant_start(
                np.asarray(x_pos, dtype=float), np.asarray(x_neg, dtype=float)
            )
        if hidden_width == 0:
            if direction is None:
                return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(dim), 0.0)
            return cls(np.zeros((0, dim)), np.zeros(0), direction, bias)
        det = cls(
            rng.uniform(-0.1, 0.1, size=(hidden_width, dim)),
            rng.uniform(-0.1, 0.1, size=hidden_width),
            rng.uniform(-0.1, 0.1, size=hidden_width),
            float(rng.uniform(-0.1, 0.1)),
        )
        if direction is not None:
            # Dedicate one unit to the centroid discriminant; the rest stay
            # noise so the hidden layer can still bend the boundary later.
            det.hidden_weights[0] = direction
            det.hidden_biases[0] = bias
            det.out_weights[0] = 2.0
            det.out_bias = 0.0
        return det

    @property
    def hidden_width(self) -> int:
        return self.hidden_weights.shape[0]

    def score(self, x: np.ndarray) -> np.ndarray:
        """ID-positive detector output g(x)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.hidden_width == 0:
            return x @ self.out_weights + self.out_bias
        a = np.tanh(x @ self.hidden_weights.T + self.hidden_biases)
        return a @ self.out_weights + self.out_bias


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 10.0
    learning_rate: float = 0.2
    epochs: int = 300
    batch_size: int = 0  # 0 = full batch
    hidden_width: int = 0
    cosine_decay: bool = False
    seed: int = 0
    detector_include_wild_id: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be nonnegative, got {self.alpha}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 0:
            raise ConfigurationError(f"batch_size must be nonnegative, got {self.batch_size}")
        if self.hidden_width < 0:
            raise ConfigurationError(f"hidden_width must be nonnegative, got {self.hidden_width}")


def ce_loss_and_grads(
    clf: ClassifierParams, x: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross entropy and its gradients; labels are 1-based."""
    n = len(y)
    if n == 0:
        return 0.0, np.zeros_like(clf.weights), np.zeros_like(clf.biases)
    z = clf.logits(x)
    logp = log_softmax(z, axis=1)
    rows = np.arange(n)
    cols = np.asarray(y, dtype=int) - 1
    loss = -float(logp[rows, cols].mean())
    dz = softmax(z, axis=1)
    dz[rows, cols] -= 1.0
    dz /= n
    return loss, dz.T @ x, dz.sum(axis=0)


def detector_risk_and_grads(
    det: DetectorParams, x_pos: np.ndarray | None, x_neg: np.ndarray | None
) -> tuple[float, dict]:
    """Sigmoid level-set risk mean(sigmoid(-g(pos))) + mean(sigmoid(g(neg)))
    and its gradients with respect to the detector parameters."""
    grads = {
        "hidden_weights": np.zeros_like(det.hidden_weights),
        "hidden_biases": np.zeros_like(det.hidden_biases),
        "out_weights": np.zeros_like(det.out_weights),
        "out_bias": 0.0,
    }
    risk = 0.0
    for x, sign in ((x_pos, -1.0), (x_neg, 1.0)):
        if x is None or len(x) == 0:
            continue
        x = np.asarray(x, dtype=float)
        n = len(x)
        if det.hidden_width == 0:
            g = x @ det.out_weights + det.out_bias
            s = expit(sign * g)
            risk += float(s.mean())
            dg = sign * s * (1.0 - s) / n
            grads["out_weights"] += dg @ x
            grads["out_bias"] += float(dg.sum())
        else:
            z = x @ det.hidden_weights.T + det.hidden_biases
            a = np.tanh(z)
            g = a @ det.out_weights + det.out_bias
            s = expit(sign * g)
            risk += float(s.mean())
            dg = sign * s * (1.0 - s) / n
            grads["out_weights"] += dg @ a
            grads["out_bias"] += float(dg.sum())
            dz = (dg[:, None] * det.out_weights) * (1.0 - a * a)
            grads["hidden_weights"] += dz.T @ x
            grads["hidden_biases"] += dz.sum(axis=0)
    return risk, grads


def _lr_at(cfg: TrainConfig, epoch: int) -> float:
    if not cfg.cosine_decay or cfg.epochs <= 1:
        return cfg.learning_rate
    return cfg.learning_rate * 0.5 * (1.0 + np.cos(np.pi * epoch / (cfg.epochs - 1)))


def train_classifier(s_in: LabeledIdSet, cfg: TrainConfig, num_classes: int | None = None) -> ClassifierParams:
    """Cross-entropy-only training on the clean ID set (used to score pools)."""
    k = int(num_classes if num_classes is not None else s_in.labels.max())
    clf = ClassifierParams.zeros(k, s_in.features.shape[1])
    for epoch in range(cfg.epochs):
        loss, gw, gb = ce_loss_and_grads(clf, s_in.features, s_in.labels)
        if not np.isfinite(loss):
            raise TrainingError(f"classifier loss diverged at epoch {epoch}")
        lr = _lr_at(cfg, epoch)
        clf.weights -= lr * gw
        clf.biases -= lr * gb
    return clf


def train_joint(
    s_in: LabeledIdSet,
    s_human_cov: LabeledIdSet | None,
    s_human_sem: np.ndarray | None,
    cfg: TrainConfig,
    num_classes: int | None = None,
) -> tuple[ClassifierParams, DetectorParams, list[tuple[float, float, float]]]:
    """Train classifier and detector on clean plus human-labeled data.

    s_human_cov holds the wild examples the annotator assigned a class
    (covariate and hidden-ID alike, indistinguishable by label); they join
    the cross-entropy term. s_human_sem holds feature rows of examples
    labeled OOD; they drive the detector's negative side. Returns the
    trained parameters and a per-epoch (ceLoss, detectorRisk, total) trace.
    """
    if len(s_in) == 0:
        raise InputError("s_in must be nonempty")
    labels = [s_in.labels]
    feats = [s_in.features]
    if s_human_cov is not None and len(s_human_cov):
        labels.append(s_human_cov.labels)
        feats.append(s_human_cov.features)
    y = np.concatenate(labels)
    x = np.vstack(feats)
    if np.any(y < 1):
        raise InputError("classifier labels must be in [1..K]; OOD rows belong in s_human_sem")
    k = int(num_classes if num_classes is not None else y.max())
    if np.any(y > k):
        raise InputError(f"classifier label exceeds num_classes {k}")

    x_neg = None
    if s_human_sem is not None and len(s_human_sem):
        x_neg = np.asarray(s_human_sem, dtype=float)
    else:
        logger.warning("no human OOD labels: detector term is vacuous and will be skipped")

    x_pos = s_in.features
    if cfg.detector_include_wild_id and s_human_cov is not None and len(s_human_cov):
        x_pos = np.vstack([x_pos, s_human_cov.features])

    rng = np.random.default_rng(cfg.seed)
    dim = x.shape[1]

    # The two loss terms share no parameters, so the joint descent decomposes
    # into a convex classifier fit and a (non-convex) detector fit.
    if x_neg is None or cfg.alpha == 0.0:
        det = DetectorParams.initial(dim, cfg.hidden_width, rng, x_pos, x_neg)
        risk0 = detector_risk_and_grads(det, x_pos, x_neg)[0] if x_neg is not None else 0.0
        risks = [risk0] * cfg.epochs
    else:
        fits = []
        for start in _detector_starts(dim, cfg, rng, x_pos, x_neg):
            fitted, start_risks = _descend_detector(start, x_pos, x_neg, cfg)
            if start_risks is not None:
                fits.append((start_risks[-1], len(fits), fitted, start_risks))
        if not fits:
            raise TrainingError("detector risk diverged from every starting point")
        _, _, det, risks = min(fits)

    clf = ClassifierParams.zeros(k, x.shape[1])
    trace: list[tuple[float, float, float]] = []
    n = len(y)
    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        if cfg.batch_size and cfg.batch_size < n:
            order = rng.permutation(n)
            for batch_start in range(0, n, cfg.batch_size):
                idx = order[batch_start : batch_start + cfg.batch_size]
                _, gw, gb = ce_loss_and_grads(clf, x[idx], y[idx])
                clf.weights -= lr * gw
                clf.biases -= lr * gb
        else:
            _, gw, gb = ce_loss_and_grads(clf, x, y)
            clf.weights -= lr * gw
            clf.biases -= lr * gb
        ce, _, _ = ce_loss_and_grads(clf, x, y)
        total = ce + cfg.alpha * risks[epoch]
        if not np.isfinite(total):
            raise TrainingError(f"joint loss diverged at epoch {epoch}")
        trace.append((ce, risks[epoch], total))
    return clf, det, trace


def _detector_starts(
    dim: int, cfg: TrainConfig, rng: np.random.Generator, x_pos: np.ndarray, x_neg: np.ndarray
) -> list[DetectorParams]:
    """Deterministic family of starting points for the detector descent.

    The sigmoid surrogate has flat wrong-side basins, so a single start can
    stall far from a much better fit that plainly exists (see
    DetectorParams.initial). Descending from the warm discriminant start, a
    cold start, and a few re-aimed perturbations of the discriminant, then
    keeping the lowest final training risk, makes the fit insensitive to any
    one basin while staying fully reproducible.
    """
    starts = [DetectorParams.initial(dim, cfg.hidden_width, rng, x_pos, x_neg)]
    starts.append(DetectorParams.initial(dim, cfg.hidden_width, rng))
    gap = x_pos.mean(axis=0) - x_neg.mean(axis=0)
    scale = float(np.linalg.norm(gap))
    if scale < 1e-12:
        gap = np.ones(dim)
        scale = float(np.linalg.norm(gap))
    for _ in range(3):
        aim = gap + rng.normal(0.0, 0.75 * scale / np.sqrt(dim), size=dim)
        w, b = _discriminant_start(x_pos, x_neg, direction=aim)
        if w is None:
            continue
        det = DetectorParams.initial(dim, cfg.hidden_width, rng)
        if cfg.hidden_width == 0:
            det.out_weights = w
            det.out_bias = b
        else:
            det.hidden_weights[0] = w
            det.hidden_biases[0] = b
            det.out_weights[0] = 2.0
            det.out_bias = 0.0
        starts.append(det)
    return starts


def _descend_detector(
    det: DetectorParams, x_pos: np.ndarray, x_neg: np.ndarray, cfg: TrainConfig
) -> tuple[DetectorParams, list[float] | None]:
    """Full-batch descent on the level-set risk; risks is None on divergence."""
    risks: list[float] = []
    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        _, grads = detector_risk_and_grads(det, x_pos, x_neg)
        _apply_detector_step(det, grads, lr * cfg.alpha)
        risk, _ = detector_risk_and_grads(det, x_pos, x_neg)
        if not np.isfinite(risk):
            return det, None
        risks.append(risk)
    return det, risks


def _apply_detector_step(det: DetectorParams, grads: dict, step: float) -> None:
    det.out_weights -= step * grads["out_weights"]
    det.out_bias -= step * grads["out_bias"]
    if det.hidden_width:
        det.hidden_weights -= step * grads["hidden_weights"]
        det.hidden_biases -= step * grads["hidden_biases"]


def classify(clf: ClassifierParams, x: np.ndarray) -> np.ndarray:
    """Predicted 1-based class labels; logit ties take the smallest class."""
    logits = clf.logits(np.atleast_2d(x))
    return np.argmax(logits, axis=1) + 1


def auroc(id_scores: np.ndarray, ood_scores: np.ndarray) -> float:
    """Probability a random OOD score exceeds a random ID score, ties half.

    Computed from the rank sum over the pooled sample, which equals the
    pairwise definition exactly.
    """
    id_scores = np.asarray(id_scores, dtype=float)
    ood_scores = np.asarray(ood_scores, dtype=float)
    if len(id_scores) == 0 or len(ood_scores) == 0:
        raise InputError("auroc needs nonempty score arrays on both sides")
    n, m = len(id_scores), len(ood_scores)
    ranks = rankdata(np.concatenate([id_scores, ood_scores]))
    rank_sum = float(ranks[n:].sum())
    return (rank_sum - m * (m + 1) / 2.0) / (n * m)


def fpr_at_tpr(id_scores: np.ndarray, ood_scores: np.ndarray, tpr: float = 0.95) -> tuple[float, float]:
    """False positive rate of a threshold detector keeping a tpr fraction
    of ID data. Returns (fpr, threshold); OOD examples scoring at or below
    the threshold count as false positives (wrongly kept as ID)."""
    ood_scores = np.asarray(ood_scores, dtype=float)
    if len(ood_scores) == 0:
        raise InputError("fpr_at_tpr needs nonempty ood scores")
    lam = tpr_threshold(np.asarray(id_scores, dtype=float), tpr)
    return float(np.mean(ood_scores <= lam)), lam


@dataclass(frozen=True)
class MetricsReport:
    id_acc: float | None = None
    ood_acc: float | None = None
    fpr95: float | None = None
    auroc: float | None = None
    threshold: float | None = None


def evaluate(clf: ClassifierParams, det: DetectorParams | None, splits: TestSplits) -> MetricsReport:
    """Accuracy on ID and covariate splits, FPR at 95% TPR and AUROC of the
    detector on ID versus semantic splits. Metrics with missing inputs are
    absent, never zero."""
    id_acc = ood_acc = fpr = roc = lam = None
    if splits.id_features is not None and splits.id_labels is not None:
        id_acc = float(np.mean(classify(clf, splits.id_features) == splits.id_labels))
    if splits.cov_features is not None and splits.cov_labels is not None:
        ood_acc = float(np.mean(classify(clf, splits.cov_features) == splits.cov_labels))
    if det is not None and splits.id_features is not None and splits.sem_features is not None:
        id_scores = -det.score(splits.id_features)
        sem_scores = -det.score(splits.sem_features)
        fpr, lam = fpr_at_tpr(id_scores, sem_scores, 0.95)
        roc = auroc(id_scores, sem_scores)
    return MetricsReport(id_acc=id_acc, ood_acc=ood_acc, fpr95=fpr, auroc=roc, threshold=lam)
