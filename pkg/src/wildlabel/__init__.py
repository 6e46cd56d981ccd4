"""Adaptive human-assisted labeling of mixed out-of-distribution data.

Synthetic wild pools mix in-distribution, covariate-shifted, and
semantically novel examples behind a simulated annotator. The package
searches score space for the threshold whose neighborhood disambiguates
covariate shift from novelty, labels around it, trains a classifier plus
detector on the result, and compares against baseline labeling regions.
"""

from .errors import (
    ConfigurationError,
    InputError,
    IntervalExhausted,
    TrainingError,
    UsageError,
)
from .harness import (
    ExperimentConfig,
    RunReport,
    config_from_mapping,
    derive_seed,
    emit_histograms,
    emit_report,
    load_config,
    run_experiment,
)
from .learner import (
    ClassifierParams,
    DetectorParams,
    MetricsReport,
    TrainConfig,
    auroc,
    classify,
    evaluate,
    fpr_at_tpr,
    train_classifier,
    train_joint,
)
from .pools import (
    OOD_LABEL,
    CovariateShift,
    FeatureMixtureSpec,
    GaussianBlob,
    GaussianMixture,
    LabeledIdSet,
    Membership,
    ObjectiveCurve,
    ScoreMixtureSpec,
    TestSplits,
    WildExample,
    WildPool,
    analytic_max_ambiguity,
    composition_counts,
    oracle_label,
    read_pool,
    sample_feature_wild,
    sample_score_wild,
    wild_median,
    write_pool,
)
from .presets import (
    joint_config,
    scorer_config,
    skewed_score_pool,
    symmetric_score_pool,
    three_cluster_field,
)
from .scores import energy_score, entropy_score, margin_score, msp_score, score_logits, score_pool
from .search import (
    ConfInterval,
    LabeledSet,
    Phase1Result,
    Phase1Step,
    conf_update,
    empirical_argmax,
    phase1_search,
    shrink_factor,
)
from .strategies import (
    SelectionResult,
    aha_select,
    near_boundary_select,
    oracle_region_select,
    random_select,
    top_k_select,
    tpr_threshold,
)

__version__ = "0.1.0"
