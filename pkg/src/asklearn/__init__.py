"""Batch active learning with calibrated classifiers.

Train a calibration-regularized MLP on the labeled pool, pseudo-label the
unlabeled pool (augmentation-averaged where the model is unsure), embed
every pool sample as its last-layer loss gradient, pick a diverse batch by
k-means++ seeding, have an oracle annotate it, and repeat until the budget
runs out. Simulated, noisy, and human-in-the-loop oracles; CSV output and
an HTTP annotation API.
"""

from .calibration import (
    CalibSpec,
    bhattacharyya,
    ce_loss,
    kl_to_uniform,
    likelihood_weight,
    lwcc_loss,
    variance_weight,
    vwcc_loss,
)
from .data import (
    Dataset,
    PoolState,
    commit_query,
    init_pools,
    load_idx,
    write_idx,
)
from .embedding import GradEmbedding, grad_embed, verify_against_backprop
from .engine import (
    STRATEGIES,
    ActiveLearningLoop,
    ExperimentConfig,
    RoundRecord,
    derive_rng,
    run_experiment,
)
from .errors import AskLearnError
from .metrics import EvalReport, accuracy, brier, ece, evaluate, nll
from .model import AdamOptimizer, MlpModel, softmax, train
from .oracle import (
    LabelAssignment,
    Oracle,
    OracleSpec,
    annotate_exact,
    annotate_human,
    annotate_noisy,
)
from .pseudolabel import PseudoLabelReport, augment, refine_labels, translate
from .sampler import (
    QueryBatch,
    confidence_select,
    entropy_select,
    kmeanspp_select,
    random_select,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningLoop",
    "AdamOptimizer",
    "AskLearnError",
    "CalibSpec",
    "Dataset",
    "EvalReport",
    "ExperimentConfig",
    "GradEmbedding",
    "LabelAssignment",
    "MlpModel",
    "Oracle",
    "OracleSpec",
    "PoolState",
    "PseudoLabelReport",
    "QueryBatch",
    "RoundRecord",
    "STRATEGIES",
    "accuracy",
    "annotate_exact",
    "annotate_human",
    "annotate_noisy",
    "augment",
    "bhattacharyya",
    "brier",
    "ce_loss",
    "commit_query",
    "confidence_select",
    "derive_rng",
    "ece",
    "entropy_select",
    "evaluate",
    "grad_embed",
    "init_pools",
    "kl_to_uniform",
    "kmeanspp_select",
    "likelihood_weight",
    "load_idx",
    "lwcc_loss",
    "nll",
    "random_select",
    "refine_labels",
    "run_experiment",
    "softmax",
    "train",
    "translate",
    "variance_weight",
    "verify_against_backprop",
    "vwcc_loss",
    "write_idx",
]
