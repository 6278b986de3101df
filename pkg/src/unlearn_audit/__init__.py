"""Privacy audit toolkit for machine unlearning.

Implements deletion-inference and deletion-reconstruction security games,
simple but effective attacks against classical learners and n-gram language
models, and a weak deletion-compliance harness, all driven by replayable
seeded configurations.
"""

from .core import (
    ClassDistribution,
    Dataset,
    Example,
    LossKind,
    Oracle,
    Phase,
    empirical_risk,
    evaluate_loss,
    oracle_query,
)
from .data import DataSpec
from .games import (
    GameConfig,
    KnownInstanceStats,
    RecStats,
    SuccessStats,
    multiset_f1,
    run_deletion_inference,
    run_known_instance,
    run_reconstruction,
    wilson_interval,
)
from .learners import LearnerSpec, Model, predict, sequence_probability, train
from .unlearning import DeletionRequest, delete_examples

__version__ = "0.1.0"

__all__ = [
    "ClassDistribution",
    "Dataset",
    "DataSpec",
    "DeletionRequest",
    "Example",
    "GameConfig",
    "KnownInstanceStats",
    "LearnerSpec",
    "LossKind",
    "Model",
    "Oracle",
    "Phase",
    "RecStats",
    "SuccessStats",
    "__version__",
    "delete_examples",
    "empirical_risk",
    "evaluate_loss",
    "multiset_f1",
    "oracle_query",
    "predict",
    "run_deletion_inference",
    "run_known_instance",
    "run_reconstruction",
    "sequence_probability",
    "train",
    "wilson_interval",
]
