from .metrics import (
    DistanceMetric,
    METRICS,
    abs_diff,
    hamming,
    l1_confidence,
    normalized_hamming,
    zero_one_exact,
)
from .inference import (
    GuessBit,
    fair_coin,
    loss_increase_attack,
    loss_threshold_membership,
    membership_loss_confidence,
    membership_reduction_attack,
    prediction_shift_attack,
    reconstruction_to_inference,
)
from .reconstruction import (
    MajorityReconstruction,
    confidence_drop_label,
    disagreement_majority,
    extrapolated_label,
    tune_extrapolation,
)
from .sentences import (
    DictionaryTooLargeError,
    DiffGraph,
    SearchBudgetExceededError,
    bag_of_words,
    decreased_ngram_graph,
    search_covering_path,
)

__all__ = [
    "DistanceMetric",
    "METRICS",
    "abs_diff",
    "hamming",
    "l1_confidence",
    "normalized_hamming",
    "zero_one_exact",
    "GuessBit",
    "fair_coin",
    "loss_increase_attack",
    "loss_threshold_membership",
    "membership_loss_confidence",
    "membership_reduction_attack",
    "prediction_shift_attack",
    "reconstruction_to_inference",
    "MajorityReconstruction",
    "confidence_drop_label",
    "disagreement_majority",
    "extrapolated_label",
    "tune_extrapolation",
    "DictionaryTooLargeError",
    "DiffGraph",
    "SearchBudgetExceededError",
    "bag_of_words",
    "decreased_ngram_graph",
    "search_covering_path",
]
