"""Experience-aware latent-factor recommender."""

from ._core import (
    DataError,
    Dataset,
    DivergenceError,
    InvalidArgument,
    Model,
    TrainingFailure,
    assign_user_dp,
    benefit_percent,
    brute_force_assign,
    evaluate,
    fit,
    load_model,
    pool_infrequent_users,
    read_reviews,
    split,
    synth,
    taste_scores,
)

__all__ = [
    "DataError",
    "Dataset",
    "DivergenceError",
    "InvalidArgument",
    "Model",
    "TrainingFailure",
    "assign_user_dp",
    "benefit_percent",
    "brute_force_assign",
    "evaluate",
    "fit",
    "load_model",
    "pool_infrequent_users",
    "read_reviews",
    "split",
    "synth",
    "taste_scores",
]
