"""MILP backdoor search and contrastive graph attention."""

from ._core import (
    Instance,
    Model,
    backdoor_priorities,
    collect,
    evaluate,
    featurize,
    generate,
    generate_instances,
    infonce_loss,
    init_model,
    load_model,
    mcts_search,
    predict,
    read_instance,
    report,
    scores,
    solve,
    train,
    tree_weight,
)

__all__ = [
    "Instance",
    "Model",
    "backdoor_priorities",
    "collect",
    "evaluate",
    "featurize",
    "generate",
    "generate_instances",
    "infonce_loss",
    "init_model",
    "load_model",
    "mcts_search",
    "predict",
    "read_instance",
    "report",
    "scores",
    "solve",
    "train",
    "tree_weight",
]
