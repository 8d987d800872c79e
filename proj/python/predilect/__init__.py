"""Predilection-matrix pipeline bindings."""

from ._core import (
    ContractError,
    DegenerateLabelsError,
    Error,
    FormatError,
    Model,
    ShapeError,
    TrainingDivergedError,
    World,
    auprc,
    auroc,
    contrastive_loss,
    cross_attend,
    evaluate_zero_shot,
    gradcheck,
    kendall_tau,
    load_checkpoint,
    make_world,
    noise_sweep,
    render_prompt,
    sample_batch,
    save_checkpoint,
    total_loss,
    train,
)

__all__ = [
    "ContractError",
    "DegenerateLabelsError",
    "Error",
    "FormatError",
    "Model",
    "ShapeError",
    "TrainingDivergedError",
    "World",
    "auprc",
    "auroc",
    "contrastive_loss",
    "cross_attend",
    "evaluate_zero_shot",
    "gradcheck",
    "kendall_tau",
    "load_checkpoint",
    "make_world",
    "noise_sweep",
    "render_prompt",
    "sample_batch",
    "save_checkpoint",
    "total_loss",
    "train",
]
