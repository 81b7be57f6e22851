"""Cross-domain sentiment classification via teacher/student self-training."""

from sentipipe._core import (
    Model,
    evaluate,
    load_model,
    pseudolabel,
    run_experiment,
    synth_gen,
    tokenize,
    train_teacher,
    __version__,
)

__all__ = [
    "Model",
    "evaluate",
    "load_model",
    "pseudolabel",
    "run_experiment",
    "synth_gen",
    "tokenize",
    "train_teacher",
    "__version__",
]
