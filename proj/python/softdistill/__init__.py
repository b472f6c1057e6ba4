"""Label-free knowledge distillation laboratory.

Thin python facade over the C++ core: synthetic Gaussian-mixture data,
MLP teachers and students, gallery curation, and the three training stages
(teacher, distill, finetune). All numerics live in the extension module.
"""

from ._softdistill import (  # noqa: F401
    ConfigError,
    CurationReport,
    DependencyError,
    DivergenceError,
    EvalResult,
    FormatError,
    IoError,
    LabeledDataset,
    MetricsRecord,
    MlpSpec,
    Model,
    NonFiniteError,
    ShapeError,
    SyntheticBundle,
    SyntheticConfig,
    TeacherQualityError,
    TrainConfig,
    TruncatedError,
    UnlabeledGallery,
    VersionError,
    curate,
    distill,
    entropy,
    evaluate,
    finetune,
    generate_synthetic,
    init_model,
    js_divergence,
    load_dataset,
    load_gallery,
    load_idx,
    load_model,
    lr_at,
    save_dataset,
    save_gallery,
    softmax,
    teacher_quality,
    train_teacher,
)

__all__ = [
    "ConfigError",
    "CurationReport",
    "DependencyError",
    "DivergenceError",
    "EvalResult",
    "FormatError",
    "IoError",
    "LabeledDataset",
    "MetricsRecord",
    "MlpSpec",
    "Model",
    "NonFiniteError",
    "ShapeError",
    "SyntheticBundle",
    "SyntheticConfig",
    "TeacherQualityError",
    "TrainConfig",
    "TruncatedError",
    "UnlabeledGallery",
    "VersionError",
    "curate",
    "distill",
    "entropy",
    "evaluate",
    "finetune",
    "generate_synthetic",
    "init_model",
    "js_divergence",
    "load_dataset",
    "load_gallery",
    "load_idx",
    "load_model",
    "lr_at",
    "save_dataset",
    "save_gallery",
    "softmax",
    "teacher_quality",
    "train_teacher",
]
