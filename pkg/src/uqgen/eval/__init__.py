from .judge import BUILTIN_TOY_COMMAND, JudgeConfig, load_precomputed, run_judge, toy_judge
from .metrics import JudgeResult, UndefinedMetric, auc, label_code, pearson, q_score, semantic_performance, spearman
from .pipeline import (
    DatasetInstance,
    EvalRecord,
    dataset_hash,
    evaluate,
    load_dataset,
    load_records,
    sample_instances,
    summarize,
)

__all__ = [
    "BUILTIN_TOY_COMMAND",
    "DatasetInstance",
    "EvalRecord",
    "JudgeConfig",
    "JudgeResult",
    "UndefinedMetric",
    "auc",
    "dataset_hash",
    "evaluate",
    "label_code",
    "load_dataset",
    "load_precomputed",
    "load_records",
    "pearson",
    "q_score",
    "run_judge",
    "sample_instances",
    "semantic_performance",
    "spearman",
    "summarize",
    "toy_judge",
]
