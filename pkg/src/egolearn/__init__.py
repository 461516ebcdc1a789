"""Ego-network embeddings and multi-label circle classification."""

from .classifier import (
    MlpModel,
    TrainHyper,
    init_model,
    load_model,
    predict,
    predict_batch,
    predict_set,
    save_model,
    train,
)
from .embedding import (
    EmbeddingTable,
    PvdmTrainer,
    SkipGramTrainer,
    TrainConfig,
    build_vocabulary,
    load_embeddings,
    save_embeddings,
    train_global,
    train_local,
)
from .errors import EgoLearnError
from .evaluation import (
    ExperimentConfig,
    Report,
    evaluate_variants,
    f1_scores,
    kfold_split,
    run_experiment,
)
from .features import FeatureVariant, build_dataset, profile_similarity
from .graph import (
    Dataset,
    EgoNetwork,
    Graph,
    dataset_stats,
    ego_network,
    load_ego_dataset,
)
from .pipeline import PipelineConfig, run_pipeline
from .walks import WalkConfig, ego_walk, generate_ego_corpus, generate_global_corpus

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EgoLearnError",
    "EgoNetwork",
    "EmbeddingTable",
    "ExperimentConfig",
    "FeatureVariant",
    "Graph",
    "MlpModel",
    "PipelineConfig",
    "PvdmTrainer",
    "Report",
    "SkipGramTrainer",
    "TrainConfig",
    "TrainHyper",
    "WalkConfig",
    "build_dataset",
    "build_vocabulary",
    "dataset_stats",
    "ego_network",
    "ego_walk",
    "evaluate_variants",
    "f1_scores",
    "generate_ego_corpus",
    "generate_global_corpus",
    "init_model",
    "kfold_split",
    "load_ego_dataset",
    "load_embeddings",
    "load_model",
    "predict",
    "predict_batch",
    "predict_set",
    "profile_similarity",
    "run_experiment",
    "run_pipeline",
    "save_embeddings",
    "save_model",
    "train",
    "train_global",
    "train_local",
]
