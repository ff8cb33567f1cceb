"""Temporal knowledge graph completion with diachronic entity embeddings."""

from .data import (Dataset, Date, FilterIndex, Quadruple, Vocabulary,
                   build_filter_index, load_tsv, make_unseen_timestamp_split,
                   save_tsv)
from .diachronic import DiachronicParams, DiachronicSpec
from .estimator import TemporalLinkPredictor
from .evaluation import RankingReport, evaluate, rank_query
from .models import (MODEL_KINDS, ModelParams, init_params, score, score_batch,
                     score_grad)
from .training import TrainConfig, train

__all__ = [
    "Dataset", "Date", "FilterIndex", "Quadruple", "Vocabulary",
    "build_filter_index", "load_tsv", "make_unseen_timestamp_split", "save_tsv",
    "DiachronicParams", "DiachronicSpec", "TemporalLinkPredictor",
    "RankingReport", "evaluate", "rank_query",
    "MODEL_KINDS", "ModelParams", "init_params", "score", "score_batch",
    "score_grad", "TrainConfig", "train",
]
