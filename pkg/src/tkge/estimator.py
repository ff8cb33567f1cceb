"""Scikit-learn style front end for the training engine.

``TemporalLinkPredictor`` consumes quadruples as (head, relation, tail,
date) tuples with string names and ISO dates, fits embeddings, and scores
new quadruples. Hyperparameters follow the sklearn get_params/set_params
protocol so the model composes with grid search and pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import models
from .data import Dataset, Date, Quadruple, Vocabulary, parse_date
from .evaluation import evaluate
from .training import TrainConfig, train


def _as_date(value):
    if isinstance(value, Date):
        return value
    return parse_date(str(value))


class TemporalLinkPredictor(BaseEstimator):
    """Temporal knowledge-graph link scorer with diachronic embeddings."""

    def __init__(self, model="DE-SimplE", dim=100, temporal_dim=64,
                 activation="sine", learning_rate=0.001, batch_size=512,
                 negative_ratio=500, dropout=0.0, epochs=500,
                 validate_every=20, validation_fraction=0.1, seed=0):
        self.model = model
        self.dim = dim
        self.temporal_dim = temporal_dim
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.negative_ratio = negative_ratio
        self.dropout = dropout
        self.epochs = epochs
        self.validate_every = validate_every
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _config(self):
        return TrainConfig(model=self.model, dim=self.dim, d_t=self.temporal_dim,
                           activation=self.activation,
                           learning_rate=self.learning_rate,
                           batch_size=self.batch_size,
                           negative_ratio=self.negative_ratio,
                           dropout=self.dropout, epochs=self.epochs,
                           validate_every=self.validate_every, seed=self.seed)

    def _build_dataset(self, X):
        vocab = Vocabulary()
        facts = []
        for row in X:
            if len(row) != 4:
                raise ValueError(f"expected (head, relation, tail, date), got {row!r}")
            head, rel, tail, date = row
            date = _as_date(date)
            facts.append(Quadruple(vocab.entity_id(str(head), create=True),
                                   vocab.relation_id(str(rel), create=True),
                                   vocab.entity_id(str(tail), create=True),
                                   date))
            vocab.timestamp_id(date, create=True)
        if not facts:
            raise ValueError("X is empty")
        rng = np.random.default_rng(self.seed)
        order = rng.permutation(len(facts))
        n_valid = int(len(facts) * self.validation_fraction)
        valid = [facts[i] for i in order[:n_valid]]
        train_facts = [facts[i] for i in order[n_valid:]]
        return Dataset(vocab, {"train": train_facts, "valid": valid, "test": []})

    def fit(self, X, y=None):
        """Fit embeddings on quadruples; X is an iterable of 4-tuples or a Dataset."""
        ds = X if isinstance(X, Dataset) else self._build_dataset(X)
        self.dataset_ = ds
        self.params_, self.history_ = train(self._config(), ds)
        return self

    def _to_quadruple(self, row):
        head, rel, tail, date = row
        vocab = self.dataset_.vocabulary
        return Quadruple(vocab.entity_id(str(head)), vocab.relation_id(str(rel)),
                         vocab.entity_id(str(tail)), _as_date(date))

    def predict(self, X):
        """Plausibility scores for quadruples (higher = more plausible)."""
        check_is_fitted(self, "params_")
        return np.array([
            models.score(self.params_, self._to_quadruple(row),
                         vocab=self.dataset_.vocabulary)
            for row in X])

    def evaluate_ranking(self, split="valid"):
        """Filtered MRR / Hit@k report on one split of the fitted dataset."""
        check_is_fitted(self, "params_")
        return evaluate(self.params_, self.dataset_, split)
