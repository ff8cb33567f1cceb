"""Mini-batch training: negative sampling, cross-entropy loss, Adam.

Each fact in a batch produces a tail query and a head query; every query
is scored against its target plus ``negative_ratio`` uniformly drawn
distractor entities and trained with negative log-softmax over the
candidate set. Deterministic given the seed (single-threaded).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import models
from .data import build_filter_index
from .errors import NumericError
from .evaluation import evaluate
from .models import ModelParams

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    model: str = "DE-SimplE"
    dim: int = 100
    d_t: int = 64  # temporal feature count (absolute, not a fraction)
    activation: str = "sine"
    learning_rate: float = 0.001
    batch_size: int = 512
    negative_ratio: int = 500
    dropout: float = 0.0
    epochs: int = 500
    validate_every: int = 20
    seed: int = 0
    init_scale: float = 0.1
    per_component_amplitude: bool = False
    diachronic_relations: bool = False
    filter_negatives: bool = False
    normalize_dates: bool = False
    enforce_nonnegative: bool = False

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.negative_ratio < 1 or self.batch_size < 1 or self.dim < 1:
            raise ValueError("counts must be positive")

    def replace(self, **kwargs):
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kwargs)
        return TrainConfig(**vals)


@dataclass
class Batch:
    """One mini-batch with its candidate sets and (optional) dropout masks,
    fixed at creation so the loss is a pure function of the parameters."""

    head: np.ndarray     # (B, 1)
    rel: np.ndarray      # (B, 1)
    tail: np.ndarray     # (B, 1)
    dates: np.ndarray    # (B, 1, 3)
    ts: np.ndarray       # (B, 1)
    cand_tail: np.ndarray  # (B, n+1), column 0 is the target
    cand_head: np.ndarray
    masks_tail: tuple | None = None
    masks_head: tuple | None = None


def sample_candidates(target, n, n_entities, rng, known=None):
    """Target plus n uniform distractors; optionally resampled to avoid
    ``known`` positives."""
    distractors = rng.integers(0, n_entities, size=n)
    if known:
        for _ in range(100):
            bad = np.isin(distractors, list(known))
            if not bad.any():
                break
            distractors[bad] = rng.integers(0, n_entities, size=int(bad.sum()))
    return np.concatenate([[target], distractors])


def make_batch(arrays, idx, cfg: TrainConfig, n_entities, rng,
               filter_index=None, product_family=False):
    b = idx.size
    n = cfg.negative_ratio
    head = arrays["head"][idx]
    rel = arrays["rel"][idx]
    tail = arrays["tail"][idx]
    if cfg.filter_negatives and filter_index is not None:
        ts = arrays["ts"][idx]
        cand_tail = np.stack([
            sample_candidates(tail[i], n, n_entities, rng,
                              filter_index.known_tails(head[i], rel[i], ts[i]) - {tail[i]})
            for i in range(b)])
        cand_head = np.stack([
            sample_candidates(head[i], n, n_entities, rng,
                              filter_index.known_heads(rel[i], tail[i], ts[i]) - {head[i]})
            for i in range(b)])
    else:
        cand_tail = np.concatenate(
            [tail[:, None], rng.integers(0, n_entities, size=(b, n))], axis=1)
        cand_head = np.concatenate(
            [head[:, None], rng.integers(0, n_entities, size=(b, n))], axis=1)
    masks_tail = masks_head = None
    if cfg.dropout > 0.0 and product_family:
        keep = 1.0 - cfg.dropout
        shape = (b, n + 1, cfg.dim)

        def draw():
            return (rng.random(size=shape) < keep) / keep

        masks_tail = (draw(), draw())
        masks_head = (draw(), draw())
    return Batch(head=head[:, None], rel=rel[:, None], tail=tail[:, None],
                 dates=arrays["dates"][idx][:, None, :], ts=arrays["ts"][idx][:, None],
                 cand_tail=cand_tail, cand_head=cand_head,
                 masks_tail=masks_tail, masks_head=masks_head)


def _log_softmax_loss(scores):
    """(loss, dscores) for target-at-column-0 cross entropy, max-stabilized."""
    m = scores.max(axis=-1, keepdims=True)
    ex = np.exp(scores - m)
    z = ex.sum(axis=-1, keepdims=True)
    loss = float(np.sum(np.log(z) + m - scores[:, :1]))
    dscores = ex / z
    dscores[:, 0] -= 1.0
    return loss, dscores


def _direction_scores(params, batch: Batch, side):
    if side == "tail":
        return models.score_many(params, batch.head, batch.rel, batch.cand_tail,
                                 batch.dates, ts_ids=batch.ts, masks=batch.masks_tail)
    return models.score_many(params, batch.cand_head, batch.rel, batch.tail,
                             batch.dates, ts_ids=batch.ts, masks=batch.masks_head)


def batch_loss(params: ModelParams, batch: Batch):
    """Cross-entropy loss of a batch over both query directions."""
    total = 0.0
    for side in ("tail", "head"):
        scores, _ = _direction_scores(params, batch, side)
        if not np.all(np.isfinite(scores)):
            raise NumericError("non-finite score in batch_loss")
        loss, _ = _log_softmax_loss(scores)
        total += loss
    return total


def batch_loss_and_grads(params: ModelParams, batch: Batch):
    total = 0.0
    grads = params.zero_grads()
    for side in ("tail", "head"):
        scores, cache = _direction_scores(params, batch, side)
        if not np.all(np.isfinite(scores)):
            raise NumericError("non-finite score in batch_loss")
        loss, dscores = _log_softmax_loss(scores)
        total += loss
        models.score_many_backward(params, cache, dscores, grads)
    if params.ent_spec is not None and params.ent_spec.frozen:
        from .diachronic import zero_frozen_grads
        for p in params.entity_prefixes():
            zero_frozen_grads(grads, p, params.ent_spec)
    return total, grads


class AdamState:
    """First/second moment accumulators mirroring the parameter tables."""

    def __init__(self, tables, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.m = {k: np.zeros_like(v) for k, v in tables.items()}
        self.v = {k: np.zeros_like(v) for k, v in tables.items()}
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(state: AdamState, tables, grads, lr):
    """One Adam update with bias correction, in place."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        tables[name] -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class HistoryRow:
    epoch: int
    train_loss: float
    val_mrr: float


def init_from_config(cfg: TrainConfig, vocab, rng, train_dates=None) -> ModelParams:
    date_scale = None
    if cfg.normalize_dates:
        lo = train_dates.min(axis=0)
        span = np.maximum(train_dates.max(axis=0) - lo, 1.0)
        date_scale = np.stack([lo, span])
    d_t = cfg.d_t if models.is_diachronic(cfg.model) else 0
    return models.init_params(
        cfg.model, vocab.n_entities, vocab.n_relations, vocab.n_timestamps,
        cfg.dim, rng, d_t=d_t, activation=cfg.activation, scale=cfg.init_scale,
        per_component_amplitude=cfg.per_component_amplitude,
        diachronic_relations=cfg.diachronic_relations, date_scale=date_scale)


def train(cfg: TrainConfig, ds, ablation=None, log=None):
    """Train a model, validating every ``validate_every`` epochs.

    Returns (best_params, history) where best is by filtered validation MRR
    (the initial parameters if no validation ever ran).
    """
    rng = np.random.default_rng(cfg.seed)
    arrays = ds.arrays("train")
    n_train = arrays["head"].size
    if n_train == 0:
        raise ValueError("train split is empty")
    params = init_from_config(cfg, ds.vocabulary, rng, train_dates=arrays["dates"])
    if ablation is not None:
        params = models.ablate(params, ablation)
    filter_index = build_filter_index(ds)
    adam = AdamState(params.tables)
    product_family = models.base_kind(cfg.model) in ("DistMult", "SimplE")
    history = []
    best_params = params.copy()
    best_mrr = -1.0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            batch = make_batch(arrays, idx, cfg, ds.vocabulary.n_entities, rng,
                               filter_index=filter_index,
                               product_family=product_family)
            loss, grads = batch_loss_and_grads(params, batch)
            if not np.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch} (loss={loss})")
            epoch_loss += loss
            adam_step(adam, params.tables, grads, cfg.learning_rate)
            if cfg.model == "HyTE":
                models.renormalize_timestamps(params.tables)
            if cfg.enforce_nonnegative and params.ent_spec is not None:
                for p in params.entity_prefixes():
                    np.maximum(params.tables[f"{p}_a"], 0.0,
                               out=params.tables[f"{p}_a"])
        epoch_loss /= n_train
        if cfg.validate_every > 0 and epoch % cfg.validate_every == 0 and len(ds.valid) > 0:
            report = evaluate(params, ds, "valid", filter_index=filter_index)
            history.append(HistoryRow(epoch=epoch, train_loss=epoch_loss,
                                      val_mrr=report.mrr))
            if report.mrr > best_mrr:
                best_mrr = report.mrr
                best_params = params.copy()
            if log is not None:
                log(history[-1])
    if best_mrr < 0:
        best_params = params
    return best_params, history
