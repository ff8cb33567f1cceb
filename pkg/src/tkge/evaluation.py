"""Filtered ranking protocol and aggregate metrics (MRR, Hit@1/3/10).

Every test fact yields two queries, (v, r, ?, t) and (?, r, u, t). The
candidate set is the full entity vocabulary minus entities forming a known
fact with the fixed side at the same timestamp (the target itself always
stays in). Ranks are optimistic under ties by default: 1 + the number of
strictly better candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import build_filter_index
from .models import (_entity_embed, _relation_embed, is_simple_family,
                     uses_timestamp_table)

_CHUNK = 128  # queries per block for norm-based scores


@dataclass
class RankingReport:
    head_ranks: np.ndarray
    tail_ranks: np.ndarray

    @property
    def _all(self):
        return np.concatenate([self.head_ranks, self.tail_ranks])

    @property
    def mrr(self):
        return float(np.mean(1.0 / self._all))

    def hit(self, k):
        return float(np.mean(self._all <= k))

    @property
    def hit1(self):
        return self.hit(1)

    @property
    def hit3(self):
        return self.hit(3)

    @property
    def hit10(self):
        return self.hit(10)

    def as_row(self):
        return {"mrr": self.mrr, "hit1": self.hit1, "hit3": self.hit3,
                "hit10": self.hit10}


def _entity_matrices(params, date_comps):
    """Embeddings of every entity at one date, per role."""
    ids = np.arange(params.n_entities)
    date = np.asarray(date_comps, dtype=np.float64)
    if is_simple_family(params.kind):
        zf, _ = _entity_embed(params, ids, date, "h")
        zb, _ = _entity_embed(params, ids, date, "t")
        return zf, zb
    z, _ = _entity_embed(params, ids, date, "h")
    return z, z


def _norm_scores(base, candidates):
    """-||base[g] +/- candidates|| for every query g and candidate, chunked."""
    out = np.empty((base.shape[0], candidates.shape[0]))
    for lo in range(0, base.shape[0], _CHUNK):
        hi = lo + _CHUNK
        diff = base[lo:hi, None, :] - candidates[None, :, :]
        out[lo:hi] = -np.linalg.norm(diff, axis=-1)
    return out


def _group_scores(params, h, r, t, date_comps, ts_id, side):
    """Score all entities as replacements for one side of a query group.

    h, r, t are id arrays of shape (G,); returns (G, n_entities).
    """
    kind = params.kind
    date = np.asarray(date_comps, dtype=np.float64)
    zf, zb = _entity_matrices(params, date_comps)
    if kind in ("DistMult", "DE-DistMult"):
        re, _ = _relation_embed(params, r, date, "f")
        fixed, _ = _entity_embed(params, h if side == "tail" else t, date, "h")
        return (fixed * re) @ zf.T
    if kind in ("SimplE", "DE-SimplE"):
        rf, _ = _relation_embed(params, r, date, "f")
        ri, _ = _relation_embed(params, r, date, "i")
        if side == "tail":
            hf, _ = _entity_embed(params, h, date, "h")
            hb, _ = _entity_embed(params, h, date, "t")
            return 0.5 * ((hf * rf) @ zb.T + (hb * ri) @ zf.T)
        tf, _ = _entity_embed(params, t, date, "h")
        tb, _ = _entity_embed(params, t, date, "t")
        return 0.5 * ((rf * tb) @ zf.T + (ri * tf) @ zb.T)
    # TransE family
    re, _ = _relation_embed(params, r, date, "f")
    zt = None
    if uses_timestamp_table(kind):
        zt = params.tables["ts"][ts_id]
    cand = zf
    if side == "tail":
        fixed, _ = _entity_embed(params, h, date, "h")
        base = fixed + re
        if kind == "TTransE":
            base = base + zt
        if kind == "HyTE":
            base = base - (base @ zt)[:, None] * zt
            cand = cand - (cand @ zt)[:, None] * zt
        return _norm_scores(base, cand)
    fixed, _ = _entity_embed(params, t, date, "h")
    base = re - fixed
    if kind == "TTransE":
        base = base + zt
    if kind == "HyTE":
        base = base - (base @ zt)[:, None] * zt
        cand = cand - (cand @ zt)[:, None] * zt
    return _norm_scores(base, -cand)


def _ranks_from_scores(scores, targets, excluded, ties):
    """Filtered ranks for one query group.

    ``excluded`` is a list (per query) of id collections to drop from the
    candidate pool (the target is always retained).
    """
    ranks = np.empty(len(targets), dtype=np.int64)
    for g, target in enumerate(targets):
        row = scores[g]
        target_score = row[target]
        valid = np.ones(row.shape[0], dtype=bool)
        excl = list(excluded[g])
        if excl:
            valid[excl] = False
        valid[target] = True
        better = np.count_nonzero(valid & (row > target_score))
        rank = 1 + better
        if ties == "pessimistic":
            tied = np.count_nonzero(valid & (row == target_score)) - 1
            rank += tied
        ranks[g] = rank
    return ranks


def evaluate(params, ds, split="test", filter_index=None, ties="optimistic"):
    """Filtered ranking of every fact in a split, both query directions."""
    if filter_index is None:
        filter_index = build_filter_index(ds)
    arr = ds.arrays(split)
    n = arr["head"].size
    if n == 0:
        raise ValueError(f"split {split!r} is empty")
    tail_ranks = np.empty(n, dtype=np.int64)
    head_ranks = np.empty(n, dtype=np.int64)
    order = np.argsort(arr["ts"], kind="stable")
    for ts_id in np.unique(arr["ts"]):
        idx = order[np.searchsorted(arr["ts"], ts_id, side="left", sorter=order):
                    np.searchsorted(arr["ts"], ts_id, side="right", sorter=order)]
        h, r, t = arr["head"][idx], arr["rel"][idx], arr["tail"][idx]
        date = arr["dates"][idx[0]]
        scores = _group_scores(params, h, r, t, date, ts_id, "tail")
        excluded = [filter_index.known_tails(h[g], r[g], ts_id) for g in range(idx.size)]
        tail_ranks[idx] = _ranks_from_scores(scores, t, excluded, ties)
        scores = _group_scores(params, h, r, t, date, ts_id, "head")
        excluded = [filter_index.known_heads(r[g], t[g], ts_id) for g in range(idx.size)]
        head_ranks[idx] = _ranks_from_scores(scores, h, excluded, ties)
    return RankingReport(head_ranks=head_ranks, tail_ranks=tail_ranks)


def rank_query(params, ds, fact, side, filter_index=None, ties="optimistic"):
    """Filtered rank of the target entity for one query direction."""
    if filter_index is None:
        filter_index = build_filter_index(ds)
    vocab = ds.vocabulary
    ts_id = vocab.timestamp_id(fact.timestamp)
    h = np.array([fact.head])
    r = np.array([fact.relation])
    t = np.array([fact.tail])
    date = np.asarray(fact.timestamp.components())
    scores = _group_scores(params, h, r, t, date, ts_id, side)
    if side == "tail":
        excluded = [filter_index.known_tails(fact.head, fact.relation, ts_id)]
        target = [fact.tail]
    else:
        excluded = [filter_index.known_heads(fact.relation, fact.tail, ts_id)]
        target = [fact.head]
    return int(_ranks_from_scores(scores, target, excluded, ties)[0])
