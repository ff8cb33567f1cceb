"""Score functions and analytic gradients for the supported model kinds.

Static kinds: TransE, DistMult, SimplE. Diachronic kinds replace entity
lookups with time-dependent embeddings: DE-TransE, DE-DistMult, DE-SimplE.
Temporal baselines with explicit timestamp vectors: TTransE, HyTE.

All scoring works on id arrays of arbitrary broadcastable shapes; the
scalar API wraps the batched one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import diachronic
from .diachronic import DiachronicSpec
from .errors import ShapeError
from .scatter import RowScatter
from .vecmath import init_uniform

STATIC_KINDS = ("TransE", "DistMult", "SimplE")
DE_KINDS = ("DE-TransE", "DE-DistMult", "DE-SimplE")
TEMPORAL_BASELINES = ("TTransE", "HyTE")
MODEL_KINDS = STATIC_KINDS + DE_KINDS + TEMPORAL_BASELINES

_TINY = 1e-30


def is_diachronic(kind):
    return kind.startswith("DE-")


def base_kind(kind):
    return kind[3:] if is_diachronic(kind) else kind


def is_simple_family(kind):
    return base_kind(kind) == "SimplE"


def is_transe_family(kind):
    return base_kind(kind) == "TransE" or kind in TEMPORAL_BASELINES


def uses_timestamp_table(kind):
    return kind in TEMPORAL_BASELINES


@dataclass
class ModelParams:
    """Learnable state for one model kind: named dense parameter tables."""

    kind: str
    n_entities: int
    n_relations: int
    n_timestamps: int
    dim: int
    tables: dict
    ent_spec: DiachronicSpec | None = None
    rel_spec: DiachronicSpec | None = None
    date_scale: np.ndarray | None = None  # (2, 3): offsets and scales

    def entity_prefixes(self):
        return ("ent_h", "ent_t") if is_simple_family(self.kind) else ("ent",)

    def relation_names(self):
        return ("rel_f", "rel_i") if is_simple_family(self.kind) else ("rel",)

    def copy(self):
        return replace(self, tables={k: v.copy() for k, v in self.tables.items()})

    def zero_grads(self):
        return {k: np.zeros_like(v) for k, v in self.tables.items()}

    def scale_dates(self, dates):
        if self.date_scale is None:
            return dates
        return (dates - self.date_scale[0]) / self.date_scale[1]


def init_params(kind, n_entities, n_relations, n_timestamps, dim, rng,
                d_t=0, activation="sine", scale=0.1,
                per_component_amplitude=False, diachronic_relations=False,
                date_scale=None) -> ModelParams:
    """Uniformly initialized parameter tables for the given model kind."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    tables = {}
    ent_spec = rel_spec = None
    simple = is_simple_family(kind)
    ent_prefixes = ("ent_h", "ent_t") if simple else ("ent",)
    rel_names = ("rel_f", "rel_i") if simple else ("rel",)
    if is_diachronic(kind):
        ent_spec = DiachronicSpec(dim=dim, d_t=d_t, activation=activation,
                                  per_component_amplitude=per_component_amplitude)
        for p in ent_prefixes:
            tables.update(diachronic.init_tables(rng, n_entities, ent_spec, p, scale))
        if diachronic_relations:
            rel_spec = DiachronicSpec(dim=dim, d_t=d_t, activation=activation,
                                      per_component_amplitude=per_component_amplitude)
            for p in rel_names:
                tables.update(diachronic.init_tables(rng, n_relations, rel_spec, p, scale))
    else:
        for p in ent_prefixes:
            tables[p] = init_uniform(rng, (n_entities, dim), scale)
    if rel_spec is None:
        for name in rel_names:
            tables[name] = init_uniform(rng, (n_relations, dim), scale)
    if uses_timestamp_table(kind):
        tables["ts"] = init_uniform(rng, (n_timestamps, dim), scale)
        if kind == "HyTE":
            renormalize_timestamps(tables)
    return ModelParams(kind=kind, n_entities=n_entities, n_relations=n_relations,
                       n_timestamps=n_timestamps, dim=dim, tables=tables,
                       ent_spec=ent_spec, rel_spec=rel_spec,
                       date_scale=None if date_scale is None else np.asarray(date_scale))


def renormalize_timestamps(tables):
    """Project HyTE timestamp vectors back to unit L2 norm."""
    ts = tables["ts"]
    norms = np.linalg.norm(ts, axis=-1, keepdims=True)
    np.divide(ts, np.maximum(norms, _TINY), out=ts)


def ablate(params: ModelParams, mode) -> ModelParams:
    """Freeze a diachronic parameter group (fix_a / fix_w / fix_b) on every
    entity embedding role."""
    if params.ent_spec is None:
        raise ShapeError(f"{params.kind} has no diachronic parameters to ablate")
    out = params.copy()
    spec = out.ent_spec
    for p in out.entity_prefixes():
        spec = diachronic.apply_ablation(out.tables, p, out.ent_spec, mode)
    return replace(out, ent_spec=spec)


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _entity_embed(params, ids, dates, role):
    """(z, cache) for one entity role; role is "h" or "t" (SimplE side)."""
    ids = np.asarray(ids)
    if is_simple_family(params.kind):
        prefix = "ent_h" if role == "h" else "ent_t"
    else:
        prefix = "ent"
    if params.ent_spec is not None:
        z, cache = diachronic.embed(params.tables, prefix, params.ent_spec, ids, dates)
        return z, {"diachronic": True, "prefix": prefix, "spec": params.ent_spec,
                   "cache": cache, "n": params.n_entities}
    z = params.tables[prefix][ids]
    return z, {"diachronic": False, "table": prefix, "ids": ids,
               "n": params.n_entities, "shape": z.shape}


def _relation_embed(params, ids, dates, role):
    ids = np.asarray(ids)
    if is_simple_family(params.kind):
        name = "rel_f" if role == "f" else "rel_i"
    else:
        name = "rel"
    if params.rel_spec is not None:
        z, cache = diachronic.embed(params.tables, name, params.rel_spec, ids, dates)
        return z, {"diachronic": True, "prefix": name, "spec": params.rel_spec,
                   "cache": cache, "n": params.n_relations}
    z = params.tables[name][ids]
    return z, {"diachronic": False, "table": name, "ids": ids,
               "n": params.n_relations, "shape": z.shape}


def _embed_backward(params, info, upstream, grads):
    upstream = _unbroadcast(
        upstream,
        info["cache"]["a"].shape if info["diachronic"] else info["shape"])
    if info["diachronic"]:
        diachronic.embed_backward(params.tables, info["prefix"], info["spec"],
                                  info["cache"], upstream, grads)
    else:
        RowScatter(info["ids"], info["n"]).add_to(grads[info["table"]], upstream)


def score_many(params: ModelParams, h_ids, r_ids, t_ids, dates, ts_ids=None,
               masks=None):
    """Scores over broadcastable id arrays.

    ``dates`` must broadcast against the common id shape with a trailing
    axis of 3. ``masks`` is an optional pair of dropout masks (already
    scaled) applied to the element-wise product vectors of the
    DistMult/SimplE families. Returns (scores, cache).
    """
    kind = params.kind
    dates = params.scale_dates(np.asarray(dates, dtype=np.float64))
    cache = {"kind": kind, "masks": masks}
    if kind in ("DistMult", "DE-DistMult"):
        h, hi = _entity_embed(params, h_ids, dates, "h")
        r, ri = _relation_embed(params, r_ids, dates, "f")
        t, ti = _entity_embed(params, t_ids, dates, "h")
        prod = h * r * t
        if masks is not None:
            prod = prod * masks[0]
        cache.update(h=h, r=r, t=t, hi=hi, ri=ri, ti=ti)
        return prod.sum(axis=-1), cache
    if kind in ("SimplE", "DE-SimplE"):
        h_f, i1 = _entity_embed(params, h_ids, dates, "h")
        h_b, i2 = _entity_embed(params, h_ids, dates, "t")
        t_f, i3 = _entity_embed(params, t_ids, dates, "h")
        t_b, i4 = _entity_embed(params, t_ids, dates, "t")
        r_f, i5 = _relation_embed(params, r_ids, dates, "f")
        r_i, i6 = _relation_embed(params, r_ids, dates, "i")
        p1 = h_f * r_f * t_b
        p2 = t_f * r_i * h_b
        if masks is not None:
            p1 = p1 * masks[0]
            p2 = p2 * masks[1]
        cache.update(h_f=h_f, h_b=h_b, t_f=t_f, t_b=t_b, r_f=r_f, r_i=r_i,
                     infos=(i1, i2, i3, i4, i5, i6))
        return 0.5 * (p1.sum(axis=-1) + p2.sum(axis=-1)), cache
    if kind in ("TransE", "DE-TransE", "TTransE", "HyTE"):
        h, hi = _entity_embed(params, h_ids, dates, "h")
        r, ri = _relation_embed(params, r_ids, dates, "f")
        t, ti = _entity_embed(params, t_ids, dates, "h")
        u = h + r - t
        cache.update(hi=hi, ri=ri, ti=ti)
        if kind == "TTransE":
            zt = params.tables["ts"][np.asarray(ts_ids)]
            u = u + zt
            cache["ts_ids"] = np.asarray(ts_ids)
            cache["zt_shape"] = zt.shape
        if kind == "HyTE":
            zt = params.tables["ts"][np.asarray(ts_ids)]
            s = u - np.sum(zt * u, axis=-1, keepdims=True) * zt
            cache.update(ts_ids=np.asarray(ts_ids), zt=zt, u=u, s=s,
                         zt_shape=zt.shape)
        else:
            s = u
            cache["s"] = s
        nrm = np.linalg.norm(s, axis=-1)
        cache["nrm"] = nrm
        return -nrm, cache
    raise ValueError(f"unknown model kind {kind!r}")


def score_many_backward(params: ModelParams, cache, dscores, grads):
    """Accumulate d(loss)/d(tables) given dscores = d(loss)/d(scores)."""
    kind = cache["kind"]
    masks = cache["masks"]
    ds = np.asarray(dscores, dtype=np.float64)[..., None]
    if kind in ("DistMult", "DE-DistMult"):
        g = ds if masks is None else ds * masks[0]
        h, r, t = cache["h"], cache["r"], cache["t"]
        _embed_backward(params, cache["hi"], g * r * t, grads)
        _embed_backward(params, cache["ri"], g * h * t, grads)
        _embed_backward(params, cache["ti"], g * h * r, grads)
        return
    if kind in ("SimplE", "DE-SimplE"):
        g1 = 0.5 * ds if masks is None else 0.5 * ds * masks[0]
        g2 = 0.5 * ds if masks is None else 0.5 * ds * masks[1]
        h_f, h_b = cache["h_f"], cache["h_b"]
        t_f, t_b = cache["t_f"], cache["t_b"]
        r_f, r_i = cache["r_f"], cache["r_i"]
        i1, i2, i3, i4, i5, i6 = cache["infos"]
        _embed_backward(params, i1, g1 * r_f * t_b, grads)   # d h_f
        _embed_backward(params, i2, g2 * t_f * r_i, grads)   # d h_b
        _embed_backward(params, i3, g2 * r_i * h_b, grads)   # d t_f
        _embed_backward(params, i4, g1 * h_f * r_f, grads)   # d t_b
        _embed_backward(params, i5, g1 * h_f * t_b, grads)   # d r_f
        _embed_backward(params, i6, g2 * t_f * h_b, grads)   # d r_i
        return
    if kind in ("TransE", "DE-TransE", "TTransE", "HyTE"):
        s, nrm = cache["s"], cache["nrm"]
        # subgradient 0 at the (measure-zero) kink where the norm vanishes
        safe = np.maximum(nrm, _TINY)[..., None]
        gs = -ds * np.where(nrm[..., None] > 0, s / safe, 0.0)
        if kind == "HyTE":
            zt, u = cache["zt"], cache["u"]
            zg = np.sum(zt * gs, axis=-1, keepdims=True)
            zu = np.sum(zt * u, axis=-1, keepdims=True)
            du = gs - zg * zt
            dzt = -(zg * u + zu * gs)
            RowScatter(cache["ts_ids"], params.n_timestamps).add_to(
                grads["ts"], _unbroadcast(dzt, cache["zt_shape"]))
        else:
            du = gs
            if kind == "TTransE":
                RowScatter(cache["ts_ids"], params.n_timestamps).add_to(
                    grads["ts"], _unbroadcast(du, cache["zt_shape"]))
        _embed_backward(params, cache["hi"], du, grads)
        _embed_backward(params, cache["ri"], du, grads)
        _embed_backward(params, cache["ti"], -du, grads)
        return
    raise ValueError(f"unknown model kind {kind!r}")


def score(params: ModelParams, q, vocab=None):
    """Score one quadruple."""
    ts_id = None
    if uses_timestamp_table(params.kind):
        if vocab is None:
            raise ValueError(f"{params.kind} scoring needs the vocabulary for timestamp ids")
        ts_id = np.asarray(vocab.timestamp_id(q.timestamp))
    s, _ = score_many(params,
                      np.asarray(q.head), np.asarray(q.relation), np.asarray(q.tail),
                      np.asarray(q.timestamp.components()), ts_ids=ts_id)
    return float(s)


def score_grad(params: ModelParams, q, vocab=None):
    """Dense per-table gradients of the score of one quadruple."""
    ts_id = None
    if uses_timestamp_table(params.kind):
        ts_id = np.asarray(vocab.timestamp_id(q.timestamp))
    _, cache = score_many(params,
                          np.asarray(q.head), np.asarray(q.relation), np.asarray(q.tail),
                          np.asarray(q.timestamp.components()), ts_ids=ts_id)
    grads = params.zero_grads()
    score_many_backward(params, cache, np.asarray(1.0), grads)
    return grads


def score_batch(params: ModelParams, query, candidates, vocab=None):
    """Scores for a (v, r, ?, t) or (?, r, u, t) query over a candidate list.

    ``query`` is a 4-tuple with exactly one side set to None.
    """
    head, rel, tail, date = query
    if (head is None) == (tail is None):
        raise ValueError("exactly one of head/tail must be None")
    cand = np.asarray(candidates)
    if cand.size == 0:
        raise ValueError("candidates must be nonempty")
    h = cand if head is None else np.asarray(head)
    t = cand if tail is None else np.asarray(tail)
    ts_id = None
    if uses_timestamp_table(params.kind):
        ts_id = np.asarray(vocab.timestamp_id(date))
    s, _ = score_many(params, h, np.asarray(rel), t,
                      np.asarray(date.components()), ts_ids=ts_id)
    return s.tolist()
