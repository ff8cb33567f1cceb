"""Diachronic entity embeddings: time-dependent feature vectors.

An entity's representation at a date splits into ``d_t`` temporal features
and ``d - d_t`` static ones. Each temporal feature n is

    z[n] = a[n] * (sig(w_y[n]*year + b_y[n]) + sig(w_m[n]*month + b_m[n])
                   + sig(w_d[n]*day + b_d[n]))

with per-entity amplitudes a, frequencies w and phases b, one (w, b) pair
per date component; static features are just z[n] = a[n]. With the
``per_component_amplitude`` flag each date component gets its own amplitude
vector instead of the shared a.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeError
from .scatter import RowScatter
from .vecmath import activation_grad, apply_activation, init_uniform

N_DATE_COMPONENTS = 3  # year, month, day

ABLATION_MODES = ("fix_a", "fix_w", "fix_b")


@dataclass(frozen=True)
class DiachronicSpec:
    """Shape and behavior of one diachronic embedding table group."""

    dim: int
    d_t: int
    activation: str = "sine"
    per_component_amplitude: bool = False
    frozen: frozenset = field(default_factory=frozenset)  # subset of {"a","w","b"}

    def __post_init__(self):
        if not 0 <= self.d_t <= self.dim:
            raise ShapeError(f"d_t={self.d_t} must be in [0, dim={self.dim}]")

    @staticmethod
    def from_gamma(dim, gamma, **kwargs):
        """Temporal feature count from a fraction; d_t = floor(gamma * dim)."""
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        return DiachronicSpec(dim=dim, d_t=int(gamma * dim), **kwargs)


def init_tables(rng, n_rows, spec: DiachronicSpec, prefix, scale=0.1):
    """Fresh uniform[-scale, scale] parameter tables for one embedding role."""
    tables = {
        f"{prefix}_a": init_uniform(rng, (n_rows, spec.dim), scale),
        f"{prefix}_w": init_uniform(rng, (n_rows, N_DATE_COMPONENTS, spec.d_t), scale),
        f"{prefix}_b": init_uniform(rng, (n_rows, N_DATE_COMPONENTS, spec.d_t), scale),
    }
    if spec.per_component_amplitude:
        tables[f"{prefix}_ac"] = init_uniform(
            rng, (n_rows, N_DATE_COMPONENTS, spec.d_t), scale)
    return tables


def embed(tables, prefix, spec: DiachronicSpec, ids, dates):
    """Compute embeddings for an id array at the given dates.

    ``ids`` may have any shape; ``dates`` must broadcast against it with a
    trailing axis of 3 (year, month, day). Returns (z, cache) where z has
    shape ids.shape + (dim,).
    """
    ids = np.asarray(ids)
    dates = np.asarray(dates, dtype=np.float64)
    a = tables[f"{prefix}_a"][ids]  # (..., dim)
    dt = spec.d_t
    if dt == 0:
        return a.copy(), {"ids": ids, "a": a}
    w = tables[f"{prefix}_w"][ids]  # (..., 3, dt)
    b = tables[f"{prefix}_b"][ids]
    t = dates[..., :, None]  # (..., 3, 1)
    phase = w * t + b
    act = apply_activation(spec.activation, phase)  # (..., 3, dt)
    if spec.per_component_amplitude:
        ac = tables[f"{prefix}_ac"][ids]
        temporal = np.sum(ac * act, axis=-2)
    else:
        ac = None
        temporal = a[..., :dt] * np.sum(act, axis=-2)
    z = np.concatenate([temporal, a[..., dt:]], axis=-1)
    cache = {"ids": ids, "a": a, "phase": phase, "act": act, "t": t, "ac": ac}
    return z, cache


def embed_backward(tables, prefix, spec: DiachronicSpec, cache, upstream, grads,
                   scatter=None):
    """Accumulate d(loss)/d(tables) given upstream = d(loss)/d(z).

    ``upstream`` must have shape ids.shape + (dim,). ``grads`` maps table
    names to dense arrays mirroring ``tables``.
    """
    ids = cache["ids"]
    if scatter is None:
        scatter = RowScatter(ids, tables[f"{prefix}_a"].shape[0])
    dt = spec.d_t
    if dt == 0:
        scatter.add_to(grads[f"{prefix}_a"], upstream)
        return scatter
    act = cache["act"]
    g_t = upstream[..., :dt]
    d_a = np.empty_like(cache["a"])
    d_a[..., dt:] = upstream[..., dt:]
    if spec.per_component_amplitude:
        d_a[..., :dt] = 0.0
        d_ac = g_t[..., None, :] * act
        d_act = g_t[..., None, :] * cache["ac"]
        scatter.add_to(grads[f"{prefix}_ac"], d_ac)
    else:
        d_a[..., :dt] = g_t * np.sum(act, axis=-2)
        d_act = (g_t * cache["a"][..., :dt])[..., None, :]
    d_phase = d_act * activation_grad(spec.activation, cache["phase"])
    d_w = d_phase * cache["t"]
    scatter.add_to(grads[f"{prefix}_a"], d_a)
    scatter.add_to(grads[f"{prefix}_w"], np.broadcast_to(d_w, cache["phase"].shape))
    scatter.add_to(grads[f"{prefix}_b"], np.broadcast_to(d_phase, cache["phase"].shape))
    return scatter


def zero_frozen_grads(grads, prefix, spec: DiachronicSpec):
    """Null out gradients of ablated parameter groups in place."""
    if "a" in spec.frozen:
        grads[f"{prefix}_a"][:, : spec.d_t] = 0.0
        if spec.per_component_amplitude:
            grads[f"{prefix}_ac"][...] = 0.0
    if "w" in spec.frozen:
        grads[f"{prefix}_w"][...] = 0.0
    if "b" in spec.frozen:
        grads[f"{prefix}_b"][...] = 0.0


def apply_ablation(tables, prefix, spec: DiachronicSpec, mode):
    """Freeze one parameter group at its ablation constant (a=1, w=1, or b=0).

    Returns the updated spec; tables are modified in place.
    """
    if mode == "fix_a":
        tables[f"{prefix}_a"][:, : spec.d_t] = 1.0
        if spec.per_component_amplitude:
            tables[f"{prefix}_ac"][...] = 1.0
        return replace(spec, frozen=spec.frozen | {"a"})
    if mode == "fix_w":
        tables[f"{prefix}_w"][...] = 1.0
        return replace(spec, frozen=spec.frozen | {"w"})
    if mode == "fix_b":
        tables[f"{prefix}_b"][...] = 0.0
        return replace(spec, frozen=spec.frozen | {"b"})
    raise ValueError(f"unknown ablation mode {mode!r}")


@dataclass
class DiachronicParams:
    """Single-entity view of one embedding role; convenience wrapper around
    the table-based implementation."""

    a: np.ndarray  # (dim,)
    w: np.ndarray  # (3, d_t)
    b: np.ndarray  # (3, d_t)
    spec: DiachronicSpec
    ac: np.ndarray | None = None  # (3, d_t) when per_component_amplitude

    def _tables(self):
        tabs = {"e_a": self.a[None], "e_w": self.w[None], "e_b": self.b[None]}
        if self.spec.per_component_amplitude:
            tabs["e_ac"] = self.ac[None]
        return tabs

    def deemb(self, date):
        """Embedding vector at one date."""
        z, _ = embed(self._tables(), "e", self.spec,
                     np.zeros((), dtype=np.int64),
                     np.asarray(date.components()))
        return z

    def deemb_grad(self, date, upstream):
        """Gradients of upstream . z with respect to a, w, b (and ac)."""
        tabs = self._tables()
        z, cache = embed(tabs, "e", self.spec, np.zeros((), dtype=np.int64),
                         np.asarray(date.components()))
        grads = {k: np.zeros_like(v) for k, v in tabs.items()}
        embed_backward(tabs, "e", self.spec, cache,
                       np.asarray(upstream, dtype=np.float64), grads)
        out = {"a": grads["e_a"][0], "w": grads["e_w"][0], "b": grads["e_b"][0]}
        if self.spec.per_component_amplitude:
            out["ac"] = grads["e_ac"][0]
        return out
