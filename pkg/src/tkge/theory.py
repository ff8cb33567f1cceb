"""Executable constructions behind the expressivity and tying results.

``construct_expressive_params`` builds DE-SimplE parameters that classify
an arbitrary small world's truth table exactly: relation vectors are block
indicators, head-role amplitudes carry sine-series coefficients whose
per-timestamp block sums form a 0/1 indicator over the timestamp set, and
tail-role amplitudes carry the +1/-1 truth labels.

``apply_tying`` hard-shares relation vectors to encode symmetry,
anti-symmetry, inversion, and (under non-negativity constraints)
entailment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Date, Quadruple
from .diachronic import DiachronicSpec
from .errors import ConstraintViolation, ConstructionError
from .models import ModelParams, is_simple_family, score

NONNEG_ACTIVATIONS = ("sigmoid", "squared_exponential")


@dataclass
class WorldSpec:
    """A complete truth assignment over V x R x V x T."""

    n_entities: int
    n_relations: int
    n_timestamps: int
    truth: np.ndarray  # bool, shape (V, R, V, T)

    def __post_init__(self):
        expected = (self.n_entities, self.n_relations, self.n_entities,
                    self.n_timestamps)
        if self.truth.shape != expected:
            raise ValueError(f"truth table shape {self.truth.shape} != {expected}")

    @staticmethod
    def random(n_entities, n_relations, n_timestamps, rng):
        truth = rng.random((n_entities, n_relations, n_entities, n_timestamps)) < 0.5
        return WorldSpec(n_entities, n_relations, n_timestamps, truth)

    def date(self, p):
        """Timestamp p is represented as the year p+1 (month/day inert)."""
        return Date(p + 1, 1, 1)


@dataclass
class ExpressivityAssignment:
    block_length: int          # L
    half_dim: int              # |R| * |V| * |T| * L
    frequencies: np.ndarray    # (L,)
    coefficients: np.ndarray   # (L, |T|), column p sums to the indicator of t_p
    indicator_error: float     # max |sum - 0/1| over all (p, t)


def sine_indicator_coefficients(n_timestamps, block_length):
    """Sine-series coefficients realizing per-timestamp 0/1 indicators.

    Frequencies are fixed at k*pi/(|T|+1) for k = 1..L and only amplitudes
    are solved (least squares; exact for L >= |T|).
    """
    T, L = n_timestamps, block_length
    if L < T:
        raise ConstructionError(f"block length {L} < |T|={T}: system underdetermined")
    freqs = np.arange(1, L + 1) * np.pi / (T + 1)
    times = np.arange(1, T + 1)
    S = np.sin(np.outer(times, freqs))  # (T, L)
    coeffs, *_ = np.linalg.lstsq(S, np.eye(T), rcond=None)  # (L, T)
    err = float(np.max(np.abs(S @ coeffs - np.eye(T))))
    if err > 1e-6:
        raise ConstructionError(
            f"sine-indicator solve residual {err:.2e}; retry with larger block length")
    return freqs, coeffs, err


def construct_expressive_params(world: WorldSpec, block_length=None):
    """DE-SimplE parameters whose score sign matches the world's truth table.

    The score is +1 on true tuples and -1 on false ones at every timestamp.
    Returns (assignment, params).
    """
    V, R, T = world.n_entities, world.n_relations, world.n_timestamps
    L = block_length if block_length is not None else T
    freqs, coeffs, err = sine_indicator_coefficients(T, L)
    half = R * V * T * L
    dim = 2 * half
    assignment = ExpressivityAssignment(block_length=L, half_dim=half,
                                        frequencies=freqs, coefficients=coeffs,
                                        indicator_error=err)

    def index(j, i, p):
        """Slice of the (relation j, entity-slot i, timestamp p) sub-sub-block."""
        start = ((j * V + i) * T + p) * L
        return slice(start, start + L)

    spec = DiachronicSpec(dim=dim, d_t=dim, activation="sine")
    ent_h_a = np.zeros((V, dim))
    ent_h_w = np.zeros((V, 3, dim))
    ent_h_b = np.zeros((V, 3, dim))
    ent_t_a = np.zeros((V, dim))
    ent_t_w = np.zeros((V, 3, dim))
    ent_t_b = np.zeros((V, 3, dim))
    rel_f = np.zeros((R, dim))
    rel_i = np.zeros((R, dim))

    # Head role: sine-series coefficients in the entity's own sub-block of
    # every relation block, in both halves; year frequencies everywhere.
    tiled = np.tile(freqs, R * V * T)
    ent_h_w[:, 0, :half] = tiled
    ent_h_w[:, 0, half:] = tiled
    for v in range(V):
        for j in range(R):
            for p in range(T):
                sl = index(j, v, p)
                ent_h_a[v, sl] = coeffs[:, p]
                ent_h_a[v, half + sl.start: half + sl.stop] = coeffs[:, p]

    # Tail role: static +/-1 labels (w=0, year phase pi/2 makes z = a).
    ent_t_b[:, 0, :] = np.pi / 2.0
    sign = np.where(world.truth, 1.0, -1.0)  # (V, R, V, T)
    for v in range(V):
        for j in range(R):
            for p in range(T):
                for other in range(V):
                    # first half: v as tail of (other, r_j, v, t_p)
                    ent_t_a[v, index(j, other, p)] = sign[other, j, v, p]
                    # second half: v as head of (v, r_j, other, t_p)
                    sl = index(j, other, p)
                    ent_t_a[v, half + sl.start: half + sl.stop] = sign[v, j, other, p]

    for j in range(R):
        block = slice(j * V * T * L, (j + 1) * V * T * L)
        rel_f[j, block] = 1.0
        rel_i[j, half + block.start: half + block.stop] = 1.0

    tables = {"ent_h_a": ent_h_a, "ent_h_w": ent_h_w, "ent_h_b": ent_h_b,
              "ent_t_a": ent_t_a, "ent_t_w": ent_t_w, "ent_t_b": ent_t_b,
              "rel_f": rel_f, "rel_i": rel_i}
    params = ModelParams(kind="DE-SimplE", n_entities=V, n_relations=R,
                         n_timestamps=T, dim=dim, tables=tables, ent_spec=spec)
    return assignment, params


def verify_expressivity(world: WorldSpec, block_length=None):
    """Build the construction and check the sign of every tuple's score.

    Returns (ok, n_wrong, assignment).
    """
    assignment, params = construct_expressive_params(world, block_length)
    n_wrong = 0
    for i in range(world.n_entities):
        for j in range(world.n_relations):
            for k in range(world.n_entities):
                for p in range(world.n_timestamps):
                    s = score(params, Quadruple(i, j, k, world.date(p)))
                    want = 1.0 if world.truth[i, j, k, p] else -1.0
                    if abs(s - want) > 1e-6 or np.sign(s) != want:
                        n_wrong += 1
    return n_wrong == 0, n_wrong, assignment


def _check_entailment_preconditions(params: ModelParams):
    if params.ent_spec is not None:
        if params.ent_spec.activation not in NONNEG_ACTIVATIONS:
            raise ConstraintViolation(
                f"entailment tying needs a non-negative-range activation, "
                f"got {params.ent_spec.activation!r}")
        amp_tables = [t for name, t in params.tables.items()
                      if name.startswith("ent") and name.endswith("_a")]
    else:
        amp_tables = [params.tables[p] for p in params.entity_prefixes()]
    for t in amp_tables:
        if np.any(t < 0):
            raise ConstraintViolation("entailment tying needs non-negative entity amplitudes")


def apply_tying(params: ModelParams, scheme) -> ModelParams:
    """Return a copy of the parameters with one tying scheme applied.

    Schemes: ("symmetric", r), ("anti_symmetric", r), ("inverse", r_i, r_j),
    ("entails", r_i, r_j, delta_fwd, delta_inv).
    """
    if not is_simple_family(params.kind):
        raise ValueError(f"tying schemes apply to SimplE-family models, got {params.kind}")
    out = params.copy()
    rel_f, rel_i = out.tables["rel_f"], out.tables["rel_i"]
    name = scheme[0]
    if name == "symmetric":
        rel_i[scheme[1]] = rel_f[scheme[1]]
    elif name == "anti_symmetric":
        rel_i[scheme[1]] = -rel_f[scheme[1]]
    elif name == "inverse":
        ri, rj = scheme[1], scheme[2]
        rel_f[rj] = params.tables["rel_i"][ri]
        rel_i[rj] = params.tables["rel_f"][ri]
    elif name == "entails":
        ri, rj, delta_f, delta_i = scheme[1], scheme[2], scheme[3], scheme[4]
        delta_f = np.asarray(delta_f, dtype=np.float64)
        delta_i = np.asarray(delta_i, dtype=np.float64)
        if np.any(delta_f < 0) or np.any(delta_i < 0):
            raise ConstraintViolation("entailment deltas must be element-wise non-negative")
        _check_entailment_preconditions(params)
        rel_f[rj] = params.tables["rel_f"][ri] + delta_f
        rel_i[rj] = params.tables["rel_i"][ri] + delta_i
    else:
        raise ValueError(f"unknown tying scheme {name!r}")
    return out


def enforce_nonnegativity(params: ModelParams) -> ModelParams:
    """Clamp entity amplitude tables to >= 0, in place."""
    if params.ent_spec is not None:
        for name, t in params.tables.items():
            if name.startswith("ent") and name.endswith("_a"):
                np.maximum(t, 0.0, out=t)
    else:
        for p in params.entity_prefixes():
            np.maximum(params.tables[p], 0.0, out=params.tables[p])
    return params
