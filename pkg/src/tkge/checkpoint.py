"""Binary checkpoint format: versioned header + raw little-endian float64 tables.

Layout: magic ``TKGE\\0``, uint32 format version, uint64 JSON header length,
the JSON header (model kind, specs, vocabulary hashes, table manifest,
training-config snapshot), then each table's float64 bytes in manifest
order. Reload is bitwise-exact; a vocabulary hash mismatch is an error.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .diachronic import DiachronicSpec
from .errors import ParseError, VocabularyMismatchError
from .models import ModelParams

MAGIC = b"TKGE\x00"
VERSION = 1


def vocabulary_hashes(vocab):
    def digest(items):
        h = hashlib.sha256()
        for item in items:
            h.update(item.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()

    return {
        "entities": digest(vocab.entities),
        "relations": digest(vocab.relations),
        "timestamps": digest(f"{t.year}-{t.month}-{t.day}" for t in vocab.timestamps),
    }


def _spec_to_dict(spec):
    if spec is None:
        return None
    return {"dim": spec.dim, "d_t": spec.d_t, "activation": spec.activation,
            "per_component_amplitude": spec.per_component_amplitude,
            "frozen": sorted(spec.frozen)}


def _spec_from_dict(d):
    if d is None:
        return None
    return DiachronicSpec(dim=d["dim"], d_t=d["d_t"], activation=d["activation"],
                          per_component_amplitude=d["per_component_amplitude"],
                          frozen=frozenset(d["frozen"]))


def save_checkpoint(path, params: ModelParams, vocab, config=None):
    names = sorted(params.tables)
    header = {
        "kind": params.kind,
        "dim": params.dim,
        "n_entities": params.n_entities,
        "n_relations": params.n_relations,
        "n_timestamps": params.n_timestamps,
        "ent_spec": _spec_to_dict(params.ent_spec),
        "rel_spec": _spec_to_dict(params.rel_spec),
        "date_scale": None if params.date_scale is None else params.date_scale.tolist(),
        "vocab_hash": vocabulary_hashes(vocab),
        "tables": [{"name": n, "shape": list(params.tables[n].shape)} for n in names],
        "config": config,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(params.tables[n], dtype="<f8").tobytes())


def load_checkpoint(path, vocab=None):
    """Load a checkpoint; if ``vocab`` is given its hashes must match."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ParseError("not a checkpoint file", path=path)
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ParseError(f"unsupported checkpoint version {version}", path=path)
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if vocab is not None and vocabulary_hashes(vocab) != header["vocab_hash"]:
            raise VocabularyMismatchError(
                "checkpoint was built against a different vocabulary")
        tables = {}
        for entry in header["tables"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            tables[entry["name"]] = data.astype(np.float64).copy()
    params = ModelParams(
        kind=header["kind"], n_entities=header["n_entities"],
        n_relations=header["n_relations"], n_timestamps=header["n_timestamps"],
        dim=header["dim"], tables=tables,
        ent_spec=_spec_from_dict(header["ent_spec"]),
        rel_spec=_spec_from_dict(header["rel_spec"]),
        date_scale=None if header["date_scale"] is None
        else np.asarray(header["date_scale"]))
    return params, header.get("config")
