"""Temporal KG fact files: parsing, vocabularies, splits, filter index.

Datasets live on disk as a directory of ``train.txt`` / ``valid.txt`` /
``test.txt`` files, one tab-separated fact per line:

    head_name<TAB>relation_name<TAB>tail_name<TAB>YYYY-MM-DD

A second parser mode accepts a single integer in the timestamp column
(GDELT-style day offsets), stored as ``Date(0, 0, offset)``.
"""

from __future__ import annotations

import calendar
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSplitError, ParseError

SPLIT_FILES = {"train": "train.txt", "valid": "valid.txt", "test": "test.txt"}


@dataclass(frozen=True, order=True)
class Date:
    """A calendar date, or a bare integer offset stored as (0, 0, offset)."""

    year: int
    month: int
    day: int

    def __post_init__(self):
        if self.year == 0 and self.month == 0:
            if self.day < 0:
                raise ValueError(f"negative day offset {self.day}")
            return
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range")
        max_day = calendar.monthrange(self.year, self.month)[1] if self.year >= 1 else 31
        if not 1 <= self.day <= max_day:
            raise ValueError(f"day {self.day} out of range for {self.year}-{self.month}")

    def components(self):
        """The (year, month, day) triple as floats, one per temporal parameter group."""
        return (float(self.year), float(self.month), float(self.day))


def date_ordinal(t: Date):
    """Alias for :meth:`Date.components`; kept as a free function for callers."""
    return t.components()


def parse_date(text):
    """Parse ``YYYY-MM-DD`` or a bare integer."""
    text = text.strip()
    parts = text.split("-")
    if len(parts) == 3:
        try:
            return Date(int(parts[0]), int(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise ParseError(f"bad date {text!r}: {exc}") from exc
    if len(parts) == 1:
        try:
            return Date(0, 0, int(text))
        except ValueError as exc:
            raise ParseError(f"bad timestamp {text!r}") from exc
    raise ParseError(f"unrecognized date format {text!r}")


@dataclass(frozen=True)
class Quadruple:
    head: int
    relation: int
    tail: int
    timestamp: Date


class Vocabulary:
    """Dense name<->id bijections for entities and relations plus the timestamp set."""

    def __init__(self):
        self.entities = []
        self.relations = []
        self.timestamps = []
        self.ent2id = {}
        self.rel2id = {}
        self.ts2id = {}

    def entity_id(self, name, create=False):
        if create and name not in self.ent2id:
            self.ent2id[name] = len(self.entities)
            self.entities.append(name)
        return self.ent2id[name]

    def relation_id(self, name, create=False):
        if create and name not in self.rel2id:
            self.rel2id[name] = len(self.relations)
            self.relations.append(name)
        return self.rel2id[name]

    def timestamp_id(self, date, create=False):
        if create and date not in self.ts2id:
            self.ts2id[date] = len(self.timestamps)
            self.timestamps.append(date)
        return self.ts2id[date]

    @property
    def n_entities(self):
        return len(self.entities)

    @property
    def n_relations(self):
        return len(self.relations)

    @property
    def n_timestamps(self):
        return len(self.timestamps)


class Dataset:
    """A vocabulary plus train/valid/test lists of quadruples."""

    def __init__(self, vocabulary, splits):
        self.vocabulary = vocabulary
        self.splits = splits  # name -> list[Quadruple]
        self._arrays = {}

    @property
    def train(self):
        return self.splits["train"]

    @property
    def valid(self):
        return self.splits["valid"]

    @property
    def test(self):
        return self.splits["test"]

    def arrays(self, split):
        """Columnar int/float views of one split, cached."""
        if split not in self._arrays:
            facts = self.splits[split]
            self._arrays[split] = {
                "head": np.array([f.head for f in facts], dtype=np.int64),
                "rel": np.array([f.relation for f in facts], dtype=np.int64),
                "tail": np.array([f.tail for f in facts], dtype=np.int64),
                "dates": np.array(
                    [f.timestamp.components() for f in facts], dtype=np.float64
                ).reshape(len(facts), 3),
                "ts": np.array(
                    [self.vocabulary.timestamp_id(f.timestamp) for f in facts],
                    dtype=np.int64,
                ),
            }
        return self._arrays[split]

    def all_facts(self):
        for split in ("train", "valid", "test"):
            yield from self.splits[split]


def _parse_file(path, vocab):
    facts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 4:
                raise ParseError(f"expected 4 tab-separated columns, got {len(cols)}",
                                 path=path, line=lineno)
            head, rel, tail, ts = cols[0], cols[1], cols[2], cols[3]
            try:
                date = parse_date(ts)
            except ParseError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from exc
            facts.append(Quadruple(
                vocab.entity_id(head, create=True),
                vocab.relation_id(rel, create=True),
                vocab.entity_id(tail, create=True),
                date,
            ))
            vocab.timestamp_id(date, create=True)
    return facts


def load_tsv(dataset_dir) -> Dataset:
    """Load a dataset directory; ids are assigned in first-appearance order
    over train, then valid, then test."""
    vocab = Vocabulary()
    splits = {}
    for split, fname in SPLIT_FILES.items():
        path = os.path.join(dataset_dir, fname)
        if not os.path.exists(path):
            raise ParseError(f"missing split file {fname}", path=dataset_dir)
        splits[split] = _parse_file(path, vocab)
    return Dataset(vocab, splits)


def save_tsv(ds: Dataset, out_dir):
    """Write a dataset back out in the input format."""
    os.makedirs(out_dir, exist_ok=True)
    vocab = ds.vocabulary
    for split, fname in SPLIT_FILES.items():
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as fh:
            for f in ds.splits[split]:
                t = f.timestamp
                if t.year == 0 and t.month == 0:
                    ts = str(t.day)
                else:
                    ts = f"{t.year:04d}-{t.month:02d}-{t.day:02d}"
                fh.write(f"{vocab.entities[f.head]}\t{vocab.relations[f.relation]}\t"
                         f"{vocab.entities[f.tail]}\t{ts}\n")


class FilterIndex:
    """Known tails per (head, relation, timestamp) and heads per
    (relation, tail, timestamp), over train + valid + test."""

    def __init__(self):
        self.tails = {}
        self.heads = {}

    def known_tails(self, head, relation, ts_id):
        return self.tails.get((head, relation, ts_id), frozenset())

    def known_heads(self, relation, tail, ts_id):
        return self.heads.get((relation, tail, ts_id), frozenset())


def build_filter_index(ds: Dataset) -> FilterIndex:
    index = FilterIndex()
    vocab = ds.vocabulary
    for f in ds.all_facts():
        ts_id = vocab.timestamp_id(f.timestamp)
        index.tails.setdefault((f.head, f.relation, ts_id), set()).add(f.tail)
        index.heads.setdefault((f.relation, f.tail, ts_id), set()).add(f.head)
    return index


def make_unseen_timestamp_split(ds: Dataset, days, rng: np.random.Generator) -> Dataset:
    """Rebuild the splits so that held-out days of the month never occur in train.

    All facts (from every split) dated on a day-of-month in ``days`` are held
    out and split 50/50 into valid/test; held-out facts mentioning an entity
    that no longer occurs in train are dropped. Everything else becomes train.
    """
    days = set(days)
    if not days:
        raise ValueError("days must be nonempty")
    train, held = [], []
    for f in ds.all_facts():
        (held if f.timestamp.day in days else train).append(f)
    if not train:
        raise DegenerateSplitError("no facts left in train after removing held-out days")
    seen = set()
    for f in train:
        seen.add(f.head)
        seen.add(f.tail)
    held = [f for f in held if f.head in seen and f.tail in seen]
    order = rng.permutation(len(held))
    half = len(held) // 2
    valid = [held[i] for i in order[:half]]
    test = [held[i] for i in order[half:]]
    return Dataset(ds.vocabulary, {"train": train, "valid": valid, "test": test})
