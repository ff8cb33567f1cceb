import numpy as np
import pytest

from tkge.data import Dataset, Date, Quadruple, Vocabulary


def random_date(rng):
    return Date(2014, int(rng.integers(1, 13)), int(rng.integers(1, 29)))


def build_dataset(facts_by_split):
    """Dataset from {split: [(h, r, t, Date)]} with integer ids used as names."""
    vocab = Vocabulary()
    splits = {}
    for split in ("train", "valid", "test"):
        rows = facts_by_split.get(split, [])
        out = []
        for h, r, t, date in rows:
            out.append(Quadruple(vocab.entity_id(f"e{h}", create=True),
                                 vocab.relation_id(f"r{r}", create=True),
                                 vocab.entity_id(f"e{t}", create=True),
                                 date))
            vocab.timestamp_id(date, create=True)
        splits[split] = out
    return Dataset(vocab, splits)


def random_dataset(rng, n_entities=8, n_relations=2, n_timestamps=4,
                   n_train=30, n_valid=6, n_test=6):
    dates = [random_date(rng) for _ in range(n_timestamps)]
    dates = list(dict.fromkeys(dates))  # dedupe, keep order

    def rows(n):
        return [(int(rng.integers(n_entities)), int(rng.integers(n_relations)),
                 int(rng.integers(n_entities)), dates[int(rng.integers(len(dates)))])
                for _ in range(n)]

    # make sure every entity/relation name exists in train so ids are dense
    base = [(e, e % n_relations, (e + 1) % n_entities, dates[0])
            for e in range(n_entities)]
    return build_dataset({"train": base + rows(n_train),
                          "valid": rows(n_valid), "test": rows(n_test)})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
