import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tkge.estimator import TemporalLinkPredictor
from conftest import random_dataset


def tuple_facts():
    return [("alice", "knows", "bob", "2014-01-05"),
            ("bob", "knows", "carol", "2014-02-10"),
            ("carol", "visits", "alice", "2014-03-15"),
            ("alice", "visits", "carol", "2014-04-20"),
            ("bob", "visits", "alice", "2014-05-25"),
            ("carol", "knows", "alice", "2014-06-01"),
            ("alice", "knows", "carol", "2014-07-07"),
            ("bob", "knows", "alice", "2014-08-12")]


def small_estimator(**kw):
    base = dict(model="DE-DistMult", dim=4, temporal_dim=2, batch_size=4,
                negative_ratio=2, epochs=2, validate_every=1, seed=1)
    base.update(kw)
    return TemporalLinkPredictor(**base)


def test_sklearn_params_protocol():
    est = small_estimator()
    params = est.get_params()
    assert params["model"] == "DE-DistMult" and params["dim"] == 4
    est.set_params(dim=6)
    assert est.dim == 6
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        small_estimator().predict(tuple_facts())


def test_fit_predict_tuples():
    est = small_estimator().fit(tuple_facts())
    scores = est.predict(tuple_facts()[:3])
    assert scores.shape == (3,)
    assert np.all(np.isfinite(scores))
    assert est.dataset_.vocabulary.n_entities == 3
    assert est.dataset_.vocabulary.n_relations == 2


def test_fit_accepts_dataset(rng):
    ds = random_dataset(rng)
    est = small_estimator().fit(ds)
    assert est.dataset_ is ds
    report = est.evaluate_ranking("test")
    assert 0.0 < report.mrr <= 1.0


def test_fit_is_deterministic():
    s1 = small_estimator().fit(tuple_facts()).predict(tuple_facts())
    s2 = small_estimator().fit(tuple_facts()).predict(tuple_facts())
    assert np.array_equal(s1, s2)


def test_validation_split_fraction():
    est = small_estimator(validation_fraction=0.25).fit(tuple_facts())
    assert len(est.dataset_.valid) == 2
    assert len(est.dataset_.train) == 6


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        small_estimator().fit([])
    with pytest.raises(ValueError):
        small_estimator().fit([("a", "r", "b")])


def test_predict_unknown_entity_rejected():
    est = small_estimator().fit(tuple_facts())
    with pytest.raises(KeyError):
        est.predict([("mallory", "knows", "bob", "2014-01-05")])


def test_temporal_baseline_through_estimator():
    est = small_estimator(model="TTransE", temporal_dim=0).fit(tuple_facts())
    scores = est.predict(tuple_facts()[:2])
    assert np.all(np.isfinite(scores))
