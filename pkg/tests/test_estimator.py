import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from plflab.estimator import PLFClassifier
from plflab.stream import make_source_domain, sample_batch, shift_domain


@pytest.fixture(scope="module")
def data():
    spec = make_source_domain(4, 6, 6.0, rng_seed=0)
    src = sample_batch(spec, 2000, np.random.default_rng(1))
    target = shift_domain(spec, 1.2, "rotation", rng_seed=2)
    return spec, src, target


def test_params_roundtrip():
    clf = PLFClassifier(alpha=0.3, policy="fixed")
    assert clone(clf).get_params()["alpha"] == 0.3
    clf.set_params(lam=0.8)
    assert clf.lam == 0.8


def test_fit_predict(data):
    spec, src, _ = data
    labels = np.array(["a", "b", "c", "d"])[src.true_labels]
    clf = PLFClassifier(pretrain_steps=300, random_state=0).fit(src.features, labels)
    assert set(clf.classes_) == {"a", "b", "c", "d"}
    assert clf.n_features_in_ == 6
    assert clf.score(src.features, labels) > 0.95
    proba = clf.predict_proba(src.features[:5])
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert clf.decision_function(src.features[:5]).shape == (5, 4)


def test_partial_fit_adapts_without_labels(data):
    _, src, target = data
    clf = PLFClassifier(pretrain_steps=300, batch_size=64, random_state=0)
    clf.fit(src.features, src.true_labels)
    before = clf.adapter_.teacher.params
    rng = np.random.default_rng(5)
    for _ in range(5):
        clf.partial_fit(sample_batch(target, 64, rng).features)
    assert clf.n_adapt_steps_ == 5
    assert clf.adapter_.teacher.params != before
    assert clf.last_mask_.shape == (64,)
    assert clf.thresholds_.shape == (4,)
    with pytest.raises(ValueError):
        clf.partial_fit(src.features[:10], src.true_labels[:10])
    with pytest.raises(ValueError):
        clf.partial_fit(src.features[:10, :3])


def test_reproducible_and_not_fitted(data):
    _, src, _ = data
    with pytest.raises(NotFittedError):
        PLFClassifier().predict(src.features)
    a = PLFClassifier(pretrain_steps=50, random_state=3).fit(src.features, src.true_labels)
    b = PLFClassifier(pretrain_steps=50, random_state=3).fit(src.features, src.true_labels)
    np.testing.assert_array_equal(a.predict_proba(src.features), b.predict_proba(src.features))


def test_in_pipeline(data):
    _, src, _ = data
    pipe = make_pipeline(FunctionTransformer(), PLFClassifier(pretrain_steps=200, random_state=0))
    pipe.fit(src.features, src.true_labels)
    assert pipe.score(src.features, src.true_labels) > 0.9
