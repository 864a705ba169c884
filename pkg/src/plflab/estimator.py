"""scikit-learn compatible wrapper around the adaptation loop.

``fit`` trains the source model on labelled data; ``partial_fit`` then
adapts it without labels, one test batch per call. Predictions come from
the EMA teacher, as in the online evaluation protocol::

    clf = PLFClassifier(random_state=0).fit(X_source, y_source)
    for X_batch in stream:
        y_hat = clf.predict(X_batch)
        clf.partial_fit(X_batch)
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .adapter import Adapter
from .classifier import fit_supervised, forward
from .config import RunConfig


class PLFClassifier(ClassifierMixin, BaseEstimator):
    """Linear softmax classifier adapted at test time with pseudo-label filtering.

    Parameters mirror :class:`plflab.config.RunConfig`; ``pretrain_steps``
    and ``batch_size`` control the supervised fit on source data.
    """

    def __init__(self, policy="plf", lr=0.01, teacher_momentum=0.9, lam=0.9, alpha=0.4,
                 w_u=0.5, w_c=0.5, fixed_tau=0.8, init_tau=None, ed_sign="corrected",
                 cpa_sign="literal", class_conf_estimator="argmax-restricted",
                 histogram="soft", weak_noise_std=0.05, strong_noise_std=0.2,
                 strong_mask_prob=0.1, swap_augment=False, pretrain_steps=2000,
                 batch_size=200, random_state=None):
        self.policy = policy
        self.lr = lr
        self.teacher_momentum = teacher_momentum
        self.lam = lam
        self.alpha = alpha
        self.w_u = w_u
        self.w_c = w_c
        self.fixed_tau = fixed_tau
        self.init_tau = init_tau
        self.ed_sign = ed_sign
        self.cpa_sign = cpa_sign
        self.class_conf_estimator = class_conf_estimator
        self.histogram = histogram
        self.weak_noise_std = weak_noise_std
        self.strong_noise_std = strong_noise_std
        self.strong_mask_prob = strong_mask_prob
        self.swap_augment = swap_augment
        self.pretrain_steps = pretrain_steps
        self.batch_size = batch_size
        self.random_state = random_state

    def _run_config(self, n_classes, n_features):
        names = ("policy", "lr", "teacher_momentum", "lam", "alpha", "w_u", "w_c", "fixed_tau",
                 "init_tau", "ed_sign", "cpa_sign", "class_conf_estimator", "histogram",
                 "weak_noise_std", "strong_noise_std", "strong_mask_prob", "swap_augment",
                 "pretrain_steps", "batch_size")
        return RunConfig(n_classes=n_classes, n_features=n_features,
                         **{k: getattr(self, k) for k in names})

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to fit")
        self.config_ = self._run_config(len(self.classes_), X.shape[1])
        seed = np.random.SeedSequence(self.random_state)
        fit_rng, adapt_rng = (np.random.default_rng(s) for s in seed.spawn(2))
        params = fit_supervised(X, encoded, len(self.classes_), self.pretrain_steps,
                                self.batch_size, fit_rng, lr=self.lr)
        self.adapter_ = Adapter(self.config_, params, adapt_rng)
        self.n_adapt_steps_ = 0
        return self

    def partial_fit(self, X, y=None):
        """One unsupervised adaptation step; labels are refused."""
        check_is_fitted(self, "adapter_")
        if y is not None:
            raise ValueError("test-time adaptation is unsupervised; pass y=None")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        mask, _, parts = self.adapter_.step(X)
        self.last_mask_ = mask
        self.last_loss_ = parts
        self.n_adapt_steps_ += 1
        return self

    def decision_function(self, X):
        check_is_fitted(self, "adapter_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return forward(self.adapter_.teacher.params, X)[0]

    def predict_proba(self, X):
        check_is_fitted(self, "adapter_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return forward(self.adapter_.teacher.params, X)[1]

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    @property
    def thresholds_(self):
        check_is_fitted(self, "adapter_")
        return self.adapter_.effective_thresholds()
