"""Self-adaptive confidence thresholds.

A global threshold follows the batch confidence of the teacher: an EMA
step when confidence rises, a multiplicative exponential decay when it
falls. Per-class thresholds follow the same law on class-restricted
confidence, and are max-normalised onto the global value to give the
thresholds actually used for filtering.
"""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, EmptyBatchError
from .numerics import argmax_class

ED_SIGNS = ("corrected", "literal")
CLASS_ESTIMATORS = ("argmax-restricted", "soft-mean")
CEILING = 1.0 - 1e-3


@dataclass(frozen=True, eq=False)
class ThresholdState:
    tau_global: float
    tau_class: np.ndarray
    prev_conf_global: float
    prev_conf_class: np.ndarray
    lam: float = 0.9
    alpha: float = 0.4
    floor: float = 0.1
    ceiling: float = CEILING
    ed_sign: str = "corrected"

    @property
    def n_classes(self):
        return self.tau_class.shape[0]


def init_thresholds(n_classes, lam=0.9, alpha=0.4, ed_sign="corrected", init=None):
    """All thresholds start at ``1/C`` unless ``init`` overrides the value."""
    if n_classes < 2:
        raise ConfigError("need at least two classes")
    if not 0 < lam < 1:
        raise ConfigError("lambda must lie in (0, 1)")
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    if ed_sign not in ED_SIGNS:
        raise ConfigError(f"ed_sign must be one of {ED_SIGNS}")
    floor = 1.0 / n_classes
    tau = floor if init is None else float(np.clip(init, floor, CEILING))
    return ThresholdState(
        tau_global=tau,
        tau_class=np.full(n_classes, tau),
        prev_conf_global=floor,
        prev_conf_class=np.full(n_classes, floor),
        lam=lam,
        alpha=alpha,
        floor=floor,
        ed_sign=ed_sign,
    )


def _track(tau, prev, conf, state):
    """One EMA-or-decay step, vectorised over any matching shapes."""
    rising = conf > prev
    ema = state.lam * tau + (1 - state.lam) * conf
    sign = -1.0 if state.ed_sign == "corrected" else 1.0
    decay = tau * np.exp(sign * state.alpha * (prev - conf))
    return np.clip(np.where(rising, ema, decay), state.floor, state.ceiling)


def update_global(state, Q):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] == 0:
        raise EmptyBatchError("threshold update needs a non-empty batch")
    conf = float(Q.max(axis=1).mean())
    tau = float(_track(state.tau_global, state.prev_conf_global, conf, state))
    return replace(state, tau_global=tau, prev_conf_global=conf)


def class_confidence(Q, estimator="argmax-restricted"):
    """Per-class confidence and a mask of the classes that were observed."""
    n, n_classes = Q.shape
    if estimator == "soft-mean":
        return Q.mean(axis=0), np.ones(n_classes, dtype=bool)
    if estimator != "argmax-restricted":
        raise ConfigError(f"class confidence estimator must be one of {CLASS_ESTIMATORS}")
    pred = argmax_class(Q)
    counts = np.bincount(pred, minlength=n_classes)
    sums = np.bincount(pred, weights=Q.max(axis=1), minlength=n_classes)
    seen = counts > 0
    conf = np.where(seen, sums / np.maximum(counts, 1), 0.0)
    return conf, seen


def update_class(state, Q, estimator="argmax-restricted"):
    """Unobserved classes carry their threshold and confidence forward."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] == 0:
        raise EmptyBatchError("threshold update needs a non-empty batch")
    conf, seen = class_confidence(Q, estimator)
    tracked = _track(state.tau_class, state.prev_conf_class, conf, state)
    return replace(
        state,
        tau_class=np.where(seen, tracked, state.tau_class),
        prev_conf_class=np.where(seen, conf, state.prev_conf_class),
    )


def combined_thresholds(state):
    """Class thresholds scaled so the largest equals the global threshold."""
    tau_class = state.tau_class
    top = tau_class.max()
    out = tau_class / top * state.tau_global
    # the rescaling can land one ulp off for the argmax class
    out[tau_class == top] = state.tau_global
    return out


def filter_mask(Q, tau_star):
    """Keep a row iff its max confidence strictly exceeds its class threshold."""
    Q = np.asarray(Q, dtype=np.float64)
    pred = argmax_class(Q)
    return Q.max(axis=1) > np.asarray(tau_star)[pred]
