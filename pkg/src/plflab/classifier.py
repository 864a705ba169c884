"""Linear softmax classifier with analytic gradients and an Adam optimizer."""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ShapeError, TrainingFailure
from .numerics import clamped_log, softmax_scaled
from .stream import sample_batch


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray  # (C, d)
    bias: np.ndarray  # (C,)

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def n_features(self):
        return self.weights.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and np.array_equal(self.bias, other.bias)

    def to_flat(self):
        return np.concatenate([self.weights.ravel(), self.bias])

    @classmethod
    def from_flat(cls, flat, n_classes, n_features):
        flat = np.asarray(flat, dtype=np.float64)
        k = n_classes * n_features
        if flat.shape != (k + n_classes,):
            raise ShapeError(f"expected {k + n_classes} values, got {flat.shape}")
        return cls(flat[:k].reshape(n_classes, n_features).copy(), flat[k:].copy())

    def to_dict(self):
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["weights"], dtype=np.float64),
                   np.asarray(data["bias"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class OptimizerState:
    first_moment: ModelParams
    second_moment: ModelParams
    step_count: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        zeros = ModelParams.zeros(params.n_classes, params.n_features)
        return cls(zeros, zeros, 0, lr, beta1, beta2, eps)


def forward(params, features):
    """Return ``(logits, probs)`` for a ``(B, d)`` feature batch."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != params.n_features:
        raise ShapeError(
            f"features have dim {features.shape[1]}, model expects {params.n_features}"
        )
    logits = features @ params.weights.T + params.bias
    return logits, softmax_scaled(logits, 1.0)


def backprop_linear(params, features, dlogits):
    """Chain ``dL/dlogits`` into parameter space.

    ``dlogits`` is the gradient of an already batch-averaged loss, so the
    parameter gradient is a plain sum over rows.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
    if dlogits.shape != (features.shape[0], params.n_classes) or features.shape[1] != params.n_features:
        raise ShapeError(
            f"inconsistent shapes: features {features.shape}, dlogits {dlogits.shape}"
        )
    return ModelParams(dlogits.T @ features, dlogits.sum(axis=0))


def optimizer_step(params, grads, state):
    g_w, g_b = grads.weights, grads.bias
    if not (np.all(np.isfinite(g_w)) and np.all(np.isfinite(g_b))):
        raise TrainingFailure("non-finite gradient")
    if g_w.shape != params.weights.shape or g_b.shape != params.bias.shape:
        raise ShapeError("gradient shape does not match parameters")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m_w = b1 * state.first_moment.weights + (1 - b1) * g_w
    m_b = b1 * state.first_moment.bias + (1 - b1) * g_b
    v_w = b2 * state.second_moment.weights + (1 - b2) * g_w**2
    v_b = b2 * state.second_moment.bias + (1 - b2) * g_b**2
    c1 = 1 - b1**t
    c2 = 1 - b2**t
    new_w = params.weights - state.lr * (m_w / c1) / (np.sqrt(v_w / c2) + state.eps)
    new_b = params.bias - state.lr * (m_b / c1) / (np.sqrt(v_b / c2) + state.eps)
    new_state = replace(
        state,
        first_moment=ModelParams(m_w, m_b),
        second_moment=ModelParams(v_w, v_b),
        step_count=t,
    )
    return ModelParams(new_w, new_b), new_state


def cross_entropy(probs, labels):
    """Mean supervised cross-entropy and its gradient w.r.t. logits."""
    n = probs.shape[0]
    loss = -clamped_log(probs[np.arange(n), labels]).mean()
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return float(loss), dlogits / n


def _train(params, batches, n_steps, lr):
    state = OptimizerState.init(params, lr=lr)
    for _ in range(n_steps):
        features, labels = next(batches)
        _, probs = forward(params, features)
        loss, dlogits = cross_entropy(probs, labels)
        if not np.isfinite(loss):
            raise TrainingFailure(f"source loss diverged at step {state.step_count}")
        params, state = optimizer_step(params, backprop_linear(params, features, dlogits), state)
    return params


def pretrain_source(spec, n_steps, batch_size, rng, lr=0.01, init=None):
    """Supervised cross-entropy training on labelled source batches."""
    params = init if init is not None else ModelParams.zeros(spec.n_classes, spec.n_features)

    def batches():
        while True:
            batch = sample_batch(spec, batch_size, rng)
            yield batch.features, batch.true_labels

    return _train(params, batches(), n_steps, lr)


def fit_supervised(features, labels, n_classes, n_steps, batch_size, rng, lr=0.01):
    """Same training loop on a fixed labelled array, minibatches drawn with replacement."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    params = ModelParams.zeros(n_classes, features.shape[1])
    size = min(batch_size, features.shape[0])

    def batches():
        while True:
            idx = rng.integers(0, features.shape[0], size=size)
            yield features[idx], labels[idx]

    return _train(params, batches(), n_steps, lr)
