"""Filtered consistency loss, class prior alignment and their logit gradients.

All gradients are taken with respect to the *student* logits. Teacher
probabilities, the filter mask and the student histogram buffer are
constants.
"""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError
from .numerics import LOG_CLAMP, argmax_class, clamped_log, softmax_scaled

RATIO_EPS = 1e-8
CPA_SIGNS = ("literal", "aligned")


def symmetric_ce(q, Q):
    """``-sum Q log q - sum q log Q`` along the last axis, logs clamped."""
    q = np.asarray(q, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    return -(Q * clamped_log(q)).sum(axis=-1) - (q * clamped_log(Q)).sum(axis=-1)


def _sce_grad_first(q, Q):
    """d symmetric_ce(q, Q) / dq."""
    return -np.where(q > LOG_CLAMP, Q / np.maximum(q, LOG_CLAMP), 0.0) - clamped_log(Q)


def softmax_backward(probs, dprobs):
    """Pull a gradient w.r.t. softmax outputs back to the logits, row-wise."""
    return probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))


def unsupervised_loss(q, Q, mask):
    """Masked symmetric CE averaged over the whole batch (divisor B)."""
    q = np.asarray(q, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    w = np.asarray(mask, dtype=np.float64)
    n = q.shape[0]
    loss = float((w * symmetric_ce(q, Q)).sum() / n)
    dq = _sce_grad_first(q, Q) * (w / n)[:, None]
    return loss, softmax_backward(q, dq)


def teacher_ratio(Q, mask):
    """Histogram of kept pseudo-labels over their summed confidence, per class."""
    Q = np.asarray(Q, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    n, n_classes = Q.shape
    pred = argmax_class(Q)[mask]
    hist = np.bincount(pred, minlength=n_classes) / n
    conf = np.bincount(pred, weights=Q.max(axis=1)[mask], minlength=n_classes) / n
    return np.where(hist > 0, hist / (conf + RATIO_EPS), 0.0)


@dataclass(frozen=True, eq=False)
class CPAState:
    h_tilde: np.ndarray
    lam: float = 0.9
    histogram: str = "soft"

    @classmethod
    def uniform(cls, n_classes, lam=0.9, histogram="soft"):
        if histogram not in ("soft", "count"):
            raise ConfigError("histogram must be 'soft' or 'count'")
        return cls(np.full(n_classes, 1.0 / n_classes), lam, histogram)


def batch_histogram(q, kind="soft"):
    q = np.asarray(q, dtype=np.float64)
    if kind == "soft":
        return q.mean(axis=0)
    return np.bincount(argmax_class(q), minlength=q.shape[1]) / q.shape[0]


def cpa_update_student_hist(state, q):
    hist = batch_histogram(q, state.histogram)
    return replace(state, h_tilde=state.lam * state.h_tilde + (1 - state.lam) * hist)


@dataclass(frozen=True, eq=False)
class StudentRatio:
    """``h_tilde / (p + eps)`` with ``p`` the batch-mean student probability.

    Keeps what is needed to push a gradient on the ratio back to the
    student logits.
    """
    values: np.ndarray
    q: np.ndarray
    h_tilde: np.ndarray

    @property
    def p(self):
        return self.q.mean(axis=0)

    def backward(self, dvalues):
        p = self.p
        dp = -dvalues * self.h_tilde / (p + RATIO_EPS) ** 2
        dq = np.broadcast_to(dp / self.q.shape[0], self.q.shape)
        return softmax_backward(self.q, dq)


def student_ratio(state, q):
    q = np.asarray(q, dtype=np.float64)
    h = np.asarray(state.h_tilde, dtype=np.float64)
    return StudentRatio(values=h / (q.mean(axis=0) + RATIO_EPS), q=q, h_tilde=h)


def cpa_loss(R_t, R_s, sign="literal"):
    """Negative symmetric CE between the normalised teacher and student ratios.

    ``sign='aligned'`` drops the minus, turning the term into an alignment
    penalty. Returns ``(loss, dlogits)``; zero when no sample was kept.
    """
    if sign not in CPA_SIGNS:
        raise ConfigError(f"cpa sign must be one of {CPA_SIGNS}")
    R_t = np.asarray(R_t, dtype=np.float64)
    n, n_classes = R_s.q.shape
    if not R_t.sum() > 0:
        return 0.0, np.zeros((n, n_classes))
    target = R_t / R_t.sum()
    r = R_s.values
    total = r.sum()
    ns = r / total
    s = -1.0 if sign == "literal" else 1.0
    loss = s * float(symmetric_ce(ns, target))
    dns = s * _sce_grad_first(ns, target)
    dr = (dns - (dns * ns).sum()) / total
    return loss, R_s.backward(dr)


@dataclass(frozen=True, eq=False)
class LossBreakdown:
    loss_u: float
    loss_c: float
    total: float
    d_total_d_student_logits: np.ndarray


def total_loss(loss_u, loss_c, w_u, w_c, grad_u, grad_c):
    if w_u < 0 or w_c < 0:
        raise ConfigError("loss weights must be >= 0")
    grad = w_u * np.asarray(grad_u)
    if w_c:
        grad = grad + w_c * np.asarray(grad_c)
    return LossBreakdown(loss_u, loss_c, w_u * loss_u + w_c * loss_c, grad)


def plf_objective(student_logits, Q, mask, h_tilde, w_u=0.5, w_c=0.5, cpa_sign="literal"):
    """Total objective as a function of student logits, for one step.

    ``h_tilde`` is the histogram buffer after this step's update and is
    held fixed.
    """
    q = softmax_scaled(student_logits, 1.0)
    loss_u, grad_u = unsupervised_loss(q, Q, mask)
    R_t = teacher_ratio(Q, mask)
    R_s = student_ratio(CPAState(np.asarray(h_tilde)), q)
    loss_c, grad_c = cpa_loss(R_t, R_s, cpa_sign)
    return total_loss(loss_u, loss_c, w_u, w_c, grad_u, grad_c)
