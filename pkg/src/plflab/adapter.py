"""One mean-teacher adaptation step with pseudo-label filtering."""
import numpy as np

from . import losses, thresholds
from .classifier import OptimizerState, backprop_linear, forward, optimizer_step
from .exceptions import TrainingFailure
from .numerics import argmax_class
from .teacher import PerturbConfig, TeacherState, perturb_strong, perturb_weak, teacher_ema_update

ADAPTIVE = ("plf", "sat-only", "global-only")
USES_CPA = ("plf", "cpa-only-fixed", "global-only")


class Adapter:
    """Mutable per-run state: student, teacher, optimizer, thresholds, CPA buffer.

    :meth:`step` consumes unlabelled features only.
    """

    def __init__(self, config, params, rng):
        self.config = config
        self.rng = rng
        self.student = params
        self.teacher = TeacherState(params, config.teacher_momentum)
        self.opt = OptimizerState.init(params, lr=config.lr)
        self.thresholds = thresholds.init_thresholds(
            config.n_classes, config.lam, config.alpha, config.ed_sign, init=config.init_tau)
        self.cpa = losses.CPAState.uniform(config.n_classes, config.lam, config.histogram)
        self.perturb = PerturbConfig(config.weak_noise_std, config.strong_noise_std,
                                     config.strong_mask_prob)

    def predict(self, features, source=None):
        params = self.teacher.params if (source or self.config.error_source) == "teacher" else self.student
        return argmax_class(forward(params, features)[1])

    def effective_thresholds(self):
        cfg = self.config
        if cfg.policy in ("plf", "sat-only"):
            return thresholds.combined_thresholds(self.thresholds)
        if cfg.policy == "global-only":
            return np.full(cfg.n_classes, self.thresholds.tau_global)
        if cfg.policy in ("fixed", "cpa-only-fixed"):
            return np.full(cfg.n_classes, cfg.fixed_tau)
        return np.zeros(cfg.n_classes)

    def step(self, features):
        """One adaptation step; returns ``(mask, Q, LossBreakdown)``."""
        cfg = self.config
        weak = perturb_weak(features, self.perturb, self.rng)
        strong = perturb_strong(features, self.perturb, self.rng)
        if cfg.swap_augment:
            weak, strong = strong, weak
        _, q = forward(self.student, weak)
        _, Q = forward(self.teacher.params, strong)

        if cfg.policy in ADAPTIVE:
            state = thresholds.update_global(self.thresholds, Q)
            self.thresholds = thresholds.update_class(state, Q, cfg.class_conf_estimator)
        if cfg.policy == "no-filter":
            mask = np.ones(Q.shape[0], dtype=bool)
        else:
            mask = thresholds.filter_mask(Q, self.effective_thresholds())

        loss_u, grad_u = losses.unsupervised_loss(q, Q, mask)
        w_c = cfg.w_c if cfg.policy in USES_CPA else 0.0
        loss_c, grad_c = 0.0, None
        if w_c:
            R_t = losses.teacher_ratio(Q, mask)
            self.cpa = losses.cpa_update_student_hist(self.cpa, q)
            R_s = losses.student_ratio(self.cpa, q)
            loss_c, grad_c = losses.cpa_loss(R_t, R_s, cfg.cpa_sign)
        breakdown = losses.total_loss(loss_u, loss_c, cfg.w_u, w_c, grad_u, grad_c)
        if not np.isfinite(breakdown.total):
            raise TrainingFailure("non-finite adaptation loss")

        grads = backprop_linear(self.student, weak, breakdown.d_total_d_student_logits)
        self.student, self.opt = optimizer_step(self.student, grads, self.opt)
        self.teacher = teacher_ema_update(self.teacher, self.student)
        return mask, Q, breakdown
