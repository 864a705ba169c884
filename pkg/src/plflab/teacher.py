"""EMA teacher and the weak/strong feature perturbations."""
from dataclasses import dataclass, replace

import numpy as np

from .classifier import ModelParams
from .exceptions import ConfigError, ShapeError


@dataclass(frozen=True)
class TeacherState:
    params: ModelParams
    momentum: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.momentum <= 1.0:
            raise ConfigError("teacher momentum must lie in [0, 1]")


@dataclass(frozen=True)
class PerturbConfig:
    weak_noise_std: float = 0.05
    strong_noise_std: float = 0.2
    strong_mask_prob: float = 0.1

    def __post_init__(self):
        if self.weak_noise_std < 0 or self.strong_noise_std < 0:
            raise ConfigError("noise levels must be >= 0")
        if self.strong_noise_std < self.weak_noise_std:
            raise ConfigError("strong noise must be at least the weak noise")
        if not 0.0 <= self.strong_mask_prob <= 1.0:
            raise ConfigError("strong_mask_prob must lie in [0, 1]")


def teacher_ema_update(teacher, student):
    t = teacher.params
    if t.weights.shape != student.weights.shape or t.bias.shape != student.bias.shape:
        raise ShapeError("teacher and student shapes differ")
    m = teacher.momentum
    return replace(
        teacher,
        params=ModelParams(
            m * t.weights + (1 - m) * student.weights,
            m * t.bias + (1 - m) * student.bias,
        ),
    )


def perturb_weak(x, cfg, rng):
    x = np.asarray(x, dtype=np.float64)
    if cfg.weak_noise_std == 0:
        return x.copy()
    return x + cfg.weak_noise_std * rng.standard_normal(x.shape)


def perturb_strong(x, cfg, rng):
    """Gaussian noise, then independent per-coordinate dropout to zero."""
    x = np.asarray(x, dtype=np.float64)
    out = x + cfg.strong_noise_std * rng.standard_normal(x.shape) if cfg.strong_noise_std else x.copy()
    if cfg.strong_mask_prob > 0:
        out = np.where(rng.random(x.shape) < cfg.strong_mask_prob, 0.0, out)
    return out
