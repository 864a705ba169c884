"""Run configuration and its plain-text ``key = value`` file format."""
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .exceptions import ConfigError
from .losses import CPA_SIGNS
from .stream import SHIFT_KINDS
from .thresholds import CLASS_ESTIMATORS, ED_SIGNS

POLICIES = ("plf", "sat-only", "cpa-only-fixed", "fixed", "no-filter", "global-only")


@dataclass(frozen=True)
class RunConfig:
    n_classes: int = 10
    n_features: int = 32
    separation: float = 6.0
    n_domains: int = 5
    steps_per_domain: int = 500
    shift_kind: tuple = ("rotation",)
    severity: float = 1.6
    severity_ramp: Optional[tuple] = None
    batch_size: int = 200
    lr: float = 0.01
    teacher_momentum: float = 0.9
    lam: float = 0.9
    alpha: float = 0.4
    w_u: float = 0.5
    w_c: float = 0.5
    policy: str = "plf"
    fixed_tau: float = 0.8
    init_tau: Optional[float] = None
    ed_sign: str = "corrected"
    cpa_sign: str = "literal"
    class_conf_estimator: str = "argmax-restricted"
    histogram: str = "soft"
    error_source: str = "teacher"
    swap_augment: bool = False
    weak_noise_std: float = 0.05
    strong_noise_std: float = 0.2
    strong_mask_prob: float = 0.1
    pretrain_steps: int = 2000
    pretrain_batch: int = 200
    seed: int = 0
    output_dir: str = "runs"

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError("n_classes must be >= 2")
        for name in ("n_features", "n_domains", "steps_per_domain", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.pretrain_steps < 0 or self.pretrain_batch < 1:
            raise ConfigError("pretrain_steps must be >= 0 and pretrain_batch >= 1")
        if not self.separation > 0:
            raise ConfigError("separation must be positive")
        if self.severity < 0:
            raise ConfigError("severity must be >= 0")
        for kind in self.shift_kind:
            if kind not in SHIFT_KINDS:
                raise ConfigError(f"unknown shift kind {kind!r}")
        if self.severity_ramp is not None:
            if len(self.severity_ramp) != self.n_domains:
                raise ConfigError("severity_ramp needs one entry per domain")
            if any(s < 0 for s in self.severity_ramp):
                raise ConfigError("severity_ramp entries must be >= 0")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not 0 <= self.teacher_momentum <= 1:
            raise ConfigError("teacher_momentum must lie in [0, 1]")
        if not 0 < self.lam < 1:
            raise ConfigError("lambda must lie in (0, 1)")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.w_u < 0 or self.w_c < 0:
            raise ConfigError("loss weights must be >= 0")
        if not 0 < self.fixed_tau < 1:
            raise ConfigError("fixed_tau must lie in (0, 1)")
        if self.init_tau is not None and not 0 < self.init_tau < 1:
            raise ConfigError("init_tau must lie in (0, 1)")
        choices = {
            "policy": POLICIES,
            "ed_sign": ED_SIGNS,
            "cpa_sign": CPA_SIGNS,
            "class_conf_estimator": CLASS_ESTIMATORS,
            "histogram": ("soft", "count"),
            "error_source": ("teacher", "student"),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.weak_noise_std < 0 or self.strong_noise_std < self.weak_noise_std:
            raise ConfigError("need 0 <= weak_noise_std <= strong_noise_std")
        if not 0 <= self.strong_mask_prob <= 1:
            raise ConfigError("strong_mask_prob must lie in [0, 1]")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out


# spellings accepted in config files besides the field names
ALIASES = {
    "lambda": "lam",
    "c": "n_classes",
    "classes": "n_classes",
    "d": "n_features",
    "b": "batch_size",
    "batch": "batch_size",
    "kind": "shift_kind",
}
TUPLE_FIELDS = {"shift_kind": str, "severity_ramp": float}


def _field_types():
    return {f.name: f for f in fields(RunConfig)}


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name, text):
    default = getattr(RunConfig, name, None)
    if name in TUPLE_FIELDS:
        if text.lower() in ("", "none"):
            return None
        return tuple(TUPLE_FIELDS[name](part.strip()) for part in text.split(",") if part.strip())
    if name == "init_tau":
        return None if text.lower() in ("", "none", "1/c") else float(text)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def normalize_key(key):
    key = key.strip().lower().replace("-", "_")
    return ALIASES.get(key, key)


def parse_config(text, **overrides):
    known = _field_types()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        name = normalize_key(key)
        if name not in known:
            raise ConfigError(f"line {lineno}: unknown key {key.strip()!r}")
        try:
            values[name] = _coerce(name, value.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key.strip()!r}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path, **overrides):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)


def dump_config(config):
    """Inverse of :func:`parse_config` for every non-default field."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value == f.default:
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
