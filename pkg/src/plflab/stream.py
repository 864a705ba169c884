"""Synthetic test streams: class-conditional Gaussians under domain shift."""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .exceptions import CapacityError, ConfigError, InvalidInputError

SHIFT_KINDS = ("mean-translation", "stddev-inflation", "rotation")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    class_means: np.ndarray  # (C, d)
    class_stddev: np.ndarray  # (C,)
    label_prior: np.ndarray  # (C,)

    def __post_init__(self):
        means = np.asarray(self.class_means, dtype=np.float64)
        std = np.asarray(self.class_stddev, dtype=np.float64)
        prior = np.asarray(self.label_prior, dtype=np.float64)
        if means.ndim != 2:
            raise InvalidInputError("class_means must be a (C, d) array")
        if std.shape != (means.shape[0],) or prior.shape != (means.shape[0],):
            raise InvalidInputError("class_stddev and label_prior need one entry per class")
        if not np.all(np.isfinite(means)):
            raise InvalidInputError("class means must be finite")
        if np.any(std < 0):
            raise InvalidInputError("class stddevs must be non-negative")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-9:
            raise InvalidInputError("label_prior must be a probability vector")
        object.__setattr__(self, "class_means", means)
        object.__setattr__(self, "class_stddev", std)
        object.__setattr__(self, "label_prior", prior)

    @property
    def n_classes(self):
        return self.class_means.shape[0]

    @property
    def n_features(self):
        return self.class_means.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DomainSpec):
            return NotImplemented
        return (
            np.array_equal(self.class_means, other.class_means)
            and np.array_equal(self.class_stddev, other.class_stddev)
            and np.array_equal(self.label_prior, other.label_prior)
        )


@dataclass(frozen=True)
class StreamSchedule:
    domains: tuple
    steps_per_domain: int
    severity_ramp: tuple = field(default=None)

    def __post_init__(self):
        if len(self.domains) < 1:
            raise ConfigError("a stream needs at least one domain")
        if self.steps_per_domain < 1:
            raise ConfigError("steps_per_domain must be positive")
        if self.severity_ramp is not None and any(s < 0 for s in self.severity_ramp):
            raise ConfigError("severity scalars must be >= 0")

    @property
    def total_steps(self):
        return len(self.domains) * self.steps_per_domain


@dataclass(frozen=True, eq=False)
class SampleBatch:
    features: np.ndarray  # (B, d)
    true_labels: np.ndarray  # (B,), for metrics only


def _random_orthonormal(rng, n, k):
    """(n, k) matrix with orthonormal columns."""
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def make_source_domain(n_classes, n_features, separation, rng_seed=0):
    """Regular simplex of class means with pairwise distance ``separation``.

    The simplex lives in ``C - 1`` dimensions and is embedded into the
    feature space along random orthonormal directions.
    """
    if n_classes < 2 or n_features < 1 or not separation > 0:
        raise ConfigError("need C >= 2, d >= 1 and separation > 0")
    if n_features < n_classes - 1:
        raise CapacityError(
            f"cannot place {n_classes} equidistant means in {n_features} dimensions"
        )
    rng = np.random.default_rng(rng_seed)
    centered = np.eye(n_classes) - 1.0 / n_classes
    # coordinates of the centered simplex in its own (C-1)-dim span
    u, s, _ = np.linalg.svd(centered)
    coords = u[:, : n_classes - 1] * s[: n_classes - 1]
    coords *= separation / np.sqrt(2.0)
    means = coords @ _random_orthonormal(rng, n_features, n_classes - 1).T
    return DomainSpec(
        class_means=means,
        class_stddev=np.ones(n_classes),
        label_prior=np.full(n_classes, 1.0 / n_classes),
    )


def shift_domain(base, severity, kind, rng_seed=0):
    if severity < 0:
        raise ConfigError("severity must be >= 0")
    if kind not in SHIFT_KINDS:
        raise ConfigError(f"unknown shift kind {kind!r}; expected one of {SHIFT_KINDS}")
    if severity == 0:
        return base
    rng = np.random.default_rng(rng_seed)
    d = base.n_features
    if kind == "mean-translation":
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        return replace(base, class_means=base.class_means + severity * direction)
    if kind == "stddev-inflation":
        return replace(base, class_stddev=base.class_stddev * (1.0 + severity))
    # rotation: largest principal angle equals `severity` radians
    if d == 1:
        # the only orthogonal maps in 1-d are +-1
        return replace(base, class_means=-base.class_means) if severity >= np.pi / 2 else base
    g = rng.standard_normal((d, d))
    skew = g - g.T
    skew /= np.abs(np.linalg.eigvals(skew)).max()
    rot = expm(severity * skew)
    return replace(base, class_means=base.class_means @ rot.T)


def sample_batch(spec, batch_size, rng):
    if batch_size < 1:
        raise InvalidInputError("batch size must be >= 1")
    labels = rng.choice(spec.n_classes, size=batch_size, p=spec.label_prior)
    noise = rng.standard_normal((batch_size, spec.n_features))
    features = spec.class_means[labels] + spec.class_stddev[labels, None] * noise
    return SampleBatch(features=features, true_labels=labels)


def build_schedule(source, n_domains, kinds, severity, steps_per_domain, rng_seed=0,
                   severity_ramp=None):
    """Shift ``source`` once per domain, cycling through ``kinds``.

    Every domain is a fresh shift of the source, as corruption benchmarks
    do; ``severity_ramp`` multiplies ``severity`` per domain.
    """
    if isinstance(kinds, str):
        kinds = (kinds,)
    if severity_ramp is not None and len(severity_ramp) != n_domains:
        raise ConfigError("severity_ramp needs one entry per domain")
    ramp = tuple(severity_ramp) if severity_ramp is not None else (1.0,) * n_domains
    domains = tuple(
        shift_domain(source, severity * ramp[k], kinds[k % len(kinds)], rng_seed=(rng_seed, k))
        for k in range(n_domains)
    )
    return StreamSchedule(domains, steps_per_domain,
                          tuple(severity_ramp) if severity_ramp is not None else None)


def iter_stream(schedule, batch_size, rng):
    """Yield ``(domain_index, SampleBatch)`` for every step of the schedule."""
    for k, spec in enumerate(schedule.domains):
        for _ in range(schedule.steps_per_domain):
            yield k, sample_batch(spec, batch_size, rng)
