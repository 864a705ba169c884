"""Closed-form pseudo-label distributions for Gaussian class conditionals.

The binary case is exact: with a logistic confidence centred on the Bayes
boundary and a threshold ``tau`` in (1/2, 1), a sample is masked when its
distance to the boundary is at most ``log(tau / (1 - tau)) / beta``. The
multiclass expression evaluates the competing logits at their means and
is only an approximation. The Monte-Carlo routines sample the generative
model directly and share no code with the closed forms.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, expit

from .exceptions import DomainError
from .numerics import softmax_scaled


def std_normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


@dataclass(frozen=True)
class BinaryCPDParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    beta: float
    tau: float

    def __post_init__(self):
        if not self.mu1 > self.mu2:
            raise DomainError("binary setting assumes mu1 > mu2")
        if not (self.sigma1 > 0 and self.sigma2 > 0 and self.beta > 0):
            raise DomainError("sigmas and beta must be positive")
        if not 0.5 < self.tau < 1.0:
            raise DomainError(f"tau must lie in (0.5, 1), got {self.tau}")

    @property
    def margin(self):
        """Half-width of the masked band around the decision boundary."""
        return np.log(self.tau / (1.0 - self.tau)) / self.beta


@dataclass(frozen=True)
class PseudoLabelDist:
    """Probability of each pseudo-label plus the masked mass.

    For the binary case ``p_class`` is ``(p_neg, p_pos)``.
    """
    p_class: tuple
    p_mask: float

    @property
    def p_neg(self):
        return self.p_class[0]

    @property
    def p_pos(self):
        return self.p_class[-1]


def binary_cpd(params):
    c = params.margin
    a = (params.mu2 - params.mu1) / 2
    b = (params.mu1 - params.mu2) / 2
    s1, s2 = params.sigma1, params.sigma2
    p_pos = 0.5 * std_normal_cdf((a - c) / s2) + 0.5 * std_normal_cdf((b - c) / s1)
    p_neg = 0.5 * std_normal_cdf((a - c) / s1) + 0.5 * std_normal_cdf((b - c) / s2)
    p_pos, p_neg = float(p_pos), float(p_neg)
    return PseudoLabelDist((p_neg, p_pos), 1.0 - p_pos - p_neg)


def multiclass_cpd(mu, sigma, beta, tau):
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), mu.shape)
    n_classes = mu.shape[0]
    if n_classes < 2:
        raise DomainError("need at least two classes")
    if np.any(sigma <= 0) or not beta > 0:
        raise DomainError("sigmas and beta must be positive")
    if not 1.0 / n_classes < tau < 1.0:
        raise DomainError(f"tau must lie in (1/C, 1), got {tau}")
    offset = np.log(tau / (1.0 - tau)) / beta
    rivals = np.array([
        np.log(np.exp(beta * np.delete(mu, k)).sum()) / beta for k in range(n_classes)
    ])
    p = std_normal_cdf((mu - offset - rivals) / sigma)
    total = p.sum()
    if total > 1.0:
        return PseudoLabelDist(tuple(p / total), 0.0)
    return PseudoLabelDist(tuple(p), float(1.0 - total))


def mc_binary_cpd(params, n_samples, rng):
    """Empirical pseudo-label frequencies under the two-Gaussian model."""
    negative = rng.random(n_samples) < 0.5
    mean = np.where(negative, params.mu1, params.mu2)
    std = np.where(negative, params.sigma1, params.sigma2)
    x = mean + std * rng.standard_normal(n_samples)
    s = expit(params.beta * (x - (params.mu1 + params.mu2) / 2))
    p_pos = np.mean(s > params.tau)
    p_neg = np.mean(s < 1.0 - params.tau)
    return PseudoLabelDist((float(p_neg), float(p_pos)), float(1.0 - p_pos - p_neg))


def mc_multiclass_cpd(mu, sigma, beta, tau, n_samples, rng, chunk=100_000):
    """Independent Gaussian logits per class, scaled softmax, tau rule."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), mu.shape)
    counts = np.zeros(mu.shape[0])
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        probs = softmax_scaled(mu + sigma * rng.standard_normal((n, mu.shape[0])), beta)
        kept = probs.max(axis=1) > tau
        counts += np.bincount(probs.argmax(axis=1)[kept], minlength=mu.shape[0])
        done += n
    p = counts / n_samples
    return PseudoLabelDist(tuple(p), float(1.0 - p.sum()))


def mc_cpd(params, n_samples, rng, tau=None):
    """Dispatch to the binary or multiclass oracle.

    ``params`` is either a :class:`BinaryCPDParams` or a tuple
    ``(mu, sigma, beta)``, in which case ``tau`` is required.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    if isinstance(params, BinaryCPDParams):
        return mc_binary_cpd(params, n_samples, rng)
    mu, sigma, beta = params
    return mc_multiclass_cpd(mu, sigma, beta, tau, n_samples, rng)


def recommended_init_threshold(mu, beta):
    """Threshold giving full utilisation for the hardest class.

    For each class the threshold is ``1 / (sum_{i != c} e^{beta mu_i} /
    e^{beta mu_c} + 1)``; the smallest one is returned.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape[0] < 2:
        raise DomainError("need at least two classes")
    taus = [
        1.0 / (np.exp(beta * (np.delete(mu, c) - mu[c])).sum() + 1.0)
        for c in range(mu.shape[0])
    ]
    return float(min(taus))


# grid used by the validation report and the acceptance suite
GAPS = (1.0, 2.0, 4.0)
SIGMAS = (0.5, 1.0, 2.0)
TAUS = (0.6, 0.8, 0.95)


def validation_grid(n_samples=200_000, seed=0, beta=1.0):
    """Compare closed form and Monte-Carlo over the 27-point grid.

    Returns a list of dict rows, one per grid point.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for gap in GAPS:
        for sigma in SIGMAS:
            for tau in TAUS:
                params = BinaryCPDParams(gap / 2, -gap / 2, sigma, sigma, beta, tau)
                exact = binary_cpd(params)
                mc = mc_binary_cpd(params, n_samples, rng)
                dev = max(
                    abs(exact.p_pos - mc.p_pos),
                    abs(exact.p_neg - mc.p_neg),
                    abs(exact.p_mask - mc.p_mask),
                )
                rows.append(dict(
                    gap=gap, sigma=sigma, beta=beta, tau=tau,
                    analytic_pos=exact.p_pos, analytic_neg=exact.p_neg,
                    analytic_mask=exact.p_mask, mc_pos=mc.p_pos, mc_neg=mc.p_neg,
                    mc_mask=mc.p_mask, abs_dev=dev,
                ))
    return rows


def monotonicity_violations(slack=1e-9):
    """Count grid violations of the three monotonicity properties of p_mask.

    Returns a dict ``{"tau": n, "beta": n, "gap": n}``.
    """
    taus = np.round(np.arange(0.51, 0.991, 0.01), 10)
    betas = 0.1 * 1.25 ** np.arange(25)
    gaps = 0.25 * np.arange(1, 41)
    out = {"tau": 0, "beta": 0, "gap": 0}
    for gap in GAPS:
        for s1, s2 in [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (0.5, 2.0), (2.0, 1.0)]:
            for beta in (0.5, 1.0, 2.0):
                m = [binary_cpd(BinaryCPDParams(gap / 2, -gap / 2, s1, s2, beta, t)).p_mask
                     for t in taus]
                out["tau"] += int(np.sum(np.diff(m) < -slack))
            for tau in TAUS:
                m = [binary_cpd(BinaryCPDParams(gap / 2, -gap / 2, s1, s2, b, tau)).p_mask
                     for b in betas]
                out["beta"] += int(np.sum(np.diff(m) > slack))
    for s1, s2 in [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (0.5, 2.0), (2.0, 1.0)]:
        for beta in (0.5, 1.0, 2.0):
            for tau in TAUS:
                m = [binary_cpd(BinaryCPDParams(g / 2, -g / 2, s1, s2, beta, tau)).p_mask
                     for g in gaps]
                out["gap"] += int(np.sum(np.diff(m) > slack))
    return out
