"""The online adaptation loop, trace persistence and policy comparison."""
import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .adapter import Adapter
from .classifier import pretrain_source
from .config import RunConfig
from .exceptions import ConfigError, TrainingFailure
from .metrics import StepMetrics, error_rate, filter_ratio, quality
from .numerics import argmax_class
from .stream import build_schedule, iter_stream, make_source_domain

log = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "step", "domain", "error_rate", "filter_ratio", "quality", "tau_global",
    "tau_class_mean", "tau_class_min", "tau_class_max", "loss_u", "loss_c", "total",
)



@dataclass
class RunTrace:
    config: RunConfig
    steps: list = field(default_factory=list)
    final_thresholds: object = None
    failed: bool = False
    failure: str = ""

    @property
    def n_domains(self):
        return self.config.n_domains

    def domain_means(self):
        out = []
        for k in range(self.n_domains):
            errs = [m.error_rate for m in self.steps if m.domain_index == k]
            out.append(float(np.mean(errs)) if errs else float("nan"))
        return out

    def overall_mean(self):
        return float(np.mean([m.error_rate for m in self.steps])) if self.steps else float("nan")

    def mean_filter_ratio(self):
        return float(np.mean([m.filter_ratio for m in self.steps]))

    def mean_quality(self):
        vals = [m.quality for m in self.steps if m.quality is not None]
        return float(np.mean(vals)) if vals else None

    def summary(self):
        final = self.final_thresholds
        return {
            "config": self.config.to_dict(),
            "n_steps": len(self.steps),
            "failed": self.failed,
            "failure": self.failure,
            "domain_mean_error": self.domain_means(),
            "domain_steps": [sum(1 for m in self.steps if m.domain_index == k)
                             for k in range(self.n_domains)],
            "mean_error": self.overall_mean(),
            "mean_filter_ratio": self.mean_filter_ratio() if self.steps else None,
            "mean_quality": self.mean_quality(),
            "final_thresholds": None if final is None else {
                "tau_global": final.tau_global,
                "tau_class": final.tau_class.tolist(),
            },
        }


@lru_cache(maxsize=32)
def _source_model(n_classes, n_features, separation, seed, steps, batch, lr):
    source = make_source_domain(n_classes, n_features, separation, rng_seed=seed)
    params = pretrain_source(source, steps, batch, np.random.default_rng([seed, 1]), lr=lr)
    return source, params


def source_model(config):
    """Source domain and its pretrained classifier (cached per config/seed)."""
    return _source_model(config.n_classes, config.n_features, config.separation, config.seed,
                         config.pretrain_steps, config.pretrain_batch, config.lr)


def make_schedule(config, source):
    return build_schedule(
        source, config.n_domains, config.shift_kind, config.severity,
        config.steps_per_domain, rng_seed=config.seed, severity_ramp=config.severity_ramp,
    )


def run_adaptation(config):
    source, params = source_model(config)
    schedule = make_schedule(config, source)
    seeds = np.random.SeedSequence([config.seed, 2]).spawn(2)
    stream_rng = np.random.default_rng(seeds[0])
    adapter = Adapter(config, params, np.random.default_rng(seeds[1]))
    trace = RunTrace(config)

    for t, (k, batch) in enumerate(iter_stream(schedule, config.batch_size, stream_rng)):
        # online protocol: predict before adapting on the batch
        err = error_rate(adapter.predict(batch.features), batch.true_labels)
        try:
            mask, Q, parts = adapter.step(batch.features)
        except TrainingFailure as exc:
            log.error("run aborted at step %d: %s", t, exc)
            trace.failed, trace.failure = True, f"step {t}: {exc}"
            break
        tau_star = adapter.effective_thresholds()
        trace.steps.append(StepMetrics(
            step=t,
            domain_index=k,
            error_rate=err,
            filter_ratio=filter_ratio(mask),
            quality=quality(mask, argmax_class(Q), batch.true_labels),
            tau_global=float(tau_star.max()),
            tau_class_mean=float(tau_star.mean()),
            tau_class_min=float(tau_star.min()),
            tau_class_max=float(tau_star.max()),
            loss_u=parts.loss_u,
            loss_c=parts.loss_c,
            total=parts.total,
        ))
    trace.final_thresholds = adapter.thresholds
    return trace


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_csv(trace):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for m in trace.steps:
        writer.writerow([_fmt(v) for v in (
            m.step, m.domain_index, m.error_rate, m.filter_ratio, m.quality, m.tau_global,
            m.tau_class_mean, m.tau_class_min, m.tau_class_max, m.loss_u, m.loss_c, m.total,
        )])
    return buf.getvalue()


def write_trace(trace, output_dir):
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(trace_csv(trace))
        (out / "summary.json").write_text(json.dumps(trace.summary(), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {out}: {exc}") from exc
    return out / "trace.csv", out / "summary.json"


def read_trace_csv(path):
    """Rows of a written trace as dicts, with ``quality`` ``None`` when empty."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                k: (None if v == "" else int(v) if k in ("step", "domain") else float(v))
                for k, v in row.items()
            })
    return rows


@dataclass
class PolicyResult:
    label: str
    seeds: list
    errors: list
    filter_ratios: list
    qualities: list

    @property
    def mean_error(self):
        return float(np.mean(self.errors))

    @property
    def mean_filter_ratio(self):
        return float(np.mean(self.filter_ratios))

    @property
    def mean_quality(self):
        vals = [q for q in self.qualities if q is not None]
        return float(np.mean(vals)) if vals else None


def policy_label(config):
    if config.policy in ("fixed", "cpa-only-fixed"):
        return f"{config.policy}({config.fixed_tau:g})"
    return config.policy


STREAM_FIELDS = ("n_classes", "n_features", "separation", "n_domains", "steps_per_domain",
                 "shift_kind", "severity", "severity_ramp", "batch_size")


def _run_summary(config):
    trace = run_adaptation(config)
    return trace.overall_mean(), trace.mean_filter_ratio(), trace.mean_quality()


def compare_policies(configs, seeds, labels=None, workers=1):
    """Run each config over the shared seeds; one :class:`PolicyResult` per config."""
    configs = list(configs)
    if not configs:
        return []
    ref = configs[0]
    for cfg in configs[1:]:
        if any(getattr(cfg, f) != getattr(ref, f) for f in STREAM_FIELDS):
            raise ConfigError("all compared configurations must share the same stream")
    labels = labels or [policy_label(c) for c in configs]
    jobs = [cfg.replace(seed=s) for cfg in configs for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_run_summary, jobs))
    else:
        outcomes = [_run_summary(job) for job in jobs]
    results = []
    n = len(seeds)
    for i, label in enumerate(labels):
        chunk = outcomes[i * n:(i + 1) * n]
        results.append(PolicyResult(
            label, list(seeds),
            [o[0] for o in chunk], [o[1] for o in chunk], [o[2] for o in chunk],
        ))
    return results


def comparison_rows(results):
    """Flatten results into per-seed and mean rows for CSV output."""
    rows = []
    for r in results:
        for s, e, f, q in zip(r.seeds, r.errors, r.filter_ratios, r.qualities):
            rows.append({"policy": r.label, "seed": s, "mean_error": e,
                         "mean_filter_ratio": f, "mean_quality": q})
        rows.append({"policy": r.label, "seed": "mean", "mean_error": r.mean_error,
                     "mean_filter_ratio": r.mean_filter_ratio, "mean_quality": r.mean_quality})
    return rows
