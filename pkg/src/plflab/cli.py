"""Command-line entry point: ``plflab {run,compare,theory,gradual}``."""
import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, _coerce, load_config, normalize_key
from .exceptions import ConfigError, PLFError
from .harness import compare_policies, comparison_rows, run_adaptation, write_trace
from .theory import monotonicity_violations, validation_grid

log = logging.getLogger("plflab")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_TRAINING = 3


def parse_seeds(text):
    """``"1..5"`` or ``"0,3,7"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def parse_policy(spec, base):
    """Policy spec ``name[(tau)][:key=value:...]``, e.g. ``fixed(0.8)`` or ``plf:init_tau=0.8``."""
    head, *mods = spec.strip().split(":")
    changes = {}
    if "(" in head:
        name, arg = head.rstrip(")").split("(", 1)
        changes["fixed_tau"] = float(arg)
    else:
        name = head
    changes["policy"] = name.strip()
    for mod in mods:
        key, _, value = mod.partition("=")
        changes[normalize_key(key)] = _coerce(normalize_key(key), value.strip())
    try:
        return base.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy spec {spec!r}: {exc}") from None


def gradual_ramp(n_domains):
    """Severity multipliers rising through levels 1..5 (of 5) across the domains."""
    return tuple(float(v) for v in np.linspace(1, 5, n_domains) / 5)


def _load(path, **overrides):
    return load_config(path, **overrides) if path else RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _run(config, out):
    trace = run_adaptation(config)
    csv_path, _ = write_trace(trace, out)
    print(f"mean error {trace.overall_mean():.4f} over {len(trace.steps)} steps; wrote {csv_path}")
    for k, e in enumerate(trace.domain_means()):
        print(f"  domain {k}: {e:.4f}")
    if trace.failed:
        print(f"training failure: {trace.failure}", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


def cmd_run(args):
    config = _load(args.config, seed=args.seed)
    return _run(config, args.out or config.output_dir)


def cmd_gradual(args):
    config = _load(args.config, seed=args.seed)
    config = config.replace(severity_ramp=gradual_ramp(config.n_domains))
    return _run(config, args.out or config.output_dir)


def cmd_compare(args):
    base = _load(args.config)
    configs = [parse_policy(p, base) for p in args.policies.split(",")]
    labels = args.policies.split(",")
    results = compare_policies(configs, parse_seeds(args.seeds), labels, workers=args.workers)
    rows = comparison_rows(results)
    out = Path(args.out or base.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else v for k, v in row.items()})
    print(f"{'policy':<28}{'error':>10}{'filter':>10}{'quality':>10}")
    for r in results:
        q = "" if r.mean_quality is None else f"{r.mean_quality:.4f}"
        print(f"{r.label:<28}{r.mean_error:>10.4f}{r.mean_filter_ratio:>10.4f}{q:>10}")
    return EXIT_OK


def cmd_theory(args):
    rows = validation_grid(n_samples=args.samples, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "theory.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    worst = max(r["abs_dev"] for r in rows)
    violations = monotonicity_violations()
    checks = [
        (f"closed form vs Monte-Carlo, {len(rows)} points, max |dev| {worst:.4g} <= 0.01",
         worst <= 0.01),
        (f"p_mask monotone in tau/beta/gap, violations {violations}",
         not any(violations.values())),
    ]
    lines = [("PASS " if ok else "FAIL ") + text for text, ok in checks]
    (out / "theory_report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_VALIDATION


def build_parser():
    parser = argparse.ArgumentParser(prog="plflab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one adaptation run")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gradual", help="run with severities ramping up across domains")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradual)

    p = sub.add_parser("compare", help="compare policies over shared seeds")
    p.add_argument("--config")
    p.add_argument("--policies", default="plf,no-filter,fixed(0.8)")
    p.add_argument("--seeds", default="1..5")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("theory", help="validate the closed-form pseudo-label distribution")
    p.add_argument("--out", default="theory")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PLFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
