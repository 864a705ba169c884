import json

import numpy as np
import pytest

from plflab.adapter import Adapter
from plflab.config import RunConfig
from plflab.exceptions import ConfigError
from plflab.harness import (
    TRACE_COLUMNS,
    compare_policies,
    read_trace_csv,
    run_adaptation,
    source_model,
    trace_csv,
    write_trace,
)
from plflab.metrics import error_rate
from plflab.stream import sample_batch

SMALL = RunConfig(n_classes=4, n_features=6, n_domains=3, steps_per_domain=15, batch_size=32,
                  pretrain_steps=200, severity=1.2)


@pytest.fixture(scope="module")
def plf_trace():
    return run_adaptation(SMALL)


def test_trace_shape(plf_trace):
    assert len(plf_trace.steps) == 45
    assert [m.domain_index for m in plf_trace.steps] == [0] * 15 + [1] * 15 + [2] * 15
    assert not plf_trace.failed
    for m, want in zip(plf_trace.domain_means(), range(3)):
        errs = [s.error_rate for s in plf_trace.steps if s.domain_index == want]
        assert abs(m - np.mean(errs)) < 1e-12


def test_loss_identity_every_step(plf_trace):
    for m in plf_trace.steps:
        assert abs(m.total - (0.5 * m.loss_u + 0.5 * m.loss_c)) < 1e-10
        assert m.tau_class_max == m.tau_global
        assert 0.25 <= m.tau_class_min <= m.tau_global <= 1 - 1e-3


def test_first_step_keeps_almost_everything(plf_trace):
    assert plf_trace.steps[0].filter_ratio >= 0.95


def test_determinism():
    a = trace_csv(run_adaptation(SMALL))
    b = trace_csv(run_adaptation(SMALL))
    assert a == b
    assert trace_csv(run_adaptation(SMALL.replace(seed=1))) != a


def test_no_filter_keeps_everything():
    trace = run_adaptation(SMALL.replace(policy="no-filter"))
    assert all(m.filter_ratio == 1.0 for m in trace.steps)
    assert all(m.loss_c == 0.0 for m in trace.steps)


@pytest.mark.parametrize("policy", ["fixed", "cpa-only-fixed"])
def test_fixed_policies_freeze_thresholds(policy):
    trace = run_adaptation(SMALL.replace(policy=policy, fixed_tau=0.7))
    assert all(m.tau_global == m.tau_class_min == 0.7 for m in trace.steps)
    cpa_used = any(m.loss_c != 0.0 for m in trace.steps)
    assert cpa_used == (policy == "cpa-only-fixed")


def test_global_only_uses_one_threshold():
    trace = run_adaptation(SMALL.replace(policy="global-only"))
    assert all(m.tau_class_min == m.tau_class_max for m in trace.steps)


def test_sat_only_has_no_cpa_term():
    trace = run_adaptation(SMALL.replace(policy="sat-only"))
    assert all(m.loss_c == 0.0 for m in trace.steps)


def test_source_model_accuracy_consistent():
    cfg = RunConfig(steps_per_domain=1)
    source, params = source_model(cfg)
    adapter = Adapter(cfg, params, np.random.default_rng(0))
    batch = sample_batch(source, 5000, np.random.default_rng(3))
    assert error_rate(adapter.predict(batch.features), batch.true_labels) < 0.05


def test_adapter_never_sees_labels():
    import inspect

    assert list(inspect.signature(Adapter.step).parameters) == ["self", "features"]


def test_write_trace(tmp_path, plf_trace):
    csv_path, json_path = write_trace(plf_trace, tmp_path / "out")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == len(plf_trace.steps) + 1
    assert "nan" not in csv_path.read_text().lower()
    rows = read_trace_csv(csv_path)
    assert [r["error_rate"] for r in rows] == [m.error_rate for m in plf_trace.steps]
    summary = json.loads(json_path.read_text())
    weighted = np.dot(summary["domain_mean_error"], summary["domain_steps"]) / sum(summary["domain_steps"])
    assert summary["mean_error"] == pytest.approx(weighted, abs=1e-12)
    assert summary["config"]["policy"] == "plf"


def test_absent_quality_is_an_empty_field(tmp_path):
    # fixed threshold near one on a tiny model keeps nothing
    cfg = SMALL.replace(policy="fixed", fixed_tau=0.999, steps_per_domain=3, pretrain_steps=0)
    trace = run_adaptation(cfg)
    assert all(m.quality is None for m in trace.steps)
    csv_path, _ = write_trace(trace, tmp_path)
    rows = read_trace_csv(csv_path)
    assert all(r["quality"] is None for r in rows)
    assert ",," in csv_path.read_text().splitlines()[1]


def test_compare_policies_structure():
    cfgs = [SMALL, SMALL.replace(policy="no-filter"), SMALL.replace(policy="fixed")]
    results = compare_policies(cfgs, [0, 1])
    assert [r.label for r in results] == ["plf", "no-filter", "fixed(0.8)"]
    assert all(r.seeds == [0, 1] and len(r.errors) == 2 for r in results)
    single = compare_policies([SMALL], [3])
    assert len(single) == 1
    with pytest.raises(ConfigError):
        compare_policies([SMALL, SMALL.replace(severity=0.1)], [0])


def test_training_failure_is_flagged(monkeypatch):
    from plflab import adapter

    def boom(*a, **k):
        raise adapter.TrainingFailure("synthetic")

    monkeypatch.setattr(adapter, "optimizer_step", boom)
    trace = run_adaptation(SMALL)
    assert trace.failed and trace.steps == []
