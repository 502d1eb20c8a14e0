import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tisca.controller import (
    TISCA,
    ComparisonSpec,
    TiscaConfig,
    evaluate_checkpoint,
    run_tisca,
)
from tisca.exceptions import InsufficientData, RunFailed, SchemaMismatch, ValidationError
from tisca.runner import MetricRecord, RunStore
from tisca.stats import SampleSummary, estimate_welch_power, summarize
from tisca.streams import GaussianStreams

from oracles import mc_welch_rejection


def store_from_columns(**cols):
    names = list(cols)
    n = len(cols[names[0]])
    return RunStore(names, [
        MetricRecord(i + 1, {k: float(cols[k][i]) for k in names}) for i in range(n)
    ])


def one_comparison(mde=0.5, **kw):
    return TiscaConfig((ComparisonSpec("a_vs_b", "a", "b", mde),), **kw)


def test_identical_columns():
    x = np.random.default_rng(0).normal(size=30)
    cfg = one_comparison(mde=0.4)
    cp = evaluate_checkpoint(store_from_columns(a=x, b=x), cfg)
    r = cp["a_vs_b"]
    assert r.statistic == 0.0 and r.raw_p == 1.0
    s = summarize(x)
    assert r.estimated_power == estimate_welch_power(s, s, 0.4, 0.05).power
    assert 0.05 < r.estimated_power < 1.0


def test_single_comparison_correction_is_irrelevant():
    rng = np.random.default_rng(1)
    store = store_from_columns(a=rng.normal(size=40), b=rng.normal(0.2, 1.5, size=40))
    plain = evaluate_checkpoint(store, one_comparison(correction="none"))
    bonf = evaluate_checkpoint(store, one_comparison(correction="bonferroni"))
    assert plain == bonf


def test_power_matches_monte_carlo_oracle():
    rng = np.random.default_rng(2)
    store = store_from_columns(a=rng.normal(0, 1, 200), b=rng.normal(0.5, 1, 200))
    r = evaluate_checkpoint(store, one_comparison(mde=0.5))["a_vs_b"]
    mc = mc_welch_rejection(200, 200, 1.0, 1.0, 0.5, 0.05, trials=10_000, seed=9)
    assert r.estimated_power == pytest.approx(mc, abs=0.02)
    assert r.mean_diff < 0


def test_zero_spread_gives_zero_power():
    store = store_from_columns(a=[1.0] * 10, b=np.arange(10.0))
    r = evaluate_checkpoint(store, one_comparison())["a_vs_b"]
    assert r.estimated_power == 0.0


def test_adjusted_p_at_least_raw():
    rng = np.random.default_rng(3)
    store = store_from_columns(a=rng.normal(size=25), b=rng.normal(size=25),
                               c=rng.normal(0.6, 1, 25))
    cfg = TiscaConfig(
        [("ab", "a", "b", 0.5), ("ac", "a", "c", 0.5), ("bc", "b", "c", 0.5)],
        correction="holm",
    )
    cp = evaluate_checkpoint(store, cfg)
    for r in cp.results:
        assert r.adjusted_p >= r.raw_p
        assert 0.0 <= r.estimated_power <= 1.0


def test_power_alpha_rule():
    comps = [("ab", "a", "b", 0.5), ("ac", "a", "c", 0.5)]
    assert TiscaConfig(comps, correction="bonferroni").alpha_for_power() == 0.025
    assert TiscaConfig(comps, correction="holm").alpha_for_power() == 0.025
    assert TiscaConfig(comps, correction="BH").alpha_for_power() == 0.05
    assert TiscaConfig(comps, correction="none").alpha_for_power() == 0.05
    assert TiscaConfig(comps, correction="holm", power_alpha="raw").alpha_for_power() == 0.05


def test_checkpoint_errors():
    cfg = one_comparison()
    with pytest.raises(SchemaMismatch):
        evaluate_checkpoint(store_from_columns(a=[1.0, 2.0], c=[1.0, 3.0]), cfg)
    with pytest.raises(InsufficientData):
        evaluate_checkpoint(store_from_columns(a=[1.0], b=[2.0]), cfg)


def test_immediate_stop():
    src = GaussianStreams({"a": 0.0, "b": 1.0}, {"a": 0.01, "b": 0.01})
    rep = run_tisca(one_comparison(mde=1.0, batch_size=20), src)
    assert rep.j_final == 20
    assert rep.stopped_by == "power_reached"
    assert len(rep.power_history) == 1


def _gauss(base_seed=0, diff=0.4):
    return GaussianStreams({"a": diff, "b": 0.0}, {"a": 1.0, "b": 1.0}, base_seed=base_seed)


def test_stopping_invariants():
    cfg = one_comparison(mde=0.4, batch_size=50, initial_count=50)
    for seed in range(10):
        rep = run_tisca(cfg, _gauss(seed))
        js = [cp.j for cp in rep.power_history]
        assert js == list(range(50, rep.j_final + 1, 50))
        assert rep.j_final % 50 == 0
        assert rep.final.min_power >= cfg.target_power
        for cp in rep.power_history[:-1]:
            assert cp.min_power < cfg.target_power
        assert [r.seed for r in rep.store.records] == list(range(1, rep.j_final + 1))


def test_initial_count_offsets_grid():
    cfg = one_comparison(mde=0.4, batch_size=40, initial_count=30)
    rep = run_tisca(cfg, _gauss(3))
    assert (rep.j_final - 30) % 40 == 0
    assert rep.power_history[0].j == 30


def test_zero_initial_count_starts_with_a_batch():
    cfg = one_comparison(mde=0.4, batch_size=40, initial_count=0)
    rep = run_tisca(cfg, _gauss(4))
    assert rep.power_history[0].j == 40
    assert rep.j_final % 40 == 0


def test_deterministic_report():
    cfg = one_comparison(mde=0.3, batch_size=25)
    r1 = run_tisca(cfg, _gauss(7))
    r2 = run_tisca(cfg, _gauss(7), parallelism=3)
    assert r1 == r2
    assert r1.to_dict() == r2.to_dict()
    assert r1.store == r2.store


def test_store_grows_by_prefix_extension():
    snapshots = []
    cfg = one_comparison(mde=0.3, batch_size=25)
    src = _gauss(8)
    rep = run_tisca(cfg, src, on_checkpoint=lambda cp: snapshots.append(cp.j))
    full = rep.store.records
    # a run capped earlier sees exactly the first records of the longer run
    capped = run_tisca(one_comparison(mde=0.3, batch_size=25, max_j=snapshots[0] + 25), src)
    assert capped.store.records == full[: capped.j_final]


def test_max_j_cap():
    cfg = one_comparison(mde=0.01, batch_size=50, max_j=220)
    rep = run_tisca(cfg, _gauss(1, diff=0.01))
    assert rep.stopped_by == "max_j_reached"
    assert rep.j_final == 200
    assert rep.final.min_power < cfg.target_power


def test_run_failure_propagates():
    def bad(seed):
        if seed == 63:
            raise ValueError("diverged")
        return {"a": float(seed % 3), "b": float(seed % 5)}

    with pytest.raises(RunFailed) as exc:
        run_tisca(one_comparison(mde=0.01, batch_size=50), bad)
    assert exc.value.seed == 63


def test_six_comparisons_layout():
    names = ["mvbcf_tau_951", "wsbcf_tau_951", "mvbcf_tau_952", "wsbcf_tau_952",
             "mvbcf_pehe1", "bcf_pehe1", "mvbcf_pehe2", "bcf_pehe2",
             "mvbart_tau_951", "mvbart_tau_952"]
    means = dict.fromkeys(names, 0.0)
    means.update(mvbcf_pehe1=9.05, bcf_pehe1=9.63, mvbcf_pehe2=9.40, bcf_pehe2=9.96,
                 mvbcf_tau_951=0.96, wsbcf_tau_951=0.97, mvbcf_tau_952=0.95,
                 wsbcf_tau_952=0.96, mvbart_tau_951=0.98, mvbart_tau_952=0.98)
    sds = {n: (5.0 if "pehe" in n else 0.05) for n in names}
    comps = [
        ("cov_y1_bcf", "mvbcf_tau_951", "wsbcf_tau_951", -0.015),
        ("cov_y2_bcf", "mvbcf_tau_952", "wsbcf_tau_952", -0.015),
        ("pehe_y1_bcf", "mvbcf_pehe1", "bcf_pehe1", -0.5),
        ("pehe_y2_bcf", "mvbcf_pehe2", "bcf_pehe2", -0.5),
        ("cov_y1_mvbart", "mvbcf_tau_951", "mvbart_tau_951", -0.015),
        ("cov_y2_mvbart", "mvbcf_tau_952", "mvbart_tau_952", -0.015),
    ]
    cfg = TiscaConfig(comps, batch_size=100, correction="holm")
    rep = run_tisca(cfg, GaussianStreams(means, sds))
    assert len(rep.p_raw) == len(rep.p_adj) == len(rep.statistics) == 6
    assert all(len(cp.results) == 6 for cp in rep.power_history)
    assert rep.j_final % 100 == 0
    curves = {}
    for row in rep.history_rows():
        curves.setdefault(row["comparison"], []).append(row["estimated_power"])
    assert sorted(curves) == sorted(c[0] for c in comps)


def test_config_validation():
    comps = [("x", "a", "b", 0.5)]
    with pytest.raises(ValidationError):
        TiscaConfig([])
    with pytest.raises(ValidationError):
        TiscaConfig([("x", "a", "a", 0.5)])
    with pytest.raises(ValidationError):
        TiscaConfig([("x", "a", "b", 0.0)])
    with pytest.raises(ValidationError):
        TiscaConfig([("x", "a", "b", 0.5), ("x", "c", "d", 1.0)])
    with pytest.raises(ValidationError):
        TiscaConfig(comps, alpha=1.5)
    with pytest.raises(ValidationError):
        TiscaConfig(comps, target_power=0.0)
    with pytest.raises(ValidationError):
        TiscaConfig(comps, initial_count=1)
    with pytest.raises(ValidationError):
        TiscaConfig(comps, batch_size=0)
    with pytest.raises(ValidationError):
        TiscaConfig(comps, batch_size=50, max_j=10)
    with pytest.raises(ValidationError):
        TiscaConfig(comps, correction="sidak")
    with pytest.raises(ValidationError):
        TiscaConfig([("x", "a", "b", 0.5, "sideways")])
    cfg = TiscaConfig(comps, batch_size=30)
    assert cfg.initial_count == 30
    assert cfg.correction == "none"


def test_estimator_interface():
    est = TISCA([("a_vs_b", "a", "b", 0.4)], batch_size=50)
    params = est.get_params()
    assert params["batch_size"] == 50 and params["correction"] == "none"
    with pytest.raises(NotFittedError):
        est.power_curves()

    est.fit(_gauss(0))
    assert est.j_final_ == est.report_.j_final
    assert est.stopped_by_ == "power_reached"
    assert set(est.p_raw_) == {"a_vs_b"}
    curve = est.power_curves()["a_vs_b"]
    assert [j for j, _ in curve] == [cp.j for cp in est.power_history_]

    twin = clone(est).set_params(correction="holm")
    assert not hasattr(twin, "report_")
    assert twin.get_params()["correction"] == "holm"


def test_estimator_evaluate_on_existing_store():
    rng = np.random.default_rng(5)
    store = store_from_columns(a=rng.normal(size=20), b=rng.normal(size=20))
    est = TISCA([("ab", "a", "b", 1.0)])
    assert est.evaluate(store).j == 20


def test_summary_helper_consistency():
    # the controller's zero-power branch relies on summarize returning exact 0.0
    s = summarize([3.0] * 5)
    assert s == SampleSummary(5, 3.0, 0.0)
