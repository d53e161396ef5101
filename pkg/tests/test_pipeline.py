import json

import pytest

from tightham.constructions import extremal_example, random_hypergraph
from tightham.hypergraph import Hypergraph3
from tightham.pipeline import ConfigInfeasible, PipelineConfig, certify_cycle, run_pipeline


@pytest.fixture(scope="module")
def k60_run():
    H = Hypergraph3.complete(60)
    return H, run_pipeline(H, PipelineConfig(seed=7))


def test_complete_graph_gives_certified_cycle(k60_run):
    H, res = k60_run
    assert res.ok and res.certificate["accepted"]
    assert certify_cycle(H.n, H.edges, res.cycle.seq)["accepted"]


def test_report_schema(k60_run):
    _, res = k60_run
    d = json.loads(json.dumps(res.to_json()))
    assert set(d) >= {"outcome", "stage", "diagnosis", "cycle", "certificate", "stages"}
    names = [s["stage"] for s in d["stages"]]
    assert names[0] == "config" and names[-1] == "certify"
    for s in d["stages"]:
        assert set(s) == {"stage", "elapsed_ms", "counters", "outcome"}
        assert s["elapsed_ms"] >= 0


def test_same_seed_same_run():
    H = random_hypergraph(48, 0.9, 11)
    a = run_pipeline(H, PipelineConfig(seed=3))
    b = run_pipeline(H, PipelineConfig(seed=3))
    assert a.signature() == b.signature()


def test_extremal_instance_never_yields_cycle():
    H = extremal_example("i", 60)
    res = run_pipeline(H, PipelineConfig(seed=0, close_retries=2))
    assert not res.ok and res.stage and res.diagnosis
    assert res.stage_reports[-1].outcome == "failed"


@pytest.mark.parametrize(
    "cfg",
    [
        PipelineConfig(ell=4),
        PipelineConfig(M=9),
        PipelineConfig(mode="faithful"),
        PipelineConfig(mode="faithful", theta_star=0.5),
        PipelineConfig(mode="other"),
    ],
)
def test_config_check_rejects(cfg):
    with pytest.raises(ConfigInfeasible):
        cfg.check()


def test_faithful_hierarchy_accepted():
    PipelineConfig(mode="faithful", alpha=0.2, zeta_star=0.1, theta_star=0.05, zeta_2star=0.02, theta_2star=0.01).check()


def test_small_instance_fails_at_config():
    res = run_pipeline(Hypergraph3.complete(12))
    assert res.outcome == "stage_failure" and res.stage == "config"


def test_derived_seeds_differ_by_stage():
    cfg = PipelineConfig(seed=5)
    assert cfg.derived_seed("reservoir") != cfg.derived_seed("absorbers")
    assert cfg.derived_seed("close", 1) != cfg.derived_seed("close", 2)
    assert cfg.derived_seed("close", 1) == PipelineConfig(seed=5).derived_seed("close", 1)


def test_certify_rejects_bad_cycles():
    K = Hypergraph3.complete(6)
    assert certify_cycle(6, K.edges, range(6))["accepted"]
    assert not certify_cycle(6, K.edges, [0, 1, 2, 3, 4])["accepted"]
    assert not certify_cycle(6, K.edges, [0, 1, 2, 3, 4, 4])["accepted"]
    missing = [e for e in K.edges if e != (0, 4, 5)]
    r = certify_cycle(6, missing, range(6))
    assert not r["accepted"] and "window" in r["reason"]
