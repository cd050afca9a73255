import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwaudit.audit import (
    BY_CODE,
    CATALOGUE,
    CODES,
    AuditReport,
    Kind,
    Thresholds,
    analyze,
    audit_config,
    build_dag,
    direction_regions,
)
from fwaudit.errors import ZoneError
from fwaudit.fwn import parse_fwn
from fwaudit.ir import Action, Rule, resolve_rule
from fwaudit.netmodel import AddressSet, ServiceSet
from toycases import TOY_REG, TOY_THRESHOLDS, random_case, to_config

TWO = "interface ext zone external\ninterface lan zone internal:lan net 10.0.0.0/16\n"
THREE = TWO + "interface dmz zone internal:dmz net 10.1.0.0/16\n"


def errs(rules: str, head: str = TWO, **kw) -> set:
    return set(audit_config(parse_fwn(head + rules), **kw).errors)


# -- catalogue and containment ---------------------------------------------------

def test_catalogue_shape():
    assert len(CODES) == 36 == len(set(CODES))
    counts = {p: sum(c.startswith(p) for c in CODES) for p in "iodr"}
    assert counts == {"i": 21, "o": 9, "d": 5, "r": 1}
    assert all(c.axis for c in CATALOGUE if c.kind is Kind.THRESHOLD)
    assert {c.code for c in CATALOGUE if c.axis == "tcp_ports"} == {"i14", "o07"}
    assert {c.code for c in CATALOGUE if c.axis == "src"} == {"o02"}


def test_dag_edges():
    dag = build_dag()
    assert dag.parents["r01"] == frozenset()
    assert dag.parents["i01"] == frozenset()
    assert dag.parents["i02"] == {"i01"} and dag.parents["i03"] == {"i01"}
    assert dag.parents["i12"] == {"i01"}  # ICMP: neither TCP nor UDP borne
    assert dag.parents["i14"] == {"i01", "i02"}
    assert dag.parents["i04"] == {"i01", "i02", "i14"}
    assert dag.parents["i06"] == {"i01", "i03"}
    assert dag.parents["i05"] == {"i01", "i02", "i03", "i14"}  # RPC is TCP and UDP
    assert dag.parents["i08"] == {"i01", "i02"}
    assert dag.parents["o02"] == {"o04", "o05"}
    assert dag.parents["o08"] == {"o04", "o05", "o06", "o07"}
    assert dag.parents["d04"] == {"d01", "d02", "d03"}
    assert dag.children("i03") >= {"i05", "i06", "i07", "i10", "i15", "i17", "i18"}
    for c in CATALOGUE:
        if c.kind is not Kind.SERVICE_CLASS and c.code != "r01":
            root = {"i": "i01", "o": "o04", "d": "d01"}[c.code[0]]
            assert root in dag.ancestors(c.code)


# -- directions -------------------------------------------------------------------

def test_two_zones_have_no_internal_region():
    d = direction_regions(parse_fwn(TWO))
    assert d.internal.is_empty()


def test_internal_region_both_orders():
    d = direction_regions(parse_fwn(THREE))
    a, b = AddressSet.parse("10.0.0.0/16"), AddressSet.parse("10.1.0.0/16")
    assert d.internal.contains(a.intervals[0][0], b.intervals[0][0], 6, 80)
    assert d.internal.contains(b.intervals[0][0], a.intervals[0][0], 17, 53)
    assert not d.internal.contains(a.intervals[0][0], a.intervals[0][0] + 1, 6, 80)
    ext = 0x08080808
    assert d.inbound.contains(ext, a.intervals[0][0], 1, 0)
    assert not d.outbound.contains(ext, a.intervals[0][0], 1, 0)
    assert (d.inbound & d.outbound).is_empty() and (d.inbound & d.internal).is_empty()


@pytest.mark.parametrize(
    "head,msg",
    [("interface lan zone internal:lan net 10.0.0.0/8\n", "external"),
     ("interface ext zone external\n", "internal")],
)
def test_zone_requirements(head, msg):
    with pytest.raises(ZoneError, match=msg):
        audit_config(parse_fwn(head))


# -- worked examples -----------------------------------------------------------------

def test_single_telnet_rule():
    assert errs("rule permit src any dst 10.0.1.1 svc tcp/23\n") == {"i04"}


def test_permit_any_two_zones():
    assert errs("rule permit src any dst any svc any\n") == {"i01", "o04", "r01"}


def test_all_tcp_inbound_only():
    assert errs("rule permit src 8.0.0.0/8 dst 10.0.0.0/16 svc tcp\n") == {"i02"}


def test_any_then_separate_tcp_rule():
    assert errs("rule permit src any dst 10.0.0.1 svc any\n") == {"i01"}
    assert errs("rule permit src any dst 10.0.0.1 svc any\nrule permit src any dst 10.0.0.2 svc tcp\n") == {
        "i01", "i02"}


def test_any_then_uncovered_telnet():
    assert errs("rule permit src any dst 10.0.0.1 svc any\nrule permit src any dst 10.0.0.2 svc telnet\n") == {
        "i01", "i04"}


def test_telnet_covered_by_any_rule_is_suppressed():
    a = analyze(parse_fwn(TWO + "rule permit src any dst 10.0.0.1 svc any\n"))
    assert {"i01", "i04", "i07"} <= a.triggers[0]
    assert a.indicators["i04"] is False


@pytest.mark.parametrize("dst,hit", [("10.0.0.0/16", True), ("10.0.0.0/24", False),
                                     ("10.0.0.0/24,10.0.1.1", True)])
def test_http_threshold(dst, hit):
    assert ("i08" in errs(f"rule permit src any dst {dst} svc tcp/80\n")) is hit


def test_threshold_counts_reported():
    rep = audit_config(parse_fwn(TWO + "rule permit src any dst 10.0.0.0/24,10.0.1.1 svc tcp/80\n"))
    assert rep.threshold_counts["i08"] == 257
    assert rep.evidence["i08"].count == 257


def test_outbound_smtp_threshold():
    head = "interface ext zone external\ninterface lan zone internal:lan net 10.0.0.0/8\n"
    rep = audit_config(parse_fwn(head + "rule permit src 10.0.0.0/8 dst any svc tcp/25\n"))
    assert rep.errors == ["o02"] and rep.threshold_counts["o02"] == 2**24


@pytest.mark.parametrize("hi,hit", [(11999, False), (12000, True)])
def test_port_threshold_boundary(hi, hit):
    assert ("i14" in errs(f"rule permit src any dst 10.0.0.9 svc tcp/10000-{hi}\n")) is hit


def test_threshold_overrides():
    rules = "rule permit src any dst 10.0.0.0/28 svc tcp/80\n"
    assert errs(rules) == set()
    assert errs(rules, thresholds=Thresholds(address=15)) == {"i08"}
    assert errs(rules, thresholds=Thresholds(address=16)) == set()


def test_no_permits_no_errors():
    rep = audit_config(parse_fwn(THREE + "rule deny src any dst any svc any\nnatrule x\n"))
    assert rep.error_count == 0 and not any(rep.indicators.values())


def test_r01_is_syntactic():
    # fully shadowed, still flagged; disabled, not flagged
    assert errs("rule deny src any dst any svc any\nrule permit src 10.0.0.1 dst any svc any\n") == {"r01"}
    assert errs("rule permit src any dst any svc any disabled\n") == set()
    assert "r01" not in errs("rule permit src any dst 0.0.0.0/1 svc any\n")
    assert "r01" not in errs("rule permit src any dst any svc tcp,udp\n")


def test_class_needs_full_spec_not_reach():
    # tcp/0-65534 is not "all TCP", even though it reaches nearly everything
    assert errs("rule permit src any dst 10.0.0.5 svc tcp/0-65534\n") == {"i14"}


def test_internal_codes():
    assert errs("rule permit src 10.0.0.0/16 dst 10.1.0.0/16 svc any\n", THREE) == {"d01"}
    assert errs("rule permit src 10.1.0.7 dst 10.0.0.8 svc tcp/445\n", THREE) == {"d04"}


def test_registry_override_changes_findings():
    from fwaudit.registry import DEFAULT_REGISTRY
    reg = DEFAULT_REGISTRY.with_overrides({"http": ServiceSet.tcp_ports((80, 80), (443, 443))})
    rules = "rule permit src any dst 10.0.0.0/23 svc tcp/443\n"
    assert errs(rules) == set()
    assert errs(rules, registry=reg) == {"i08"}


def test_evidence_lines():
    rep = audit_config(parse_fwn(TWO + "\n# c\nrule permit src any dst 10.0.0.1 svc telnet\n"))
    ev = rep.evidence["i04"]
    assert [(r.index, r.line) for r in ev.rules] == [(0, 5)]


# -- report -------------------------------------------------------------------------------

def test_report_invariants():
    ind = {c: False for c in CODES}
    with pytest.raises(ValueError):
        AuditReport("x", "checkpoint", "4.1", {}, 1, {**ind, "i01": True}, {})
    with pytest.raises(ValueError):
        AuditReport("x", "checkpoint", "4.1", {}, 1, {"i01": False}, {})


def test_report_json_schema():
    rep = audit_config(parse_fwn(TWO + "rule permit src any dst any svc any\n", "a.fwn"))
    d = rep.to_dict()
    assert set(d) == {"config", "fc", "errors", "error_count", "threshold_counts"}
    assert set(d["config"]) == {"id", "vendor", "version_category", "counts"}
    assert d["errors"][0] == {"code": "i01", "category": "inbound", "title": BY_CODE["i01"].title,
                              "evidence": {"rules": [{"index": 0, "line": 3}]}}
    assert d["error_count"] == 3


# -- properties over random toy rule-sets ---------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def toy(seed, **kw):
    return to_config(random_case(random.Random(seed), **kw))


def run(cfg):
    return audit_config(cfg, TOY_REG, TOY_THRESHOLDS)


@settings(max_examples=60)
@given(seeds)
def test_json_round_trip(seed):
    rep = run(toy(seed))
    assert AuditReport.from_json(rep.to_json()) == rep
    assert AuditReport.from_json(rep.to_json()).to_json() == rep.to_json()


@settings(max_examples=60)
@given(seeds)
def test_deterministic(seed):
    assert run(toy(seed)).to_json() == run(toy(seed)).to_json()


def _with_rules(cfg, rules):
    return dataclasses.replace(cfg, rules=tuple(dataclasses.replace(r, index=i) for i, r in enumerate(rules)))


@settings(max_examples=60)
@given(seeds)
def test_deny_all_first_leaves_only_r01(seed):
    cfg = toy(seed, bindings=False)
    before = run(cfg)
    blocked = run(_with_rules(cfg, [Rule(0, Action.DENY)] + list(cfg.rules)))
    assert set(blocked.errors) <= {"r01"}
    assert blocked.indicators["r01"] == before.indicators["r01"]


@settings(max_examples=60)
@given(seeds, seeds)
def test_appending_a_rule_never_removes_errors(seed, seed2):
    case = random_case(random.Random(seed), bindings=False)
    extra = random_case(random.Random(seed2), max_rules=1, bindings=False).rules[0]
    if any(t.startswith("obj") for t in extra.src + extra.dst):
        extra = dataclasses.replace(extra, src=("any",), dst=("any",))
    before = set(run(to_config(case)).errors)
    after = set(run(to_config(dataclasses.replace(case, rules=case.rules + [extra]))).errors)
    assert before <= after


@settings(max_examples=80)
@given(seeds, st.data())
def test_enlarging_non_class_permit_keeps_thresholds(seed, data):
    cfg = toy(seed, bindings=False)
    u = cfg.universe
    cands = [r for r in cfg.rules if r.active and r.action is Action.PERMIT]
    if not cands:
        return
    r = data.draw(st.sampled_from(cands))
    before = analyze(cfg, TOY_REG, TOY_THRESHOLDS)
    _, _, s = resolve_rule(r, cfg.object_table, TOY_REG, u)
    if s.is_any(u) or s.covers_all_tcp(u) or s.covers_all_udp(u):
        return
    extra = data.draw(st.sampled_from(["0.0.0.0/26", "0.0.0.0/27", "0.0.0.32/27", "0.0.0.16/28"]))
    bigger = dataclasses.replace(r, dst=r.dst + (extra,))
    rules = [bigger if x is r else x for x in cfg.rules]
    after = analyze(_with_rules(cfg, rules), TOY_REG, TOY_THRESHOLDS)
    for c in CATALOGUE:
        if c.kind is Kind.THRESHOLD and before.indicators[c.code]:
            assert after.indicators[c.code], c.code


def test_enlarging_class_permit_can_hide_threshold():
    # documented limit of the monotonicity property: the widened all-TCP rule
    # now reaches inside, triggers i02, and its packets leave the i08 aggregate
    rules = ("rule permit src 8.0.0.0/8 dst 9.9.9.0/24 svc tcp\n"
             "rule permit src 8.0.0.0/8 dst 10.0.0.0/23 svc tcp/80\n")
    assert errs(rules) == {"i08"}
    wider = rules.replace("9.9.9.0/24", "9.9.9.0/24,10.0.0.0/22")
    assert errs(wider) == {"i02"}


@settings(max_examples=60)
@given(seeds)
def test_named_evidence_triggers_no_ancestor(seed):
    cfg = toy(seed)
    a = analyze(cfg, TOY_REG, TOY_THRESHOLDS)
    dag = build_dag(TOY_REG, cfg.universe)
    for c in CATALOGUE:
        if c.kind is Kind.NAMED and a.indicators[c.code]:
            assert any(not (a.triggers[r.index] & dag.ancestors(c.code)) for r in a.evidence[c.code].rules)
