"""Detection of the 36 vendor-neutral configuration errors.

Pipeline: direction regions from zones, effective (first-match) region per
rule, per-rule triggers, threshold aggregation, containment suppression.
A specific error is only counted when some rule triggers it without also
triggering one of its more general ancestors (Any > all-TCP > Telnet, ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import permutations

from .complexity import firewall_complexity
from .errors import ZoneError
from .ir import EXTERNAL, Action, FirewallConfig, effective_regions, match_regions, resolve_all, zone_addresses
from .netmodel import AddressSet, PacketRegion, ServiceSet, Universe, disjoint_union
from .registry import DEFAULT_REGISTRY, ServiceRegistry

INBOUND, OUTBOUND, INTERNAL, RISKY = "inbound", "outbound", "internal", "risky"


class Kind(str, Enum):
    SERVICE_CLASS = "service-class"
    NAMED = "named-service"
    THRESHOLD = "threshold"
    SYNTACTIC = "syntactic"


@dataclass(frozen=True)
class ErrorCode:
    code: str
    kind: Kind
    title: str
    # registry name for named/threshold codes; any|tcp|udp for class codes
    service: str | None = None
    # projection axis for threshold codes
    axis: str | None = None

    @property
    def category(self) -> str:
        return {"i": INBOUND, "o": OUTBOUND, "d": INTERNAL, "r": RISKY}[self.code[0]]

    @property
    def is_port_threshold(self) -> bool:
        return self.axis == "tcp_ports"


_C, _N, _T = Kind.SERVICE_CLASS, Kind.NAMED, Kind.THRESHOLD

CATALOGUE: tuple[ErrorCode, ...] = (
    ErrorCode("i01", _C, 'Inbound "Any" service', "any"),
    ErrorCode("i02", _C, "Inbound TCP on all ports", "tcp"),
    ErrorCode("i03", _C, "Inbound UDP on all ports", "udp"),
    ErrorCode("i04", _N, "Inbound Telnet", "telnet"),
    ErrorCode("i05", _N, "Inbound RPC", "rpc"),
    ErrorCode("i06", _N, "Inbound SNMP", "snmp"),
    ErrorCode("i07", _N, "Inbound Microsoft services", "microsoft"),
    ErrorCode("i08", _T, "Inbound HTTP to 256+ IPs", "http", "dst"),
    ErrorCode("i09", _T, "Inbound SMTP to 256+ IPs", "smtp", "dst"),
    ErrorCode("i10", _T, "Inbound DNS/UDP to 256+ IPs", "dns-udp", "dst"),
    ErrorCode("i11", _T, "Inbound FTP to 256+ IPs", "ftp", "dst"),
    ErrorCode("i12", _T, "Inbound ICMP to 256+ IPs", "icmp", "dst"),
    ErrorCode("i13", _N, "Inbound X11", "x11"),
    ErrorCode("i14", _T, "Inbound TCP on 2000+ ports", "tcp", "tcp_ports"),
    ErrorCode("i15", _N, "Inbound TFTP", "tftp"),
    ErrorCode("i16", _T, "Inbound DNS/TCP to 256+ IPs", "dns-tcp", "dst"),
    ErrorCode("i17", _N, "Inbound MSSQL", "mssql"),
    ErrorCode("i18", _N, "Inbound P2P", "p2p"),
    ErrorCode("i19", _N, "Inbound Instant-Messaging", "im"),
    ErrorCode("i20", _N, "Inbound database access", "database"),
    ErrorCode("i21", _N, "Inbound version control", "version-control"),
    ErrorCode("o01", _N, "Outbound POP3", "pop3"),
    ErrorCode("o02", _T, "Outbound SMTP from 256+ IPs", "smtp", "src"),
    ErrorCode("o03", _N, "Outbound IRC", "irc"),
    ErrorCode("o04", _C, 'Outbound "Any" service', "any"),
    ErrorCode("o05", _C, "Outbound TCP on all ports", "tcp"),
    ErrorCode("o06", _C, "Outbound UDP on all ports", "udp"),
    ErrorCode("o07", _T, "Outbound TCP on 2000+ ports", "tcp", "tcp_ports"),
    ErrorCode("o08", _N, "Outbound P2P", "p2p"),
    ErrorCode("o09", _N, "Outbound Instant-Messaging", "im"),
    ErrorCode("d01", _C, 'Internal "Any" service', "any"),
    ErrorCode("d02", _C, "Internal TCP on all ports", "tcp"),
    ErrorCode("d03", _C, "Internal UDP on all ports", "udp"),
    ErrorCode("d04", _N, "Internal Microsoft services", "microsoft"),
    ErrorCode("d05", _N, "Internal X11", "x11"),
    ErrorCode("r01", Kind.SYNTACTIC, 'To Any allow Any service rule'),
)

CODES: tuple[str, ...] = tuple(c.code for c in CATALOGUE)
BY_CODE: dict[str, ErrorCode] = {c.code: c for c in CATALOGUE}


@dataclass(frozen=True)
class Thresholds:
    # strict: an error needs count > threshold
    address: int = 256
    port: int = 2000

    def for_code(self, code: ErrorCode) -> int:
        return self.port if code.is_port_threshold else self.address


def code_service(code: ErrorCode, registry: ServiceRegistry, universe: Universe) -> ServiceSet:
    if code.service == "any":
        return ServiceSet.any(universe)
    if code.service == "tcp":
        return ServiceSet(tcp=universe.all_ports())
    if code.service == "udp":
        return ServiceSet(udp=universe.all_ports())
    if code.service is None:
        return ServiceSet()
    return registry[code.service]


def spec_in_class(svc: ServiceSet, klass: str, universe: Universe) -> bool:
    """Whether a rule's service *specification* is Any / all-TCP / all-UDP."""
    if klass == "any":
        return svc.is_any(universe)
    if klass == "tcp":
        return svc.covers_all_tcp(universe)
    return svc.covers_all_udp(universe)


class ContainmentDag:
    """Parent edges from general errors to the specific errors they contain."""

    def __init__(self, parents: dict[str, frozenset[str]]):
        self.parents = {c: frozenset(parents.get(c, ())) for c in CODES}
        self._check_acyclic()

    def _check_acyclic(self):
        state: dict[str, int] = {}

        def visit(c):
            if state.get(c) == 1:
                raise ValueError(f"containment cycle through {c}")
            if state.get(c) == 2:
                return
            state[c] = 1
            for p in self.parents[c]:
                visit(p)
            state[c] = 2

        for c in CODES:
            visit(c)

    @cached_property
    def _ancestors(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}

        def anc(c):
            if c not in out:
                acc = set()
                for p in self.parents[c]:
                    acc.add(p)
                    acc |= anc(p)
                out[c] = frozenset(acc)
            return out[c]

        for c in CODES:
            anc(c)
        return out

    def ancestors(self, code: str) -> frozenset[str]:
        return self._ancestors[code]

    def children(self, code: str) -> frozenset[str]:
        return frozenset(c for c, ps in self.parents.items() if code in ps)


def build_dag(registry: ServiceRegistry = DEFAULT_REGISTRY, universe: Universe = Universe()) -> ContainmentDag:
    """Any contains all-TCP, all-UDP and every named/threshold code of its
    direction; all-TCP contains the TCP-borne codes and the 2000+ ports
    code; all-UDP the UDP-borne ones; 2000+ ports the TCP-borne named ones."""
    parents: dict[str, set[str]] = {c: set() for c in CODES}
    for prefix in "iod":
        group = [c for c in CATALOGUE if c.code[0] == prefix]
        classes = {c.service: c.code for c in group if c.kind is _C}
        ports = [c.code for c in group if c.is_port_threshold]
        for c in group:
            if c.kind is _C:
                if c.service != "any":
                    parents[c.code].add(classes["any"])
                continue
            parents[c.code].add(classes["any"])
            svc = code_service(c, registry, universe)
            if c.is_port_threshold:
                parents[c.code].add(classes["tcp"])
                continue
            if svc.has_tcp():
                parents[c.code].add(classes["tcp"])
                if c.kind is _N:
                    parents[c.code].update(ports)
            if svc.has_udp():
                parents[c.code].add(classes["udp"])
    return ContainmentDag({k: frozenset(v) for k, v in parents.items()})


@dataclass(frozen=True)
class DirectionRegions:
    inbound: PacketRegion
    outbound: PacketRegion
    internal: PacketRegion
    external_addresses: AddressSet
    internal_zones: dict = field(compare=False)

    def region(self, category: str) -> PacketRegion:
        return {INBOUND: self.inbound, OUTBOUND: self.outbound, INTERNAL: self.internal}[category]


def direction_regions(config: FirewallConfig) -> DirectionRegions:
    """Inbound = external x internal, outbound = internal x external,
    internal = pairs of distinct internal zones; all services."""
    if any(i.zone is None for i in config.interfaces):
        missing = ", ".join(i.name for i in config.interfaces if i.zone is None)
        raise ZoneError(f"no zone assigned to interface(s): {missing}")
    if not any(i.is_external for i in config.interfaces):
        raise ZoneError("no external interface")
    if not any(i.internal_id for i in config.interfaces):
        raise ZoneError("no internal interface")
    zones = zone_addresses(config)
    ext = zones.pop(EXTERNAL)
    everything = ServiceSet.any(config.universe)
    inside = AddressSet()
    for a in zones.values():
        inside = inside | a
    internal = PacketRegion()
    for a, b in permutations(sorted(zones), 2):
        internal = internal | PacketRegion.from_sets(zones[a], zones[b], everything)
    return DirectionRegions(
        PacketRegion.from_sets(ext, inside, everything),
        PacketRegion.from_sets(inside, ext, everything),
        internal,
        ext,
        zones,
    )


@dataclass(frozen=True)
class RuleRef:
    index: int
    line: int | None = None


@dataclass(frozen=True)
class Evidence:
    rules: tuple[RuleRef, ...]
    count: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"rules": [{"index": r.index, "line": r.line} for r in self.rules]}
        if self.count is not None:
            d["count"] = self.count
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Evidence":
        return cls(tuple(RuleRef(r["index"], r.get("line")) for r in d["rules"]), d.get("count"))


@dataclass(frozen=True)
class ThresholdResult:
    code: str
    count: int
    threshold: int
    rules: tuple[int, ...]

    @property
    def triggered(self) -> bool:
        return self.count > self.threshold


@dataclass
class AuditReport:
    config_id: str
    vendor: str
    version_category: str
    counts: dict
    fc: int
    indicators: dict[str, bool]
    evidence: dict[str, Evidence]
    threshold_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.indicators) != set(CODES):
            raise ValueError("report needs exactly one indicator per error code")
        for code, on in self.indicators.items():
            if on and not (code in self.evidence and self.evidence[code].rules):
                raise ValueError(f"{code} is set without evidence")

    @property
    def errors(self) -> list[str]:
        return [c for c in CODES if self.indicators[c]]

    @property
    def error_count(self) -> int:
        return sum(self.indicators.values())

    def to_dict(self) -> dict:
        return {
            "config": {
                "id": self.config_id,
                "vendor": self.vendor,
                "version_category": self.version_category,
                "counts": dict(self.counts),
            },
            "fc": self.fc,
            "errors": [
                {
                    "code": c,
                    "category": BY_CODE[c].category,
                    "title": BY_CODE[c].title,
                    "evidence": self.evidence[c].to_dict(),
                }
                for c in self.errors
            ],
            "error_count": self.error_count,
            "threshold_counts": dict(self.threshold_counts),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        on = {e["code"] for e in d["errors"]}
        cfg = d["config"]
        return cls(
            cfg["id"],
            cfg["vendor"],
            cfg["version_category"],
            dict(cfg["counts"]),
            d["fc"],
            {c: c in on for c in CODES},
            {e["code"]: Evidence.from_dict(e["evidence"]) for e in d["errors"]},
            dict(d.get("threshold_counts", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "AuditReport":
        return cls.from_dict(json.loads(text))


@dataclass
class Analysis:
    """Intermediate results, kept for evidence and for testing."""

    config: FirewallConfig
    effective: list[PacketRegion]
    triggers: dict[int, frozenset[str]]
    thresholds: dict[str, ThresholdResult]
    indicators: dict[str, bool]
    evidence: dict[str, Evidence]


class _Context:
    def __init__(self, config, registry, thresholds):
        self.config = config
        self.registry = registry
        self.thresholds = thresholds
        self.universe = config.universe
        self.dirs = direction_regions(config)
        self.dag = build_dag(registry, config.universe)
        self.code_regions = {}
        for c in CATALOGUE:
            if c.category == RISKY:
                continue
            svc = code_service(c, registry, self.universe)
            full = self.universe.all_addresses()
            self.code_regions[c.code] = self.dirs.region(c.category) & PacketRegion.from_sets(full, full, svc)


def _intersects(a: PacketRegion, b: PacketRegion) -> bool:
    for x in a.cells:
        for y in b.cells:
            if (
                x[0] <= y[1] and y[0] <= x[1] and x[2] <= y[3] and y[2] <= x[3]
                and x[4] <= y[5] and y[4] <= x[5] and x[6] <= y[7] and y[6] <= x[7]
            ):
                return True
    return False


def rule_triggers(ctx: _Context, rule, resolved, eff: PacketRegion) -> frozenset[str]:
    """Codes a single PERMIT rule triggers on its own, before containment."""
    src, dst, svc = resolved
    u = ctx.universe
    out = set()
    if rule.active and dst == u.all_addresses() and svc.is_any(u):
        out.add("r01")
    if eff.is_empty():
        return frozenset(out)
    for c in CATALOGUE:
        if c.kind is _C:
            if spec_in_class(svc, c.service, u) and _intersects(eff, ctx.code_regions[c.code]):
                out.add(c.code)
        elif c.kind is _N:
            if _intersects(eff, ctx.code_regions[c.code]):
                out.add(c.code)
        elif c.kind is _T:
            # alone exceeding the bound; only matters where the code is an ancestor
            if ctx.dag.children(c.code):
                hit = eff & ctx.code_regions[c.code]
                if hit.project(c.axis).cardinality() > ctx.thresholds.for_code(c):
                    out.add(c.code)
    return frozenset(out)


def threshold_eval(ctx: _Context, permits: list[int], effective, triggers) -> dict[str, ThresholdResult]:
    """Aggregate reach counts over rules that trigger no ancestor of the code."""
    results = {}
    for c in CATALOGUE:
        if c.kind is not _T:
            continue
        anc = ctx.dag.ancestors(c.code)
        contributing = []
        pieces = []
        for i in permits:
            if triggers[i] & anc:
                continue
            hit = effective[i] & ctx.code_regions[c.code]
            if not hit.is_empty():
                contributing.append(i)
                pieces.append(hit)
        count = disjoint_union(pieces).project(c.axis).cardinality()
        results[c.code] = ThresholdResult(c.code, count, ctx.thresholds.for_code(c), tuple(contributing))
    return results


def apply_containment(triggers: dict[int, frozenset[str]], thresholds: dict[str, ThresholdResult],
                      dag: ContainmentDag) -> tuple[dict[str, bool], dict[str, tuple[int, ...]]]:
    """Final indicators plus the rule indices that justify each one."""
    indicators = {}
    attributed = {}
    for c in CATALOGUE:
        if c.kind is _T:
            res = thresholds[c.code]
            indicators[c.code] = res.triggered
            attributed[c.code] = res.rules
            continue
        anc = dag.ancestors(c.code)
        rules = tuple(i for i, t in sorted(triggers.items()) if c.code in t and not (t & anc))
        indicators[c.code] = bool(rules)
        attributed[c.code] = rules
    return indicators, attributed


def analyze(config: FirewallConfig, registry: ServiceRegistry = DEFAULT_REGISTRY,
            thresholds: Thresholds = Thresholds()) -> Analysis:
    ctx = _Context(config, registry, thresholds)
    resolved = resolve_all(config, registry)
    effective = effective_regions(config, registry, match_regions(config, registry))
    permits = [r.index for r in config.rules if r.active and r.action is Action.PERMIT]
    triggers = {i: rule_triggers(ctx, config.rules[i], resolved[i], effective[i]) for i in permits}
    thr = threshold_eval(ctx, permits, effective, triggers)
    indicators, attributed = apply_containment(triggers, thr, ctx.dag)
    evidence = {}
    for code, on in indicators.items():
        if on:
            refs = tuple(RuleRef(i, config.rules[i].line) for i in attributed[code])
            count = thr[code].count if code in thr else None
            evidence[code] = Evidence(refs, count)
    return Analysis(config, effective, triggers, thr, indicators, evidence)


def audit_config(config: FirewallConfig, registry: ServiceRegistry = DEFAULT_REGISTRY,
                 thresholds: Thresholds = Thresholds()) -> AuditReport:
    """Run every check and assemble the report."""
    a = analyze(config, registry, thresholds)
    return AuditReport(
        config_id=config.id,
        vendor=config.vendor,
        version_category=config.version_category,
        counts=config.counts,
        fc=firewall_complexity(config),
        indicators=a.indicators,
        evidence=a.evidence,
        threshold_counts={k: v.count for k, v in a.thresholds.items()},
    )
