"""Vendor-neutral firewall configuration model and first-match semantics."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ResolutionError, ZoneError
from .netmodel import FULL, AddressSet, PacketRegion, ServiceSet, Universe
from .registry import DEFAULT_REGISTRY, ServiceRegistry, parse_service_token

EXTERNAL = "external"
CHECKPOINT = "checkpoint"
PIX = "pix"


class Action(str, Enum):
    PERMIT = "permit"
    DENY = "deny"


class RuleKind(str, Enum):
    FILTER = "filter"
    NAT = "nat-opaque"


@dataclass(frozen=True)
class Interface:
    name: str
    # "external", "internal:<id>", or None while not yet assigned
    zone: str | None = None
    attached: AddressSet = AddressSet()
    security_level: int | None = None
    line: int | None = None

    @property
    def is_external(self) -> bool:
        return self.zone == EXTERNAL

    @property
    def internal_id(self) -> str | None:
        if self.zone and self.zone.startswith("internal:"):
            return self.zone.split(":", 1)[1]
        return None


@dataclass(frozen=True)
class NamedObject:
    name: str
    addresses: AddressSet
    members: tuple[str, ...] = ()
    is_group: bool = False
    line: int | None = None


@dataclass(frozen=True)
class Rule:
    index: int
    action: Action
    src: tuple[str, ...] = ("any",)
    dst: tuple[str, ...] = ("any",)
    svc: tuple[str, ...] = ("any",)
    enabled: bool = True
    kind: RuleKind = RuleKind.FILTER
    line: int | None = None
    text: str | None = None
    # PIX access-group binding; None for rule-sets that apply everywhere
    interface: str | None = None
    direction: str | None = None

    @property
    def is_filter(self) -> bool:
        return self.kind is RuleKind.FILTER

    @property
    def active(self) -> bool:
        return self.enabled and self.kind is RuleKind.FILTER


@dataclass(frozen=True)
class FirewallConfig:
    vendor: str
    rules: tuple[Rule, ...] = ()
    interfaces: tuple[Interface, ...] = ()
    objects: tuple[NamedObject, ...] = ()
    version_label: str = ""
    version_category: str = "unknown"
    raw_line_count: int | None = None
    id: str = ""
    universe: Universe = FULL
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for i, r in enumerate(self.rules):
            if r.index != i:
                raise ValueError(f"rule at position {i} has index {r.index}")
        names = [i.name for i in self.interfaces]
        if len(set(names)) != len(names):
            raise ValueError("duplicate interface names")

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_interfaces(self) -> int:
        return len(self.interfaces)

    @property
    def counts(self) -> dict[str, int | None]:
        return {
            "rules": self.n_rules,
            "objects": self.n_objects,
            "interfaces": self.n_interfaces,
            "lines": self.raw_line_count,
        }

    @property
    def object_table(self) -> dict[str, NamedObject]:
        return {o.name: o for o in self.objects}

    def interface(self, name: str) -> Interface:
        for i in self.interfaces:
            if i.name == name:
                return i
        raise KeyError(name)


_NG_EARLY = re.compile(r"^NG([\s_/-]*(FP)?\s*[0-3])?$")


def checkpoint_version_category(label: str) -> str:
    """Bucket a Check Point version label into 4.0 / 4.1 / NG/NG-FP3 / NG R55."""
    lab = " ".join(label.upper().replace("FIREWALL-1", "").split())
    if lab.startswith("4.0"):
        return "4.0"
    if lab.startswith("4.1"):
        return "4.1"
    if _NG_EARLY.match(lab):
        return "NG/NG-FP3"
    if lab.startswith(("NG", "R5", "R6")):
        return "NG R55"
    return "unknown"


def resolve_addresses(
    refs: Sequence[str],
    objects: Mapping[str, NamedObject],
    universe: Universe = FULL,
    line: int | None = None,
) -> AddressSet:
    out = AddressSet()
    full = universe.all_addresses()
    for ref in refs:
        if ref == "any":
            return full
        if ref in objects:
            out = out | objects[ref].addresses
            continue
        if ref[:1].isdigit():
            try:
                out = out | AddressSet.parse(ref)
            except ValueError as exc:
                raise ResolutionError(f"bad address {ref!r}: {exc}", line) from None
            continue
        raise ResolutionError(f"undefined object {ref!r}", line)
    return out & full


def resolve_rule(
    rule: Rule,
    objects: Mapping[str, NamedObject],
    registry: ServiceRegistry = DEFAULT_REGISTRY,
    universe: Universe = FULL,
) -> tuple[AddressSet, AddressSet, ServiceSet]:
    """Flatten a rule's references into literal address and service sets."""
    src = resolve_addresses(rule.src, objects, universe, rule.line)
    dst = resolve_addresses(rule.dst, objects, universe, rule.line)
    svc = ServiceSet()
    for tok in rule.svc:
        try:
            svc = svc | parse_service_token(tok, registry, universe)
        except ValueError as exc:
            raise ResolutionError(str(exc), rule.line) from None
    return src, dst, svc


def resolve_all(config: FirewallConfig, registry: ServiceRegistry = DEFAULT_REGISTRY):
    """Resolved (src, dst, svc) per rule; None for NAT-opaque rules."""
    table = config.object_table
    out = []
    for r in config.rules:
        if r.kind is RuleKind.NAT:
            out.append(None)
        else:
            out.append(resolve_rule(r, table, registry, config.universe))
    return out


def zone_addresses(config: FirewallConfig) -> dict[str, AddressSet]:
    """Address set per zone: ``"external"`` plus one key per internal id.

    External addresses are everything not claimed by an internal zone.
    """
    internal: dict[str, AddressSet] = {}
    for itf in config.interfaces:
        zid = itf.internal_id
        if zid is not None:
            internal[zid] = internal.get(zid, AddressSet()) | itf.attached
    claimed = AddressSet()
    for a in internal.values():
        claimed = claimed | a
    zones = {EXTERNAL: config.universe.all_addresses() - claimed}
    zones.update(internal)
    return zones


def _binding_scope(config: FirewallConfig, rule: Rule, zones) -> tuple[AddressSet | None, AddressSet | None]:
    # A rule bound "in" on X only sees packets sourced from X's zone;
    # bound "out" only packets destined to it.
    if rule.interface is None:
        return None, None
    try:
        itf = config.interface(rule.interface)
    except KeyError:
        raise ZoneError(f"rule {rule.index} bound to unknown interface {rule.interface!r}") from None
    if itf.zone is None:
        return None, None
    key = EXTERNAL if itf.is_external else itf.internal_id
    scope = zones[key]
    return (scope, None) if rule.direction == "in" else (None, scope)


def match_regions(config: FirewallConfig, registry: ServiceRegistry = DEFAULT_REGISTRY) -> list[PacketRegion]:
    """Match space of every rule; empty for disabled and NAT-opaque rules."""
    zones = zone_addresses(config)
    out = []
    for rule, res in zip(config.rules, resolve_all(config, registry)):
        if res is None or not rule.enabled:
            out.append(PacketRegion())
            continue
        src, dst, svc = res
        s_scope, d_scope = _binding_scope(config, rule, zones)
        if s_scope is not None:
            src = src & s_scope
        if d_scope is not None:
            dst = dst & d_scope
        out.append(PacketRegion.from_sets(src, dst, svc))
    return out


def effective_regions(
    config: FirewallConfig,
    registry: ServiceRegistry = DEFAULT_REGISTRY,
    matches: list[PacketRegion] | None = None,
) -> list[PacketRegion]:
    """E(r): the packets whose first matching rule is r.

    Each rule's match space minus the match spaces of all earlier active
    rules, whatever their action.  The results are pairwise disjoint.
    """
    if matches is None:
        matches = match_regions(config, registry)
    effective = []
    # earlier effective cells, one row per box; a bounding-box test picks
    # the few that can overlap, which keeps long rule-sets near linear
    seen = np.empty((256, 8), dtype=np.int64)
    n = 0
    for m in matches:
        e = m
        if n and m.cells:
            box = np.array(m.cells, dtype=np.int64)
            lo, hi = box[:, 0::2].min(axis=0), box[:, 1::2].max(axis=0)
            prev = seen[:n]
            hit = np.flatnonzero(((prev[:, 0::2] <= hi) & (prev[:, 1::2] >= lo)).all(axis=1))
            if hit.size:
                e = e - PacketRegion(tuple(int(v) for v in prev[k]) for k in hit)
        effective.append(e)
        if e.cells:
            if n + len(e.cells) > len(seen):
                seen = np.resize(seen, (2 * (n + len(e.cells)), 8))
            seen[n:n + len(e.cells)] = e.cells
            n += len(e.cells)
    return effective


def allowed_region(config: FirewallConfig, registry: ServiceRegistry = DEFAULT_REGISTRY) -> PacketRegion:
    """Everything the rule-set lets through (implicit final deny)."""
    eff = effective_regions(config, registry)
    cells = []
    for r, e in zip(config.rules, eff):
        if r.action is Action.PERMIT:
            cells.extend(e.cells)
    return PacketRegion(cells)
