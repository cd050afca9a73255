"""Parser for FWN, the line-oriented normalized rule-set format.

::

    # comment
    meta vendor checkpoint
    meta version NG R55
    interface eth0 zone external net 0.0.0.0/0
    interface eth1 zone internal:lan net 10.0.0.0/16
    object web-srv 10.0.1.10
    group dmz-hosts web-srv,10.0.2.0/24
    rule permit src any dst web-srv svc tcp/80,https
    rule deny src any dst any svc any disabled
    natrule hide lan behind eth0

Unknown directives are errors: silently skipping them would corrupt the
counts that feed the complexity measure.
"""

from __future__ import annotations

import re

from .errors import ParseError, ResolutionError
from .ir import (
    CHECKPOINT,
    EXTERNAL,
    Action,
    FirewallConfig,
    Interface,
    NamedObject,
    Rule,
    RuleKind,
    checkpoint_version_category,
    resolve_addresses,
    resolve_rule,
)
from .netmodel import FULL, AddressSet, Universe
from .registry import DEFAULT_REGISTRY, ServiceRegistry, parse_service_token

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_ZONE = re.compile(r"^(external|internal:[A-Za-z0-9_.\-]+)$")


def count_lines(text: str) -> int:
    """Number of lines as stored: newline count, plus an unterminated tail."""
    return text.count("\n") + (1 if text and not text.endswith("\n") else 0)


class _Line:
    def __init__(self, number, raw, source):
        self.number = number
        self.raw = raw
        self.source = source
        body = raw.split("#", 1)[0]
        self.tokens = []
        for m in re.finditer(r"\S+", body):
            self.tokens.append((m.group(), m.start() + 1))

    def error(self, msg, tok_index=None, cls=ParseError):
        col = self.tokens[tok_index][1] if tok_index is not None and tok_index < len(self.tokens) else 1
        return cls(msg, self.number, col, self.source)

    def tok(self, i):
        return self.tokens[i][0]


def _cidrs(line: _Line, i: int, universe: Universe) -> AddressSet:
    out = AddressSet()
    for part in line.tok(i).split(","):
        try:
            out = out | AddressSet.parse(part)
        except ValueError as exc:
            raise line.error(f"bad network {part!r}: {exc}", i) from None
    return out & universe.all_addresses()


def _check_name(line: _Line, i: int):
    name = line.tok(i)
    if not _NAME.match(name) or name == "any":
        raise line.error(f"invalid name {name!r}", i)
    return name


def parse_directives(text: str, source=None, allowed=None):
    """Tokenize into _Line objects, dropping blanks and comments."""
    lines = []
    for n, raw in enumerate(text.split("\n"), 1):
        ln = _Line(n, raw.rstrip("\r"), source)
        if not ln.tokens:
            continue
        if allowed is not None and ln.tok(0) not in allowed:
            raise ln.error(f"unknown directive {ln.tok(0)!r}", 0)
        lines.append(ln)
    return lines


def parse_interface(line: _Line, universe: Universe = FULL, net_required=False) -> Interface:
    # interface <name> zone <zone> [net <cidr>[,...]]
    t = line.tokens
    if len(t) < 4 or t[2][0] != "zone":
        raise line.error("expected 'interface <name> zone external|internal:<id> net <cidr>[,...]'", 0)
    name = _check_name(line, 1)
    zone = line.tok(3)
    if not _ZONE.match(zone):
        raise line.error(f"bad zone {zone!r}", 3)
    attached = AddressSet()
    if len(t) > 4:
        if line.tok(4) != "net" or len(t) != 6:
            raise line.error("expected 'net <cidr>[,...]'", 4)
        attached = _cidrs(line, 5, universe)
    elif net_required and zone != EXTERNAL:
        raise line.error("internal interface needs 'net <cidr>[,...]'", 3)
    return Interface(name, zone, attached, line=line.number)


def parse_meta(line: _Line, meta: dict):
    if len(line.tokens) < 3:
        raise line.error("expected 'meta vendor <name>' or 'meta version <label>'", 0)
    key = line.tok(1)
    if key == "vendor":
        if len(line.tokens) != 3:
            raise line.error("vendor takes one word", 3)
        meta["vendor"] = line.tok(2).lower()
    elif key == "version":
        start = line.tokens[2][1] - 1
        meta["version"] = line.raw.split("#", 1)[0][start:].strip()
    else:
        raise line.error(f"unknown meta key {key!r}", 1)


def _flatten_groups(raw_objs, universe, source):
    """Resolve groups to address sets, rejecting dangling refs and cycles."""
    resolved: dict[str, AddressSet] = {}
    state: dict[str, int] = {}

    def visit(name, path):
        if name in resolved:
            return resolved[name]
        line, members, is_group = raw_objs[name]
        if not is_group:
            resolved[name] = members
            return members
        if state.get(name) == 1:
            cycle = " -> ".join(path + [name])
            raise ResolutionError(f"cyclic group definition: {cycle}", line.number, 1, source)
        state[name] = 1
        acc = AddressSet()
        for member, col in members:
            if member[:1].isdigit():
                try:
                    acc = acc | AddressSet.parse(member)
                except ValueError as exc:
                    raise ResolutionError(f"bad network {member!r}: {exc}", line.number, col, source) from None
            elif member in raw_objs:
                acc = acc | visit(member, path + [name])
            else:
                raise ResolutionError(
                    f"group {name!r} references undefined object {member!r}", line.number, col, source
                )
        state[name] = 2
        resolved[name] = acc & universe.all_addresses()
        return resolved[name]

    for name in raw_objs:
        visit(name, [])
    return resolved


def parse_fwn(
    text: str,
    source: str | None = None,
    registry: ServiceRegistry = DEFAULT_REGISTRY,
    universe: Universe = FULL,
) -> FirewallConfig:
    """Parse an FWN document into a FirewallConfig with resolved counts."""
    meta: dict[str, str] = {}
    interfaces: list[Interface] = []
    raw_objs: dict = {}
    rules: list[Rule] = []

    lines = parse_directives(text, source)
    for ln in lines:
        kw = ln.tok(0)
        if kw == "meta":
            parse_meta(ln, meta)
            if ln.tok(1) == "vendor" and meta["vendor"] != CHECKPOINT:
                raise ln.error(f"FWN documents describe checkpoint rule-sets, not {meta['vendor']!r}", 2)
        elif kw == "interface":
            itf = parse_interface(ln, universe, net_required=True)
            if any(i.name == itf.name for i in interfaces):
                raise ln.error(f"duplicate interface {itf.name!r}", 1)
            interfaces.append(itf)
        elif kw in ("object", "group"):
            if len(ln.tokens) != 3:
                raise ln.error(f"expected '{kw} <name> <item>[,...]'", 0)
            name = _check_name(ln, 1)
            if name in raw_objs:
                raise ln.error(f"duplicate object name {name!r}", 1)
            if kw == "object":
                raw_objs[name] = (ln, _cidrs(ln, 2, universe), False)
            else:
                col0 = ln.tokens[2][1]
                members, off = [], 0
                for m in ln.tok(2).split(","):
                    if not m:
                        raise ln.error("empty group member", 2)
                    members.append((m, col0 + off))
                    off += len(m) + 1
                raw_objs[name] = (ln, tuple(members), True)
        elif kw == "rule":
            rules.append(_parse_rule(ln, len(rules)))
        elif kw == "natrule":
            rules.append(
                Rule(len(rules), Action.PERMIT, kind=RuleKind.NAT, line=ln.number, text=ln.raw.strip())
            )
        else:
            raise ln.error(f"unknown directive {kw!r}", 0)

    flat = _flatten_groups(raw_objs, universe, source)
    objects = []
    for name, (ln, members, is_group) in raw_objs.items():
        objects.append(
            NamedObject(
                name,
                flat[name],
                tuple(m for m, _ in members) if is_group else (),
                is_group,
                ln.number,
            )
        )
    table = {o.name: o for o in objects}
    by_line = {ln.number: ln for ln in lines}
    for r in rules:
        if r.kind is RuleKind.FILTER:
            try:
                resolve_rule(r, table, registry, universe)
            except ResolutionError as exc:
                col = _bad_item_column(by_line[r.line], table, registry, universe)
                raise ResolutionError(exc.message, r.line, col, source) from None

    version = meta.get("version", "")
    return FirewallConfig(
        vendor=CHECKPOINT,
        rules=tuple(rules),
        interfaces=tuple(interfaces),
        objects=tuple(objects),
        version_label=version,
        version_category=checkpoint_version_category(version) if version else "unknown",
        raw_line_count=count_lines(text),
        id=source or "",
        universe=universe,
    )


def _parse_rule(ln: _Line, index: int) -> Rule:
    t = [x for x, _ in ln.tokens]
    if len(t) not in (8, 9) or t[2] != "src" or t[4] != "dst" or t[6] != "svc":
        raise ln.error("expected 'rule permit|deny src <spec> dst <spec> svc <spec> [disabled]'", 0)
    if t[1] not in ("permit", "deny"):
        raise ln.error(f"bad action {t[1]!r}", 1)
    enabled = True
    if len(t) == 9:
        if t[8] != "disabled":
            raise ln.error(f"unexpected {t[8]!r}", 8)
        enabled = False
    specs = []
    for i in (3, 5, 7):
        parts = tuple(p for p in t[i].split(","))
        if any(not p for p in parts):
            raise ln.error("empty list item", i)
        specs.append(parts)
    return Rule(
        index,
        Action(t[1]),
        specs[0],
        specs[1],
        specs[2],
        enabled=enabled,
        line=ln.number,
        text=ln.raw.strip(),
    )


def _bad_item_column(ln: _Line, table, registry, universe) -> int | None:
    # column of the first list item in src/dst/svc that fails to resolve
    for i in (3, 5, 7):
        text, col = ln.tokens[i]
        for part in text.split(","):
            try:
                if i == 7:
                    parse_service_token(part, registry, universe)
                else:
                    resolve_addresses([part], table, universe)
            except (ValueError, ResolutionError):
                return col
            col += len(part) + 1
    return None


def render_fwn(config: FirewallConfig) -> str:
    """Write a config back out as FWN text."""
    out = ["meta vendor checkpoint"]
    if config.version_label:
        out.append(f"meta version {config.version_label}")
    for itf in config.interfaces:
        line = f"interface {itf.name} zone {itf.zone or EXTERNAL}"
        if itf.attached:
            line += " net " + ",".join(itf.attached.to_cidrs())
        out.append(line)
    for o in config.objects:
        if o.is_group:
            out.append(f"group {o.name} {','.join(o.members)}")
        else:
            out.append(f"object {o.name} {','.join(o.addresses.to_cidrs())}")
    for r in config.rules:
        if r.kind is RuleKind.NAT:
            out.append(r.text if r.text and r.text.startswith("natrule") else "natrule opaque")
            continue
        line = f"rule {r.action.value} src {','.join(r.src)} dst {','.join(r.dst)} svc {','.join(r.svc)}"
        if not r.enabled:
            line += " disabled"
        out.append(line)
    return "\n".join(out) + "\n"
