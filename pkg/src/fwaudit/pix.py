"""Cisco PIX configuration subset -> FirewallConfig.

Filtering commands (``nameif``, ``interface``, ``ip address``, ``name``,
``object-group``, ``access-list``, ``access-group``) are interpreted.
NAT and ``conduit`` statements and a list of common housekeeping commands
are recognised but carry no semantics.  Anything else is unsupported:
strict mode raises, lenient mode skips it with a diagnostic.  Every line
counts toward ``raw_line_count`` either way.
"""

from __future__ import annotations

import dataclasses
import ipaddress
import re

from .errors import ResolutionError, UnsupportedDirective, ZoneError
from .fwn import _flatten_groups, _Line, count_lines, parse_directives, parse_interface, parse_meta
from .ir import (
    EXTERNAL,
    PIX,
    Action,
    FirewallConfig,
    Interface,
    NamedObject,
    Rule,
    resolve_addresses,
    resolve_rule,
)
from .netmodel import FULL, AddressSet, Universe
from .registry import DEFAULT_REGISTRY, ServiceRegistry

OPAQUE = frozenset(
    """conduit static nat global hostname domain-name enable passwd fixup pager
    logging mtu route timeout arp snmp-server telnet ssh console terminal crypto
    isakmp aaa aaa-server http floodguard sysopt dhcpd ntp clock no icmp failover
    tftp-server vpdn username end banner service asdm pdm same-security-traffic
    mac-address prefix-list rip url-server filter virtual auth-prompt
    ca management-access privilege multicast established outbound apply""".split()
)

# names accepted after eq/lt/gt/neq/range
PORT_NAMES = {
    "ftp-data": 20, "ftp": 21, "ssh": 22, "telnet": 23, "smtp": 25, "tacacs": 49,
    "domain": 53, "bootps": 67, "bootpc": 68, "tftp": 69, "gopher": 70, "finger": 79,
    "www": 80, "http": 80, "kerberos": 88, "pop2": 109, "pop3": 110, "sunrpc": 111,
    "ident": 113, "nntp": 119, "ntp": 123, "netbios-ns": 137, "netbios-dgm": 138,
    "netbios-ssn": 139, "imap4": 143, "snmp": 161, "snmptrap": 162, "bgp": 179,
    "irc": 194, "ldap": 389, "https": 443, "exec": 512, "biff": 512, "login": 513,
    "who": 513, "cmd": 514, "rsh": 514, "syslog": 514, "lpd": 515, "talk": 517,
    "rip": 520, "uucp": 540, "klogin": 543, "kshell": 544, "ldaps": 636,
    "citrix-ica": 1494, "sqlnet": 1521, "radius": 1645, "radius-acct": 1646,
    "h323": 1720, "pptp": 1723, "ctiqbe": 2748, "aol": 5190, "pcanywhere-data": 5631,
    "pcanywhere-status": 5632,
}

PROTO_NAMES = {
    "icmp": 1, "igmp": 2, "ipinip": 4, "tcp": 6, "igrp": 9, "udp": 17, "gre": 47,
    "esp": 50, "ah": 51, "ipsec": 50, "eigrp": 88, "ospf": 89, "nos": 94, "pim": 103,
    "pcp": 108, "snp": 109,
}

_PORT_OPS = ("eq", "lt", "gt", "neq", "range")


def pix_version_category(label: str) -> str:
    """Bucket a PIX version label: 4.4 / 5.0–5.2 / 6.0–6.2 / 6.3–7.0."""
    m = re.match(r"\s*(\d+)\.(\d+)", label)
    if not m:
        return "unknown"
    major, minor = int(m.group(1)), int(m.group(2))
    if (major, minor) == (4, 4):
        return "4.4"
    if major == 5:
        return "5.0–5.2"
    if major == 6 and minor <= 2:
        return "6.0–6.2"
    if (major == 6 and minor >= 3) or major == 7:
        return "6.3–7.0"
    return "unknown"


def _mask_prefix(mask_text: str) -> int:
    mask = int(ipaddress.IPv4Address(mask_text))
    inv = ~mask & 0xFFFFFFFF
    if inv & (inv + 1) == 0:
        return 32 - inv.bit_length()
    if mask & (mask + 1) == 0:
        raise ValueError(f"{mask_text} looks like a wildcard mask; PIX uses subnet masks")
    raise ValueError(f"{mask_text} is not a contiguous subnet mask")


def _network(addr: str, mask: str, strict=True) -> str:
    prefix = _mask_prefix(mask)
    net = ipaddress.IPv4Network(f"{addr}/{prefix}", strict=strict)
    return str(net)


@dataclasses.dataclass
class _ItfState:
    hw: str
    name: str | None = None
    level: int | None = None
    net: AddressSet = AddressSet()
    line: int | None = None


@dataclasses.dataclass
class _SvcGroup:
    protos: tuple[str, ...]
    ports: list
    line: int


class _PixParser:
    def __init__(self, text, source, strict, universe, registry):
        self.text = text
        self.source = source
        self.strict = strict
        self.universe = universe
        self.registry = registry
        self.version = ""
        self.itfs: dict[str, _ItfState] = {}  # by hardware id
        self.names: dict[str, str] = {}
        self.net_groups: dict = {}
        self.svc_groups: dict[str, _SvcGroup] = {}
        self.acls: dict[str, list] = {}
        self.bindings: list = []
        self.unsupported: list = []
        self.diagnostics: list[str] = []
        self.group = None  # open object-group (kind, name)
        self.block = None  # open 7.x interface block (_ItfState)

    # -- helpers ---------------------------------------------------------
    def err(self, ln, msg, i=0):
        return ln.error(msg, i)

    def ip(self, ln, i):
        tok = ln.tok(i)
        tok = self.names.get(tok, tok)
        try:
            ipaddress.IPv4Address(tok)
        except ValueError:
            raise self.err(ln, f"bad address {ln.tok(i)!r}", i) from None
        return tok

    def itf_by_name(self, name):
        for st in self.itfs.values():
            if st.name == name:
                return st
        return None

    # -- main loop -------------------------------------------------------
    def run(self):
        for n, raw in enumerate(self.text.split("\n"), 1):
            raw = raw.rstrip("\r")
            ln = _Line(n, raw, self.source)
            ln.tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", raw)]
            if not ln.tokens or raw.lstrip().startswith((":", "!")):
                continue
            indented = raw[:1].isspace()
            kw = ln.tok(0)
            if self.group and kw in ("network-object", "port-object", "group-object", "description"):
                self.group_member(ln)
                continue
            if self.block and indented:
                self.block_member(ln)
                continue
            self.group = None
            self.block = None
            handler = getattr(self, "do_" + kw.replace("-", "_"), None)
            if handler is not None:
                handler(ln)
            elif kw in OPAQUE or kw.startswith("Cryptochecksum"):
                continue
            else:
                self.unsupported.append((n, raw.strip()))
        if self.unsupported:
            if self.strict:
                raise UnsupportedDirective(self.unsupported, self.source)
            for n, t in self.unsupported:
                self.diagnostics.append(f"line {n}: unsupported directive skipped: {t}")
        return self.build()

    # -- directives ------------------------------------------------------
    def do_PIX(self, ln):
        if len(ln.tokens) < 3 or ln.tok(1) != "Version":
            raise self.err(ln, "expected 'PIX Version <x.y(z)>'")
        self.version = ln.tok(2)

    def do_nameif(self, ln):
        # 6.x: nameif <hw> <name> security<N>
        t = [x for x, _ in ln.tokens]
        if len(t) != 4 or not re.fullmatch(r"security\d+", t[3]):
            raise self.err(ln, "expected 'nameif <hardware> <name> security<level>'")
        st = self.itfs.setdefault(t[1], _ItfState(t[1]))
        st.name, st.level, st.line = t[2], int(t[3][8:]), ln.number

    def do_interface(self, ln):
        if len(ln.tokens) == 2:
            # 7.x block header; sub-commands follow indented
            self.block = self.itfs.setdefault(ln.tok(1), _ItfState(ln.tok(1)))
        elif len(ln.tokens) < 2:
            raise self.err(ln, "interface needs a hardware id")
        else:
            self.itfs.setdefault(ln.tok(1), _ItfState(ln.tok(1)))

    def block_member(self, ln):
        kw = ln.tok(0)
        st = self.block
        if kw == "nameif" and len(ln.tokens) == 2:
            st.name, st.line = ln.tok(1), ln.number
        elif kw == "security-level" and len(ln.tokens) == 2 and ln.tok(1).isdigit():
            st.level = int(ln.tok(1))
        elif kw == "ip" and len(ln.tokens) >= 2 and ln.tok(1) == "address":
            if len(ln.tokens) >= 4:
                st.net = self.connected(ln, 2)
        elif kw in ("shutdown", "speed", "duplex", "description", "no", "management-only", "vlan"):
            pass
        else:
            self.unsupported.append((ln.number, ln.raw.strip()))

    def connected(self, ln, i):
        addr = self.ip(ln, i)
        try:
            cidr = _network(addr, ln.tok(i + 1), strict=False)
        except ValueError as exc:
            raise self.err(ln, str(exc), i + 1) from None
        return AddressSet.parse(cidr) & self.universe.all_addresses()

    def do_ip(self, ln):
        # 6.x: ip address <ifname> <addr> <mask> | ip address <ifname> dhcp
        if len(ln.tokens) >= 3 and ln.tok(1) == "address":
            st = self.itf_by_name(ln.tok(2))
            if st is None:
                raise self.err(ln, f"ip address for unknown interface {ln.tok(2)!r}", 2)
            if len(ln.tokens) >= 5:
                st.net = self.connected(ln, 3)
        # other "ip ..." commands (audit, verify, local pool) are housekeeping

    def do_name(self, ln):
        if len(ln.tokens) != 3:
            raise self.err(ln, "expected 'name <address> <alias>'")
        try:
            ipaddress.IPv4Address(ln.tok(1))
        except ValueError:
            raise self.err(ln, f"bad address {ln.tok(1)!r}", 1) from None
        self.names[ln.tok(2)] = ln.tok(1)
        self.check_new_object(ln, ln.tok(2), 2)
        self.net_groups[ln.tok(2)] = (ln, AddressSet.parse(ln.tok(1)) & self.universe.all_addresses(), False)

    def do_names(self, ln):
        pass

    def check_new_object(self, ln, name, i):
        if name in self.net_groups or name in self.svc_groups:
            raise self.err(ln, f"duplicate object name {name!r}", i)

    def do_object_group(self, ln):
        t = [x for x, _ in ln.tokens]
        if len(t) >= 3 and t[1] == "network":
            self.check_new_object(ln, t[2], 2)
            self.net_groups[t[2]] = (ln, [], True)
            self.group = ("network", t[2])
        elif len(t) >= 4 and t[1] == "service" and t[3] in ("tcp", "udp", "tcp-udp"):
            self.check_new_object(ln, t[2], 2)
            protos = ("tcp", "udp") if t[3] == "tcp-udp" else (t[3],)
            self.svc_groups[t[2]] = _SvcGroup(protos, [], ln.number)
            self.group = ("service", t[2])
        else:
            self.unsupported.append((ln.number, ln.raw.strip()))

    def group_member(self, ln):
        kind, name = self.group
        kw = ln.tok(0)
        if kw == "description":
            return
        if kind == "network":
            members = self.net_groups[name][1]
            if kw == "network-object":
                ref, nxt = self.address(ln, 1)
                if nxt != len(ln.tokens) or ref == "any":
                    raise self.err(ln, "expected 'network-object host <ip>' or '<net> <mask>'")
                members.append((ref, ln.tokens[1][1]))
            elif kw == "group-object" and len(ln.tokens) == 2:
                members.append((ln.tok(1), ln.tokens[1][1]))
            else:
                raise self.err(ln, f"{kw} not valid in a network object-group")
        else:
            grp = self.svc_groups[name]
            if kw == "port-object":
                ranges, nxt = self.ports(ln, 1)
                if ranges is None or nxt != len(ln.tokens):
                    raise self.err(ln, "expected 'port-object eq|range ...'", 1)
                grp.ports.extend(ranges)
            elif kw == "group-object" and len(ln.tokens) == 2:
                other = self.svc_groups.get(ln.tok(1))
                if other is None:
                    raise self.err(ln, f"undefined service group {ln.tok(1)!r}", 1)
                grp.ports.extend(other.ports)
            else:
                raise self.err(ln, f"{kw} not valid in a service object-group")

    def do_access_group(self, ln):
        t = [x for x, _ in ln.tokens]
        if len(t) != 5 or t[2] not in ("in", "out") or t[3] != "interface":
            raise self.err(ln, "expected 'access-group <acl> in|out interface <name>'")
        self.bindings.append((t[1], t[2], t[4], ln))

    def do_access_list(self, ln):
        t = [x for x, _ in ln.tokens]
        if len(t) == 2 and t[1] == "compiled":
            return
        if len(t) < 3:
            raise self.err(ln, "truncated access-list")
        i = 2
        if t[i] == "line" and len(t) > i + 1 and t[i + 1].isdigit():
            i += 2
        if i < len(t) and t[i] == "remark":
            return
        if i < len(t) and t[i] == "extended":
            i += 1
        if i >= len(t) or t[i] not in ("permit", "deny"):
            if i < len(t) and t[i] in ("standard", "webtype", "ethertype"):
                self.unsupported.append((ln.number, ln.raw.strip()))
                return
            raise self.err(ln, "expected permit or deny", min(i, len(t) - 1))
        self.acls.setdefault(t[1], []).append(self.acl_entry(ln, i))

    # -- access-list entry grammar --------------------------------------
    def address(self, ln, i):
        """Parse an address operand at token i -> (ref, next index)."""
        t = ln.tokens
        if i >= len(t):
            raise self.err(ln, "missing address", len(t) - 1)
        w = ln.tok(i)
        if w == "any":
            return "any", i + 1
        if w == "host":
            if i + 1 >= len(t):
                raise self.err(ln, "host needs an address", i)
            return self.ip(ln, i + 1) + "/32", i + 2
        if w == "object-group":
            if i + 1 >= len(t):
                raise self.err(ln, "object-group needs a name", i)
            return ln.tok(i + 1), i + 2
        if w == "interface":
            raise self.err(ln, "'interface' address operands are not supported", i)
        addr = self.ip(ln, i)
        if i + 1 >= len(t):
            raise self.err(ln, "address needs a mask", i)
        try:
            cidr = _network(addr, ln.tok(i + 1))
        except ValueError as exc:
            raise self.err(ln, str(exc), i + 1) from None
        return cidr, i + 2

    def port_number(self, ln, i):
        if i >= len(ln.tokens):
            raise self.err(ln, "missing port", len(ln.tokens) - 1)
        w = ln.tok(i)
        p = int(w) if w.isdigit() else PORT_NAMES.get(w)
        if p is None or p > 65535:
            raise self.err(ln, f"unknown port {w!r}", i)
        return min(p, self.universe.port_max)

    def ports(self, ln, i):
        """Port operator at token i -> (list of ranges | None, next index)."""
        if i >= len(ln.tokens) or ln.tok(i) not in _PORT_OPS:
            return None, i
        op = ln.tok(i)
        top = self.universe.port_max
        if op == "range":
            a, b = self.port_number(ln, i + 1), self.port_number(ln, i + 2)
            if a > b:
                raise self.err(ln, "empty port range", i + 1)
            return [(a, b)], i + 3
        p = self.port_number(ln, i + 1)
        if op == "eq":
            out = [(p, p)]
        elif op == "lt":
            out = [(0, p - 1)] if p > 0 else []
        elif op == "gt":
            out = [(p + 1, top)] if p < top else []
        else:
            out = [iv for iv in ((0, p - 1), (p + 1, top)) if iv[0] <= iv[1]]
        return out, i + 2

    def port_spec(self, ln, i, protos):
        """Port operator or service object-group; None when absent."""
        if i < len(ln.tokens) and ln.tok(i) == "object-group" and i + 1 < len(ln.tokens):
            grp = self.svc_groups.get(ln.tok(i + 1))
            if grp is not None:
                ranges = grp.ports if set(protos) & set(grp.protos) else []
                return list(ranges), i + 2
            return None, i
        return self.ports(ln, i)

    def acl_entry(self, ln, i):
        t = [x for x, _ in ln.tokens]
        action = t[i]
        i += 1
        if i >= len(t):
            raise self.err(ln, "missing protocol", i - 1)
        proto = t[i]
        if proto == "object-group":
            raise self.err(ln, "protocol object-groups are not supported", i)
        if proto.isdigit():
            num = int(proto)
        elif proto == "ip":
            num = 0
        elif proto in PROTO_NAMES:
            num = PROTO_NAMES[proto]
        else:
            raise self.err(ln, f"unknown protocol {proto!r}", i)
        if num > 255:
            raise self.err(ln, f"protocol number out of range: {num}", i)
        i += 1
        ported = num in (6, 17)
        names = ("tcp",) if num == 6 else ("udp",) if num == 17 else ()
        cols = [ln.tokens[i][1] if i < len(t) else None]
        src, i = self.address(ln, i)
        if ported:
            _, i = self.port_spec(ln, i, names)  # source port: not modeled
        cols.append(ln.tokens[i][1] if i < len(t) else None)
        dst, i = self.address(ln, i)
        dports = None
        if ported:
            dports, i = self.port_spec(ln, i, names)
        enabled = True
        if num == 1 and i < len(t) and t[i] not in ("log", "inactive", "time-range"):
            i += 1  # icmp message type: not modeled
        while i < len(t):
            w = t[i]
            if w == "log":
                i += 1
                while i < len(t) and (t[i].isdigit() or t[i] in ("interval", "disable", "default")
                                      or t[i] in ("emergencies", "alerts", "critical", "errors",
                                                  "warnings", "notifications", "informational",
                                                  "debugging")):
                    i += 1
            elif w == "inactive":
                enabled = False
                i += 1
            elif w == "time-range" and i + 1 < len(t):
                i += 2
            else:
                raise self.err(ln, f"unexpected {w!r}", i)
        if num == 0:
            svc = ("any",)
        elif num == 1:
            svc = ("icmp",)
        elif ported:
            if dports is None:
                svc = (names[0],)
            else:
                # may be empty (e.g. "lt 0"): such an entry matches nothing
                svc = tuple(f"{names[0]}/{a}-{b}" for a, b in dports)
        else:
            svc = (f"proto/{num}",)
        return dict(action=action, src=src, dst=dst, svc=svc, enabled=enabled, line=ln.number,
                    text=ln.raw.strip(), cols=cols)

    # -- assembly --------------------------------------------------------
    def build(self) -> FirewallConfig:
        interfaces = []
        for st in self.itfs.values():
            if st.name is None:
                continue
            interfaces.append(Interface(st.name, None, st.net, st.level, st.line))
        names = {i.name for i in interfaces}

        flat = _flatten_groups(self.net_groups, self.universe, self.source)
        objects = []
        for name, (ln, members, is_group) in self.net_groups.items():
            objects.append(NamedObject(name, flat[name], tuple(m for m, _ in members) if is_group else (),
                                       is_group, ln.number))
        table = {o.name: o for o in objects}

        rules = []
        bound = set()
        for acl, direction, ifname, ln in self.bindings:
            if ifname not in names:
                raise ln.error(f"access-group on unknown interface {ifname!r}", 4)
            if acl not in self.acls:
                raise ln.error(f"access-group references undefined access-list {acl!r}", 1)
            bound.add(acl)
            for e in self.acls[acl]:
                rule = Rule(len(rules), Action(e["action"]), (e["src"],), (e["dst"],), e["svc"],
                            enabled=e["enabled"], line=e["line"], text=e["text"],
                            interface=ifname, direction=direction)
                try:
                    resolve_rule(rule, table, self.registry, self.universe)
                except ResolutionError as exc:
                    col = None
                    for ref, c in zip((e["src"], e["dst"]), e["cols"]):
                        try:
                            resolve_addresses([ref], table, self.universe)
                        except ResolutionError:
                            col = c
                            break
                    raise ResolutionError(exc.message, e["line"], col, self.source) from None
                rules.append(rule)
        for acl in self.acls:
            if acl not in bound:
                self.diagnostics.append(f"access-list {acl} is not bound to any interface; ignored")
        return FirewallConfig(
            vendor=PIX,
            rules=tuple(rules),
            interfaces=tuple(interfaces),
            objects=tuple(objects),
            version_label=self.version,
            version_category=pix_version_category(self.version) if self.version else "unknown",
            raw_line_count=count_lines(self.text),
            id=self.source or "",
            universe=self.universe,
            diagnostics=tuple(self.diagnostics),
        )


def parse_pix(
    text: str,
    source: str | None = None,
    strict: bool = False,
    universe: Universe = FULL,
    registry: ServiceRegistry = DEFAULT_REGISTRY,
) -> FirewallConfig:
    """Parse PIX configuration text.  Zones are left unassigned."""
    return _PixParser(text, source, strict, universe, registry).run()


def parse_sidecar(text: str, source=None, universe: Universe = FULL):
    """Zone sidecar: FWN ``interface`` and ``meta`` lines.

    Returns ({interface name: Interface}, meta dict).
    """
    overrides: dict[str, Interface] = {}
    meta: dict[str, str] = {}
    for ln in parse_directives(text, source, allowed=("interface", "meta")):
        if ln.tok(0) == "meta":
            parse_meta(ln, meta)
            continue
        itf = parse_interface(ln, universe)
        if itf.name in overrides:
            raise ln.error(f"duplicate interface {itf.name!r}", 1)
        overrides[itf.name] = itf
    return overrides, meta


def infer_zones(config: FirewallConfig, sidecar: str | tuple | None = None) -> FirewallConfig:
    """Assign zones from security levels, honouring sidecar overrides.

    The unique lowest-level interface becomes external; every other
    interface is its own internal zone holding its connected subnet.
    """
    if isinstance(sidecar, str):
        overrides, meta = parse_sidecar(sidecar, universe=config.universe)
    else:
        overrides, meta = sidecar or ({}, {})
    names = {i.name for i in config.interfaces}
    for name in overrides:
        if name not in names:
            raise ZoneError(f"sidecar names unknown interface {name!r}")

    rest = [i for i in config.interfaces if i.name not in overrides]
    external = None
    if rest and not any(o.is_external for o in overrides.values()):
        if any(i.security_level is None for i in rest):
            raise ZoneError("interfaces without security levels; declare zones in a sidecar")
        low = min(i.security_level for i in rest)
        lowest = [i.name for i in rest if i.security_level == low]
        if len(lowest) > 1:
            raise ZoneError(
                f"interfaces {', '.join(lowest)} tie for the lowest security level {low}; "
                "declare the external zone explicitly"
            )
        external = lowest[0]

    out = []
    for itf in config.interfaces:
        if itf.name in overrides:
            o = overrides[itf.name]
            attached = itf.attached | o.attached if o.zone != EXTERNAL else itf.attached
            out.append(dataclasses.replace(itf, zone=o.zone, attached=attached))
        elif itf.name == external:
            out.append(dataclasses.replace(itf, zone=EXTERNAL))
        else:
            out.append(dataclasses.replace(itf, zone=f"internal:{itf.name}"))
    changes = {"interfaces": tuple(out)}
    if meta.get("version"):
        changes["version_label"] = meta["version"]
        changes["version_category"] = pix_version_category(meta["version"])
    return dataclasses.replace(config, **changes)


def load_pix(text, source=None, strict=False, sidecar=None, universe=FULL, registry=DEFAULT_REGISTRY):
    """parse_pix followed by infer_zones."""
    return infer_zones(parse_pix(text, source, strict, universe, registry), sidecar)
