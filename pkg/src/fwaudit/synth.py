"""Synthetic rule-set generator with ground-truth error labels.

Each requested error gets its own rule (or, for r01, a fully shadowed
deny/permit pair) over addresses no other rule touches, so the seeded
errors cannot mask or create one another.  Filler rules, objects and lines
bring the complexity to the requested FC without adding errors.

Address plan::

    1.0.0.0/8          external sources of inbound rules
    198.51.100.0/24    external destinations of outbound rules
    172.16.0.0/12      filler traffic (external)
    10.1.0.0/16        first internal zone   (inside)
    10.2.0.0/16        second internal zone  (dmz), when present
    10.3.0.0/16 ...    extra internal zones used only to raise #Interfaces
"""

from __future__ import annotations

import ipaddress
import json
import math
import random
from dataclasses import dataclass, field

from .audit import BY_CODE, CATALOGUE, CODES, Kind, Thresholds, code_service
from .complexity import PIX_BOILERPLATE_LINES, fc_checkpoint
from .errors import FwauditError
from .ir import CHECKPOINT, PIX
from .netmodel import FULL, ServiceSet
from .registry import DEFAULT_REGISTRY, ServiceRegistry


class Unrealizable(FwauditError):
    """The requested combination of errors / complexity cannot be built."""


CHECKPOINT_VERSIONS = ("4.0", "4.1", "NG FP3", "NG R55")
PIX_VERSIONS = ("4.4(7)", "5.2(9)", "6.2(2)", "6.3(3)", "7.0(1)")

EXT_SRC = "1.0.0.0/8"
EXT_DST = "198.51.100.0/24"
INSIDE, DMZ = "10.1.0.0/16", "10.2.0.0/16"
BENIGN_CANDIDATES = (22, 443, 993, 995, 465, 587, 8443, 3389, 636, 989)


@dataclass(frozen=True)
class SynthParams:
    vendor: str
    target_fc: int
    errors: frozenset = frozenset()
    seed: int = 0
    interfaces: int | None = None  # None: 2, or 3 when internal errors are seeded


@dataclass(frozen=True)
class SyntheticConfig:
    vendor: str
    text: str
    labels: frozenset
    fc: int
    seed: int
    suffix: str = field(default=".fwn")

    def labels_json(self) -> str:
        return json.dumps({"vendor": self.vendor, "fc": self.fc, "seed": self.seed,
                           "labels": sorted(self.labels)}, indent=2) + "\n"


@dataclass
class _Seed:
    """One seeded rule in vendor-neutral form."""

    action: str
    src: str
    dst: str
    svc: ServiceSet
    direction: str  # inbound / outbound / internal


def _host(base: str, offset: int) -> str:
    return str(ipaddress.IPv4Address(int(ipaddress.IPv4Network(base).network_address) + offset)) + "/32"


def _free_tcp_range(registry: ServiceRegistry, width: int, start: int = 10000) -> tuple[int, int]:
    taken = ServiceSet()
    for name in registry:
        taken = taken | registry[name]
    lo = start
    while lo + width - 1 <= 65535:
        hi = lo + width - 1
        clash = [iv for iv in taken.tcp if iv[0] <= hi and iv[1] >= lo]
        if not clash:
            return lo, hi
        lo = max(iv[1] for iv in clash) + 1
    raise Unrealizable("no free TCP port range for the 2000+ ports errors")


def _benign_ports(registry: ServiceRegistry) -> list[int]:
    taken = ServiceSet()
    for name in registry:
        taken = taken | registry[name]
    return [p for p in BENIGN_CANDIDATES if p not in taken.tcp]


def _seeds(errors, registry, thresholds: Thresholds):
    """Seeded rules per code, keyed so callers can place each block."""
    u = FULL
    blocks: dict[str, list[_Seed]] = {}
    width = thresholds.port + 1
    # smallest power-of-two block that exceeds the address threshold
    bits = max(1, math.ceil(math.log2(thresholds.address + 1)))
    if 2 ** bits <= thresholds.address or bits > 12:
        raise Unrealizable("address threshold too large for the generator's address plan")
    k_in = k_out = k_int = 0
    n_net = 0
    for code in sorted(errors):
        c = BY_CODE[code]
        if c.kind is Kind.SYNTACTIC:
            host = _host("10.1.3.0/24", 1)
            blocks[code] = [
                _Seed("deny", host, "any", ServiceSet.any(u), "outbound"),
                _Seed("permit", host, "any", ServiceSet.any(u), "outbound"),
            ]
            continue
        if c.kind is Kind.THRESHOLD and c.axis == "tcp_ports":
            lo, hi = _free_tcp_range(registry, width)
            svc = ServiceSet.tcp_ports((lo, hi))
        else:
            svc = code_service(c, registry, u)
        if c.kind is Kind.THRESHOLD and c.axis in ("dst", "src"):
            base = int(ipaddress.IPv4Network("10.1.128.0/17").network_address)
            net = str(ipaddress.IPv4Network((base + n_net * 2 ** bits, 32 - bits)))
            n_net += 1
        else:
            net = None
        if c.category == "inbound":
            k_in += 1
            blocks[code] = [_Seed("permit", EXT_SRC, net or _host("10.1.0.0/24", k_in), svc, "inbound")]
        elif c.category == "outbound":
            k_out += 1
            blocks[code] = [_Seed("permit", net or _host("10.1.1.0/24", k_out), EXT_DST, svc, "outbound")]
        else:
            k_int += 1
            blocks[code] = [_Seed("permit", _host("10.1.2.0/24", k_int), _host("10.2.0.0/24", k_int), svc,
                                  "internal")]
    return blocks


def _check(params: SynthParams):
    bad = set(params.errors) - set(CODES)
    if bad:
        raise Unrealizable(f"unknown error codes: {', '.join(sorted(bad))}")
    if params.vendor not in (CHECKPOINT, PIX):
        raise Unrealizable(f"unknown vendor {params.vendor!r}")
    needs_dmz = any(c.startswith("d") for c in params.errors)
    n_itf = params.interfaces or (3 if needs_dmz else 2)
    if n_itf < 2:
        raise Unrealizable("need at least one external and one internal interface")
    if needs_dmz and n_itf < 3:
        raise Unrealizable("internal-traffic errors need two internal zones (>= 3 interfaces)")
    if params.target_fc < 1:
        raise Unrealizable("target FC must be >= 1")
    return n_itf


def generate_synthetic(params: SynthParams, registry: ServiceRegistry = DEFAULT_REGISTRY,
                       thresholds: Thresholds = Thresholds()) -> SyntheticConfig:
    """Build a config document whose audit is exactly ``params.errors``."""
    n_itf = _check(params)
    rng = random.Random(params.seed)
    blocks = _seeds(frozenset(params.errors), registry, thresholds)
    order = sorted(blocks)
    rng.shuffle(order)
    benign = _benign_ports(registry)
    if params.vendor == CHECKPOINT:
        return _checkpoint(params, n_itf, rng, [blocks[c] for c in order], benign)
    return _pix(params, n_itf, rng, [blocks[c] for c in order], benign, registry)


# -- Check Point style (FWN) ------------------------------------------------

def _svc_tokens(svc: ServiceSet) -> str:
    if svc.is_any(FULL):
        return "any"
    return str(svc)


def _checkpoint(params, n_itf, rng, blocks, benign) -> SyntheticConfig:
    n_seed = sum(len(b) for b in blocks)
    target = params.target_fc
    share = rng.uniform(0.3, 0.7)
    n_rules = max(n_seed, round(target * share / n_itf))
    n_obj = target - n_rules * n_itf
    if n_obj < 0:
        n_rules = max(n_seed, target // n_itf)
        n_obj = max(0, target - n_rules * n_itf)
    fc = fc_checkpoint(n_rules, n_itf, n_obj)
    if abs(fc - target) > 0.1 * target:
        raise Unrealizable(f"{n_seed} seeded rules on {n_itf} interfaces exceed FC {target}")

    lines = ["# synthetic rule-set", "meta vendor checkpoint",
             f"meta version {rng.choice(CHECKPOINT_VERSIONS)}",
             "interface ext0 zone external net 0.0.0.0/0",
             f"interface int0 zone internal:inside net {INSIDE}"]
    for k in range(1, n_itf - 1):
        net = DMZ if k == 1 else f"10.{k + 1}.0.0/16"
        lines.append(f"interface int{k} zone internal:{'dmz' if k == 1 else f'zone{k}'} net {net}")

    # filler objects: hosts, plus groups over earlier hosts
    objects = []
    for k in range(n_obj):
        if k >= 4 and rng.random() < 0.2:
            members = rng.sample(objects[: k], min(3, k))
            lines.append(f"group g{k} {','.join(members)}")
        else:
            lines.append(f"object h{k} 172.{16 + (k >> 16) % 16}.{(k >> 8) & 255}.{k & 255}")
        objects.append(f"h{k}" if lines[-1].startswith("object") else f"g{k}")

    seeded = []
    for blk in blocks:
        seeded.append([f"rule {s.action} src {s.src.replace('/32', '')} dst {s.dst.replace('/32', '')} "
                       f"svc {_svc_tokens(s.svc)}" for s in blk])
    filler = [_filler_fwn(rng, objects, benign) for _ in range(n_rules - n_seed)]
    lines.extend(_interleave(rng, seeded, filler))
    text = "\n".join(lines) + "\n"
    return SyntheticConfig(CHECKPOINT, text, frozenset(params.errors), fc, params.seed, ".fwn")


def _filler_fwn(rng, objects, benign) -> str:
    roll = rng.random()
    src = rng.choice(objects) if objects and rng.random() < 0.5 else f"172.{rng.randint(16, 31)}.{rng.randint(0, 255)}.0/24"
    if roll < 0.1:
        return "natrule hide inside behind ext0"
    if roll < 0.13:
        # disabled rules count toward #Rules but never match
        return "rule permit src any dst any svc any disabled"
    if roll < 0.35 and benign:
        return (f"rule permit src {src} dst 10.1.200.{rng.randint(1, 254)} "
                f"svc tcp/{rng.choice(benign)}")
    dst = rng.choice(["any", f"10.1.{rng.randint(0, 255)}.0/24", f"203.0.113.{rng.randint(0, 255)}"])
    svc = rng.choice(["any", "tcp", "udp/53", "icmp", "telnet", "tcp/1000-3000"])
    return f"rule deny src {src} dst {dst} svc {svc}"


def _interleave(rng, blocks: list[list[str]], filler: list[str]) -> list[str]:
    # filler never overlaps seeded traffic, so any merge order is valid
    items = [("b", b) for b in blocks] + [("f", [f]) for f in filler]
    rng.shuffle(items)
    out = []
    for _, chunk in items:
        out.extend(chunk)
    return out


# -- Cisco PIX ----------------------------------------------------------------

def _mask(cidr: str) -> str:
    net = ipaddress.IPv4Network(cidr)
    if net.prefixlen == 32:
        return f"host {net.network_address}"
    if net.prefixlen == 0:
        return "any"
    return f"{net.network_address} {net.netmask}"


def _pix_acl_lines(acl: str, s: _Seed) -> list[str]:
    src, dst = _mask(s.src) if s.src != "any" else "any", _mask(s.dst) if s.dst != "any" else "any"
    head = f"access-list {acl} {s.action}"
    if s.svc.is_any(FULL):
        return [f"{head} ip {src} {dst}"]
    out = []
    for proto, ports in (("tcp", s.svc.tcp), ("udp", s.svc.udp)):
        for lo, hi in ports:
            if (lo, hi) == (0, 65535):
                out.append(f"{head} {proto} {src} {dst}")
            elif lo == hi:
                out.append(f"{head} {proto} {src} {dst} eq {lo}")
            else:
                out.append(f"{head} {proto} {src} {dst} range {lo} {hi}")
    for lo, hi in s.svc.other:
        for p in range(lo, hi + 1):
            out.append(f"{head} {'icmp' if p == 1 else p} {src} {dst}")
    return out


_BOILERPLATE = [
    "hostname synthfw",
    "domain-name example.net",
    "enable password 8Ry2YjIyt7RRXU24 encrypted",
    "passwd 2KFQnbNIdI.2KYOU encrypted",
    "fixup protocol ftp 21",
    "fixup protocol http 80",
    "fixup protocol smtp 25",
    "names",
    "pager lines 24",
    "logging on",
    "mtu outside 1500",
    "mtu inside 1500",
    "timeout xlate 3:00:00",
    "timeout conn 1:00:00 half-closed 0:10:00 udp 0:02:00",
    "no snmp-server location",
    "floodguard enable",
    "telnet timeout 5",
    "ssh timeout 5",
    "console timeout 0",
    "terminal width 80",
]


def _pix(params, n_itf, rng, blocks, benign, registry) -> SyntheticConfig:
    version = rng.choice(PIX_VERSIONS)
    block_style = version.startswith("7.")
    itfs = [("ethernet0", "outside", 0, "203.0.113.1 255.255.255.0"),
            ("ethernet1", "inside", 100, "10.1.0.1 255.255.0.0")]
    for k in range(1, n_itf - 1):
        name = "dmz" if k == 1 else f"zone{k}"
        itfs.append((f"ethernet{k + 1}", name, 50 - k if k < 50 else 1, f"10.{k + 1}.0.1 255.255.0.0"))

    head = [f"PIX Version {version}"]
    for hw, name, level, addr in itfs:
        if block_style:
            head += [f"interface {hw}", f" nameif {name}", f" security-level {level}", f" ip address {addr}", "!"]
        else:
            head.append(f"nameif {hw} {name} security{level}")
    if not block_style:
        for hw, _, _, _ in itfs:
            head.append(f"interface {hw} auto")
        for _, name, _, addr in itfs:
            head.append(f"ip address {name} {addr}")
    head += _BOILERPLATE

    inbound, inside = [], []
    for blk in blocks:
        target = inbound if blk[0].direction == "inbound" else inside
        target.append([ln for s in blk for ln in _pix_acl_lines("acl_out" if target is inbound else "acl_in", s)])
    tail = ["nat (inside) 1 0.0.0.0 0.0.0.0 0 0", "global (outside) 1 interface",
            "route outside 0.0.0.0 0.0.0.0 203.0.113.254 1", ": end"]

    if inside:
        tail.insert(0, "access-group acl_in in interface inside")
    # the outside list always exists; an explicit deny keeps it non-empty
    tail.insert(0, "access-group acl_out in interface outside")
    tail.insert(0, "access-list acl_out deny ip any any")
    fixed = len(head) + sum(len(b) for b in inbound) + sum(len(b) for b in inside) + len(tail)
    total = params.target_fc + PIX_BOILERPLATE_LINES
    spare = total - fixed
    if spare < 0:
        raise Unrealizable(f"seeded errors need {fixed} lines, more than FC {params.target_fc} allows")
    # spare lines: mostly filler ACL entries on the outside list, some aliases and comments
    filler_acl, names = [], []
    for k in range(spare):
        roll = rng.random()
        if roll < 0.15:
            names.append(f"name 172.{rng.randint(16, 31)}.{rng.randint(0, 255)}.{rng.randint(1, 254)} alias{k}")
        elif roll < 0.2:
            names.append("!")
        elif roll < 0.35 and benign:
            filler_acl.append(f"access-list acl_out permit tcp 172.{rng.randint(16, 31)}.{rng.randint(0, 255)}.0 "
                              f"255.255.255.0 host 10.1.200.{rng.randint(1, 254)} eq {rng.choice(benign)}")
        else:
            proto = rng.choice(["ip", "tcp", "udp", "icmp"])
            dst = rng.choice(["any", f"10.1.{rng.randint(0, 255)}.0 255.255.255.0", "host 203.0.113.9"])
            filler_acl.append(f"access-list acl_out deny {proto} 172.{rng.randint(16, 31)}."
                              f"{rng.randint(0, 255)}.0 255.255.255.0 {dst}")
    body = head + names + _interleave(rng, inbound, filler_acl) + [ln for b in inside for ln in b] + tail
    text = "\n".join(body) + "\n"
    fc = max(len(body) - PIX_BOILERPLATE_LINES, 1)
    return SyntheticConfig(PIX, text, frozenset(params.errors), fc, params.seed, ".pix")


# -- corpora ------------------------------------------------------------------

def realizable_codes(n_interfaces: int = 3) -> list[str]:
    return [c.code for c in CATALOGUE if n_interfaces >= 3 or not c.code.startswith("d")]


def synthetic_corpus(n: int, seed: int = 0, vendors=(CHECKPOINT, PIX), fc_range=(30, 5000),
                     slope: float = 8.0, intercept: float = -10.0, noise: float = 1.0,
                     vendor_offset: dict | None = None, registry: ServiceRegistry = DEFAULT_REGISTRY):
    """Configs whose error counts follow slope*log10(fc)+intercept (+noise).

    ``vendor_offset`` shifts the expected count per vendor, e.g.
    ``{"pix": -5}``.
    """
    rng = random.Random(seed)
    vendor_offset = vendor_offset or {}
    codes = realizable_codes(3)
    out = []
    lo, hi = math.log10(fc_range[0]), math.log10(fc_range[1])
    for i in range(n):
        vendor = vendors[i % len(vendors)]
        fc = round(10 ** rng.uniform(lo, hi))
        want = slope * math.log10(fc) + intercept + vendor_offset.get(vendor, 0.0) + rng.gauss(0, noise)
        k = min(max(round(want), 0), len(codes))
        labels = frozenset(rng.sample(codes, k))
        for _ in range(50):
            try:
                cfg = generate_synthetic(SynthParams(vendor, fc, labels, seed * 100003 + i), registry)
                break
            except Unrealizable:
                fc = int(fc * 1.5) + 10
        else:
            raise Unrealizable(f"could not realize corpus item {i}")
        out.append((f"synth{i:04d}", cfg))
    return out
