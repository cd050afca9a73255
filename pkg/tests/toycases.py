"""Random small rule-sets in the toy universe, rendered for both the package
and the brute-force oracle."""

from __future__ import annotations

import dataclasses
import random

from fwaudit.audit import Thresholds
from fwaudit.fwn import parse_fwn
from fwaudit.netmodel import Universe
from fwaudit.registry import ServiceRegistry

from oracle import TOY_ADDRESS_THRESHOLD, TOY_PORT_THRESHOLD, TOY_REGISTRY, ToyCase, ToyRule

TOY = Universe(6, 6)
TOY_REG = ServiceRegistry.from_specs(TOY_REGISTRY, TOY)
TOY_THRESHOLDS = Thresholds(address=TOY_ADDRESS_THRESHOLD, port=TOY_PORT_THRESHOLD)

_SERVICES = [
    "any", "tcp", "udp", "icmp", "proto/47", "proto/6", "tcp/23", "tcp/8", "tcp/0-63", "tcp/5-30",
    "tcp/20-45", "udp/53", "udp/10-20", "udp/0-63", "tcp/53", *TOY_REGISTRY,
]


def _ip(n: int) -> str:
    return f"0.0.0.{n}"


def _addr_token(rng: random.Random, names) -> str:
    roll = rng.random()
    if roll < 0.2:
        return "any"
    if roll < 0.3 and names:
        return rng.choice(names)
    if roll < 0.5:
        a = rng.randrange(64)
        b = rng.randrange(a, min(64, a + 24))
        return f"{_ip(a)}-{_ip(b)}"
    plen = rng.choice([26, 27, 28, 29, 30, 32])
    size = 1 << (32 - plen)
    return f"{_ip(rng.randrange(64 // size) * size)}/{plen}"


def random_case(rng: random.Random, max_rules: int = 10, bindings: bool | None = None) -> ToyCase:
    # zones: one or two internal /27../29 blocks, everything else external
    size = rng.choice([8, 16])
    plen = 32 - (size.bit_length() - 1)
    nets = [f"{_ip(start)}/{plen}" for start in rng.sample(range(0, 64, size), 2)]
    interfaces = {"ext": ("external", ["0.0.0.0/26"] if rng.random() < 0.5 else []),
                  "in1": ("internal:a", [nets[0]])}
    if rng.random() < 0.6:
        interfaces["in2"] = ("internal:b", [nets[1]])
    objects, names = {}, []
    for k in range(rng.randrange(4)):
        name = f"obj{k}"
        if names and rng.random() < 0.3:
            objects[name] = tuple(rng.sample(names, min(2, len(names))))
        else:
            tok = "any"
            while tok == "any":
                tok = _addr_token(rng, [])
            objects[name] = (tok,)
        names.append(name)
    if bindings is None:
        bindings = rng.random() < 0.3
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        rules.append(ToyRule(
            "permit" if rng.random() < 0.7 else "deny",
            tuple(_addr_token(rng, names) for _ in range(rng.choice([1, 1, 2]))),
            tuple(_addr_token(rng, names) for _ in range(rng.choice([1, 1, 2]))),
            tuple(rng.choice(_SERVICES) for _ in range(rng.choice([1, 1, 2, 3]))),
            enabled=rng.random() > 0.1,
            binding=(rng.choice(sorted(interfaces)), rng.choice(["in", "out"])) if bindings else None,
        ))
    return ToyCase(interfaces, rules, objects)


def render(case: ToyCase) -> str:
    out = ["meta vendor checkpoint"]
    for name, (zone, cidrs) in case.interfaces.items():
        out.append(f"interface {name} zone {zone}" + (f" net {','.join(cidrs)}" if cidrs else ""))
    for name, toks in case.objects.items():
        if all(t in case.objects for t in toks):
            out.append(f"group {name} {','.join(toks)}")
        else:
            out.append(f"object {name} {','.join(toks)}")
    for r in case.rules:
        line = f"rule {r.action} src {','.join(r.src)} dst {','.join(r.dst)} svc {','.join(r.svc)}"
        out.append(line + ("" if r.enabled else " disabled"))
    return "\n".join(out) + "\n"


def to_config(case: ToyCase):
    cfg = parse_fwn(render(case), "toy", TOY_REG, TOY)
    if any(r.binding for r in case.rules):
        rules = tuple(
            dataclasses.replace(r, interface=t.binding[0], direction=t.binding[1]) if t.binding else r
            for r, t in zip(cfg.rules, case.rules)
        )
        cfg = dataclasses.replace(cfg, rules=rules)
    return cfg
