"""Named services and the parser for service tokens.

A token is one of ``any``, ``tcp``, ``tcp/<port>``, ``tcp/<lo>-<hi>``,
``udp/...``, ``icmp``, ``proto/<n>`` or a name known to the registry.
"""

from __future__ import annotations

import os
from typing import Mapping

from .errors import ParseError
from .netmodel import FULL, ServiceSet, Universe

REGISTRY_ENV = "FWAUDIT_REGISTRY"

# Conventional well-known ports.  Override with a registry document.
_DEFAULT_SPECS = {
    "telnet": "tcp/23",
    "rpc": "tcp/111,udp/111",
    "snmp": "udp/161-162",
    "microsoft": "tcp/135,tcp/137-139,tcp/445,udp/135,udp/137-139,udp/445",
    "http": "tcp/80",
    "smtp": "tcp/25",
    "dns-udp": "udp/53",
    "dns-tcp": "tcp/53",
    "ftp": "tcp/21",
    "x11": "tcp/6000-6010",
    "tftp": "udp/69",
    "mssql": "tcp/1433-1434,udp/1434",
    "p2p": "tcp/1214,tcp/4661-4662,tcp/6346-6347,tcp/8888,udp/4665,udp/6346-6347",
    "im": "tcp/1863,tcp/5050,tcp/5190",
    "database": "tcp/1521,tcp/3306,tcp/5432",
    "version-control": "tcp/2401,tcp/3690",
    "pop3": "tcp/110",
    "irc": "tcp/6660-6669,tcp/6697,tcp/7000",
    "icmp": "icmp",
    # convenience names, not tied to any error code
    "dns": "udp/53,tcp/53",
    "ssh": "tcp/22",
    "https": "tcp/443",
}


def _port(text: str, universe: Universe) -> int:
    if not text.isdigit():
        raise ValueError(f"bad port {text!r}")
    p = int(text)
    if p > universe.port_max:
        raise ValueError(f"port {p} out of range")
    return p


def parse_service_token(
    token: str,
    registry: "ServiceRegistry | None" = None,
    universe: Universe = FULL,
) -> ServiceSet:
    """Turn one service token into a ServiceSet.  Raises ValueError."""
    tok = token.strip().lower()
    if not tok:
        raise ValueError("empty service token")
    if tok == "any":
        return ServiceSet.any(universe)
    if tok == "icmp":
        return ServiceSet.icmp()
    head, _, rest = tok.partition("/")
    if head in ("tcp", "udp"):
        if rest in ("", "any"):
            lo, hi = 0, universe.port_max
        elif "-" in rest:
            a, b = rest.split("-", 1)
            lo, hi = _port(a, universe), _port(b, universe)
            if lo > hi:
                raise ValueError(f"empty port range {token!r}")
        else:
            lo = hi = _port(rest, universe)
        return ServiceSet.tcp_ports((lo, hi)) if head == "tcp" else ServiceSet.udp_ports((lo, hi))
    if head == "proto" and rest:
        if not rest.isdigit():
            raise ValueError(f"bad protocol number {rest!r}")
        return ServiceSet.protocol(int(rest), universe)
    if registry is not None and tok in registry:
        return registry[tok]
    raise ValueError(f"unknown service {token!r}")


def parse_service_list(text: str, registry=None, universe: Universe = FULL) -> ServiceSet:
    out = ServiceSet()
    for tok in text.split(","):
        out = out | parse_service_token(tok, registry, universe)
    return out


class ServiceRegistry(Mapping[str, ServiceSet]):
    """Read-only mapping from service name to ServiceSet."""

    def __init__(self, entries: Mapping[str, ServiceSet]):
        self._entries = {k.lower(): v for k, v in entries.items()}
        for name, svc in self._entries.items():
            if svc.is_empty():
                raise ValueError(f"service {name!r} is empty")

    def __getitem__(self, name):
        return self._entries[name.lower()]

    def __contains__(self, name):
        return isinstance(name, str) and name.lower() in self._entries

    def __iter__(self):
        return iter(sorted(self._entries))

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"ServiceRegistry({len(self)} services)"

    def with_overrides(self, entries: Mapping[str, ServiceSet]) -> "ServiceRegistry":
        merged = dict(self._entries)
        merged.update({k.lower(): v for k, v in entries.items()})
        return ServiceRegistry(merged)

    @classmethod
    def from_specs(cls, specs: Mapping[str, str], universe: Universe = FULL) -> "ServiceRegistry":
        return cls({k: parse_service_list(v, None, universe) for k, v in specs.items()})


DEFAULT_REGISTRY = ServiceRegistry.from_specs(_DEFAULT_SPECS)


def parse_registry(text: str, base: ServiceRegistry = DEFAULT_REGISTRY, source=None,
                   universe: Universe = FULL) -> ServiceRegistry:
    """Apply a registry document (``service <name> <token>[,...]`` lines).

    Names listed in the document replace the base entry; repeated lines for
    the same name accumulate.
    """
    found: dict[str, ServiceSet] = {}
    for n, raw in enumerate(text.split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "service" or len(parts) != 3:
            raise ParseError("expected 'service <name> <proto>/<ports>[,...]'", n, 1, source)
        name = parts[1].lower()
        try:
            svc = parse_service_list(parts[2], None, universe)
        except ValueError as exc:
            col = raw.find(parts[2]) + 1
            raise ParseError(str(exc), n, col, source) from None
        found[name] = found.get(name, ServiceSet()) | svc
    return base.with_overrides(found)


def load_registry(path=None, env: Mapping[str, str] | None = None) -> ServiceRegistry:
    """Load the registry at ``path``, else ``$FWAUDIT_REGISTRY``, else defaults."""
    env = os.environ if env is None else env
    path = path or env.get(REGISTRY_ENV)
    if not path:
        return DEFAULT_REGISTRY
    with open(path, encoding="utf-8") as fh:
        return parse_registry(fh.read(), source=path)
