"""Exact set algebra over IPv4 addresses, services and packet regions.

Everything here is immutable.  Interval sets are kept canonical (sorted,
disjoint, non-adjacent) and packet regions are unions of pairwise disjoint
four dimensional boxes (src, dst, protocol, destination port).

Protocols without ports (ICMP, GRE, ...) always carry port 0, so a packet
is fully described by ``(src, dst, proto, port)``.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

TCP = 6
UDP = 17
ICMP = 1
PROTO_MAX = 255

Interval = tuple[int, int]


@dataclass(frozen=True)
class Universe:
    """Width of the address and port axes.

    The default is real IPv4 (32-bit addresses, 16-bit ports).  Tests use
    small universes so that every packet can be enumerated.
    """

    addr_bits: int = 32
    port_bits: int = 16

    @property
    def addr_max(self) -> int:
        return (1 << self.addr_bits) - 1

    @property
    def port_max(self) -> int:
        return (1 << self.port_bits) - 1

    def all_addresses(self) -> "AddressSet":
        return AddressSet([(0, self.addr_max)])

    def all_ports(self) -> "IntervalSet":
        return IntervalSet([(0, self.port_max)])

    def any_service(self) -> "ServiceSet":
        return ServiceSet.any(self)


FULL = Universe()


def _canonical(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    ivs = sorted((int(lo), int(hi)) for lo, hi in intervals if lo <= hi)
    out: list[list[int]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1] + 1:
            if hi > out[-1][1]:
                out[-1][1] = hi
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


class IntervalSet:
    """A canonical set of integers stored as inclusive intervals."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        object.__setattr__(self, "intervals", _canonical(intervals))

    def __setattr__(self, name, value):
        raise AttributeError("interval sets are immutable")

    @classmethod
    def _raw(cls, intervals: tuple[Interval, ...]):
        obj = cls.__new__(cls)
        object.__setattr__(obj, "intervals", intervals)
        return obj

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self):
        return hash((IntervalSet, self.intervals))

    def __repr__(self):
        body = ", ".join(f"{lo}-{hi}" if lo != hi else str(lo) for lo, hi in self.intervals)
        return f"{type(self).__name__}([{body}])"

    def __bool__(self):
        return bool(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __contains__(self, value: int) -> bool:
        for lo, hi in self.intervals:
            if value < lo:
                return False
            if value <= hi:
                return True
        return False

    def is_empty(self) -> bool:
        return not self.intervals

    def cardinality(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def union(self, other: IntervalSet):
        return type(self)(self.intervals + other.intervals)

    def intersect(self, other: IntervalSet):
        a, b = self.intervals, other.intervals
        out = []
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return type(self)._raw(tuple(out))

    def complement(self, lo: int, hi: int):
        """Complement relative to the interval ``[lo, hi]``."""
        out = []
        cur = lo
        for a, b in self.intervals:
            if b < lo or a > hi:
                continue
            if a > cur:
                out.append((cur, a - 1))
            cur = max(cur, b + 1)
        if cur <= hi:
            out.append((cur, hi))
        return type(self)._raw(tuple(out))

    def subtract(self, other: IntervalSet):
        if not self.intervals or not other.intervals:
            return self
        lo = self.intervals[0][0]
        hi = self.intervals[-1][1]
        return self.intersect(other.complement(lo, hi))

    def issubset(self, other: IntervalSet) -> bool:
        return self.subtract(other).is_empty()

    __or__ = union
    __and__ = intersect
    __sub__ = subtract


class AddressSet(IntervalSet):
    """Canonical set of IPv4 addresses (as unsigned 32-bit integers)."""

    __slots__ = ()

    @classmethod
    def parse(cls, text: str) -> "AddressSet":
        """Parse ``a.b.c.d``, ``a.b.c.d/n`` or ``a.b.c.d-e.f.g.h``."""
        text = text.strip()
        if "-" in text:
            first, last = text.split("-", 1)
            lo = int(ipaddress.IPv4Address(first.strip()))
            hi = int(ipaddress.IPv4Address(last.strip()))
            if lo > hi:
                raise ValueError(f"empty address range {text!r}")
            return cls([(lo, hi)])
        net = ipaddress.IPv4Network(text, strict=True)
        return cls([(int(net.network_address), int(net.broadcast_address))])

    @classmethod
    def from_cidrs(cls, cidrs: Iterable[str]) -> "AddressSet":
        out = cls()
        for c in cidrs:
            out = out | cls.parse(c)
        return out

    def to_cidrs(self) -> list[str]:
        nets = []
        for lo, hi in self.intervals:
            nets.extend(
                str(n)
                for n in ipaddress.summarize_address_range(
                    ipaddress.IPv4Address(lo), ipaddress.IPv4Address(hi)
                )
            )
        return nets


PortSet = IntervalSet


def _proto_set(protos: Iterable[Interval]) -> IntervalSet:
    # TCP and UDP live on their own port axes
    return IntervalSet(protos).subtract(IntervalSet([(TCP, TCP), (UDP, UDP)]))


@dataclass(frozen=True)
class ServiceSet:
    """Set of (protocol, destination port) pairs.

    ``tcp`` and ``udp`` hold port sets; ``other`` holds protocol numbers of
    port-less protocols (ICMP included).
    """

    tcp: IntervalSet = IntervalSet()
    udp: IntervalSet = IntervalSet()
    other: IntervalSet = IntervalSet()

    def __post_init__(self):
        if TCP in self.other or UDP in self.other:
            raise ValueError("TCP and UDP belong in the port sets, not in 'other'")

    @classmethod
    def any(cls, universe: Universe = FULL) -> "ServiceSet":
        ports = universe.all_ports()
        return cls(ports, ports, _proto_set([(0, PROTO_MAX)]))

    @classmethod
    def tcp_ports(cls, *ranges: Interval) -> "ServiceSet":
        return cls(tcp=IntervalSet(ranges))

    @classmethod
    def udp_ports(cls, *ranges: Interval) -> "ServiceSet":
        return cls(udp=IntervalSet(ranges))

    @classmethod
    def protocol(cls, number: int, universe: Universe = FULL) -> "ServiceSet":
        if not 0 <= number <= PROTO_MAX:
            raise ValueError(f"protocol number out of range: {number}")
        if number == TCP:
            return cls(tcp=universe.all_ports())
        if number == UDP:
            return cls(udp=universe.all_ports())
        return cls(other=IntervalSet([(number, number)]))

    @classmethod
    def icmp(cls) -> "ServiceSet":
        return cls(other=IntervalSet([(ICMP, ICMP)]))

    def union(self, o: ServiceSet) -> ServiceSet:
        return ServiceSet(self.tcp | o.tcp, self.udp | o.udp, self.other | o.other)

    def intersect(self, o: ServiceSet) -> ServiceSet:
        return ServiceSet(self.tcp & o.tcp, self.udp & o.udp, self.other & o.other)

    def subtract(self, o: ServiceSet) -> ServiceSet:
        return ServiceSet(self.tcp - o.tcp, self.udp - o.udp, self.other - o.other)

    __or__ = union
    __and__ = intersect
    __sub__ = subtract

    def is_empty(self) -> bool:
        return not (self.tcp or self.udp or self.other)

    def contains(self, proto: int, port: int = 0) -> bool:
        if proto == TCP:
            return port in self.tcp
        if proto == UDP:
            return port in self.udp
        return port == 0 and proto in self.other

    def is_any(self, universe: Universe = FULL) -> bool:
        return self == ServiceSet.any(universe)

    def covers_all_tcp(self, universe: Universe = FULL) -> bool:
        return universe.all_ports().issubset(self.tcp)

    def covers_all_udp(self, universe: Universe = FULL) -> bool:
        return universe.all_ports().issubset(self.udp)

    def has_tcp(self) -> bool:
        return bool(self.tcp)

    def has_udp(self) -> bool:
        return bool(self.udp)

    def cells(self) -> list[tuple[Interval, Interval]]:
        """(protocol interval, port interval) boxes covering this set."""
        out = [((TCP, TCP), iv) for iv in self.tcp]
        out += [((UDP, UDP), iv) for iv in self.udp]
        out += [(iv, (0, 0)) for iv in self.other]
        return out

    def cardinality(self) -> int:
        return self.tcp.cardinality() + self.udp.cardinality() + self.other.cardinality()

    def __str__(self):
        parts = []
        for name, ports in (("tcp", self.tcp), ("udp", self.udp)):
            for lo, hi in ports:
                parts.append(f"{name}/{lo}" if lo == hi else f"{name}/{lo}-{hi}")
        for lo, hi in self.other:
            if lo == hi == ICMP:
                parts.append("icmp")
            else:
                parts.append(f"proto/{lo}" if lo == hi else f"proto/{lo}-{hi}")
        return ",".join(parts) or "none"


# A box is a flat 8-tuple: src lo/hi, dst lo/hi, proto lo/hi, port lo/hi.
Box = tuple[int, int, int, int, int, int, int, int]


def _box_intersect(a: Box, b: Box) -> Box | None:
    out = []
    for k in (0, 2, 4, 6):
        lo = a[k] if a[k] > b[k] else b[k]
        hi = a[k + 1] if a[k + 1] < b[k + 1] else b[k + 1]
        if lo > hi:
            return None
        out.append(lo)
        out.append(hi)
    return tuple(out)  # type: ignore[return-value]


def _subtract_plain(pieces: list[Box], others: Sequence[Box]) -> list[Box]:
    for b in others:
        if not pieces:
            break
        nxt: list[Box] = []
        for a in pieces:
            if (
                a[0] > b[1] or a[1] < b[0] or a[2] > b[3] or a[3] < b[2]
                or a[4] > b[5] or a[5] < b[4] or a[6] > b[7] or a[7] < b[6]
            ):
                nxt.append(a)
            else:
                nxt.extend(_box_subtract(a, b))
        pieces = nxt
    return pieces


def _subtract_many(cells, others, chunk: int = 32) -> list[Box]:
    """Same result as the plain loop.  Boxes of ``others`` are taken a chunk
    at a time; a vectorized overlap test leaves untouched pieces alone so a
    heavily fragmented region is not rescanned in Python for every box."""
    arr = np.array(cells, dtype=np.int64).reshape(-1, 8)
    for start in range(0, len(others), chunk):
        if not len(arr):
            break
        part = others[start:start + chunk]
        c = np.array(part, dtype=np.int64)
        hit = ((arr[:, None, 0::2] <= c[None, :, 1::2]) & (arr[:, None, 1::2] >= c[None, :, 0::2])).all(axis=2)
        rows = hit.any(axis=1)
        if not rows.any():
            continue
        touched = [tuple(int(v) for v in arr[k]) for k in np.flatnonzero(rows)]
        new = _subtract_plain(touched, part)
        arr = arr[~rows]
        if new:
            arr = np.vstack([arr, np.array(new, dtype=np.int64)])
    return [tuple(int(v) for v in row) for row in arr]


def _box_subtract(a: Box, b: Box) -> list[Box]:
    """Split ``a - b`` into at most eight disjoint boxes."""
    if _box_intersect(a, b) is None:
        return [a]
    out: list[Box] = []
    cur = list(a)
    for k in (0, 2, 4, 6):
        lo, hi = cur[k], cur[k + 1]
        if lo < b[k]:
            piece = cur.copy()
            piece[k + 1] = b[k] - 1
            out.append(tuple(piece))  # type: ignore[arg-type]
            cur[k] = b[k]
        if hi > b[k + 1]:
            piece = cur.copy()
            piece[k] = b[k + 1] + 1
            out.append(tuple(piece))  # type: ignore[arg-type]
            cur[k + 1] = b[k + 1]
    return out


def _box_size(b: Box) -> int:
    n = 1
    for k in (0, 2, 4, 6):
        n *= b[k + 1] - b[k] + 1
    return n


_AXES = {"src": 0, "dst": 2}


class PacketRegion:
    """Union of pairwise disjoint packet boxes.

    Equality is by membership, not by representation.
    """

    __slots__ = ("cells",)

    def __init__(self, cells: Iterable[Box] = ()):
        # callers inside this module guarantee disjointness
        object.__setattr__(self, "cells", tuple(cells))

    def __setattr__(self, name, value):
        raise AttributeError("regions are immutable")

    @classmethod
    def empty(cls) -> PacketRegion:
        return cls()

    @classmethod
    def from_sets(cls, src: IntervalSet, dst: IntervalSet, svc: ServiceSet) -> PacketRegion:
        cells = [
            (s[0], s[1], d[0], d[1], p[0], p[1], q[0], q[1])
            for s in src
            for d in dst
            for p, q in svc.cells()
        ]
        return cls(cells)

    @classmethod
    def from_boxes(cls, boxes: Iterable[Sequence[int]]) -> PacketRegion:
        """Build from possibly overlapping boxes."""
        out = cls()
        for b in boxes:
            b = tuple(int(x) for x in b)
            if any(b[k] > b[k + 1] for k in (0, 2, 4, 6)):
                continue
            out = out.union(cls([b]))  # type: ignore[list-item]
        return out

    def __repr__(self):
        return f"PacketRegion({len(self.cells)} cells, {self.cardinality()} packets)"

    def __bool__(self):
        return bool(self.cells)

    def is_empty(self) -> bool:
        return not self.cells

    def contains(self, src: int, dst: int, proto: int, port: int = 0) -> bool:
        pkt = (src, dst, proto, port)
        for c in self.cells:
            if all(c[2 * k] <= pkt[k] <= c[2 * k + 1] for k in range(4)):
                return True
        return False

    def cardinality(self) -> int:
        return sum(_box_size(c) for c in self.cells)

    def subtract(self, other: PacketRegion) -> PacketRegion:
        if len(self.cells) * len(other.cells) > 20000:
            return PacketRegion(_subtract_many(self.cells, other.cells))
        return PacketRegion(_subtract_plain(list(self.cells), other.cells))

    def intersect(self, other: PacketRegion) -> PacketRegion:
        out = []
        for a in self.cells:
            for b in other.cells:
                c = _box_intersect(a, b)
                if c is not None:
                    out.append(c)
        return PacketRegion(out)

    def union(self, other: PacketRegion) -> PacketRegion:
        if not self.cells:
            return other
        return PacketRegion(self.cells + other.subtract(self).cells)

    __or__ = union
    __and__ = intersect
    __sub__ = subtract

    def issubset(self, other: PacketRegion) -> bool:
        return self.subtract(other).is_empty()

    def __eq__(self, other):
        if not isinstance(other, PacketRegion):
            return NotImplemented
        return self.issubset(other) and other.issubset(self)

    __hash__ = None  # type: ignore[assignment]

    def project(self, axis: str) -> IntervalSet:
        """Values taken on ``axis`` (src, dst, tcp_ports or udp_ports)."""
        if axis in _AXES:
            k = _AXES[axis]
            return AddressSet((c[k], c[k + 1]) for c in self.cells)
        if axis in ("tcp_ports", "udp_ports"):
            proto = TCP if axis == "tcp_ports" else UDP
            return IntervalSet((c[6], c[7]) for c in self.cells if c[4] <= proto <= c[5])
        raise ValueError(f"unknown axis {axis!r}")


def disjoint_union(regions: Iterable[PacketRegion]) -> PacketRegion:
    """Concatenate regions already known to be pairwise disjoint."""
    cells: list[Box] = []
    for r in regions:
        cells.extend(r.cells)
    return PacketRegion(cells)
