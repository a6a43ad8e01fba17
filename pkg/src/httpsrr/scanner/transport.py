"""DNS query transports: a zone-backed mock and a real UDP/TCP client.

The mock answers like an authoritative server by default (it returns CNAME
records without chasing them), which lets the scanner's own re-query logic
be exercised offline.  The UDP transport speaks enough of the DNS wire
protocol for this scanner: EDNS0 with the DO bit, compression-aware name
decoding, and TCP fallback on truncation.
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .. import rr
from ..simnet import ZoneStore

QTYPE_CODES = {
    "A": 1, "NS": 2, "CNAME": 5, "SOA": 6, "AAAA": 28,
    "DS": 43, "RRSIG": 46, "SVCB": 64, "HTTPS": 65,
}
_CODE_TO_QTYPE = {v: k for k, v in QTYPE_CODES.items()}

EDNS_PAYLOAD = 1232


class TransportError(Exception):
    pass


class TransportTimeout(TransportError):
    pass


@dataclass(frozen=True)
class DnsAnswer:
    name: str
    qtype: str
    ttl: int
    data: object  # HttpsRecord | str | bytes (unparsed rdata)


@dataclass
class DnsResponse:
    rcode: str            # "NOERROR" | "NXDOMAIN" | "SERVFAIL" | ...
    answers: list[DnsAnswer]
    ad: bool
    resolver: str


class DnsTransport(Protocol):
    def query(self, resolver: str, qname: str, qtype: str, *,
              dnssec_ok: bool = True, timeout: float = 2.0) -> DnsResponse: ...


# ---------------------------------------------------------------------------
# Mock transport

@dataclass
class _FailureRule:
    mode: str                       # "timeout" | "servfail"
    resolver: Optional[str] = None  # None matches any
    qname: Optional[str] = None
    qtype: Optional[str] = None
    remaining: Optional[int] = None  # None = forever

    def matches(self, resolver: str, qname: str, qtype: str) -> bool:
        if self.remaining == 0:
            return False
        if self.resolver is not None and self.resolver != resolver:
            return False
        if self.qname is not None and rr.normalize_name(self.qname) != qname:
            return False
        if self.qtype is not None and self.qtype != qtype:
            return False
        return True


class MockTransport:
    """Zone-backed transport with scriptable failures and a query log.

    ``chase_cname=False`` (the default) mimics an authoritative server: a
    name bearing a CNAME answers with just that CNAME, and the caller must
    re-query at the target.  ``chase_cname=True`` behaves like a recursive
    resolver and returns the whole chain plus the final RRset.
    """

    def __init__(self, zone: ZoneStore, *, chase_cname: bool = False,
                 nxdomain_names: tuple[str, ...] = (),
                 raw_https: Optional[dict[str, list[tuple[bytes, int]]]] = None,
                 clock: Callable[[], float] = time.monotonic):
        self.zone = zone
        self.chase_cname = chase_cname
        self.nxdomain = {rr.normalize_name(n) for n in nxdomain_names}
        self.raw_https = {rr.normalize_name(k): v
                          for k, v in (raw_https or {}).items()}
        self.clock = clock
        self.query_log: list[tuple[float, str, str, str]] = []
        self.failures: list[_FailureRule] = []

    def add_failure(self, mode: str, *, resolver: Optional[str] = None,
                    qname: Optional[str] = None, qtype: Optional[str] = None,
                    count: Optional[int] = None):
        self.failures.append(_FailureRule(mode=mode, resolver=resolver,
                                          qname=qname, qtype=qtype,
                                          remaining=count))

    def _name_exists(self, name: str) -> bool:
        if name in self.raw_https:
            return True
        return any(self.zone.lookup(name, qtype)
                   for qtype in ("HTTPS", "A", "AAAA", "CNAME", "NS", "SOA"))

    def query(self, resolver: str, qname: str, qtype: str, *,
              dnssec_ok: bool = True, timeout: float = 2.0) -> DnsResponse:
        name = rr.normalize_name(qname)
        self.query_log.append((self.clock(), resolver, name, qtype))

        for rule in self.failures:
            if rule.matches(resolver, name, qtype):
                if rule.remaining is not None:
                    rule.remaining -= 1
                if rule.mode == "timeout":
                    raise TransportTimeout(f"{resolver}: {name} {qtype}")
                return DnsResponse(rcode="SERVFAIL", answers=[], ad=False,
                                   resolver=resolver)

        if name in self.nxdomain:
            return DnsResponse(rcode="NXDOMAIN", answers=[], ad=False,
                               resolver=resolver)

        answers: list[DnsAnswer] = []
        current = name
        for _ in range(9):
            cnames = self.zone.lookup(current, "CNAME")
            if cnames and qtype != "CNAME":
                target, ttl = cnames[0]
                answers.append(DnsAnswer(current, "CNAME", ttl, target))
                if not self.chase_cname:
                    break
                current = target
                continue
            answers.extend(self._answers_at(current, qtype, dnssec_ok))
            break

        if not answers and not self._name_exists(current):
            return DnsResponse(rcode="NXDOMAIN", answers=[], ad=False,
                               resolver=resolver)
        ad = self.zone.flags(current).ad_bit
        return DnsResponse(rcode="NOERROR", answers=answers, ad=ad,
                           resolver=resolver)

    def _answers_at(self, name: str, qtype: str, dnssec_ok: bool) -> list[DnsAnswer]:
        out: list[DnsAnswer] = []
        if qtype == "HTTPS" and name in self.raw_https:
            for blob, ttl in self.raw_https[name]:
                out.append(DnsAnswer(name, "HTTPS", ttl, blob))
        elif qtype == "HTTPS":
            for record in self.zone.lookup(name, "HTTPS"):
                out.append(DnsAnswer(name, "HTTPS", record.ttl, record))
        elif qtype == "DS":
            if self.zone.flags(name).ds_present:
                out.append(DnsAnswer(name, "DS", 300, "ds"))
        else:
            for value, ttl in self.zone.lookup(name, qtype):
                out.append(DnsAnswer(name, qtype, ttl, value))
        if out and dnssec_ok and qtype in self.zone.flags(name).rrsig_types:
            ttl = out[0].ttl
            out.append(DnsAnswer(name, "RRSIG", ttl, qtype))
        return out


# ---------------------------------------------------------------------------
# Wire codec + UDP transport

_RCODES = {0: "NOERROR", 1: "FORMERR", 2: "SERVFAIL", 3: "NXDOMAIN",
           4: "NOTIMP", 5: "REFUSED"}


def build_query(qname: str, qtype: str, *, txid: int,
                dnssec_ok: bool = True) -> bytes:
    flags = 0x0100  # RD
    header = struct.pack("!HHHHHH", txid, flags, 1, 0, 0, 1 if dnssec_ok else 0)
    question = rr.encode_name(rr.normalize_name(qname))
    question += struct.pack("!HH", QTYPE_CODES[qtype], 1)
    msg = header + question
    if dnssec_ok:
        # Root-name OPT pseudo-record carrying the payload size and DO bit.
        msg += b"\x00" + struct.pack("!HHIH", 41, EDNS_PAYLOAD, 0x00008000, 0)
    return msg


def decode_name(msg: bytes, offset: int) -> tuple[str, int]:
    """Decode a possibly-compressed name; returns (name, next_offset)."""
    labels: list[str] = []
    jumps = 0
    next_offset = None
    pos = offset
    while True:
        if pos >= len(msg):
            raise TransportError("name runs past message end")
        length = msg[pos]
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(msg):
                raise TransportError("truncated compression pointer")
            pointer = ((length & 0x3F) << 8) | msg[pos + 1]
            if next_offset is None:
                next_offset = pos + 2
            jumps += 1
            if jumps > 64:
                raise TransportError("compression loop")
            if pointer >= pos:
                raise TransportError("forward compression pointer")
            pos = pointer
            continue
        if length & 0xC0:
            raise TransportError(f"bad label length byte {length:#x}")
        pos += 1
        if length == 0:
            break
        if pos + length > len(msg):
            raise TransportError("label runs past message end")
        labels.append(msg[pos:pos + length].decode("latin-1"))
        pos += length
    name = ".".join(labels) + "." if labels else "."
    return rr.normalize_name(name), next_offset if next_offset is not None else pos


def _decode_rdata(msg: bytes, qtype_code: int, start: int, rdlen: int):
    qtype = _CODE_TO_QTYPE.get(qtype_code)
    blob = msg[start:start + rdlen]
    if qtype == "A" and rdlen == 4:
        return "A", socket.inet_ntop(socket.AF_INET, blob)
    if qtype == "AAAA" and rdlen == 16:
        return "AAAA", socket.inet_ntop(socket.AF_INET6, blob)
    if qtype in ("CNAME", "NS"):
        name, _ = decode_name(msg, start)
        return qtype, name
    if qtype in ("HTTPS", "SVCB"):
        try:
            return qtype, rr.parse_wire(blob, rrtype=qtype)
        except rr.RecordParseError:
            return qtype, blob
    if qtype == "RRSIG" and rdlen >= 2:
        covered = struct.unpack("!H", blob[:2])[0]
        return "RRSIG", _CODE_TO_QTYPE.get(covered, f"TYPE{covered}")
    if qtype == "DS":
        return "DS", blob.hex()
    if qtype == "SOA":
        return "SOA", blob.hex()
    return qtype or f"TYPE{qtype_code}", blob


def parse_response(msg: bytes, resolver: str = "") -> DnsResponse:
    if len(msg) < 12:
        raise TransportError("short DNS message")
    _txid, flags, qdcount, ancount, _ns, _ar = struct.unpack("!HHHHHH", msg[:12])
    rcode = _RCODES.get(flags & 0x000F, f"RCODE{flags & 0x000F}")
    ad = bool(flags & 0x0020)
    truncated = bool(flags & 0x0200)
    if truncated:
        raise _Truncated()
    pos = 12
    for _ in range(qdcount):
        _, pos = decode_name(msg, pos)
        pos += 4
    answers: list[DnsAnswer] = []
    for _ in range(ancount):
        name, pos = decode_name(msg, pos)
        if pos + 10 > len(msg):
            raise TransportError("truncated answer header")
        qtype_code, _qclass, ttl, rdlen = struct.unpack(
            "!HHIH", msg[pos:pos + 10])
        pos += 10
        if pos + rdlen > len(msg):
            raise TransportError("truncated rdata")
        qtype, data = _decode_rdata(msg, qtype_code, pos, rdlen)
        pos += rdlen
        if isinstance(data, rr.HttpsRecord):
            data = rr.HttpsRecord(owner=name, ttl=ttl,
                                  svc_priority=data.svc_priority,
                                  target_name=data.target_name,
                                  params=data.params, rrtype=data.rrtype)
        answers.append(DnsAnswer(name, qtype, ttl, data))
    return DnsResponse(rcode=rcode, answers=answers, ad=ad, resolver=resolver)


class _Truncated(TransportError):
    pass


class UdpTransport:
    """Plain UDP resolver client with TCP fallback on truncation."""

    def __init__(self, *, source_port: int = 0):
        self.source_port = source_port
        self._txid = 0x1234

    def _next_txid(self) -> int:
        self._txid = (self._txid + 1) & 0xFFFF or 1
        return self._txid

    def query(self, resolver: str, qname: str, qtype: str, *,
              dnssec_ok: bool = True, timeout: float = 2.0) -> DnsResponse:
        txid = self._next_txid()
        msg = build_query(qname, qtype, txid=txid, dnssec_ok=dnssec_ok)
        try:
            reply = self._exchange_udp(resolver, msg, timeout)
            return parse_response(reply, resolver=resolver)
        except _Truncated:
            reply = self._exchange_tcp(resolver, msg, timeout)
            return parse_response(reply, resolver=resolver)
        except socket.timeout as exc:
            raise TransportTimeout(f"{resolver}: {qname} {qtype}") from exc
        except OSError as exc:
            raise TransportError(str(exc)) from exc

    def _exchange_udp(self, resolver: str, msg: bytes, timeout: float) -> bytes:
        family = socket.AF_INET6 if ":" in resolver else socket.AF_INET
        with socket.socket(family, socket.SOCK_DGRAM) as sock:
            sock.settimeout(timeout)
            if self.source_port:
                sock.bind(("", self.source_port))
            sock.sendto(msg, (resolver, 53))
            reply, _addr = sock.recvfrom(4096)
        return reply

    def _exchange_tcp(self, resolver: str, msg: bytes, timeout: float) -> bytes:
        family = socket.AF_INET6 if ":" in resolver else socket.AF_INET
        with socket.socket(family, socket.SOCK_STREAM) as sock:
            sock.settimeout(timeout)
            sock.connect((resolver, 53))
            sock.sendall(struct.pack("!H", len(msg)) + msg)
            size_raw = self._recv_exact(sock, 2)
            size = struct.unpack("!H", size_raw)[0]
            return self._recv_exact(sock, size)

    @staticmethod
    def _recv_exact(sock: socket.socket, size: int) -> bytes:
        chunks = []
        remaining = size
        while remaining:
            chunk = sock.recv(remaining)
            if not chunk:
                raise TransportError("TCP connection closed mid-message")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)
