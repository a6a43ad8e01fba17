"""Scan orchestration: rate-limited DNS collection with conditional probing.

A scan of one domain always starts with an HTTPS query (DO bit set).  Only
when that returns records does the scanner fan out to A, AAAA, SOA, and NS
at the same name, plus DS for apex domains.  TCP probing of advertised
endpoints happens only when ipv4/ipv6 hints disagree with the address
records, which keeps active traffic proportional to observed inconsistency.
"""

from __future__ import annotations

import hashlib
import json
import socket
import ssl
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date as _date
from typing import Callable, Iterable, Optional

from .. import rr
from ..snapshots import DomainSnapshot, iphint_families, rdata_presentation
from .transport import (
    DnsAnswer,
    DnsResponse,
    DnsTransport,
    TransportError,
    TransportTimeout,
)

_FANOUT_QTYPES = ("A", "AAAA", "SOA", "NS")
_CNAME_CHASE_LIMIT = 8

ProbeFn = Callable[[str, int, float], str]


@dataclass(frozen=True)
class ScanConfig:
    resolvers: tuple[str, ...] = ("8.8.8.8", "1.1.1.1")
    qps: float = 20.0
    retries: int = 2          # extra attempts per resolver after the first
    timeout: float = 2.0
    probe_enabled: bool = True
    probe_ports: tuple[int, ...] = (443,)
    fanout: bool = True       # False = HTTPS-only pass (hourly rotation runs)

    def __post_init__(self):
        if not self.resolvers:
            raise ValueError("at least one resolver required")
        if self.qps <= 0:
            raise ValueError("qps must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def to_dict(self) -> dict:
        return {
            "resolvers": list(self.resolvers),
            "qps": self.qps,
            "retries": self.retries,
            "timeout": self.timeout,
            "probe_enabled": self.probe_enabled,
            "probe_ports": list(self.probe_ports),
            "fanout": self.fanout,
        }

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


class TokenBucket:
    """Blocking rate limiter; clock and sleeper are injectable for tests.

    Grants are spaced at least one interval apart, shared across threads.
    The interval is padded by one part in 10^9 so accumulated float error
    can never let a one-second window exceed the configured ceiling.
    """

    def __init__(self, qps: float, *,
                 clock: Callable[[], float] = time.monotonic,
                 sleeper: Callable[[float], None] = time.sleep):
        if qps <= 0:
            raise ValueError("qps must be positive")
        self.qps = qps
        self.interval = (1.0 + 1e-9) / qps
        self.clock = clock
        self.sleeper = sleeper
        self._next_free = clock()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = self.clock()
                if now >= self._next_free:
                    self._next_free = now + self.interval
                    return
                wait = self._next_free - now
            self.sleeper(wait)


def _query_with_failover(cfg: ScanConfig, transport: DnsTransport,
                         qname: str, qtype: str,
                         limiter: Optional[TokenBucket]) -> DnsResponse:
    """One logical lookup: retry each resolver, then move to the next."""
    last_exc: Optional[Exception] = None
    for resolver in cfg.resolvers:
        for _attempt in range(cfg.retries + 1):
            if limiter is not None:
                limiter.acquire()
            try:
                response = transport.query(resolver, qname, qtype,
                                           dnssec_ok=True, timeout=cfg.timeout)
            except TransportTimeout as exc:
                last_exc = exc
                continue
            except TransportError as exc:
                last_exc = exc
                break  # hard transport error: skip to the next resolver
            if response.rcode == "SERVFAIL":
                last_exc = TransportError(
                    f"{resolver}: SERVFAIL for {qname} {qtype}")
                break
            return response
    raise last_exc if last_exc is not None else TransportError("no resolvers")


def _records_from_answers(qtype: str,
                          answers: list[DnsAnswer]) -> list[dict]:
    out: list[dict] = []
    for ans in answers:
        if ans.qtype != qtype:
            continue
        if isinstance(ans.data, rr.HttpsRecord):
            out.append({"value": rdata_presentation(ans.data), "ttl": ans.ttl})
        elif isinstance(ans.data, (bytes, bytearray)):
            out.append({"raw_hex": bytes(ans.data).hex(),
                        "parse_error": True, "ttl": ans.ttl})
        else:
            out.append({"value": str(ans.data), "ttl": ans.ttl})
    return out


def _resolve_qtype(cfg: ScanConfig, transport: DnsTransport, name: str,
                   qtype: str, limiter: Optional[TokenBucket]
                   ) -> tuple[Optional[dict], list[str], str]:
    """Resolve one qtype, re-querying through CNAMEs ourselves.

    Returns (rrset dict or None, cname targets followed, final rcode).
    Authoritative-style servers answer a CNAME-bearing name with only the
    CNAME; recursive resolvers may return the whole chain.  Both shapes end
    up identical here.
    """
    chain: list[str] = []
    current = rr.normalize_name(name)
    for _hop in range(_CNAME_CHASE_LIMIT + 1):
        response = _query_with_failover(cfg, transport, current, qtype, limiter)
        if response.rcode == "NXDOMAIN":
            return None, chain, "NXDOMAIN"
        cname_targets = [str(a.data) for a in response.answers
                         if a.qtype == "CNAME"]
        records = _records_from_answers(qtype, response.answers)
        if not records and cname_targets and qtype != "CNAME":
            chain.extend(t for t in cname_targets if t not in chain)
            current = cname_targets[-1]
            continue
        if cname_targets and qtype != "CNAME":
            # Recursive resolver handed us the chain inline.
            chain.extend(t for t in cname_targets if t not in chain)
        if not records:
            return None, chain, response.rcode
        rrsig = any(a.qtype == "RRSIG" and a.data == qtype
                    for a in response.answers)
        return {
            "records": records,
            "resolver": response.resolver,
            "rrsig": rrsig,
            "ad": response.ad,
        }, chain, response.rcode
    return None, chain, "CHAIN_TOO_LONG"


def probe_connectivity(snapshot: DomainSnapshot, cfg: ScanConfig,
                       prober: ProbeFn) -> list[dict]:
    """TCP-probe hint and address-record IPs when they disagree.

    Runs only for families where hints are present and differ from the
    address records as a set; a consistent snapshot yields no probes.
    """
    families = iphint_families(snapshot)
    targets: list[tuple[str, str]] = []  # (ip, source)
    seen: set[str] = set()
    all_addrs = families["v4"][1] | families["v6"][1]
    for _family, (hints, addrs) in sorted(families.items()):
        if not hints or hints == addrs:
            continue
        for ip in sorted(hints | addrs):
            if ip in seen:
                continue
            seen.add(ip)
            source = "addr_record" if ip in all_addrs else "hint"
            targets.append((ip, source))
    results = []
    for ip, source in targets:
        for port in cfg.probe_ports:
            outcome = prober(ip, port, cfg.timeout)
            results.append({"ip": ip, "port": port,
                            "outcome": outcome, "source": source})
    return results


def scan_domain(domain: str, kind: str, cfg: ScanConfig,
                transport: DnsTransport, *,
                limiter: Optional[TokenBucket] = None,
                date: Optional[str] = None,
                prober: Optional[ProbeFn] = None) -> DomainSnapshot:
    """Collect one snapshot.  Network failures land in ``error``, not raises."""
    scan_date = date or _date.today().isoformat()
    name = rr.normalize_name(domain)
    snap = DomainSnapshot(date=scan_date, domain=name, kind=kind)

    try:
        https_rrset, chain, rcode = _resolve_qtype(
            cfg, transport, name, "HTTPS", limiter)
    except TransportTimeout:
        snap.error = "timeout"
        return snap
    except TransportError:
        snap.error = "network"
        return snap

    snap.cname_chain = chain
    if rcode == "NXDOMAIN":
        snap.error = "nxdomain"
        return snap
    if https_rrset is None:
        return snap  # queried, no HTTPS: an observation, not an error
    snap.rrsets["HTTPS"] = https_rrset
    if not cfg.fanout:
        return snap

    fanout = list(_FANOUT_QTYPES)
    if kind == "apex":
        fanout.append("DS")
    for qtype in fanout:
        try:
            rrset, _chain, _rcode = _resolve_qtype(
                cfg, transport, name, qtype, limiter)
        except TransportError:
            continue  # partial snapshot beats none
        if qtype == "DS":
            snap.ds_present = bool(rrset and rrset["records"])
            continue
        if rrset is not None:
            snap.rrsets[qtype] = rrset
    snap.ns_names = sorted(snap.record_values("NS"))

    if cfg.probe_enabled and prober is not None:
        snap.probe_results = probe_connectivity(snap, cfg, prober)
    return snap


def scan_list(targets: Iterable[tuple[str, str]], cfg: ScanConfig,
              transport: DnsTransport, store, *, workers: int = 8,
              date: Optional[str] = None,
              prober: Optional[ProbeFn] = None,
              limiter: Optional[TokenBucket] = None) -> dict:
    """Scan (domain, kind) pairs under one shared rate limit.

    Snapshots are appended to the store in submission order so reruns with
    the same target list produce byte-identical day files.
    """
    limiter = limiter or TokenBucket(cfg.qps)
    pairs = list(targets)
    scanned = 0
    errors = 0
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(scan_domain, domain, kind, cfg, transport,
                        limiter=limiter, date=date, prober=prober)
            for domain, kind in pairs
        ]
        for future in futures:
            snap = future.result()
            store.append(snap)
            scanned += 1
            if snap.error is not None:
                errors += 1
    return {"scanned": scanned, "errors": errors}


# ---------------------------------------------------------------------------
# Probers

def endpoint_prober(endpoints: dict[str, Iterable[int]]) -> ProbeFn:
    """Offline prober backed by an {ip: open ports} table (for tests)."""
    table = {ip: set(ports) for ip, ports in endpoints.items()}

    def probe(ip: str, port: int, timeout: float) -> str:
        if ip not in table:
            return "unreachable_network"
        if port not in table[ip]:
            return "refused"
        return "reachable"

    return probe


def tls_probe(ip: str, port: int, timeout: float) -> str:
    """Real TCP+TLS reachability check for one endpoint."""
    try:
        raw = socket.create_connection((ip, port), timeout=timeout)
    except socket.timeout:
        return "timeout"
    except ConnectionRefusedError:
        return "refused"
    except OSError:
        return "unreachable_network"
    try:
        context = ssl.create_default_context()
        context.check_hostname = False
        context.verify_mode = ssl.CERT_NONE
        with context.wrap_socket(raw, server_hostname=None):
            return "reachable"
    except (ssl.SSLError, socket.timeout, OSError):
        return "tls_error"
    finally:
        raw.close()
