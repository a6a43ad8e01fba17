"""Deterministic in-memory network for client behavior scenarios.

Three pieces: an authoritative :class:`ZoneStore` with a CNAME-following
:func:`resolve`, TLS endpoint stubs evaluated by :func:`handshake`, and
:func:`run_scenario`, which drives the connection planner against both until
a terminal state is reached.  Everything is clock-free and value-based, so
repeated runs produce byte-identical transcripts.

DNSSEC metadata (AD bit, RRSIG presence, DS presence) is scripted per name
rather than computed; the harness only needs the bits to flow through.
"""

from __future__ import annotations

import ipaddress
import json
import pathlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import rr
from .ech import EchKeyIdentity
from .resolution import (
    Attempt,
    AttemptResult,
    ConnectionPlan,
    PolicyProfile,
    Request,
    Terminal,
    advance,
    build_plan,
)

CNAME_CHAIN_LIMIT = 8
_RUN_GUARD = 64  # hard ceiling on handshakes per scenario run


class ZoneError(ValueError):
    pass


class SimError(RuntimeError):
    pass


@dataclass(frozen=True)
class ZoneFlags:
    """Scripted per-name DNSSEC metadata."""

    ad_bit: bool = False
    rrsig_types: frozenset[str] = frozenset()
    ds_present: bool = False


_ADDRESS_TYPES = ("A", "AAAA")
_NAME_TYPES = ("CNAME", "NS")
_HTTPS_TYPES = ("HTTPS", "SVCB", "TYPE65", "TYPE64")


class ZoneStore:
    """Authoritative records for a handful of names.

    HTTPS/SVCB entries are stored as :class:`~httpsrr.rr.HttpsRecord`; other
    types as ``(value, ttl)`` pairs.  A name carrying a CNAME may hold no
    other types unless ``allow_broken_cname`` is set (the misconfiguration
    toggle some scanner tests need).
    """

    def __init__(self, *, allow_broken_cname: bool = False):
        self._data: dict[str, dict[str, list]] = {}
        self._flags: dict[str, ZoneFlags] = {}
        self.allow_broken_cname = allow_broken_cname

    # -- building -----------------------------------------------------------

    def _bucket(self, name: str, qtype: str) -> list:
        table = self._data.setdefault(rr.normalize_name(name), {})
        return table.setdefault(qtype, [])

    def _check_cname_exclusive(self, name: str, qtype: str):
        if self.allow_broken_cname:
            return
        table = self._data.get(rr.normalize_name(name), {})
        if qtype == "CNAME" and any(k != "CNAME" for k in table if table[k]):
            raise ZoneError(f"{name}: CNAME added next to other types")
        if qtype != "CNAME" and table.get("CNAME"):
            raise ZoneError(f"{name}: other type added next to CNAME")

    def add_https(self, record: rr.HttpsRecord):
        self._check_cname_exclusive(record.owner, "HTTPS")
        self._bucket(record.owner, "HTTPS").append(record)

    def add_address(self, name: str, ip: str, ttl: int = 300):
        addr = ipaddress.ip_address(ip)
        qtype = "A" if addr.version == 4 else "AAAA"
        self._check_cname_exclusive(name, qtype)
        self._bucket(name, qtype).append((str(addr), ttl))

    def add_cname(self, name: str, target: str, ttl: int = 300):
        self._check_cname_exclusive(name, "CNAME")
        self._bucket(name, "CNAME").append((rr.normalize_name(target), ttl))

    def add_ns(self, name: str, target: str, ttl: int = 300):
        self._check_cname_exclusive(name, "NS")
        self._bucket(name, "NS").append((rr.normalize_name(target), ttl))

    def add_soa(self, name: str, text: str, ttl: int = 300):
        self._check_cname_exclusive(name, "SOA")
        self._bucket(name, "SOA").append((text, ttl))

    def add_line(self, line: str, default_ttl: int = 300):
        """Add one presentation-format record line."""
        name, qtype, ttl, value = parse_zone_line(line, default_ttl=default_ttl)
        if qtype == "HTTPS_RECORD":
            self.add_https(value)
        elif qtype in _ADDRESS_TYPES:
            self.add_address(name, value, ttl)
        elif qtype == "CNAME":
            self.add_cname(name, value, ttl)
        elif qtype == "NS":
            self.add_ns(name, value, ttl)
        else:
            self.add_soa(name, value, ttl)

    def set_flags(self, name: str, *, ad_bit: bool = False,
                  rrsig_types: Sequence[str] = (), ds_present: bool = False):
        self._flags[rr.normalize_name(name)] = ZoneFlags(
            ad_bit=ad_bit, rrsig_types=frozenset(rrsig_types),
            ds_present=ds_present)

    # -- reading ------------------------------------------------------------

    def lookup(self, name: str, qtype: str) -> list:
        """Raw records at a name; no CNAME chasing."""
        return list(self._data.get(rr.normalize_name(name), {}).get(qtype, []))

    def flags(self, name: str) -> ZoneFlags:
        return self._flags.get(rr.normalize_name(name), ZoneFlags())

    def names(self) -> list[str]:
        return sorted(self._data)

    def to_lines(self) -> list[str]:
        out = []
        for name in self.names():
            table = self._data[name]
            for qtype in sorted(table):
                for entry in table[qtype]:
                    if qtype == "HTTPS":
                        out.append(str(entry))
                    else:
                        value, ttl = entry
                        out.append(f"{name} {ttl} IN {qtype} {value}")
        return out


def parse_zone_line(line: str, default_ttl: int = 300):
    """Parse one zone line into ``(name, qtype, ttl, value)``.

    HTTPS-family lines return ``("HTTPS_RECORD")`` with the parsed record as
    the value; the record codec owns that syntax.
    """
    bare = line.split(";", 1)[0].strip()
    if not bare:
        raise ZoneError("empty zone line")
    fields = bare.split()
    if len(fields) < 3:
        raise ZoneError(f"short zone line: {line!r}")
    name = fields[0]
    rest = fields[1:]
    ttl = default_ttl
    if rest and rest[0].isdigit():
        ttl = int(rest[0])
        rest = rest[1:]
    if rest and rest[0].upper() == "IN":
        rest = rest[1:]
    if rest and rest[0].isdigit() and ttl == default_ttl:
        ttl = int(rest[0])
        rest = rest[1:]
    if not rest:
        raise ZoneError(f"zone line missing type: {line!r}")
    qtype = rest[0].upper()
    values = rest[1:]
    if qtype in _HTTPS_TYPES:
        return name, "HTTPS_RECORD", ttl, rr.parse_presentation(
            bare, default_ttl=default_ttl)
    if not values:
        raise ZoneError(f"zone line missing rdata: {line!r}")
    if qtype in _ADDRESS_TYPES:
        return name, qtype, ttl, str(ipaddress.ip_address(values[0]))
    if qtype in _NAME_TYPES:
        return name, qtype, ttl, rr.normalize_name(values[0])
    if qtype == "SOA":
        return name, qtype, ttl, " ".join(values)
    raise ZoneError(f"unsupported record type {qtype!r}")


@dataclass
class Answer:
    records: list
    cname_chain: list[str]
    ad_bit: bool


def resolve(zone: ZoneStore, qname: str, qtype: str) -> Answer:
    """Answer a query from the zone, chasing CNAMEs up to the chain limit."""
    name = rr.normalize_name(qname)
    chain: list[str] = []
    for _ in range(CNAME_CHAIN_LIMIT + 1):
        cnames = zone.lookup(name, "CNAME")
        if cnames and qtype != "CNAME":
            target = cnames[0][0]
            chain.append(target)
            if chain.count(target) > 1:
                raise ZoneError(f"CNAME loop at {target}")
            name = target
            continue
        raw = zone.lookup(name, qtype)
        if qtype == "HTTPS":
            records = list(raw)
        else:
            records = [value for value, _ttl in raw]
        return Answer(records=records, cname_chain=chain,
                      ad_bit=zone.flags(name).ad_bit)
    raise ZoneError(f"CNAME chain exceeds {CNAME_CHAIN_LIMIT}")


class RecordingDnsView:
    """DnsView over a zone that logs query order and memoizes repeats."""

    def __init__(self, zone: ZoneStore):
        self._zone = zone
        self.queries: list[tuple[str, str]] = []
        self._memo: dict[tuple[str, str], list] = {}

    def _ask(self, name: str, qtype: str) -> list:
        key = (rr.normalize_name(name), qtype)
        if key not in self._memo:
            self.queries.append(key)
            try:
                self._memo[key] = resolve(self._zone, *key).records
            except ZoneError:
                self._memo[key] = []
        return self._memo[key]

    def get_https(self, name: str):
        return self._ask(name, "HTTPS")

    def get_a(self, name: str):
        return self._ask(name, "A")

    def get_aaaa(self, name: str):
        return self._ask(name, "AAAA")


# ---------------------------------------------------------------------------
# Endpoints

@dataclass(frozen=True)
class EndpointEch:
    accepts: EchKeyIdentity
    retry_payload: bytes = b""   # serialized config list; empty = no retry


@dataclass(frozen=True)
class EndpointSpec:
    name: str
    ips: frozenset[str]
    open_ports: frozenset[int]
    alpns: frozenset[str] = frozenset({"h2", "http/1.1"})
    cert_names: frozenset[str] = frozenset()
    ech: Optional[EndpointEch] = None

    def __post_init__(self):
        if not self.open_ports:
            raise SimError(f"endpoint {self.name}: no open ports")


def endpoint(name, ips, ports, alpns=("h2", "http/1.1"), certs=(), ech=None):
    return EndpointSpec(name=name, ips=frozenset(ips),
                        open_ports=frozenset(ports), alpns=frozenset(alpns),
                        cert_names=frozenset(certs), ech=ech)


def _bare(name: str) -> str:
    return rr.normalize_name(name).rstrip(".") if name else ""


def _negotiate(ep: EndpointSpec, attempt: Attempt, sni: str) -> AttemptResult:
    if _bare(sni) not in {_bare(c) for c in ep.cert_names}:
        return AttemptResult("tls_cert_invalid", detail="cert_mismatch")
    common = [proto for proto in attempt.alpn if proto in ep.alpns]
    if attempt.alpn and not common:
        return AttemptResult("tls_cert_invalid", detail="alpn_mismatch")
    return AttemptResult("connected", alpn=common[0] if common else "")


def handshake(endpoints: Sequence[EndpointSpec], attempt: Attempt) -> AttemptResult:
    """Evaluate one connection attempt against the endpoint population."""
    reached = next((ep for ep in endpoints if attempt.ip in ep.ips), None)
    if reached is None:
        return AttemptResult("ip_unreachable")
    if attempt.port not in reached.open_ports:
        return AttemptResult("port_refused")
    if not attempt.tls:
        return AttemptResult("connected", alpn="")

    if attempt.ech_mode in ("shared", "retry_pending"):
        if reached.ech is None:
            # Server never deployed ECH: the handshake collapses to plain TLS
            # for the inner name (the client's standard-TLS fallback).
            return _negotiate(reached, attempt, attempt.sni_inner or "")
        if reached.ech.accepts == attempt.ech_identity:
            common = [p for p in attempt.alpn if p in reached.alpns]
            picked = common[0] if common else (attempt.alpn[0] if attempt.alpn else "")
            return AttemptResult("connected", alpn=picked)
        if attempt.ech_mode == "shared" and reached.ech.retry_payload:
            return AttemptResult("ech_rejected_with_retry",
                                 retry_payload=reached.ech.retry_payload)
        return AttemptResult("ech_rejected_terminal")

    if attempt.ech_mode == "split_misdirected":
        # The client reached the back-end directly; the cert it sees is for
        # the inner name, not the outer SNI it sent.
        if _bare(attempt.sni_outer) not in {_bare(c) for c in reached.cert_names}:
            return AttemptResult("tls_cert_invalid", detail="cert_mismatch")
        return _negotiate(reached, attempt, attempt.sni_outer)

    return _negotiate(reached, attempt, attempt.sni_outer)


# ---------------------------------------------------------------------------
# Scenarios

@dataclass
class Scenario:
    id: str
    request: Request
    zone: ZoneStore
    endpoints: tuple[EndpointSpec, ...]
    # profile name -> expected transcript summary (see check_transcript)
    expected: dict[str, dict] = field(default_factory=dict)


@dataclass
class Transcript:
    scenario_id: str
    profile_name: str
    queries: tuple[tuple[str, str], ...]
    attempts: tuple[Attempt, ...]
    results: tuple[AttemptResult, ...]
    terminal: Terminal

    def summarize(self) -> dict:
        out = {
            "terminal": [self.terminal.kind, self.terminal.detail],
            "attempts": len(self.attempts),
            "queries": [list(q) for q in self.queries],
        }
        if self.attempts:
            out["first"] = _attempt_digest(self.attempts[0])
            out["last"] = _attempt_digest(self.attempts[-1])
        return out


def _attempt_digest(attempt: Attempt) -> dict:
    return {
        "ip": attempt.ip,
        "port": attempt.port,
        "tls": attempt.tls,
        "alpn": list(attempt.alpn),
        "ech_mode": attempt.ech_mode,
        "sni_outer": attempt.sni_outer,
        "ip_source": attempt.ip_source,
        "annotations": list(attempt.annotations),
    }


def run_scenario(scenario: Scenario, profile: PolicyProfile) -> Transcript:
    view = RecordingDnsView(scenario.zone)
    host = scenario.request.host
    # The client fires its initial address + HTTPS queries together; issue
    # them up front so the planner's internal reads do not reorder them.
    view.get_https(host)
    view.get_a(host)
    view.get_aaaa(host)

    plan = build_plan(scenario.request, profile, view)
    results: list[AttemptResult] = []
    for _ in range(_RUN_GUARD):
        if plan.terminal is not None:
            break
        result = handshake(scenario.endpoints, plan.attempts[-1])
        results.append(result)
        plan = advance(plan, result)
    else:
        raise SimError(f"scenario {scenario.id}: no terminal after {_RUN_GUARD} attempts")

    attempts = plan.attempts
    if plan.terminal.kind == "success" and plan.companion_h2:
        base = attempts[-1]
        companion = replace(
            base, alpn=("h2", "http/1.1"), ech_mode="off", sni_inner=None,
            ech_identity=None, sni_outer=_bare(scenario.request.host),
            annotations=base.annotations + ("h2_companion",))
        attempts = attempts + (companion,)
        results.append(handshake(scenario.endpoints, companion))

    return Transcript(
        scenario_id=scenario.id,
        profile_name=profile.name,
        queries=tuple(view.queries),
        attempts=attempts,
        results=tuple(results),
        terminal=plan.terminal,
    )


def check_transcript(transcript: Transcript, expected: dict) -> list[str]:
    """Compare a transcript against an expected summary; return mismatches.

    Recognized expected keys: ``terminal`` (required), ``attempts`` (count),
    ``queries`` (exact ordered list), ``queries_include`` (subset), and
    ``first``/``last`` (partial attempt digests; ``annotations`` there means
    "contains these").
    """
    problems: list[str] = []
    got = transcript.summarize()

    if got["terminal"] != list(expected["terminal"]):
        problems.append(f"terminal {got['terminal']} != {list(expected['terminal'])}")
    if "attempts" in expected and got["attempts"] != expected["attempts"]:
        problems.append(f"attempt count {got['attempts']} != {expected['attempts']}")
    if "queries" in expected:
        want = [list(q) for q in expected["queries"]]
        if got["queries"] != want:
            problems.append(f"queries {got['queries']} != {want}")
    if "queries_include" in expected:
        have = {tuple(q) for q in got["queries"]}
        for q in expected["queries_include"]:
            if tuple(q) not in have:
                problems.append(f"missing query {q}")
    for slot in ("first", "last"):
        if slot not in expected:
            continue
        if slot not in got:
            problems.append(f"no attempts but expected[{slot}] set")
            continue
        for key, want in expected[slot].items():
            have = got[slot][key]
            if key == "annotations":
                missing = [a for a in want if a not in have]
                if missing:
                    problems.append(f"{slot}.annotations missing {missing}")
            elif key == "alpn":
                if list(have) != list(want):
                    problems.append(f"{slot}.alpn {have} != {want}")
            elif have != want:
                problems.append(f"{slot}.{key} {have!r} != {want!r}")
    return problems


# ---------------------------------------------------------------------------
# Scenario files

def scenario_to_dict(scenario: Scenario) -> dict:
    endpoints = []
    for ep in scenario.endpoints:
        entry = {
            "name": ep.name,
            "ips": sorted(ep.ips),
            "open_ports": sorted(ep.open_ports),
            "alpns": sorted(ep.alpns),
            "cert_names": sorted(ep.cert_names),
        }
        if ep.ech is not None:
            entry["ech"] = {
                "config_id": ep.ech.accepts.config_id,
                "digest_hex": ep.ech.accepts.public_key_digest.hex(),
                "retry_hex": ep.ech.retry_payload.hex(),
            }
        endpoints.append(entry)
    flags = {}
    for name in scenario.zone.names():
        zf = scenario.zone.flags(name)
        if zf != ZoneFlags():
            flags[name] = {
                "ad_bit": zf.ad_bit,
                "rrsig_types": sorted(zf.rrsig_types),
                "ds_present": zf.ds_present,
            }
    return {
        "id": scenario.id,
        "request": {"scheme": scenario.request.scheme,
                    "host": scenario.request.host},
        "zone": {"records": scenario.zone.to_lines(), "flags": flags},
        "endpoints": endpoints,
        "expected": scenario.expected,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    zone = ZoneStore()
    for line in doc["zone"]["records"]:
        zone.add_line(line)
    for name, zf in doc["zone"].get("flags", {}).items():
        zone.set_flags(name, ad_bit=zf.get("ad_bit", False),
                       rrsig_types=zf.get("rrsig_types", ()),
                       ds_present=zf.get("ds_present", False))
    endpoints = []
    for entry in doc["endpoints"]:
        ech_spec = None
        if "ech" in entry:
            ech_spec = EndpointEch(
                accepts=EchKeyIdentity(
                    config_id=entry["ech"]["config_id"],
                    public_key_digest=bytes.fromhex(entry["ech"]["digest_hex"])),
                retry_payload=bytes.fromhex(entry["ech"].get("retry_hex", "")))
        endpoints.append(endpoint(
            entry["name"], entry["ips"], entry["open_ports"],
            alpns=entry.get("alpns", ("h2", "http/1.1")),
            certs=entry.get("cert_names", ()), ech=ech_spec))
    return Scenario(
        id=doc["id"],
        request=Request(doc["request"]["scheme"], doc["request"]["host"]),
        zone=zone,
        endpoints=tuple(endpoints),
        expected=doc.get("expected", {}),
    )


def save_scenario(scenario: Scenario, path) -> None:
    pathlib.Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(pathlib.Path(path).read_text()))
