"""Client connection planning driven by HTTPS records and policy profiles.

Given a request (scheme + host), a DNS view, and a :class:`PolicyProfile`,
:func:`build_plan` produces a deterministic :class:`ConnectionPlan` whose
first attempt mirrors what the modeled client would do.  Failures feed back
through :func:`advance`, which applies the profile's failover rules one axis
at a time (port fallback, alternate address, ECH retry) until the plan
reaches a terminal state.

Profiles are pure data.  :func:`builtin_profiles` ships one profile per
modeled client plus an ``rfc`` profile with every capability set to the
specification-intended value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Protocol, Sequence

from . import ech as echmod
from . import rr
from .rr import HttpsRecord, ParamKey

ALIAS_CHAIN_LIMIT = 8

DEFAULT_ALPN = "http/1.1"
# ALPN set offered on connections not shaped by an HTTPS record.
FALLBACK_ALPN = ("h2", "http/1.1")


class PlanError(ValueError):
    """Contract violation while building or advancing a plan."""


class IpPreference(str, Enum):
    HINTS_FIRST = "hints_first"
    ADDR_RECORDS_FIRST = "addr_records_first"


class IpFailover(str, Enum):
    IMMEDIATE_ALTERNATE = "immediate_alternate"
    DELAYED_ALTERNATE = "delayed_alternate"
    HARD_FAIL = "hard_fail"


class EchOnMalformed(str, Enum):
    HARD_FAIL = "hard_fail"
    IGNORE_AND_PLAIN_TLS = "ignore_and_plain_tls"


class EchSplit(str, Enum):
    SUPPORTED = "supported"
    UNSUPPORTED_MISDIRECT = "unsupported_misdirect"


@dataclass(frozen=True)
class PolicyProfile:
    """Flag table describing one client's HTTPS-record behavior."""

    name: str
    use_https_rr_for_plain_scheme: bool
    follow_alias_target: bool
    follow_service_target: bool
    use_port_param: bool
    port_fallback_443: bool
    ip_preference: IpPreference
    ip_failover: IpFailover
    ech_shared: bool
    ech_on_malformed: EchOnMalformed
    ech_split: EchSplit
    use_alpn: bool = True
    ech_on_mismatch: str = "retry"
    # Inferred from client source rather than observed tables: Chromium drops
    # an RRset carrying an empty alpn value; Firefox pairs an h3-only record
    # with a follow-up h2 connection.
    ignore_rrset_on_empty_alpn: bool = False
    h2_companion_on_h3_only: bool = False

    def to_flags(self) -> dict[str, str]:
        """Dump as a flat key/value table (the editable profile format)."""
        out: dict[str, str] = {}
        for key, value in vars(self).items():
            if isinstance(value, bool):
                out[key] = "yes" if value else "no"
            elif isinstance(value, Enum):
                out[key] = value.value
            else:
                out[key] = str(value)
        return out

    @classmethod
    def from_flags(cls, flags: dict[str, str]) -> "PolicyProfile":
        kwargs: dict = {}
        for f in cls.__dataclass_fields__.values():
            if f.name not in flags:
                continue
            raw = flags[f.name]
            if f.type in ("bool", bool):
                kwargs[f.name] = raw == "yes"
            elif f.name == "ip_preference":
                kwargs[f.name] = IpPreference(raw)
            elif f.name == "ip_failover":
                kwargs[f.name] = IpFailover(raw)
            elif f.name == "ech_on_malformed":
                kwargs[f.name] = EchOnMalformed(raw)
            elif f.name == "ech_split":
                kwargs[f.name] = EchSplit(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)


def builtin_profiles() -> dict[str, PolicyProfile]:
    """Profiles for the four modeled browsers plus the rfc-intended client.

    Chrome and Edge share a table row; they diverge nowhere in the modeled
    behaviors, so their profiles differ only by name.
    """
    chrome = PolicyProfile(
        name="chrome",
        use_https_rr_for_plain_scheme=True,
        follow_alias_target=False,
        follow_service_target=False,
        use_port_param=False,
        port_fallback_443=False,
        ip_preference=IpPreference.ADDR_RECORDS_FIRST,
        ip_failover=IpFailover.HARD_FAIL,
        ech_shared=True,
        ech_on_malformed=EchOnMalformed.HARD_FAIL,
        ech_split=EchSplit.UNSUPPORTED_MISDIRECT,
        ignore_rrset_on_empty_alpn=True,
    )
    edge = replace(chrome, name="edge")
    safari = PolicyProfile(
        name="safari",
        use_https_rr_for_plain_scheme=False,
        follow_alias_target=True,
        follow_service_target=True,
        use_port_param=True,
        port_fallback_443=True,
        ip_preference=IpPreference.HINTS_FIRST,
        ip_failover=IpFailover.IMMEDIATE_ALTERNATE,
        ech_shared=False,
        ech_on_malformed=EchOnMalformed.IGNORE_AND_PLAIN_TLS,
        ech_split=EchSplit.UNSUPPORTED_MISDIRECT,
    )
    firefox = PolicyProfile(
        name="firefox",
        use_https_rr_for_plain_scheme=True,
        follow_alias_target=False,
        follow_service_target=True,
        use_port_param=True,
        port_fallback_443=True,
        ip_preference=IpPreference.HINTS_FIRST,
        ip_failover=IpFailover.DELAYED_ALTERNATE,
        ech_shared=True,
        ech_on_malformed=EchOnMalformed.IGNORE_AND_PLAIN_TLS,
        ech_split=EchSplit.UNSUPPORTED_MISDIRECT,
        h2_companion_on_h3_only=True,
    )
    rfc = PolicyProfile(
        name="rfc",
        use_https_rr_for_plain_scheme=True,
        follow_alias_target=True,
        follow_service_target=True,
        use_port_param=True,
        port_fallback_443=True,
        ip_preference=IpPreference.ADDR_RECORDS_FIRST,
        ip_failover=IpFailover.IMMEDIATE_ALTERNATE,
        ech_shared=True,
        ech_on_malformed=EchOnMalformed.IGNORE_AND_PLAIN_TLS,
        ech_split=EchSplit.SUPPORTED,
    )
    return {"rfc": rfc, "chrome": chrome, "edge": edge,
            "safari": safari, "firefox": firefox}


# ---------------------------------------------------------------------------
# DNS view

class DnsView(Protocol):
    """Read-only lookup surface the planner consults.

    A missing name is indistinguishable from empty RRsets.  Implementations
    decide where answers come from (static dicts here, the zone store in the
    simulated network, captured snapshots in analysis tooling).
    """

    def get_https(self, name: str) -> Sequence[HttpsRecord]: ...

    def get_a(self, name: str) -> Sequence[str]: ...

    def get_aaaa(self, name: str) -> Sequence[str]: ...


class StaticDnsView:
    """Dict-backed DnsView for tests and one-off planning."""

    def __init__(self, https=None, a=None, aaaa=None):
        self._https = {rr.normalize_name(k): list(v) for k, v in (https or {}).items()}
        self._a = {rr.normalize_name(k): list(v) for k, v in (a or {}).items()}
        self._aaaa = {rr.normalize_name(k): list(v) for k, v in (aaaa or {}).items()}

    def get_https(self, name: str) -> Sequence[HttpsRecord]:
        return self._https.get(rr.normalize_name(name), [])

    def get_a(self, name: str) -> Sequence[str]:
        return self._a.get(rr.normalize_name(name), [])

    def get_aaaa(self, name: str) -> Sequence[str]:
        return self._aaaa.get(rr.normalize_name(name), [])


# ---------------------------------------------------------------------------
# Plan value types

@dataclass(frozen=True)
class Request:
    scheme: str  # "https", "http", or "bare" (address-bar entry without scheme)
    host: str

    def __post_init__(self):
        if self.scheme not in ("https", "http", "bare"):
            raise PlanError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class Attempt:
    """One fully specified connection attempt."""

    host: str                 # name whose addresses supplied the ip
    sni_outer: str            # SNI on the wire ("" for cleartext HTTP)
    ip: str
    ip_source: str            # "hint" | "addr_record"
    port: int
    alpn: tuple[str, ...]     # offered ids in client preference order
    ech_mode: str = "off"     # "off" | "shared" | "split_misdirected" | "retry_pending"
    sni_inner: Optional[str] = None   # set only when ech_mode != "off"
    ech_identity: Optional[echmod.EchKeyIdentity] = None
    tls: bool = True
    annotations: tuple[str, ...] = ()

    def __post_init__(self):
        if self.ip_source not in ("hint", "addr_record"):
            raise PlanError(f"bad ip_source {self.ip_source!r}")
        if self.ech_mode not in ("off", "shared", "split_misdirected", "retry_pending"):
            raise PlanError(f"bad ech_mode {self.ech_mode!r}")
        if self.ech_mode != "off" and self.sni_inner is None:
            raise PlanError("ECH attempt missing inner SNI")


OUTCOMES = (
    "connected",
    "port_refused",
    "ip_unreachable",
    "tls_cert_invalid",
    "ech_rejected_with_retry",
    "ech_rejected_terminal",
)


@dataclass(frozen=True)
class AttemptResult:
    outcome: str
    alpn: str = ""                     # for connected
    retry_payload: bytes = b""         # for ech_rejected_with_retry
    detail: str = ""                   # e.g. cert_mismatch vs alpn_mismatch

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise PlanError(f"unknown outcome {self.outcome!r}")


@dataclass(frozen=True)
class Terminal:
    kind: str     # "success" | "hard_fail"
    detail: str = ""   # negotiated alpn on success, reason on hard_fail

    def __post_init__(self):
        if self.kind not in ("success", "hard_fail"):
            raise PlanError(f"bad terminal kind {self.kind!r}")


@dataclass(frozen=True)
class ConnectionPlan:
    request: Request
    profile: PolicyProfile
    attempts: tuple[Attempt, ...] = ()
    terminal: Optional[Terminal] = None
    # Trigger for the follow-up h2 connection some clients open next to an
    # h3-only record; consumed by the scenario runner after success.
    companion_h2: bool = False
    # Failover state, private to advance().
    ip_queue: tuple[tuple[str, str], ...] = ()   # (ip, ip_source) alternates
    port_fallback_armed: bool = False
    ech_retry_used: bool = False

    @property
    def outstanding(self) -> Attempt:
        if self.terminal is not None or not self.attempts:
            raise PlanError("no outstanding attempt")
        return self.attempts[-1]


@dataclass(frozen=True)
class EndpointSelection:
    kind: str  # "alias" | "service" | "none"
    target: Optional[str] = None
    endpoints: tuple[HttpsRecord, ...] = ()


def select_endpoints(https_rrset: Sequence[HttpsRecord]) -> EndpointSelection:
    """Partition one owner's RRset into alias vs ordered ServiceMode use.

    Any priority-0 record wins outright.  ServiceMode records sort ascending
    by priority; equal priorities tie-break on canonical wire-form bytes so
    the ordering is stable regardless of input permutation.
    """
    aliases = [r for r in https_rrset if r.is_alias]
    if aliases:
        chosen = min(aliases, key=rr.to_wire)
        return EndpointSelection(kind="alias", target=chosen.target_name)
    services = sorted(https_rrset, key=lambda r: (r.svc_priority, rr.to_wire(r)))
    if services:
        return EndpointSelection(kind="service", endpoints=tuple(services))
    return EndpointSelection(kind="none")


# ---------------------------------------------------------------------------
# build_plan

def _addr_candidates(dns: DnsView, name: str) -> list[tuple[str, str]]:
    out = [(ip, "addr_record") for ip in dns.get_a(name)]
    out += [(ip, "addr_record") for ip in dns.get_aaaa(name)]
    return out


def _hint_candidates(record: HttpsRecord) -> list[tuple[str, str]]:
    out = [(ip, "hint") for ip in record.ipv4hints()]
    out += [(ip, "hint") for ip in record.ipv6hints()]
    return out


def _dedup(candidates: list[tuple[str, str]]) -> list[tuple[str, str]]:
    seen: set[str] = set()
    out = []
    for ip, source in candidates:
        if ip not in seen:
            seen.add(ip)
            out.append((ip, source))
    return out


def _fail(request: Request, profile: PolicyProfile, reason: str) -> ConnectionPlan:
    return ConnectionPlan(request=request, profile=profile,
                          terminal=Terminal("hard_fail", reason))


def _plain_http_plan(request: Request, profile: PolicyProfile,
                     dns: DnsView) -> ConnectionPlan:
    host = rr.normalize_name(request.host)
    candidates = _dedup(_addr_candidates(dns, host))
    if not candidates:
        return _fail(request, profile, "no_address")
    ip, source = candidates[0]
    attempt = Attempt(host=host, sni_outer="", ip=ip, ip_source=source,
                      port=80, alpn=(), tls=False)
    return ConnectionPlan(request=request, profile=profile, attempts=(attempt,),
                          ip_queue=tuple(candidates[1:]))


def _plain_tls_plan(request: Request, profile: PolicyProfile, dns: DnsView,
                    host: str) -> ConnectionPlan:
    """Ordinary TLS connection not shaped by any HTTPS record."""
    candidates = _dedup(_addr_candidates(dns, host))
    if not candidates:
        return _fail(request, profile, "no_address")
    ip, source = candidates[0]
    sni = rr.normalize_name(request.host).rstrip(".")
    attempt = Attempt(host=host, sni_outer=sni, ip=ip, ip_source=source,
                      port=443, alpn=FALLBACK_ALPN)
    return ConnectionPlan(request=request, profile=profile, attempts=(attempt,),
                          ip_queue=tuple(candidates[1:]))


def _rrset_has_empty_alpn(rrset: Sequence[HttpsRecord]) -> bool:
    for record in rrset:
        p = record.param(ParamKey.ALPN)
        if p is not None and p.value == b"":
            return True
    return False


def build_plan(request: Request, profile: PolicyProfile,
               dns: DnsView) -> ConnectionPlan:
    """Produce the deterministic connection plan for one request."""
    owner = rr.normalize_name(request.host)
    rrset = list(dns.get_https(owner))

    plain_scheme = request.scheme in ("http", "bare")
    if plain_scheme and not profile.use_https_rr_for_plain_scheme:
        return _plain_http_plan(request, profile, dns)

    if profile.ignore_rrset_on_empty_alpn and _rrset_has_empty_alpn(rrset):
        rrset = []

    if not rrset:
        if plain_scheme:
            return _plain_http_plan(request, profile, dns)
        return _plain_tls_plan(request, profile, dns, owner)

    # Follow alias chains (or refuse to, per profile).
    connect_host = owner
    hops = 0
    visited = {owner}
    selection = select_endpoints(rrset)
    while selection.kind == "alias":
        target = rr.normalize_name(selection.target) if selection.target != "." \
            else connect_host
        if not profile.follow_alias_target:
            candidates = _dedup(_addr_candidates(dns, connect_host))
            if not candidates:
                return _fail(request, profile, "no_address_for_owner")
            ip, source = candidates[0]
            sni = owner.rstrip(".")
            attempt = Attempt(host=connect_host, sni_outer=sni, ip=ip,
                              ip_source=source, port=443, alpn=FALLBACK_ALPN)
            return ConnectionPlan(request=request, profile=profile,
                                  attempts=(attempt,),
                                  ip_queue=tuple(candidates[1:]))
        hops += 1
        if target in visited or hops > ALIAS_CHAIN_LIMIT:
            return _fail(request, profile, "alias_loop")
        visited.add(target)
        connect_host = target
        rrset = list(dns.get_https(target))
        if profile.ignore_rrset_on_empty_alpn and _rrset_has_empty_alpn(rrset):
            rrset = []
        selection = select_endpoints(rrset)

    if selection.kind == "none":
        # Alias chain ended at a name with no HTTPS records: connect to its
        # address records like an ordinary request.
        plan = _plain_tls_plan(request, profile, dns, connect_host)
        if plan.terminal is not None:
            return _fail(request, profile, "no_address_for_target")
        return plan

    record = selection.endpoints[0]
    return _service_plan(request, profile, dns, connect_host, record)


def _service_plan(request: Request, profile: PolicyProfile, dns: DnsView,
                  owner: str, record: HttpsRecord) -> ConnectionPlan:
    target = record.target_name
    if target == "." or not profile.follow_service_target:
        connect_host = owner
    else:
        connect_host = rr.normalize_name(target)

    port = 443
    if profile.use_port_param and record.port() is not None:
        port = record.port()

    ids = record.alpn_ids()
    if ids is None:
        offered: tuple[str, ...] = (DEFAULT_ALPN,)
    else:
        offered = tuple(ids)
        if not record.has_param(ParamKey.NO_DEFAULT_ALPN) and DEFAULT_ALPN not in offered:
            offered = offered + (DEFAULT_ALPN,)

    hints = _hint_candidates(record)
    addrs = _addr_candidates(dns, connect_host)
    if profile.ip_preference is IpPreference.HINTS_FIRST:
        candidates = _dedup(hints + addrs)
    else:
        candidates = _dedup(addrs + hints)
    if not candidates:
        return _fail(request, profile, "no_address")

    sni = rr.normalize_name(request.host).rstrip(".")
    ech_mode = "off"
    sni_outer = sni
    sni_inner: Optional[str] = None
    ech_identity: Optional[echmod.EchKeyIdentity] = None

    payload = record.ech_payload()
    if payload is not None and profile.ech_shared:
        config_list = None
        try:
            parsed = echmod.parse_config_list(payload)
            # A list of only unrecognized versions parses fine but is
            # unusable; clients skip those configs and proceed without ECH.
            cover = echmod.public_name(parsed)
            ech_identity = echmod.first_identity(parsed)
            config_list = parsed
        except echmod.EchParseError:
            if profile.ech_on_malformed is EchOnMalformed.HARD_FAIL:
                return _fail(request, profile, "ech_malformed")
        except echmod.EchError:
            ech_identity = None
        if config_list is not None:
            cover_addrs = {ip for ip, _ in _addr_candidates(dns, cover)}
            service_addrs = {ip for ip, _ in candidates}
            split = bool(cover_addrs) and not (cover_addrs & service_addrs)
            if split and profile.ech_split is EchSplit.SUPPORTED:
                # Correct split-mode behavior: reach the client-facing server
                # at the cover name's address and let it relay inward.
                candidates = _dedup(_addr_candidates(dns, cover))
                connect_host = rr.normalize_name(cover)
                ech_mode = "shared"
            elif split:
                ech_mode = "split_misdirected"
            else:
                ech_mode = "shared"
            sni_outer = cover
            sni_inner = sni

    ip, source = candidates[0]
    attempt = Attempt(host=connect_host, sni_outer=sni_outer, ip=ip,
                      ip_source=source, port=port, alpn=offered,
                      ech_mode=ech_mode, sni_inner=sni_inner,
                      ech_identity=ech_identity)
    companion = bool(
        profile.h2_companion_on_h3_only
        and ids
        and all(pid.startswith("h3") for pid in ids)
    )
    return ConnectionPlan(
        request=request, profile=profile, attempts=(attempt,),
        companion_h2=companion,
        ip_queue=tuple(candidates[1:]),
        port_fallback_armed=bool(profile.port_fallback_443 and port != 443
                                 and record.port() is not None),
    )


# ---------------------------------------------------------------------------
# advance

def advance(plan: ConnectionPlan, result: AttemptResult) -> ConnectionPlan:
    """Apply one attempt result; returns the successor plan state.

    Each transition changes exactly one axis: the port (fallback to 443),
    the candidate address, or the ECH configuration (one retry).
    """
    last = plan.outstanding
    profile = plan.profile

    if result.outcome == "connected":
        if result.alpn and last.alpn and result.alpn not in last.alpn:
            raise PlanError(f"connected with unoffered alpn {result.alpn!r}")
        return replace(plan, terminal=Terminal("success", result.alpn))

    if result.outcome == "port_refused":
        if plan.port_fallback_armed and last.port != 443:
            retry = replace(last, port=443,
                            annotations=last.annotations + ("port_fallback_443",))
            return replace(plan, attempts=plan.attempts + (retry,),
                           port_fallback_armed=False)
        return replace(plan, terminal=Terminal("hard_fail", "port_refused"))

    if result.outcome == "ip_unreachable":
        if profile.ip_failover is IpFailover.HARD_FAIL:
            return replace(plan, terminal=Terminal("hard_fail", "ip_unreachable"))
        if not plan.ip_queue:
            return replace(plan,
                           terminal=Terminal("hard_fail", "all_addresses_unreachable"))
        (ip, source), rest = plan.ip_queue[0], plan.ip_queue[1:]
        notes = ("ip_failover",)
        if profile.ip_failover is IpFailover.DELAYED_ALTERNATE:
            notes = ("delayed_wait",) + notes
        retry = replace(last, ip=ip, ip_source=source,
                        annotations=last.annotations + notes)
        return replace(plan, attempts=plan.attempts + (retry,), ip_queue=rest)

    if result.outcome == "tls_cert_invalid":
        if last.ech_mode == "split_misdirected":
            return replace(plan, terminal=Terminal(
                "hard_fail", "ech_fallback_certificate_invalid"))
        reason = "tls_cert_invalid"
        if result.detail:
            reason = f"tls_cert_invalid:{result.detail}"
        return replace(plan, terminal=Terminal("hard_fail", reason))

    if result.outcome == "ech_rejected_with_retry":
        if last.ech_mode not in ("shared", "retry_pending"):
            raise PlanError("ech rejection on a non-ech attempt")
        if plan.ech_retry_used or profile.ech_on_mismatch != "retry":
            return replace(plan, terminal=Terminal("hard_fail", "ech_rejected"))
        try:
            retry_list = echmod.parse_config_list(result.retry_payload)
            identity = echmod.first_identity(retry_list)
            cover = echmod.public_name(retry_list)
        except echmod.EchError:
            return replace(plan, terminal=Terminal("hard_fail", "ech_rejected"))
        retry = replace(last, ech_mode="retry_pending", ech_identity=identity,
                        sni_outer=cover,
                        annotations=last.annotations + ("ech_retry",))
        return replace(plan, attempts=plan.attempts + (retry,),
                       ech_retry_used=True)

    if result.outcome == "ech_rejected_terminal":
        if last.ech_mode not in ("shared", "retry_pending"):
            raise PlanError("ech rejection on a non-ech attempt")
        return replace(plan, terminal=Terminal("hard_fail", "ech_rejected"))

    raise PlanError(f"unhandled outcome {result.outcome!r}")
