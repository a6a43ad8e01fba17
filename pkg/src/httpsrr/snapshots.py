"""Domain snapshot model: one scan observation, JSON-serializable.

A snapshot captures everything one scan learned about a single domain on a
single day: per-qtype RRsets with TTLs and the resolver that answered,
DNSSEC signals (RRSIG presence and AD bit per RRset, DS presence), the CNAME
chain, name servers, optional connectivity probes, and an error marker when
the scan could not complete.  Unknown top-level fields survive a load/store
cycle untouched so newer writers do not break older readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import rr

KINDS = ("apex", "www")

_KNOWN_FIELDS = ("date", "domain", "kind", "rrsets", "cname_chain",
                 "ds_present", "ns_names", "probe_results", "error")


def rdata_presentation(record: rr.HttpsRecord) -> str:
    """Just the rdata portion (priority, target, params) of a record."""
    return " ".join(str(record).split()[4:])


@dataclass
class DomainSnapshot:
    date: str                 # "YYYY-MM-DD" or "YYYY-MM-DDTHH" for sub-daily scans
    domain: str               # normalized, trailing dot
    kind: str                 # "apex" | "www"
    # qtype -> {"records": [{"value": str, "ttl": int} |
    #                       {"raw_hex": str, "parse_error": True, "ttl": int}],
    #           "resolver": str, "rrsig": bool, "ad": bool}
    rrsets: dict = field(default_factory=dict)
    cname_chain: list = field(default_factory=list)
    ds_present: Optional[bool] = None     # None = DS never queried
    ns_names: list = field(default_factory=list)
    probe_results: list = field(default_factory=list)
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"bad snapshot kind {self.kind!r}")
        self.domain = rr.normalize_name(self.domain)

    # -- convenience views --------------------------------------------------

    def rrset(self, qtype: str) -> dict:
        return self.rrsets.get(qtype, {})

    def record_values(self, qtype: str) -> list[str]:
        return [entry["value"] for entry in self.rrset(qtype).get("records", [])
                if "value" in entry]

    @property
    def has_https(self) -> bool:
        return bool(self.rrset("HTTPS").get("records"))

    def https_records(self) -> list[rr.HttpsRecord]:
        """Parse stored HTTPS rdata back into records; skips unparsable rows."""
        out = []
        for entry in self.rrset("HTTPS").get("records", []):
            if "value" not in entry:
                continue
            line = f"{self.domain} {entry.get('ttl', 300)} IN HTTPS {entry['value']}"
            try:
                out.append(rr.parse_presentation(line))
            except rr.RecordParseError:
                continue
        return out

    def rrsig_present(self, qtype: str) -> bool:
        return bool(self.rrset(qtype).get("rrsig"))

    def ad_bit(self, qtype: str) -> bool:
        return bool(self.rrset(qtype).get("ad"))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "date": self.date,
            "domain": self.domain,
            "kind": self.kind,
            "rrsets": self.rrsets,
            "cname_chain": self.cname_chain,
            "ds_present": self.ds_present,
            "ns_names": self.ns_names,
            "probe_results": self.probe_results,
            "error": self.error,
        }
        doc.update(self.extra)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "DomainSnapshot":
        extra = {k: v for k, v in doc.items() if k not in _KNOWN_FIELDS}
        return cls(
            date=doc["date"],
            domain=doc["domain"],
            kind=doc["kind"],
            rrsets=doc.get("rrsets", {}),
            cname_chain=doc.get("cname_chain", []),
            ds_present=doc.get("ds_present"),
            ns_names=doc.get("ns_names", []),
            probe_results=doc.get("probe_results", []),
            error=doc.get("error"),
            extra=extra,
        )

    @classmethod
    def from_json(cls, line: str) -> "DomainSnapshot":
        return cls.from_dict(json.loads(line))


def iphint_families(snapshot: DomainSnapshot) -> dict[str, tuple[set, set]]:
    """Per address family: (union of hint IPs, address-record IPs)."""
    hints4: set[str] = set()
    hints6: set[str] = set()
    for record in snapshot.https_records():
        hints4.update(record.ipv4hints())
        hints6.update(record.ipv6hints())
    return {
        "v4": (hints4, set(snapshot.record_values("A"))),
        "v6": (hints6, set(snapshot.record_values("AAAA"))),
    }


def first_ech_payload(snapshot: DomainSnapshot) -> Optional[bytes]:
    for record in snapshot.https_records():
        payload = record.ech_payload()
        if payload is not None:
            return payload
    return None


def group_by_domain(snapshots: Iterable[DomainSnapshot],
                    kind: Optional[str] = None) -> dict[str, list[DomainSnapshot]]:
    """Group a stream by domain, each group sorted by date string."""
    groups: dict[str, list[DomainSnapshot]] = {}
    for snap in snapshots:
        if kind is not None and snap.kind != kind:
            continue
        groups.setdefault(snap.domain, []).append(snap)
    for entries in groups.values():
        entries.sort(key=lambda s: s.date)
    return groups
