"""Metrics over snapshot streams: adoption, provider shares, hint health,
ECH key rotation, and DNSSEC ratios.

Every function here is a pure function of its inputs, so recomputation on
reloaded data is bit-identical.  Aggregations go through a per-domain fold
(:func:`first_per_domain`) followed by an associative merge, which makes
the results independent of snapshot stream order.
"""

from __future__ import annotations

import csv
import ipaddress
import json
import statistics
from collections import Counter
from dataclasses import dataclass
from datetime import date as _date
from typing import Iterable, Mapping, Optional, Sequence

from . import ech, rr
from .snapshots import (
    DomainSnapshot,
    first_ech_payload,
    iphint_families,
)

CF_NS_SUFFIXES = ("ns.cloudflare.com.",)

FAMILIES = ("v4", "v6")


def _members(domain_set: Iterable[str]) -> set[str]:
    members = {rr.normalize_name(d) for d in domain_set}
    if not members:
        raise ValueError("domain set is empty")
    return members


def first_per_domain(snapshots: Iterable[DomainSnapshot],
                     kind: Optional[str] = None,
                     members: Optional[set[str]] = None
                     ) -> dict[str, DomainSnapshot]:
    """One snapshot per domain, chosen by (date, serialized form).

    The tie-break on the serialized snapshot makes the choice total, so the
    result does not depend on stream order.
    """
    chosen: dict[str, DomainSnapshot] = {}
    for snap in snapshots:
        if kind is not None and snap.kind != kind:
            continue
        if members is not None and snap.domain not in members:
            continue
        held = chosen.get(snap.domain)
        if held is None or (snap.date, snap.to_json()) < (held.date,
                                                          held.to_json()):
            chosen[snap.domain] = snap
    return chosen


def merge_counts(*counters: Counter) -> Counter:
    """Associative merge step for per-domain counter folds."""
    total: Counter = Counter()
    for counter in counters:
        total.update(counter)
    return total


# ---------------------------------------------------------------------------
# Domain sets

@dataclass(frozen=True)
class DomainSetSpec:
    mode: str                   # "dynamic" | "overlapping"
    dates: tuple[str, ...]

    def __post_init__(self):
        if self.mode not in ("dynamic", "overlapping"):
            raise ValueError(f"unknown set mode {self.mode!r}")
        if self.mode == "overlapping" and len(self.dates) < 2:
            raise ValueError("overlapping mode needs at least two days")


def overlapping_set(lists_by_date: Mapping[str, Iterable[str]],
                    dates: Sequence[str]) -> set[str]:
    """Domains present in the daily list on every day of the range."""
    result: Optional[set[str]] = None
    for day in dates:
        if day not in lists_by_date:
            raise ValueError(f"missing daily list for {day}")
        names = {rr.normalize_name(d) for d in lists_by_date[day]}
        result = names if result is None else result & names
    if result is None:
        raise ValueError("date range is empty")
    return result


def resolve_domain_set(spec: DomainSetSpec,
                       lists_by_date: Mapping[str, Iterable[str]],
                       day: Optional[str] = None) -> set[str]:
    """A concrete domain set for one analysis day."""
    if spec.mode == "overlapping":
        return overlapping_set(lists_by_date, spec.dates)
    target = day if day is not None else spec.dates[-1]
    if target not in lists_by_date:
        raise ValueError(f"missing daily list for {target}")
    return {rr.normalize_name(d) for d in lists_by_date[target]}


# ---------------------------------------------------------------------------
# Adoption and name servers

def adoption_rate(snapshots: Iterable[DomainSnapshot],
                  domain_set: Iterable[str], kind: str = "apex") -> float:
    """Share of the set whose HTTPS RRset is non-empty, in percent."""
    members = _members(domain_set)
    chosen = first_per_domain(snapshots, kind=kind, members=members)
    bearing = sum(1 for snap in chosen.values() if snap.has_https)
    return 100.0 * bearing / len(members)


def ns_categorize(ns_names: Iterable[str],
                  provider_suffixes: Sequence[str] = CF_NS_SUFFIXES) -> str:
    """full_cf / partial_cf / none_cf by NS suffix; unknown when NS is empty."""
    names = [rr.normalize_name(n) for n in ns_names]
    if not names:
        return "unknown"
    suffixes = [rr.normalize_name(s) for s in provider_suffixes]

    def is_provider(name: str) -> bool:
        return any(name == s or name.endswith("." + s) for s in suffixes)

    matches = [is_provider(name) for name in names]
    if all(matches):
        return "full_cf"
    if any(matches):
        return "partial_cf"
    return "none_cf"


def ns_category_counts(snapshots: Iterable[DomainSnapshot],
                       domain_set: Iterable[str], kind: str = "apex",
                       provider_suffixes: Sequence[str] = CF_NS_SUFFIXES
                       ) -> Counter:
    """Category counts over HTTPS-bearing domains in the set."""
    members = _members(domain_set)
    chosen = first_per_domain(snapshots, kind=kind, members=members)
    folds = [Counter([ns_categorize(snap.ns_names, provider_suffixes)])
             for snap in chosen.values() if snap.has_https]
    return merge_counts(*folds)


# ---------------------------------------------------------------------------
# Cloudflare default-shape classifier

@dataclass(frozen=True)
class CfDefaultSpec:
    anycast_v4: tuple[ipaddress.IPv4Network, ...]
    anycast_v6: tuple[ipaddress.IPv6Network, ...]

    @classmethod
    def from_strings(cls, v4: Iterable[str], v6: Iterable[str]
                     ) -> "CfDefaultSpec":
        return cls(
            anycast_v4=tuple(ipaddress.IPv4Network(p) for p in v4),
            anycast_v6=tuple(ipaddress.IPv6Network(p) for p in v6),
        )


def default_cf_spec() -> CfDefaultSpec:
    """Spec built from well-known published anycast ranges.

    These cover the common assignments; real runs should supply the ranges
    they care about from configuration.
    """
    return CfDefaultSpec.from_strings(
        v4=("104.16.0.0/13", "172.64.0.0/13", "162.159.0.0/16"),
        v6=("2606:4700::/32",),
    )


def classify_cf_default(record: rr.HttpsRecord, spec: CfDefaultSpec) -> str:
    """"default" iff the record has exactly the auto-generated shape."""
    if record.svc_priority != 1:
        return "customized"
    if record.target_name != ".":
        return "customized"
    keys = {param.key for param in record.params}
    if keys != {1, 4, 6}:    # alpn, ipv4hint, ipv6hint and nothing else
        return "customized"
    if set(record.alpn_ids() or []) != {"h2", "h3"}:
        return "customized"
    v4 = record.ipv4hints()
    v6 = record.ipv6hints()
    if not v4 or not v6:
        return "customized"
    for hint in v4:
        addr = ipaddress.IPv4Address(hint)
        if not any(addr in net for net in spec.anycast_v4):
            return "customized"
    for hint in v6:
        addr = ipaddress.IPv6Address(hint)
        if not any(addr in net for net in spec.anycast_v6):
            return "customized"
    return "default"


# ---------------------------------------------------------------------------
# IP hint consistency

def iphint_consistency(snapshot: DomainSnapshot) -> dict[str, str]:
    """Per family: match / mismatch / hint_absent, by set equality."""
    out = {}
    for family, (hints, addrs) in iphint_families(snapshot).items():
        if not hints:
            out[family] = "hint_absent"
        elif hints == addrs:
            out[family] = "match"
        else:
            out[family] = "mismatch"
    return out


def _day_of(snapshot: DomainSnapshot) -> _date:
    return _date.fromisoformat(snapshot.date.split("T")[0])


def _calendar_runs(flagged_days: Iterable[tuple[_date, bool]]) -> list[int]:
    """Run lengths of True states over consecutive calendar days.

    A gap in the day sequence ends the current run even if the state holds
    on both sides: missing observations are never interpolated.
    """
    runs: list[int] = []
    current = 0
    previous: Optional[_date] = None
    for day, flag in flagged_days:
        if flag:
            if current and previous is not None and (day - previous).days == 1:
                current += 1
            else:
                if current:
                    runs.append(current)
                current = 1
        else:
            if current:
                runs.append(current)
            current = 0
        previous = day
    if current:
        runs.append(current)
    return runs


def mismatch_durations(series: Sequence[DomainSnapshot],
                       family: str = "v4") -> list[int]:
    """Lengths, in days, of each consecutive-day hint-mismatch run."""
    if family not in FAMILIES:
        raise ValueError(f"unknown address family {family!r}")
    flagged = [(_day_of(snap),
                iphint_consistency(snap).get(family) == "mismatch")
               for snap in series]
    return _calendar_runs(flagged)


# ---------------------------------------------------------------------------
# ECH key rotation

@dataclass(frozen=True)
class RotationSeries:
    domain: str
    timestamps: tuple[float, ...]                        # epoch seconds
    identities: tuple[Optional[ech.EchKeyIdentity], ...]  # None = no usable ECH

    def __post_init__(self):
        if len(self.timestamps) != len(self.identities):
            raise ValueError("timestamps and identities differ in length")
        for earlier, later in zip(self.timestamps, self.timestamps[1:]):
            if later <= earlier:
                raise ValueError("timestamps must be strictly increasing")

    @classmethod
    def from_snapshots(cls, domain: str,
                       scans: Sequence[tuple[float, DomainSnapshot]]
                       ) -> "RotationSeries":
        stamps: list[float] = []
        idents: list[Optional[ech.EchKeyIdentity]] = []
        for stamp, snap in scans:
            stamps.append(float(stamp))
            idents.append(_identity_of(snap))
        return cls(domain=rr.normalize_name(domain),
                   timestamps=tuple(stamps), identities=tuple(idents))


def _identity_of(snapshot: DomainSnapshot) -> Optional[ech.EchKeyIdentity]:
    payload = first_ech_payload(snapshot)
    if payload is None:
        return None
    try:
        return ech.first_identity(ech.parse_config_list(payload))
    except ech.EchError:
        return None


def ech_rotation(series: RotationSeries) -> dict:
    """Identity lifetimes for one domain.

    The scan interval is the median timestamp spacing, snapped to exactly
    one hour when within five minutes of it.  Each maximal streak of one
    identity contributes streak-length x interval hours; a single-scan
    sighting therefore reports one interval.
    """
    if len(series.timestamps) < 2:
        raise ValueError("need at least two scans to infer an interval")
    diffs = [later - earlier for earlier, later
             in zip(series.timestamps, series.timestamps[1:])]
    interval_hours = statistics.median(diffs) / 3600.0
    if abs(interval_hours - 1.0) <= 5.0 / 60.0:
        interval_hours = 1.0

    runs: list[tuple[ech.EchKeyIdentity, int]] = []
    current: Optional[ech.EchKeyIdentity] = None
    count = 0
    for ident in series.identities:
        if ident is None:
            if count:
                runs.append((current, count))
            current, count = None, 0
        elif ident == current:
            count += 1
        else:
            if count:
                runs.append((current, count))
            current, count = ident, 1
    if count:
        runs.append((current, count))

    run_dicts = [{"identity": ident, "scans": scans,
                  "duration_hours": scans * interval_hours}
                 for ident, scans in runs]
    mean = (sum(r["duration_hours"] for r in run_dicts) / len(run_dicts)
            if run_dicts else None)
    return {
        "domain": series.domain,
        "interval_hours": interval_hours,
        "runs": run_dicts,
        "mean_duration_hours": mean,
        "span_hours": len(series.timestamps) * interval_hours,
    }


def ech_rotation_report(series_list: Iterable[RotationSeries]) -> dict:
    """Per-domain mean lifetimes plus the pooled mean over every run."""
    per_domain: dict[str, float] = {}
    durations: list[float] = []
    for series in series_list:
        result = ech_rotation(series)
        durations.extend(r["duration_hours"] for r in result["runs"])
        if result["mean_duration_hours"] is not None:
            per_domain[series.domain] = result["mean_duration_hours"]
    overall = sum(durations) / len(durations) if durations else None
    return {
        "per_domain_mean_hours": per_domain,
        "overall_mean_hours": overall,
        "run_count": len(durations),
    }


# ---------------------------------------------------------------------------
# DNSSEC and alpn

def dnssec_stats(snapshots: Iterable[DomainSnapshot],
                 domain_set: Iterable[str], kind: str = "apex") -> dict:
    """Signed / validated shares of HTTPS-bearing domains, and the share of
    signed domains whose parent carries no DS (insecure delegations)."""
    members = _members(domain_set)
    chosen = first_per_domain(snapshots, kind=kind, members=members)
    bearing = [s for s in chosen.values() if s.has_https]
    signed = [s for s in bearing if s.rrsig_present("HTTPS")]
    validated = [s for s in signed if s.ad_bit("HTTPS")]
    insecure = [s for s in signed if not s.ds_present]
    total = len(bearing)
    return {
        "signed_pct": 100.0 * len(signed) / total if total else 0.0,
        "validated_pct": 100.0 * len(validated) / total if total else 0.0,
        "insecure_among_signed_pct":
            100.0 * len(insecure) / len(signed) if signed else 0.0,
    }


def alpn_distribution(snapshots: Iterable[DomainSnapshot],
                      domain_set: Iterable[str],
                      kind: str = "apex") -> dict[str, float]:
    """Per-protocol share of HTTPS-bearing domains.

    A domain counts toward every protocol any of its records advertises, so
    the shares overlap rather than partition.  Domains whose records carry
    no alpn identifiers at all land in the "no_alpn" bucket.
    """
    members = _members(domain_set)
    chosen = first_per_domain(snapshots, kind=kind, members=members)
    bearing = [s for s in chosen.values() if s.has_https]
    if not bearing:
        return {}
    folds = []
    for snap in bearing:
        ids: set[str] = set()
        for record in snap.https_records():
            ids.update(record.alpn_ids() or [])
        folds.append(Counter(ids if ids else {"no_alpn"}))
    counts = merge_counts(*folds)
    return {proto: 100.0 * n / len(bearing)
            for proto, n in sorted(counts.items())}


# ---------------------------------------------------------------------------
# Intermittency

def intermittency_report(series: Sequence[DomainSnapshot]) -> dict:
    """Presence stability for one domain's day-ordered series.

    NS correlation flags only use days where the record was present, since
    the scanner queries NS solely on those days:
      same_ns_throughout      every present day saw the same non-empty NS set
      ns_changed_at_toggle    the NS set differs across an absence gap
      ns_absent_at_deactivation  the last present day before a toggle had no NS
    """
    if len(series) < 2:
        raise ValueError("need at least two days of observations")
    present = [snap.has_https for snap in series]
    toggles = sum(1 for a, b in zip(present, present[1:]) if a != b)
    active_runs = _calendar_runs(
        (_day_of(snap), flag) for snap, flag in zip(series, present))

    ns_by_index = [(i, frozenset(series[i].ns_names))
                   for i in range(len(series)) if present[i]]
    same_ns = bool(ns_by_index) and bool(ns_by_index[0][1]) and all(
        ns == ns_by_index[0][1] for _i, ns in ns_by_index)

    changed_at_toggle = False
    for (i, ns_a), (j, ns_b) in zip(ns_by_index, ns_by_index[1:]):
        if j > i + 1 and ns_a != ns_b:
            changed_at_toggle = True
            break

    absent_at_deactivation = any(
        present[i] and not present[i + 1] and not series[i].ns_names
        for i in range(len(series) - 1))

    return {
        "status": "intermittent" if toggles else "stable",
        "always_present": all(present),
        "active_runs": active_runs,
        "flags": {
            "same_ns_throughout": same_ns,
            "ns_changed_at_toggle": changed_at_toggle,
            "ns_absent_at_deactivation": absent_at_deactivation,
        },
    }


# ---------------------------------------------------------------------------
# Report output

def write_csv_report(path, header: Sequence[str],
                     rows: Iterable[Sequence], *, config_digest: str = ""):
    with open(path, "w", encoding="utf-8", newline="") as out:
        if config_digest:
            out.write(f"# config_digest={config_digest}\n")
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_json_report(path, metric: str, data, *, config_digest: str = ""):
    doc = {"metric": metric, "config_digest": config_digest, "data": data}
    with open(path, "w", encoding="utf-8") as out:
        json.dump(doc, out, indent=2, sort_keys=True, default=_json_default)
        out.write("\n")


def _json_default(value):
    if isinstance(value, ech.EchKeyIdentity):
        return value.short()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")
