"""Deterministic synthetic snapshot corpus for analysis-vs-recount checks.

Builds raw snapshot dicts without importing the package under test, so the
corpus and the recount oracle share no code with the implementation.

Guarantees the recount relies on:
  - alpn/hint values never need presentation-format escaping
  - IPv6 strings are written in canonical compressed form
  - exactly one snapshot per (domain, day), kind always "apex"
  - occasional error-days (timeout) carry no rrsets at all

The default shape is 500 domains x 20 days = 10,000 snapshots.
"""

import json
import random
from datetime import date, timedelta

V4_POOL = [f"192.0.2.{i}" for i in range(1, 64)]
V4_ALT_POOL = [f"198.51.100.{i}" for i in range(1, 64)]
V6_POOL = [f"2001:db8::{i:x}" for i in range(1, 64)]
V6_ALT_POOL = [f"2001:db8:1::{i:x}" for i in range(1, 64)]

CF_NS = [
    ["ada.ns.cloudflare.com.", "bob.ns.cloudflare.com."],
    ["coco.ns.cloudflare.com.", "dana.ns.cloudflare.com."],
]
OTHER_NS = [
    ["ns1.hoster.net.", "ns2.hoster.net."],
    ["dns1.parked.org.", "dns2.parked.org."],
    ["a.dns-farm.io.", "b.dns-farm.io."],
]
MIXED_NS = [["ada.ns.cloudflare.com.", "ns1.hoster.net."]]

ALPN_CHOICES = [
    ["h2", "h3"], ["h2", "h3"], ["h2"], ["h3"],
    ["h2", "http/1.1"], None, ["h3-29", "h3"],
]


def _rdata(priority, alpn, v4hints, v6hints):
    parts = [str(priority), "."]
    if alpn:
        parts.append("alpn=" + ",".join(alpn))
    if v4hints:
        parts.append("ipv4hint=" + ",".join(v4hints))
    if v6hints:
        parts.append("ipv6hint=" + ",".join(v6hints))
    return " ".join(parts)


def _rrset(records, rrsig, ad):
    return {"records": records, "resolver": "8.8.8.8",
            "rrsig": rrsig, "ad": ad}


class _DomainPlan:
    def __init__(self, rng, index, n_days):
        self.domain = f"d{index:03d}.example."
        roll = rng.random()
        if roll < 0.60:
            self.presence = [True] * n_days
        elif roll < 0.75:
            self.presence = [False] * n_days
        else:
            self.presence = [rng.random() < 0.7 for _ in range(n_days)]
        self.error_days = {i for i in range(n_days) if rng.random() < 0.02}

        self.signed = rng.random() < 0.35
        self.ad_flag = self.signed and rng.random() < 0.6
        self.has_ds = (self.signed and rng.random() < 0.5) or (
            not self.signed and rng.random() < 0.05)

        self.ns_main = list(rng.choice(CF_NS + OTHER_NS + MIXED_NS))
        self.ns_change_day = (rng.randrange(n_days)
                              if rng.random() < 0.2 else None)
        self.ns_after = list(rng.choice(CF_NS + OTHER_NS))
        self.empty_ns_at_deactivation = rng.random() < 0.1

        self.alpn = rng.choice(ALPN_CHOICES)
        self.two_records = rng.random() < 0.15
        self.second_alpn = rng.choice(ALPN_CHOICES)

        hint_roll = rng.random()
        self.hint_mode = ("none" if hint_roll < 0.25
                          else "consistent" if hint_roll < 0.65 else "flappy")
        self.v4 = sorted(rng.sample(V4_POOL, rng.choice([1, 2])))
        self.v4_alt = sorted(rng.sample(V4_ALT_POOL, rng.choice([1, 2])))
        self.want_v6 = rng.random() < 0.5
        self.v6 = sorted(rng.sample(V6_POOL, 1))
        self.v6_alt = sorted(rng.sample(V6_ALT_POOL, 1))

        # Sticky mismatch state so multi-day runs actually form.
        self.mismatch = []
        state = rng.random() < 0.5
        for _ in range(n_days):
            self.mismatch.append(state)
            if rng.random() > 0.75:
                state = not state

    def ns_for(self, day_index):
        if (self.empty_ns_at_deactivation
                and day_index + 1 < len(self.presence)
                and self.presence[day_index]
                and not self.presence[day_index + 1]):
            return []
        if self.ns_change_day is not None and day_index >= self.ns_change_day:
            return list(self.ns_after)
        return list(self.ns_main)

    def doc_for(self, day, day_index):
        doc = {
            "date": day,
            "domain": self.domain,
            "kind": "apex",
            "rrsets": {},
            "cname_chain": [],
            "ds_present": None,
            "ns_names": [],
            "probe_results": [],
            "error": None,
        }
        if day_index in self.error_days:
            doc["error"] = "timeout"
            return doc
        if not self.presence[day_index]:
            return doc

        if self.hint_mode == "none":
            v4h, v6h = [], []
            a_recs, aaaa_recs = self.v4, (self.v6 if self.want_v6 else [])
        elif self.hint_mode == "consistent" or not self.mismatch[day_index]:
            v4h = self.v4
            v6h = self.v6 if self.want_v6 else []
            a_recs, aaaa_recs = self.v4, (self.v6 if self.want_v6 else [])
        else:
            v4h = self.v4
            v6h = self.v6 if self.want_v6 else []
            a_recs = self.v4_alt
            aaaa_recs = self.v6_alt if self.want_v6 else []

        records = [{"value": _rdata(1, self.alpn, v4h, v6h), "ttl": 300}]
        if self.two_records:
            records.append(
                {"value": _rdata(2, self.second_alpn, [], []), "ttl": 300})
        ns_today = self.ns_for(day_index)
        doc["rrsets"]["HTTPS"] = _rrset(records, self.signed, self.ad_flag)
        doc["rrsets"]["A"] = _rrset(
            [{"value": ip, "ttl": 300} for ip in a_recs], False, self.ad_flag)
        if aaaa_recs:
            doc["rrsets"]["AAAA"] = _rrset(
                [{"value": ip, "ttl": 300} for ip in aaaa_recs],
                False, self.ad_flag)
        if ns_today:
            doc["rrsets"]["NS"] = _rrset(
                [{"value": n, "ttl": 3600} for n in ns_today],
                False, self.ad_flag)
        doc["ns_names"] = sorted(ns_today)
        doc["ds_present"] = self.has_ds
        return doc


def generate_corpus(seed=0xC0FFEE, n_domains=500, n_days=20,
                    start=(2026, 4, 1)):
    """Returns (jsonl lines, lists_by_date, days)."""
    rng = random.Random(seed)
    days = [(date(*start) + timedelta(days=i)).isoformat()
            for i in range(n_days)]
    plans = [_DomainPlan(rng, i, n_days) for i in range(n_domains)]

    lists_by_date = {}
    for day in days:
        # Membership churn: a few domains drop out of each day's ranked list.
        lists_by_date[day] = [p.domain for p in plans if rng.random() > 0.03]

    lines = []
    for plan in plans:
        for day_index, day in enumerate(days):
            doc = plan.doc_for(day, day_index)
            lines.append(json.dumps(doc, sort_keys=True,
                                    separators=(",", ":")))
    return lines, lists_by_date, days


if __name__ == "__main__":
    corpus_lines, lists, all_days = generate_corpus()
    print(f"{len(corpus_lines)} snapshots over {len(all_days)} days")
