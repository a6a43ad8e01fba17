import base64
import json
import random
from collections import Counter

import pytest

import gen_analysis_corpus
import gen_rotation
import recount
from httpsrr import ech, rr
from httpsrr.analysis import (
    CfDefaultSpec,
    DomainSetSpec,
    RotationSeries,
    adoption_rate,
    alpn_distribution,
    classify_cf_default,
    default_cf_spec,
    dnssec_stats,
    ech_rotation,
    ech_rotation_report,
    first_per_domain,
    intermittency_report,
    iphint_consistency,
    merge_counts,
    mismatch_durations,
    ns_categorize,
    ns_category_counts,
    overlapping_set,
    resolve_domain_set,
    write_csv_report,
    write_json_report,
)
from httpsrr.snapshots import DomainSnapshot, group_by_domain


def https_snap(domain, date, rdatas=("1 . alpn=h2",), *, kind="apex",
               rrsig=False, ad=False, ds=None, ns=(), a=(), aaaa=()):
    rrsets = {"HTTPS": {"records": [{"value": v, "ttl": 300} for v in rdatas],
                        "resolver": "8.8.8.8", "rrsig": rrsig, "ad": ad}}
    if a:
        rrsets["A"] = {"records": [{"value": ip, "ttl": 300} for ip in a]}
    if aaaa:
        rrsets["AAAA"] = {"records": [{"value": ip, "ttl": 300}
                                      for ip in aaaa]}
    return DomainSnapshot(date=date, domain=domain, kind=kind, rrsets=rrsets,
                          ds_present=ds, ns_names=sorted(ns))


def empty_snap(domain, date, kind="apex"):
    return DomainSnapshot(date=date, domain=domain, kind=kind)


# ---------------------------------------------------------------------------
# Adoption and sets

def test_adoption_three_of_ten():
    members = [f"d{i}.example" for i in range(10)]
    snaps = [https_snap(f"d{i}.example.", "2026-05-10") for i in range(3)]
    snaps += [empty_snap(f"d{i}.example.", "2026-05-10") for i in range(3, 7)]
    # d7..d9 were never scanned; they count as non-bearing.
    assert adoption_rate(snaps, members) == 30.0


def test_adoption_all_bearing():
    members = ["a.example", "b.example"]
    snaps = [https_snap("a.example.", "2026-05-10"),
             https_snap("b.example.", "2026-05-10")]
    assert adoption_rate(snaps, members) == 100.0


def test_adoption_empty_set_raises():
    with pytest.raises(ValueError):
        adoption_rate([], [])


def test_adoption_filters_kind_and_membership():
    snaps = [https_snap("a.example.", "2026-05-10", kind="www"),
             https_snap("other.example.", "2026-05-10")]
    assert adoption_rate(snaps, ["a.example"], kind="apex") == 0.0
    assert adoption_rate(snaps, ["A.EXAMPLE."], kind="www") == 100.0


def test_overlapping_set_trivials():
    lists = {"d1": ["a.com", "b.com"], "d2": ["b.com", "a.com"]}
    assert overlapping_set(lists, ["d1", "d2"]) == {"a.com.", "b.com."}
    lists["d2"] = ["a.com"]
    assert overlapping_set(lists, ["d1", "d2"]) == {"a.com."}


def test_overlapping_set_missing_day_named():
    with pytest.raises(ValueError, match="2026-05-11"):
        overlapping_set({"2026-05-10": ["a.com"]},
                        ["2026-05-10", "2026-05-11"])


def test_domain_set_spec_validation():
    with pytest.raises(ValueError):
        DomainSetSpec(mode="weekly", dates=("d1",))
    with pytest.raises(ValueError):
        DomainSetSpec(mode="overlapping", dates=("d1",))
    spec = DomainSetSpec(mode="dynamic", dates=("d1",))
    assert resolve_domain_set(spec, {"d1": ["x.com"]}) == {"x.com."}
    both = DomainSetSpec(mode="overlapping", dates=("d1", "d2"))
    lists = {"d1": ["x.com", "y.com"], "d2": ["x.com"]}
    assert resolve_domain_set(both, lists) == {"x.com."}


# ---------------------------------------------------------------------------
# Name servers

def test_ns_categorize_outcomes():
    assert ns_categorize(["amir.ns.cloudflare.com."]) == "full_cf"
    assert ns_categorize(["ns1.godaddy-like.example."]) == "none_cf"
    assert ns_categorize(["amir.ns.cloudflare.com.",
                          "ns1.hoster.net."]) == "partial_cf"
    assert ns_categorize([]) == "unknown"


def test_ns_categorize_custom_suffix_and_exact_match():
    assert ns_categorize(["dns.provider.io."],
                         provider_suffixes=("provider.io.",)) == "full_cf"
    assert ns_categorize(["provider.io."],
                         provider_suffixes=("provider.io.",)) == "full_cf"
    assert ns_categorize(["evilprovider.io."],
                         provider_suffixes=("provider.io.",)) == "none_cf"


def test_ns_category_counts():
    snaps = [
        https_snap("a.example.", "2026-05-10", ns=["x.ns.cloudflare.com."]),
        https_snap("b.example.", "2026-05-10", ns=["ns1.other.net."]),
        https_snap("c.example.", "2026-05-10"),
        empty_snap("d.example.", "2026-05-10"),
    ]
    counts = ns_category_counts(
        snaps, ["a.example", "b.example", "c.example", "d.example"])
    assert counts == Counter({"full_cf": 1, "none_cf": 1, "unknown": 1})


# ---------------------------------------------------------------------------
# Cloudflare default classifier

DEFAULT_RDATA = ("1 . alpn=h2,h3 ipv4hint=104.16.1.1 "
                 "ipv6hint=2606:4700::1")


def cf_record(rdata=DEFAULT_RDATA):
    return rr.parse_presentation(f"cf.example. 300 IN HTTPS {rdata}")


def test_cf_default_shape_classifies_default():
    assert classify_cf_default(cf_record(), default_cf_spec()) == "default"


@pytest.mark.parametrize("rdata", [
    "1 . alpn=h2 ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",      # h3 gone
    "0 cdn.example.",                                             # alias
    "2 . alpn=h2,h3 ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",   # priority
    "1 cdn.example. alpn=h2,h3 ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",
    "1 . alpn=h2,h3 port=443 ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",
    "1 . alpn=h2,h3 ipv4hint=104.16.1.1",                         # no v6 hint
    "1 . alpn=h2,h3 ipv6hint=2606:4700::1",                       # no v4 hint
    "1 . ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",              # no alpn
    "1 . alpn=h2,h3 ipv4hint=9.9.9.9 ipv6hint=2606:4700::1",      # v4 range
    "1 . alpn=h2,h3 ipv4hint=104.16.1.1 ipv6hint=2001:db8::1",    # v6 range
    "1 . alpn=h2,h3,h3-29 ipv4hint=104.16.1.1 ipv6hint=2606:4700::1",
])
def test_cf_default_perturbations_classify_customized(rdata):
    assert classify_cf_default(cf_record(rdata),
                               default_cf_spec()) == "customized"


def test_cf_spec_from_strings_validates():
    spec = CfDefaultSpec.from_strings(["10.0.0.0/8"], ["fd00::/8"])
    assert classify_cf_default(
        cf_record("1 . alpn=h2,h3 ipv4hint=10.1.2.3 ipv6hint=fd00::1"),
        spec) == "default"
    with pytest.raises(ValueError):
        CfDefaultSpec.from_strings(["not-a-prefix"], [])


# ---------------------------------------------------------------------------
# Hint consistency

def test_iphint_consistency_states():
    match = https_snap("a.example.", "2026-05-10",
                       rdatas=("1 . ipv4hint=1.2.3.4",), a=["1.2.3.4"])
    assert iphint_consistency(match) == {"v4": "match", "v6": "hint_absent"}
    mismatch = https_snap("a.example.", "2026-05-10",
                          rdatas=("1 . ipv4hint=1.2.3.4",), a=["2.2.3.4"])
    assert iphint_consistency(mismatch)["v4"] == "mismatch"
    bare = https_snap("a.example.", "2026-05-10", a=["1.2.3.4"])
    assert iphint_consistency(bare) == {"v4": "hint_absent",
                                        "v6": "hint_absent"}


def mismatch_day(domain, date, mismatched):
    addr = "9.9.9.9" if mismatched else "1.2.3.4"
    return https_snap(domain, date, rdatas=("1 . ipv4hint=1.2.3.4",),
                      a=[addr])


def test_mismatch_durations_runs():
    days = ["2026-05-10", "2026-05-11", "2026-05-12", "2026-05-13",
            "2026-05-14"]
    flags = [True, True, True, False, True]
    series = [mismatch_day("a.example.", d, f) for d, f in zip(days, flags)]
    assert mismatch_durations(series) == [3, 1]


def test_mismatch_durations_all_match():
    series = [mismatch_day("a.example.", f"2026-05-1{i}", False)
              for i in range(3)]
    assert mismatch_durations(series) == []


def test_mismatch_durations_gap_breaks_run():
    series = [mismatch_day("a.example.", d, True)
              for d in ("2026-05-10", "2026-05-11",
                        "2026-05-13", "2026-05-14")]
    assert mismatch_durations(series) == [2, 2]


def test_mismatch_durations_v6_and_bad_family():
    snap = https_snap("a.example.", "2026-05-10",
                      rdatas=("1 . ipv6hint=2001:db8::1",),
                      aaaa=["2001:db8::2"])
    assert mismatch_durations([snap], family="v6") == [1]
    with pytest.raises(ValueError):
        mismatch_durations([snap], family="v5")


# ---------------------------------------------------------------------------
# Rotation

def ident(tag):
    return ech.first_identity(ech.parse_config_list(
        ech.build_config_list(ech.build_config(
            config_id=7, public_key=tag.encode().ljust(32, b"\0"),
            public_name="cover.example"))))


def series_of(identities, *, spacing=3600.0):
    stamps = tuple(1000.0 + i * spacing for i in range(len(identities)))
    return RotationSeries(domain="a.example.", timestamps=stamps,
                          identities=tuple(identities))


def test_rotation_series_validation():
    with pytest.raises(ValueError):
        RotationSeries(domain="a.example.", timestamps=(1.0, 1.0),
                       identities=(None, None))
    with pytest.raises(ValueError):
        RotationSeries(domain="a.example.", timestamps=(1.0,),
                       identities=(None, None))


def test_rotation_two_consecutive_scans_is_two_hours():
    key = ident("k1")
    result = ech_rotation(series_of([key, key, None]))
    assert result["interval_hours"] == 1.0
    assert result["runs"] == [
        {"identity": key, "scans": 2, "duration_hours": 2.0}]
    assert result["mean_duration_hours"] == 2.0


def test_rotation_single_sighting_is_one_interval():
    result = ech_rotation(series_of([ident("k1"), None, None]))
    assert result["runs"][0]["duration_hours"] == 1.0


def test_rotation_gap_splits_same_identity():
    key = ident("k1")
    result = ech_rotation(series_of([key, None, key]))
    assert [r["scans"] for r in result["runs"]] == [1, 1]


def test_rotation_interval_snap_and_scaling():
    key = ident("k1")
    hourlyish = ech_rotation(series_of([key, key], spacing=3660.0))
    assert hourlyish["interval_hours"] == 1.0
    half = ech_rotation(series_of([key, key], spacing=1800.0))
    assert half["interval_hours"] == 0.5
    assert half["runs"][0]["duration_hours"] == 1.0


def test_rotation_needs_two_scans():
    with pytest.raises(ValueError):
        ech_rotation(series_of([ident("k1")]))


def test_rotation_report_pools_runs():
    a, b, c = ident("a"), ident("b"), ident("c")
    series_one = series_of([a, a, b, b])
    series_two = RotationSeries(domain="b.example.",
                                timestamps=(0.0, 3600.0),
                                identities=(c, None))
    report = ech_rotation_report([series_one, series_two])
    assert report["per_domain_mean_hours"] == {"a.example.": 2.0,
                                               "b.example.": 1.0}
    assert report["overall_mean_hours"] == pytest.approx(5.0 / 3.0)
    assert report["run_count"] == 3


def rotation_snapshot(payload, index):
    if payload is None:
        return empty_snap("r.example.", f"scan-{index:03d}")
    b64 = base64.b64encode(payload).decode()
    return https_snap("r.example.", f"scan-{index:03d}",
                      rdatas=(f"1 . alpn=h2 ech={b64}",))


def test_rotation_estimator_recovers_generated_schedule():
    for entry in gen_rotation.generate_rotation(seed=11, n_domains=6,
                                                n_scans=48):
        scans = [(ts, rotation_snapshot(payload, i))
                 for i, (ts, payload) in enumerate(
                     zip(entry["timestamps"], entry["payloads"]))]
        series = RotationSeries.from_snapshots(entry["domain"], scans)
        result = ech_rotation(series)
        assert result["interval_hours"] == 1.0
        assert [r["scans"] for r in result["runs"]] == entry["truth_runs"]
        truth_mean = sum(entry["truth_runs"]) / len(entry["truth_runs"])
        assert result["mean_duration_hours"] == pytest.approx(truth_mean)
        durations = sum(r["duration_hours"] for r in result["runs"])
        assert durations <= result["span_hours"] + 1e-9


# ---------------------------------------------------------------------------
# DNSSEC and alpn

def test_dnssec_stats_ratios():
    snaps = []
    for i in range(10):
        signed = i < 4
        snaps.append(https_snap(f"d{i}.example.", "2026-05-10",
                                rrsig=signed, ad=signed and i < 2,
                                ds=signed and i % 2 == 0))
    stats = dnssec_stats(snaps, [f"d{i}.example" for i in range(10)])
    assert stats["signed_pct"] == 40.0
    assert stats["validated_pct"] == 20.0
    # Signed domains without DS (i = 1, 3) out of four signed.
    assert stats["insecure_among_signed_pct"] == 50.0


def test_dnssec_unqueried_ds_counts_insecure():
    snaps = [https_snap("a.example.", "2026-05-10", rrsig=True, ds=None)]
    stats = dnssec_stats(snaps, ["a.example"])
    assert stats["insecure_among_signed_pct"] == 100.0


def test_dnssec_no_bearing_domains():
    stats = dnssec_stats([empty_snap("a.example.", "2026-05-10")],
                         ["a.example"])
    assert stats == {"signed_pct": 0.0, "validated_pct": 0.0,
                     "insecure_among_signed_pct": 0.0}


def test_alpn_shares_overlap():
    snaps = [https_snap(f"d{i}.example.", "2026-05-10",
                        rdatas=("1 . alpn=h2,h3",)) for i in range(4)]
    dist = alpn_distribution(snaps, [f"d{i}.example" for i in range(4)])
    assert dist == {"h2": 100.0, "h3": 100.0}


def test_alpn_draft_and_no_alpn_buckets():
    snaps = [
        https_snap("a.example.", "2026-05-10", rdatas=("1 . alpn=h3-29",)),
        https_snap("b.example.", "2026-05-10", rdatas=("1 .",)),
        https_snap("c.example.", "2026-05-10",
                   rdatas=("1 . alpn=h2", "2 . alpn=h3")),
        empty_snap("d.example.", "2026-05-10"),
    ]
    dist = alpn_distribution(snaps, ["a.example", "b.example", "c.example",
                                     "d.example"])
    assert dist == {"h2": pytest.approx(100.0 / 3),
                    "h3": pytest.approx(100.0 / 3),
                    "h3-29": pytest.approx(100.0 / 3),
                    "no_alpn": pytest.approx(100.0 / 3)}


def test_alpn_without_bearing_domains():
    assert alpn_distribution([empty_snap("a.example.", "2026-05-10")],
                             ["a.example"]) == {}


# ---------------------------------------------------------------------------
# Intermittency

def test_intermittency_with_constant_ns():
    ns = ["ada.ns.cloudflare.com."]
    series = [https_snap("a.example.", "2026-05-10", ns=ns),
              empty_snap("a.example.", "2026-05-11"),
              https_snap("a.example.", "2026-05-12", ns=ns)]
    report = intermittency_report(series)
    assert report["status"] == "intermittent"
    assert not report["always_present"]
    assert report["active_runs"] == [1, 1]
    assert report["flags"]["same_ns_throughout"]
    assert not report["flags"]["ns_changed_at_toggle"]
    assert not report["flags"]["ns_absent_at_deactivation"]


def test_intermittency_ns_change_across_gap():
    series = [https_snap("a.example.", "2026-05-10", ns=["ns1.old.net."]),
              empty_snap("a.example.", "2026-05-11"),
              https_snap("a.example.", "2026-05-12", ns=["ns1.new.net."])]
    flags = intermittency_report(series)["flags"]
    assert flags["ns_changed_at_toggle"]
    assert not flags["same_ns_throughout"]


def test_intermittency_ns_absent_at_deactivation():
    series = [https_snap("a.example.", "2026-05-10", ns=[]),
              empty_snap("a.example.", "2026-05-11")]
    flags = intermittency_report(series)["flags"]
    assert flags["ns_absent_at_deactivation"]
    assert not flags["same_ns_throughout"]


def test_intermittency_stable_series():
    series = [https_snap("a.example.", f"2026-05-1{i}",
                         ns=["ns1.host.net."]) for i in range(3)]
    report = intermittency_report(series)
    assert report["status"] == "stable"
    assert report["always_present"]
    assert report["active_runs"] == [3]


def test_intermittency_needs_two_days():
    with pytest.raises(ValueError):
        intermittency_report([empty_snap("a.example.", "2026-05-10")])


# ---------------------------------------------------------------------------
# Order independence (map-reduce contract)

def test_metrics_ignore_stream_order():
    lines, lists, days = gen_analysis_corpus.generate_corpus(
        seed=5, n_domains=40, n_days=6)
    snaps = [DomainSnapshot.from_json(line) for line in lines]
    shuffled = snaps[:]
    random.Random(99).shuffle(shuffled)
    members = lists[days[0]]
    day_snaps = [s for s in snaps if s.date == days[0]]
    day_shuffled = [s for s in shuffled if s.date == days[0]]
    assert adoption_rate(day_snaps, members) == adoption_rate(
        day_shuffled, members)
    assert dnssec_stats(day_snaps, members) == dnssec_stats(
        day_shuffled, members)
    assert alpn_distribution(day_snaps, members) == alpn_distribution(
        day_shuffled, members)
    assert ns_category_counts(day_snaps, members) == ns_category_counts(
        day_shuffled, members)


def test_first_per_domain_tie_break_is_total():
    early = https_snap("a.example.", "2026-05-10")
    late = https_snap("a.example.", "2026-05-11")
    assert first_per_domain([late, early])["a.example."] == early
    twin_a = https_snap("a.example.", "2026-05-10", rdatas=("1 . alpn=h2",))
    twin_b = https_snap("a.example.", "2026-05-10", rdatas=("1 . alpn=h3",))
    pick_ab = first_per_domain([twin_a, twin_b])["a.example."]
    pick_ba = first_per_domain([twin_b, twin_a])["a.example."]
    assert pick_ab == pick_ba


def test_merge_counts_is_associative():
    a, b, c = Counter(x=1), Counter(x=2, y=1), Counter(z=5)
    assert merge_counts(merge_counts(a, b), c) == merge_counts(
        a, merge_counts(b, c))
    assert merge_counts() == Counter()


# ---------------------------------------------------------------------------
# Dual route against the recount oracle (small corpus; the full 10k corpus
# runs in the acceptance suite)

@pytest.fixture(scope="module")
def corpus():
    lines, lists, days = gen_analysis_corpus.generate_corpus(
        seed=0xFEED, n_domains=80, n_days=10)
    snaps = [DomainSnapshot.from_json(line) for line in lines]
    docs = recount.parse_lines(lines)
    return lines, lists, days, snaps, docs


def observed_series(snaps):
    """Per-domain day-ordered series, excluding error days (no observation)."""
    return group_by_domain([s for s in snaps if s.error is None])


def observed_doc_series(docs):
    grouped = {}
    for doc in docs:
        if doc.get("error") is None:
            grouped.setdefault(doc["domain"], []).append(doc)
    for entries in grouped.values():
        entries.sort(key=lambda d: d["date"])
    return grouped


def test_corpus_adoption_matches_recount(corpus):
    _lines, lists, days, snaps, docs = corpus
    for day in days:
        day_snaps = [s for s in snaps if s.date == day]
        day_docs = [d for d in docs if d["date"] == day]
        members = lists[day]
        assert adoption_rate(day_snaps, members) == recount.adoption(
            day_docs, members)


def test_corpus_overlap_matches_recount(corpus):
    _lines, lists, days, _snaps, _docs = corpus
    assert overlapping_set(lists, days) == recount.overlap(lists, days)


def test_corpus_dnssec_matches_recount(corpus):
    _lines, lists, days, snaps, docs = corpus
    overlap = overlapping_set(lists, days)
    for day in days[:3]:
        day_snaps = [s for s in snaps if s.date == day]
        day_docs = [d for d in docs if d["date"] == day]
        assert dnssec_stats(day_snaps, overlap) == recount.dnssec(
            day_docs, overlap)


def test_corpus_alpn_matches_recount(corpus):
    _lines, lists, days, snaps, docs = corpus
    for day in days[:3]:
        day_snaps = [s for s in snaps if s.date == day]
        day_docs = [d for d in docs if d["date"] == day]
        members = lists[day]
        assert alpn_distribution(day_snaps, members) == recount.alpn(
            day_docs, members)


def test_corpus_mismatch_durations_match_recount(corpus):
    _lines, _lists, _days, snaps, docs = corpus
    impl_series = observed_series(snaps)
    doc_series = observed_doc_series(docs)
    assert sorted(impl_series) == sorted(doc_series)
    for domain, series in impl_series.items():
        for family in ("v4", "v6"):
            assert mismatch_durations(series, family) == \
                recount.mismatch_durations(doc_series[domain], family), domain


def test_corpus_intermittency_matches_recount(corpus):
    _lines, _lists, _days, snaps, docs = corpus
    impl_series = observed_series(snaps)
    doc_series = observed_doc_series(docs)
    for domain, series in impl_series.items():
        if len(series) < 2:
            continue
        assert intermittency_report(series) == recount.intermittency(
            doc_series[domain]), domain


# ---------------------------------------------------------------------------
# Report writers

def test_csv_report_embeds_digest(tmp_path):
    path = tmp_path / "adoption.csv"
    write_csv_report(path, ["date", "rate_pct"],
                     [["2026-05-10", 30.0]], config_digest="ab12")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_digest=ab12"
    assert lines[1] == "date,rate_pct"
    assert lines[2] == "2026-05-10,30.0"


def test_json_report_serializes_identities(tmp_path):
    path = tmp_path / "rotation.json"
    key = ident("k1")
    result = ech_rotation(series_of([key, key]))
    write_json_report(path, "ech_rotation", result, config_digest="ab12")
    doc = json.loads(path.read_text())
    assert doc["metric"] == "ech_rotation"
    assert doc["config_digest"] == "ab12"
    assert doc["data"]["runs"][0]["identity"] == key.short()
