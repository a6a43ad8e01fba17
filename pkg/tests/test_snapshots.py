import base64
import json

import pytest

from httpsrr import ech, rr
from httpsrr.snapshots import (
    DomainSnapshot,
    first_ech_payload,
    group_by_domain,
    iphint_families,
    rdata_presentation,
)


def snap(**kw):
    defaults = dict(date="2026-05-10", domain="example.com.", kind="apex")
    defaults.update(kw)
    return DomainSnapshot(**defaults)


def https_rrset(*rdatas, rrsig=False, ad=False, resolver="8.8.8.8"):
    return {
        "records": [{"value": rd, "ttl": 300} for rd in rdatas],
        "resolver": resolver,
        "rrsig": rrsig,
        "ad": ad,
    }


def test_rdata_presentation_strips_owner_ttl_class_type():
    rec = rr.parse_presentation(
        'example.com. 300 IN HTTPS 1 . alpn=h2,h3 port=8443')
    assert rdata_presentation(rec) == '1 . alpn=h2,h3 port=8443'


def test_kind_validated():
    with pytest.raises(ValueError):
        snap(kind="zone")


def test_domain_normalized_on_construction():
    assert snap(domain="Example.COM").domain == "example.com."


def test_record_values_and_has_https():
    s = snap(rrsets={"HTTPS": https_rrset("1 . alpn=h2"),
                     "A": {"records": [{"value": "1.2.3.4", "ttl": 60}]}})
    assert s.has_https
    assert s.record_values("A") == ["1.2.3.4"]
    assert s.record_values("AAAA") == []
    assert not snap().has_https


def test_https_records_reparse_and_skip_bad_entries():
    s = snap(rrsets={"HTTPS": {
        "records": [
            {"value": "1 . alpn=h2", "ttl": 300},
            {"raw_hex": "00ff", "parse_error": True, "ttl": 300},
            {"value": "not a record", "ttl": 300},
        ],
        "resolver": "8.8.8.8", "rrsig": False, "ad": False,
    }})
    records = s.https_records()
    assert len(records) == 1
    assert records[0].alpn_ids() == ["h2"]
    assert records[0].owner == "example.com."


def test_rrsig_and_ad_views():
    s = snap(rrsets={"HTTPS": https_rrset("1 .", rrsig=True, ad=True)})
    assert s.rrsig_present("HTTPS")
    assert s.ad_bit("HTTPS")
    assert not s.rrsig_present("A")
    assert not s.ad_bit("A")


def test_json_round_trip_is_lossless():
    s = snap(
        rrsets={"HTTPS": https_rrset("1 . alpn=h2", rrsig=True, ad=True),
                "A": {"records": [{"value": "1.2.3.4", "ttl": 60}],
                      "resolver": "8.8.8.8", "rrsig": False, "ad": False}},
        cname_chain=["cdn.example.net."],
        ds_present=True,
        ns_names=["ns1.example.com."],
        probe_results=[{"ip": "1.2.3.4", "port": 443,
                        "outcome": "reachable", "source": "hint"}],
    )
    again = DomainSnapshot.from_json(s.to_json())
    assert again == s
    assert again.to_json() == s.to_json()


def test_unknown_fields_survive_round_trip():
    doc = json.loads(snap().to_json())
    doc["collector_build"] = "abc123"
    line = json.dumps(doc)
    s = DomainSnapshot.from_json(line)
    assert s.extra == {"collector_build": "abc123"}
    assert json.loads(s.to_json())["collector_build"] == "abc123"


def test_iphint_families_union_across_records():
    s = snap(rrsets={
        "HTTPS": https_rrset("1 . ipv4hint=1.2.3.4 ipv6hint=2001:db8::1",
                             "2 . ipv4hint=1.2.3.5"),
        "A": {"records": [{"value": "1.2.3.4", "ttl": 60}]},
        "AAAA": {"records": [{"value": "2001:db8::1", "ttl": 60}]},
    })
    fams = iphint_families(s)
    assert fams["v4"] == ({"1.2.3.4", "1.2.3.5"}, {"1.2.3.4"})
    assert fams["v6"] == ({"2001:db8::1"}, {"2001:db8::1"})


def test_first_ech_payload():
    payload = ech.build_config_list(
        ech.build_config(config_id=9, public_key=b"\x22" * 32,
                         public_name="cover.example.com"))
    b64 = base64.b64encode(payload).decode()
    s = snap(rrsets={"HTTPS": https_rrset("1 . alpn=h2",
                                          f"2 . ech={b64}")})
    assert first_ech_payload(s) == payload
    assert first_ech_payload(snap()) is None


def test_group_by_domain_sorts_and_filters():
    snaps = [
        snap(date="2026-05-12", domain="b.com."),
        snap(date="2026-05-10", domain="a.com."),
        snap(date="2026-05-11", domain="b.com."),
        snap(date="2026-05-10", domain="b.com.", kind="www"),
    ]
    groups = group_by_domain(snaps)
    assert sorted(groups) == ["a.com.", "b.com."]
    assert [s.date for s in groups["b.com."]] == [
        "2026-05-10", "2026-05-11", "2026-05-12"]
    apex_only = group_by_domain(snaps, kind="apex")
    assert [s.date for s in apex_only["b.com."]] == [
        "2026-05-11", "2026-05-12"]
