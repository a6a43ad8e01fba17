"""Builtin scenario matrix and the browser conformance tables.

Each scenario pairs a small authoritative zone with endpoint stubs and the
transcript summary every policy profile is expected to produce.  The module
also carries the two observed-behavior tables (general HTTPS-record handling
per browser, and ECH handling per ECH-capable browser) and the judging rules
that map a transcript onto a table cell, so the whole table can be
regenerated from scenario runs and diffed against the recorded observations.

Cell values: "full" (supported / handled gracefully), "half" (record fetched
but connection not upgraded), "none" (unsupported / connection fails).
"""

from __future__ import annotations

from typing import Callable, Optional

from . import ech, rr
from .resolution import PolicyProfile, Request, builtin_profiles
from .simnet import (
    EndpointEch,
    Scenario,
    Transcript,
    ZoneStore,
    check_transcript,
    endpoint,
    run_scenario,
)

# Deterministic ECH material shared by the scenarios.
_SHARED_KEY = b"\x11" * 32
_ROTATED_KEY = b"\x22" * 32
_SPLIT_KEY = b"\x33" * 32

SHARED_ECH = ech.build_config_list(ech.build_config(
    config_id=7, public_key=_SHARED_KEY, public_name="cover.a.com"))
ROTATED_ECH = ech.build_config_list(ech.build_config(
    config_id=8, public_key=_ROTATED_KEY, public_name="cover.a.com"))
SPLIT_ECH = ech.build_config_list(ech.build_config(
    config_id=9, public_key=_SPLIT_KEY, public_name="b.com"))
MALFORMED_ECH = ech.corrupt_config_list(SHARED_ECH)

SHARED_ID = ech.first_identity(ech.parse_config_list(SHARED_ECH))
ROTATED_ID = ech.first_identity(ech.parse_config_list(ROTATED_ECH))
SPLIT_ID = ech.first_identity(ech.parse_config_list(SPLIT_ECH))


def _zone(*lines: str) -> ZoneStore:
    store = ZoneStore()
    for line in lines:
        store.add_line(line)
    return store


def _https_line(params: str) -> str:
    return f"a.com. 60 IN HTTPS {params}"


def _expected(chrome=None, safari=None, firefox=None, rfc=None) -> dict:
    """Per-profile expected summaries; edge always mirrors chrome."""
    return {"chrome": chrome, "edge": chrome, "safari": safari,
            "firefox": firefox, "rfc": rfc}


_SUCCESS_H2 = {"terminal": ["success", "h2"], "attempts": 1,
               "first": {"tls": True, "port": 443}}
_PLAIN_HTTP = {"terminal": ["success", ""], "attempts": 1,
               "first": {"tls": False, "port": 80}}


def _utilization_scenario(sid: str, scheme: str) -> Scenario:
    zone = _zone(_https_line("1 . alpn=h2"), "a.com. 60 IN A 1.2.3.4")
    eps = (endpoint("origin", ["1.2.3.4"], [80, 443], certs=["a.com"]),)
    return Scenario(
        id=sid,
        request=Request(scheme, "a.com"),
        zone=zone,
        endpoints=eps,
        expected=_expected(
            chrome=_SUCCESS_H2,
            safari=_PLAIN_HTTP if scheme != "https" else _SUCCESS_H2,
            firefox=_SUCCESS_H2,
            rfc=_SUCCESS_H2,
        ),
    )


def _alias_scenario() -> Scenario:
    zone = _zone("a.com. 60 IN HTTPS 0 pool.a.com.",
                 "pool.a.com. 60 IN A 1.2.3.4")
    eps = (endpoint("pool", ["1.2.3.4"], [443], certs=["a.com"]),)
    follow_ok = {
        "terminal": ["success", "h2"], "attempts": 1,
        "first": {"ip": "1.2.3.4"},
        "queries": [["a.com.", "HTTPS"], ["a.com.", "A"], ["a.com.", "AAAA"],
                    ["pool.a.com.", "HTTPS"], ["pool.a.com.", "A"],
                    ["pool.a.com.", "AAAA"]],
    }
    no_follow = {"terminal": ["hard_fail", "no_address_for_owner"],
                 "attempts": 0}
    return Scenario(
        id="alias_target",
        request=Request("https", "a.com"),
        zone=zone,
        endpoints=eps,
        expected=_expected(chrome=no_follow, safari=follow_ok,
                           firefox=no_follow, rfc=follow_ok),
    )


def _service_target_scenario() -> Scenario:
    zone = _zone(_https_line("1 pool.a.com. alpn=h2"),
                 "a.com. 60 IN A 1.2.3.4",
                 "pool.a.com. 60 IN A 2.2.3.4")
    eps = (
        endpoint("pool", ["2.2.3.4"], [443], certs=["a.com"]),
        # The owner's address hosts an unrelated site, so clients that ignore
        # the TargetName end up on the wrong certificate.
        endpoint("wrong-service", ["1.2.3.4"], [443], certs=["other.example"]),
    )
    followed = {"terminal": ["success", "h2"], "attempts": 1,
                "first": {"ip": "2.2.3.4"}}
    ignored = {"terminal": ["hard_fail", "tls_cert_invalid:cert_mismatch"],
               "attempts": 1, "first": {"ip": "1.2.3.4"}}
    return Scenario(
        id="service_target",
        request=Request("https", "a.com"),
        zone=zone,
        endpoints=eps,
        expected=_expected(chrome=ignored, safari=followed,
                           firefox=followed, rfc=followed),
    )


def _port_scenario(sid: str, open_ports: list[int]) -> Scenario:
    zone = _zone(_https_line("1 . alpn=h2 port=8443"), "a.com. 60 IN A 1.2.3.4")
    eps = (endpoint("origin", ["1.2.3.4"], open_ports, certs=["a.com"]),)
    port_used = {"terminal": ["success", "h2"], "attempts": 1,
                 "first": {"port": 8443}}
    port_ignored_ok = {"terminal": ["success", "h2"], "attempts": 1,
                       "first": {"port": 443}}
    port_ignored_fail = {"terminal": ["hard_fail", "port_refused"],
                         "attempts": 1, "first": {"port": 443}}
    fell_back = {"terminal": ["success", "h2"], "attempts": 2,
                 "first": {"port": 8443},
                 "last": {"port": 443, "annotations": ["port_fallback_443"]}}
    if open_ports == [8443]:
        expected = _expected(chrome=port_ignored_fail, safari=port_used,
                             firefox=port_used, rfc=port_used)
    elif open_ports == [443]:
        expected = _expected(chrome=port_ignored_ok, safari=fell_back,
                             firefox=fell_back, rfc=fell_back)
    else:
        expected = _expected(chrome=port_ignored_ok, safari=port_used,
                             firefox=port_used, rfc=port_used)
    return Scenario(id=sid, request=Request("https", "a.com"), zone=zone,
                    endpoints=eps, expected=expected)


def _hint_zone() -> ZoneStore:
    return _zone(_https_line("1 . alpn=h2 ipv4hint=1.2.3.4"),
                 "a.com. 60 IN A 2.2.3.4")


def _hints_both_up_scenario() -> Scenario:
    eps = (endpoint("hinted", ["1.2.3.4"], [443], certs=["a.com"]),
           endpoint("addressed", ["2.2.3.4"], [443], certs=["a.com"]))
    via_hint = {"terminal": ["success", "h2"], "attempts": 1,
                "first": {"ip": "1.2.3.4", "ip_source": "hint"}}
    via_addr = {"terminal": ["success", "h2"], "attempts": 1,
                "first": {"ip": "2.2.3.4", "ip_source": "addr_record"}}
    return Scenario(id="hints_mismatch_both_up",
                    request=Request("https", "a.com"), zone=_hint_zone(),
                    endpoints=eps,
                    expected=_expected(chrome=via_addr, safari=via_hint,
                                       firefox=via_hint, rfc=via_addr))


def _hint_down_scenario() -> Scenario:
    eps = (endpoint("addressed", ["2.2.3.4"], [443], certs=["a.com"]),)
    direct = {"terminal": ["success", "h2"], "attempts": 1,
              "first": {"ip": "2.2.3.4"}}
    failed_over = {"terminal": ["success", "h2"], "attempts": 2,
                   "first": {"ip": "1.2.3.4", "ip_source": "hint"},
                   "last": {"ip": "2.2.3.4", "annotations": ["ip_failover"]}}
    delayed = {"terminal": ["success", "h2"], "attempts": 2,
               "first": {"ip": "1.2.3.4"},
               "last": {"ip": "2.2.3.4",
                        "annotations": ["delayed_wait", "ip_failover"]}}
    return Scenario(id="hint_down_addr_up", request=Request("https", "a.com"),
                    zone=_hint_zone(), endpoints=eps,
                    expected=_expected(chrome=direct, safari=failed_over,
                                       firefox=delayed, rfc=direct))


def _addr_down_scenario() -> Scenario:
    eps = (endpoint("hinted", ["1.2.3.4"], [443], certs=["a.com"]),)
    via_hint = {"terminal": ["success", "h2"], "attempts": 1,
                "first": {"ip": "1.2.3.4", "ip_source": "hint"}}
    hard = {"terminal": ["hard_fail", "ip_unreachable"], "attempts": 1,
            "first": {"ip": "2.2.3.4"}}
    rfc_recovers = {"terminal": ["success", "h2"], "attempts": 2,
                    "first": {"ip": "2.2.3.4"},
                    "last": {"ip": "1.2.3.4", "ip_source": "hint"}}
    return Scenario(id="addr_down_hint_up", request=Request("https", "a.com"),
                    zone=_hint_zone(), endpoints=eps,
                    expected=_expected(chrome=hard, safari=via_hint,
                                       firefox=via_hint, rfc=rfc_recovers))


def _alpn_scenario(sid: str, alpn_id: str) -> Scenario:
    zone = _zone(_https_line(f"1 . alpn={alpn_id}"), "a.com. 60 IN A 1.2.3.4")
    eps = (endpoint("origin", ["1.2.3.4"], [443], alpns=[alpn_id],
                    certs=["a.com"]),)
    ok = {"terminal": ["success", alpn_id], "attempts": 1,
          "first": {"alpn": [alpn_id, "http/1.1"]}}
    expected = _expected(chrome=ok, safari=ok, firefox=ok, rfc=ok)
    if alpn_id == "h3":
        expected["firefox"] = {
            "terminal": ["success", "h3"], "attempts": 2,
            "first": {"alpn": ["h3", "http/1.1"]},
            "last": {"alpn": ["h2", "http/1.1"],
                     "annotations": ["h2_companion"]},
        }
    return Scenario(id=sid, request=Request("https", "a.com"), zone=zone,
                    endpoints=eps, expected=expected)


def _ech_zone(payload: bytes) -> ZoneStore:
    b64 = rr.to_presentation(rr.HttpsRecord(
        owner="a.com.", ttl=60, svc_priority=1, target_name=".",
        params=(rr.SvcParam.make_alpn(["h2"]), rr.SvcParam.make_ech(payload))))
    zone = _zone(b64, "a.com. 60 IN A 2.2.2.2", "cover.a.com. 60 IN A 2.2.2.2")
    return zone


_ECH_PLAIN_OK = {"terminal": ["success", "h2"], "attempts": 1,
                 "first": {"ech_mode": "off"}}


def _ech_shared_scenario() -> Scenario:
    eps = (endpoint("frontend", ["2.2.2.2"], [443],
                    certs=["a.com", "cover.a.com"],
                    ech=EndpointEch(accepts=SHARED_ID)),)
    via_ech = {"terminal": ["success", "h2"], "attempts": 1,
               "first": {"ech_mode": "shared", "sni_outer": "cover.a.com"}}
    return Scenario(id="ech_shared", request=Request("https", "a.com"),
                    zone=_ech_zone(SHARED_ECH), endpoints=eps,
                    expected=_expected(chrome=via_ech, safari=_ECH_PLAIN_OK,
                                       firefox=via_ech, rfc=via_ech))


def _ech_unilateral_scenario() -> Scenario:
    # The zone advertises ECH but the server never deployed it.
    eps = (endpoint("plain-server", ["2.2.2.2"], [443],
                    certs=["a.com", "cover.a.com"]),)
    fell_back = {"terminal": ["success", "h2"], "attempts": 1,
                 "first": {"ech_mode": "shared"}}
    return Scenario(id="ech_unilateral", request=Request("https", "a.com"),
                    zone=_ech_zone(SHARED_ECH), endpoints=eps,
                    expected=_expected(chrome=fell_back, safari=_ECH_PLAIN_OK,
                                       firefox=fell_back, rfc=fell_back))


def _ech_malformed_scenario() -> Scenario:
    eps = (endpoint("frontend", ["2.2.2.2"], [443],
                    certs=["a.com", "cover.a.com"],
                    ech=EndpointEch(accepts=SHARED_ID)),)
    refused = {"terminal": ["hard_fail", "ech_malformed"], "attempts": 0}
    return Scenario(id="ech_malformed", request=Request("https", "a.com"),
                    zone=_ech_zone(MALFORMED_ECH), endpoints=eps,
                    expected=_expected(chrome=refused, safari=_ECH_PLAIN_OK,
                                       firefox=_ECH_PLAIN_OK,
                                       rfc=_ECH_PLAIN_OK))


def _ech_mismatch_scenario() -> Scenario:
    # Zone still serves the pre-rotation config; the server accepts only the
    # rotated key but hands out retry configs.
    eps = (endpoint("frontend", ["2.2.2.2"], [443],
                    certs=["a.com", "cover.a.com"],
                    ech=EndpointEch(accepts=ROTATED_ID,
                                    retry_payload=ROTATED_ECH)),)
    retried = {"terminal": ["success", "h2"], "attempts": 2,
               "first": {"ech_mode": "shared"},
               "last": {"ech_mode": "retry_pending",
                        "annotations": ["ech_retry"]}}
    return Scenario(id="ech_mismatch_retry", request=Request("https", "a.com"),
                    zone=_ech_zone(SHARED_ECH), endpoints=eps,
                    expected=_expected(chrome=retried, safari=_ECH_PLAIN_OK,
                                       firefox=retried, rfc=retried))


def _ech_split_scenario() -> Scenario:
    line = rr.to_presentation(rr.HttpsRecord(
        owner="a.com.", ttl=60, svc_priority=1, target_name=".",
        params=(rr.SvcParam.make_ech(SPLIT_ECH),)))
    zone = _zone(line, "a.com. 60 IN A 1.1.1.1", "b.com. 60 IN A 2.2.2.2")
    eps = (
        endpoint("backend", ["1.1.1.1"], [443], certs=["a.com"]),
        endpoint("client-facing", ["2.2.2.2"], [443], certs=["b.com"],
                 ech=EndpointEch(accepts=SPLIT_ID)),
    )
    misdirected = {
        "terminal": ["hard_fail", "ech_fallback_certificate_invalid"],
        "attempts": 1,
        "first": {"ip": "1.1.1.1", "ech_mode": "split_misdirected",
                  "sni_outer": "b.com"},
    }
    plain = {"terminal": ["success", "http/1.1"], "attempts": 1,
             "first": {"ech_mode": "off", "ip": "1.1.1.1"}}
    correct = {"terminal": ["success", "http/1.1"], "attempts": 1,
               "first": {"ip": "2.2.2.2", "ech_mode": "shared",
                         "sni_outer": "b.com"},
               "queries_include": [["b.com.", "A"]]}
    return Scenario(id="ech_split", request=Request("https", "a.com"),
                    zone=zone, endpoints=eps,
                    expected=_expected(chrome=misdirected, safari=plain,
                                       firefox=misdirected, rfc=correct))


def builtin_matrix() -> list[Scenario]:
    return [
        _utilization_scenario("util_bare", "bare"),
        _utilization_scenario("util_http", "http"),
        _utilization_scenario("util_https", "https"),
        _alias_scenario(),
        _service_target_scenario(),
        _port_scenario("port_8443_only", [8443]),
        _port_scenario("port_443_only", [443]),
        _port_scenario("port_both", [443, 8443]),
        _hints_both_up_scenario(),
        _hint_down_scenario(),
        _addr_down_scenario(),
        _alpn_scenario("alpn_h2_only", "h2"),
        _alpn_scenario("alpn_h3_only", "h3"),
        _ech_shared_scenario(),
        _ech_unilateral_scenario(),
        _ech_malformed_scenario(),
        _ech_mismatch_scenario(),
        _ech_split_scenario(),
    ]


def scenario_by_id(sid: str) -> Scenario:
    for scenario in builtin_matrix():
        if scenario.id == sid:
            return scenario
    raise KeyError(sid)


def verify_matrix(profiles: Optional[dict[str, PolicyProfile]] = None) -> list[str]:
    """Run every builtin scenario under every profile; return mismatches."""
    profiles = profiles or builtin_profiles()
    problems = []
    for scenario in builtin_matrix():
        for name, expected in scenario.expected.items():
            if name not in profiles or expected is None:
                continue
            transcript = run_scenario(scenario, profiles[name])
            for issue in check_transcript(transcript, expected):
                problems.append(f"{scenario.id}/{name}: {issue}")
    return problems


# ---------------------------------------------------------------------------
# Conformance tables

CLIENT_TABLE_BROWSERS = ("chrome", "safari", "edge", "firefox")
ECH_TABLE_BROWSERS = ("chrome", "edge", "firefox")

FULL, HALF, NONE = "full", "half", "none"


def expected_client_table() -> dict[str, dict[str, str]]:
    """Recorded per-browser HTTPS-record behavior (identical on both tested
    desktop platforms, so one column per browser)."""
    rows = {
        "rr_utilization_bare": (FULL, HALF, FULL, FULL),
        "rr_utilization_http": (FULL, HALF, FULL, FULL),
        "rr_utilization_https": (FULL, FULL, FULL, FULL),
        "alias_mode_target": (NONE, FULL, NONE, NONE),
        "service_mode_target": (NONE, FULL, NONE, FULL),
        "port_parameter": (NONE, FULL, NONE, FULL),
        "ip_hints": (NONE, FULL, NONE, FULL),
    }
    return {row: dict(zip(CLIENT_TABLE_BROWSERS, cells))
            for row, cells in rows.items()}


def expected_ech_table() -> dict[str, dict[str, str]]:
    """Recorded per-browser ECH handling (ECH-capable browsers only)."""
    rows = {
        "shared_mode": (FULL, FULL, FULL),
        "unilateral": (FULL, FULL, FULL),
        "malformed_config": (NONE, NONE, FULL),
        "mismatched_key": (FULL, FULL, FULL),
        "split_mode": (NONE, NONE, NONE),
    }
    return {row: dict(zip(ECH_TABLE_BROWSERS, cells))
            for row, cells in rows.items()}


def _judge_utilization(t: Transcript) -> str:
    if t.terminal.kind != "success":
        return NONE
    if t.attempts and t.attempts[0].tls:
        return FULL
    host = rr.normalize_name(t.attempts[0].host) if t.attempts else ""
    if (host, "HTTPS") in t.queries:
        return HALF
    return NONE


def _judge_success(t: Transcript) -> str:
    return FULL if t.terminal.kind == "success" else NONE


def _judge_hint_use(t: Transcript) -> str:
    if t.attempts and t.attempts[0].ip_source == "hint":
        return FULL
    return NONE


def _judge_ech_shared(t: Transcript) -> str:
    if t.terminal.kind == "success" and t.attempts \
            and t.attempts[0].ech_mode == "shared":
        return FULL
    return NONE


# row name -> (scenario id, judge)
CLIENT_TABLE_SPEC: dict[str, tuple[str, Callable[[Transcript], str]]] = {
    "rr_utilization_bare": ("util_bare", _judge_utilization),
    "rr_utilization_http": ("util_http", _judge_utilization),
    "rr_utilization_https": ("util_https", _judge_utilization),
    "alias_mode_target": ("alias_target", _judge_success),
    "service_mode_target": ("service_target", _judge_success),
    "port_parameter": ("port_8443_only", _judge_success),
    "ip_hints": ("hints_mismatch_both_up", _judge_hint_use),
}

ECH_TABLE_SPEC: dict[str, tuple[str, Callable[[Transcript], str]]] = {
    "shared_mode": ("ech_shared", _judge_ech_shared),
    "unilateral": ("ech_unilateral", _judge_success),
    "malformed_config": ("ech_malformed", _judge_success),
    "mismatched_key": ("ech_mismatch_retry", _judge_success),
    "split_mode": ("ech_split", _judge_success),
}


def conformance_matrix() -> dict[str, dict[str, dict[str, str]]]:
    """Produce both tables by running the relevant scenarios."""
    profiles = builtin_profiles()
    client = {}
    for row, (sid, judge) in CLIENT_TABLE_SPEC.items():
        scenario = scenario_by_id(sid)
        client[row] = {
            browser: judge(run_scenario(scenario, profiles[browser]))
            for browser in CLIENT_TABLE_BROWSERS
        }
    ech_table = {}
    for row, (sid, judge) in ECH_TABLE_SPEC.items():
        scenario = scenario_by_id(sid)
        ech_table[row] = {
            browser: judge(run_scenario(scenario, profiles[browser]))
            for browser in ECH_TABLE_BROWSERS
        }
    return {"client": client, "ech": ech_table}


def compare_tables(produced: dict, expected: dict) -> list[str]:
    problems = []
    for row, cells in expected.items():
        for browser, want in cells.items():
            got = produced.get(row, {}).get(browser)
            if got != want:
                problems.append(f"{row}/{browser}: produced {got}, recorded {want}")
    for row in produced:
        if row not in expected:
            problems.append(f"unexpected row {row}")
    return problems


_SYMBOLS = {FULL: "[x]", HALF: "[~]", NONE: "[ ]"}


def format_table(table: dict[str, dict[str, str]], browsers) -> str:
    width = max(len(row) for row in table) + 2
    header = " " * width + "  ".join(f"{b:>8}" for b in browsers)
    lines = [header]
    for row, cells in table.items():
        rendered = "  ".join(f"{_SYMBOLS[cells[b]]:>8}" for b in browsers)
        lines.append(f"{row:<{width}}{rendered}")
    return "\n".join(lines)
