"""Command-line front end binding every module.

Subcommands: ``inspect`` parses one record, ``resolve`` prints the
connection plan a policy profile derives from a zone file, ``conformance``
checks profiles against the recorded behavior matrix, ``scan`` snapshots a
target list, ``analyze`` computes metrics over a snapshot store.

Exit codes: 0 success, 1 operational failure (unreadable input, parse
error, conformance mismatch), 2 usage error.  Per-domain DNS failures
during a scan are recorded inside the snapshots and never affect the exit
status; a long scan must survive flaky domains.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import ech, rr
from .analysis import (
    CfDefaultSpec,
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
    mismatch_durations,
    ns_category_counts,
    write_csv_report,
    write_json_report,
)
from .matrix import (
    CLIENT_TABLE_BROWSERS,
    ECH_TABLE_BROWSERS,
    builtin_matrix,
    compare_tables,
    conformance_matrix,
    expected_client_table,
    expected_ech_table,
    format_table,
)
from .resolution import (
    AttemptResult,
    ConnectionPlan,
    PlanError,
    Request,
    advance,
    build_plan,
    builtin_profiles,
)
from .scanner import (
    MockTransport,
    ScanConfig,
    SnapshotStore,
    UdpTransport,
    derive_targets,
    scan_list,
    tls_probe,
)
from .simnet import (
    RecordingDnsView,
    SimError,
    ZoneError,
    ZoneStore,
    check_transcript,
    load_scenario,
    run_scenario,
    save_scenario,
)
from .snapshots import group_by_domain

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

ANALYZE_METRICS = ("adoption", "dnssec", "alpn", "ns", "cf_default",
                   "mismatch", "intermittency", "rotation")


def _print_err(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# inspect

def _parse_record_argument(text: str, owner: str) -> rr.HttpsRecord:
    """Accept either a full presentation line or bare rdata."""
    try:
        return rr.parse_presentation(text)
    except rr.RecordParseError:
        pass
    return rr.parse_presentation(f"{owner} 300 IN HTTPS {text}")


def _ech_summary(payload: bytes) -> dict:
    try:
        config_list = ech.parse_config_list(payload)
    except ech.EchParseError as exc:
        return {"usable": False, "error": str(exc)}
    summary = {"configs": len(config_list.configs)}
    try:
        summary["public_name"] = ech.public_name(config_list)
        summary["identity"] = ech.first_identity(config_list).short()
        summary["usable"] = True
    except ech.EchError:
        # Parses but every entry is an unrecognized version: clients skip
        # the whole list and connect without ECH.
        summary["usable"] = False
    return summary


def cmd_inspect(args) -> int:
    try:
        if args.wire:
            record = rr.parse_wire(bytes.fromhex(args.wire), owner=args.owner)
        else:
            record = _parse_record_argument(args.record, args.owner)
    except (ValueError, rr.RecordParseError) as exc:
        _print_err(f"parse error: {exc}")
        return EXIT_FAILURE

    issues = rr.validate(record)
    doc = {
        "owner": record.owner,
        "ttl": record.ttl,
        "rrtype": record.rrtype,
        "mode": "alias" if record.is_alias else "service",
        "priority": record.svc_priority,
        "target": record.target_name,
        "alpn": record.alpn_ids(),
        "port": record.port(),
        "ipv4hints": record.ipv4hints(),
        "ipv6hints": record.ipv6hints(),
        "params": [{"key": int(p.key), "name": rr.param_key_name(p.key),
                    "value_hex": p.value.hex()} for p in record.params],
        "presentation": rr.to_presentation(record),
        "wire_hex": rr.to_wire(record).hex(),
        "issues": [{"code": i.code.value, "severity": i.severity.value,
                    "detail": i.detail} for i in issues],
    }
    payload = record.ech_payload()
    doc["ech"] = _ech_summary(payload) if payload is not None else None

    if args.json:
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(doc["presentation"])
    print(f"mode     {doc['mode']} (priority {doc['priority']})")
    print(f"wire     {doc['wire_hex']}")
    if doc["ech"] is not None:
        print(f"ech      {json.dumps(doc['ech'])}")
    for issue in doc["issues"]:
        print(f"{issue['severity']:8} {issue['code']}: {issue['detail']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# resolve

def _split_url(url: str) -> Request:
    scheme, sep, rest = url.partition("://")
    if not sep:
        return Request("bare", url.strip("/"))
    host = rest.split("/", 1)[0]
    return Request(scheme, host)


def load_zone_file(path) -> ZoneStore:
    zone = ZoneStore()
    for line in Path(path).read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        zone.add_line(stripped)
    return zone


def failover_ladder(plan: ConnectionPlan) -> ConnectionPlan:
    """Expand the worst-case attempt sequence a profile would walk.

    Feeds each outstanding attempt a pessimistic result (port refusal while
    a port fallback is armed, unreachable address otherwise) until the plan
    goes terminal.  This shows every attempt the client is prepared to make
    before giving up, without needing a live server.
    """
    guard = 0
    while plan.terminal is None:
        guard += 1
        if guard > 32:
            raise PlanError("failover expansion did not terminate")
        outcome = ("port_refused"
                   if plan.port_fallback_armed and plan.outstanding.port != 443
                   else "ip_unreachable")
        plan = advance(plan, AttemptResult(outcome))
    return plan


def _attempt_to_dict(attempt) -> dict:
    return {
        "host": attempt.host,
        "ip": attempt.ip,
        "port": attempt.port,
        "ip_source": attempt.ip_source,
        "alpn": list(attempt.alpn),
        "sni_outer": attempt.sni_outer,
        "ech_mode": attempt.ech_mode,
        "tls": attempt.tls,
        "annotations": list(attempt.annotations),
    }


def cmd_resolve(args) -> int:
    try:
        zone = load_zone_file(args.zone)
    except OSError as exc:
        _print_err(f"cannot read zone file: {exc}")
        return EXIT_FAILURE
    except (ZoneError, rr.RecordParseError) as exc:
        _print_err(f"bad zone line: {exc}")
        return EXIT_FAILURE

    profile = builtin_profiles()[args.profile]
    view = RecordingDnsView(zone)
    try:
        initial = build_plan(_split_url(args.url), profile, view)
        exhausted = failover_ladder(initial)
    except PlanError as exc:
        _print_err(f"plan error: {exc}")
        return EXIT_FAILURE

    doc = {
        "profile": args.profile,
        "url": args.url,
        "queries": [list(q) for q in view.queries],
        "attempts": [_attempt_to_dict(a) for a in exhausted.attempts],
        "terminal_if_all_fail": [exhausted.terminal.kind,
                                 exhausted.terminal.detail],
    }
    if initial.terminal is not None:
        # The plan was born terminal; no attempt would ever be made.
        doc["terminal"] = [initial.terminal.kind, initial.terminal.detail]

    if args.json:
        print(json.dumps(doc, indent=2))
        return EXIT_OK

    print(f"profile  {args.profile}")
    print(f"request  {args.url}")
    for q_name, q_type in doc["queries"]:
        print(f"query    {q_name} {q_type}")
    for i, attempt in enumerate(doc["attempts"], start=1):
        notes = f" [{','.join(attempt['annotations'])}]" \
            if attempt["annotations"] else ""
        ech_note = "" if attempt["ech_mode"] == "off" \
            else f" ech={attempt['ech_mode']}"
        print(f"attempt {i}  {attempt['ip']}:{attempt['port']}"
              f" alpn={','.join(attempt['alpn'])}"
              f" sni={attempt['sni_outer']}"
              f" source={attempt['ip_source']}{ech_note}{notes}")
    if "terminal" in doc:
        print(f"terminal  {doc['terminal'][0]}: {doc['terminal'][1]}")
    else:
        kind, detail = doc["terminal_if_all_fail"]
        print(f"if every attempt fails  {kind}: {detail}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# conformance

def _load_scenario_dir(path) -> list:
    scenarios = []
    for entry in sorted(Path(path).glob("*.json")):
        scenarios.append(load_scenario(entry))
    return scenarios


def cmd_conformance(args) -> int:
    if args.export:
        out = Path(args.export)
        out.mkdir(parents=True, exist_ok=True)
        scenarios = builtin_matrix()
        for scenario in scenarios:
            save_scenario(scenario, out / f"{scenario.id}.json")
        print(f"exported {len(scenarios)} scenarios to {out}")
        return EXIT_OK

    builtin_mode = args.scenario_dir is None
    if builtin_mode:
        scenarios = builtin_matrix()
    else:
        try:
            scenarios = _load_scenario_dir(args.scenario_dir)
        except (OSError, json.JSONDecodeError, KeyError, ZoneError,
                SimError, rr.RecordParseError) as exc:
            _print_err(f"bad scenario file: {exc}")
            return EXIT_FAILURE
        if not scenarios:
            _print_err(f"no scenario files in {args.scenario_dir}")
            return EXIT_FAILURE

    profiles = builtin_profiles()
    selected = args.profiles.split(",") if args.profiles else sorted(profiles)
    unknown = [name for name in selected if name not in profiles]
    if unknown:
        _print_err(f"unknown profile(s): {', '.join(unknown)}")
        return EXIT_USAGE

    rows = []
    for scenario in scenarios:
        for name in selected:
            if name not in scenario.expected:
                continue
            transcript = run_scenario(scenario, profiles[name])
            problems = check_transcript(transcript, scenario.expected[name])
            rows.append({"scenario": scenario.id, "profile": name,
                         "ok": not problems, "problems": problems})

    table_mismatches: list[str] = []
    tables = None
    if builtin_mode:
        tables = conformance_matrix()
        table_mismatches = (
            compare_tables(tables["client"], expected_client_table())
            + compare_tables(tables["ech"], expected_ech_table()))

    failed = [row for row in rows if not row["ok"]]
    if args.json:
        print(json.dumps({"rows": rows, "table_mismatches": table_mismatches},
                         indent=2))
        return EXIT_FAILURE if failed or table_mismatches else EXIT_OK

    for row in rows:
        if row["ok"]:
            print(f"pass {row['scenario']}/{row['profile']}")
        else:
            print(f"FAIL {row['scenario']}/{row['profile']}: "
                  + "; ".join(row["problems"]))
    if tables is not None:
        print()
        print("HTTPS RR support")
        print(format_table(tables["client"], CLIENT_TABLE_BROWSERS))
        print()
        print("ECH support and failover")
        print(format_table(tables["ech"], ECH_TABLE_BROWSERS))
        for problem in table_mismatches:
            print(f"TABLE MISMATCH {problem}")
    print(f"{len(rows) - len(failed)}/{len(rows)} expectations hold")
    return EXIT_FAILURE if failed or table_mismatches else EXIT_OK


# ---------------------------------------------------------------------------
# scan

def _scan_date(args) -> str:
    if args.date:
        return args.date
    now = datetime.now(timezone.utc)
    if args.tag == "hourly":
        return now.strftime("%Y-%m-%dT%H")
    return now.date().isoformat()


def cmd_scan(args) -> int:
    try:
        rows = Path(args.list).read_text().splitlines()
    except OSError as exc:
        _print_err(f"cannot read target list: {exc}")
        return EXIT_FAILURE

    try:
        cfg = ScanConfig(
            resolvers=tuple(args.resolvers.split(",")),
            qps=args.qps,
            retries=args.retries,
            timeout=args.timeout,
            probe_enabled=args.probe,
            fanout=(args.qtypes == "full"),
        )
    except ValueError as exc:
        _print_err(f"bad scan configuration: {exc}")
        return EXIT_USAGE

    prober = None
    if args.mock_zone:
        try:
            zone = load_zone_file(args.mock_zone)
        except (OSError, ZoneError, rr.RecordParseError) as exc:
            _print_err(f"cannot load mock zone: {exc}")
            return EXIT_FAILURE
        transport = MockTransport(zone)
    else:
        transport = UdpTransport()
        if cfg.probe_enabled:
            prober = tls_probe

    derivation = derive_targets(rows)
    targets = []
    for apex, www in zip(derivation.apex, derivation.www):
        targets.append((apex, "apex"))
        targets.append((www, "www"))

    date_key = _scan_date(args)
    store = SnapshotStore(args.out)
    counts = scan_list(targets, cfg, transport, store, workers=args.workers,
                       date=date_key, prober=prober)
    store.write_manifest(date_key, cfg, counts)
    print(f"{date_key}: scanned {counts['scanned']} targets"
          f" ({counts['errors']} with errors,"
          f" {derivation.skipped} list rows skipped) -> {store.root}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze

def _parse_day_stamp(day: str) -> float:
    for fmt in ("%Y-%m-%dT%H", "%Y-%m-%d"):
        try:
            return datetime.strptime(day, fmt).replace(
                tzinfo=timezone.utc).timestamp()
        except ValueError:
            continue
    raise ValueError(f"unparseable day key {day!r}")


def _select_days(store: SnapshotStore, start: Optional[str],
                 end: Optional[str]) -> list[str]:
    days = store.days()
    if start:
        days = [d for d in days if d >= start]
    if end:
        days = [d for d in days if d <= end]
    return days


def _store_membership(by_day: dict[str, list]) -> dict[str, set]:
    """Scanned apex population per day; errored scans still count as scanned."""
    return {day: {snap.domain for snap in snaps if snap.kind == "apex"}
            for day, snaps in by_day.items()}


def _domain_series(by_day: dict[str, list]) -> dict[str, list]:
    observed = [snap for snaps in by_day.values() for snap in snaps
                if snap.kind == "apex" and snap.error is None]
    return group_by_domain(observed)


def _analyze_adoption(by_day, membership, digest, out):
    rows = [[day, len(membership[day]),
             adoption_rate(by_day[day], membership[day])]
            for day in sorted(by_day) if membership[day]]
    write_csv_report(out / "adoption.csv", ["date", "domains", "rate_pct"],
                     rows, config_digest=digest)
    write_json_report(out / "adoption.json", "adoption",
                      {row[0]: row[2] for row in rows}, config_digest=digest)


def _analyze_dnssec(by_day, membership, digest, out):
    rows = []
    data = {}
    for day in sorted(by_day):
        if not membership[day]:
            continue
        stats = dnssec_stats(by_day[day], membership[day])
        rows.append([day, stats["signed_pct"], stats["validated_pct"],
                     stats["insecure_among_signed_pct"]])
        data[day] = stats
    write_csv_report(out / "dnssec.csv",
                     ["date", "signed_pct", "validated_pct",
                      "insecure_among_signed_pct"],
                     rows, config_digest=digest)
    write_json_report(out / "dnssec.json", "dnssec", data,
                      config_digest=digest)


def _analyze_alpn(by_day, membership, digest, out):
    rows = []
    data = {}
    for day in sorted(by_day):
        if not membership[day]:
            continue
        dist = alpn_distribution(by_day[day], membership[day])
        data[day] = dist
        rows.extend([day, proto, share] for proto, share in sorted(dist.items()))
    write_csv_report(out / "alpn.csv", ["date", "protocol", "share_pct"],
                     rows, config_digest=digest)
    write_json_report(out / "alpn.json", "alpn", data, config_digest=digest)


def _analyze_ns(by_day, membership, digest, out):
    rows = []
    data = {}
    for day in sorted(by_day):
        if not membership[day]:
            continue
        counts = ns_category_counts(by_day[day], membership[day])
        data[day] = dict(counts)
        rows.extend([day, category, count]
                    for category, count in sorted(counts.items()))
    write_csv_report(out / "ns_categories.csv", ["date", "category", "count"],
                     rows, config_digest=digest)
    write_json_report(out / "ns_categories.json", "ns_categories", data,
                      config_digest=digest)


def _load_cf_ranges(path) -> CfDefaultSpec:
    """One prefix per line, v4 and v6 mixed; blank lines and # ignored."""
    v4: list[str] = []
    v6: list[str] = []
    for line in Path(path).read_text().splitlines():
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        (v4 if ":" not in text else v6).append(text)
    return CfDefaultSpec.from_strings(v4, v6)


def _analyze_cf_default(by_day, membership, digest, out, spec):
    """Default-vs-customized record shape among bearing domains, per day.

    A domain counts as default only when it serves exactly one HTTPS record
    and that record matches the provider's default shape; any second record
    is already a customization.
    """
    rows = []
    data = {}
    for day in sorted(by_day):
        if not membership[day]:
            continue
        chosen = first_per_domain(by_day[day], kind="apex",
                                  members=membership[day])
        default = customized = 0
        for snap in chosen.values():
            records = snap.https_records()
            if not records:
                continue
            if (len(records) == 1
                    and classify_cf_default(records[0], spec) == "default"):
                default += 1
            else:
                customized += 1
        bearing = default + customized
        pct = 100.0 * default / bearing if bearing else 0.0
        rows.append([day, bearing, default, customized, pct])
        data[day] = {"bearing": bearing, "default": default,
                     "customized": customized, "default_pct": pct}
    write_csv_report(out / "cf_default.csv",
                     ["date", "bearing", "default", "customized",
                      "default_pct"],
                     rows, config_digest=digest)
    write_json_report(out / "cf_default.json", "cf_default", data,
                      config_digest=digest)


def _analyze_mismatch(series_by_domain, digest, out):
    rows = []
    data = {}
    for domain in sorted(series_by_domain):
        for family in ("v4", "v6"):
            durations = mismatch_durations(series_by_domain[domain], family)
            if durations:
                data.setdefault(domain, {})[family] = durations
            rows.extend([domain, family, run] for run in durations)
    write_csv_report(out / "hint_mismatch.csv",
                     ["domain", "family", "run_days"], rows,
                     config_digest=digest)
    write_json_report(out / "hint_mismatch.json", "hint_mismatch", data,
                      config_digest=digest)


def _analyze_intermittency(series_by_domain, digest, out):
    rows = []
    data = {}
    for domain in sorted(series_by_domain):
        series = series_by_domain[domain]
        if len(series) < 2:
            continue
        report = intermittency_report(series)
        data[domain] = report
        flags = report["flags"]
        rows.append([domain, report["status"], report["always_present"],
                     flags["same_ns_throughout"],
                     flags["ns_changed_at_toggle"],
                     flags["ns_absent_at_deactivation"]])
    write_csv_report(out / "intermittency.csv",
                     ["domain", "status", "always_present",
                      "same_ns_throughout", "ns_changed_at_toggle",
                      "ns_absent_at_deactivation"],
                     rows, config_digest=digest)
    write_json_report(out / "intermittency.json", "intermittency", data,
                      config_digest=digest)


def _analyze_rotation(by_day, digest, out):
    """ECH identity lifetimes from day(or hour)-keyed snapshot streams."""
    streams: dict[str, list] = {}
    for day in sorted(by_day):
        stamp = _parse_day_stamp(day)
        for snap in by_day[day]:
            if snap.kind == "apex" and snap.error is None:
                streams.setdefault(snap.domain, []).append((stamp, snap))
    series_list = []
    for domain in sorted(streams):
        scans = streams[domain]
        if len(scans) < 2:
            continue
        series = RotationSeries.from_snapshots(domain, scans)
        if any(ident is not None for ident in series.identities):
            series_list.append(series)
    report = ech_rotation_report(series_list)
    rows = []
    for series in series_list:
        result = ech_rotation(series)
        rows.append([series.domain, result["interval_hours"],
                     len(result["runs"]), result["mean_duration_hours"]])
    write_csv_report(out / "rotation.csv",
                     ["domain", "interval_hours", "run_count",
                      "mean_duration_hours"],
                     rows, config_digest=digest)
    write_json_report(out / "rotation.json", "rotation", report,
                      config_digest=digest)


def cmd_analyze(args) -> int:
    root = Path(args.store)
    if not root.is_dir():
        _print_err(f"snapshot store not found: {root}")
        return EXIT_FAILURE
    store = SnapshotStore(root)
    days = _select_days(store, args.date_from, args.date_to)
    if not days:
        _print_err("no snapshot days in the selected range")
        return EXIT_FAILURE

    by_day = {}
    skipped_total = 0
    for day in days:
        snaps, skipped = store.read_day(day)
        by_day[day] = snaps
        skipped_total += skipped

    membership = _store_membership(by_day)
    if args.set == "overlapping":
        shared = set.intersection(*membership.values()) if membership else set()
        if not shared:
            _print_err("overlapping domain set is empty")
            return EXIT_FAILURE
        membership = {day: shared for day in membership}

    digests = sorted({store.read_manifest(day).get("config_digest", "")
                      for day in days if store.manifest_path(day).exists()})
    digest = ",".join(d for d in digests if d)

    if args.cf_ranges:
        try:
            cf_spec = _load_cf_ranges(args.cf_ranges)
        except (OSError, ValueError) as exc:
            _print_err(f"bad anycast ranges file: {exc}")
            return EXIT_FAILURE
    else:
        cf_spec = default_cf_spec()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series_by_domain = _domain_series(by_day)

    wanted = ANALYZE_METRICS if args.metric == "all" else (args.metric,)
    for metric in wanted:
        if metric == "adoption":
            _analyze_adoption(by_day, membership, digest, out)
        elif metric == "dnssec":
            _analyze_dnssec(by_day, membership, digest, out)
        elif metric == "alpn":
            _analyze_alpn(by_day, membership, digest, out)
        elif metric == "ns":
            _analyze_ns(by_day, membership, digest, out)
        elif metric == "cf_default":
            _analyze_cf_default(by_day, membership, digest, out, cf_spec)
        elif metric == "mismatch":
            _analyze_mismatch(series_by_domain, digest, out)
        elif metric == "intermittency":
            _analyze_intermittency(series_by_domain, digest, out)
        elif metric == "rotation":
            _analyze_rotation(by_day, digest, out)

    if skipped_total:
        _print_err(f"warning: {skipped_total} corrupt store lines skipped")
    print(f"analyzed {len(days)} day(s), wrote {len(wanted)} metric(s)"
          f" to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="httpsrr",
        description="HTTPS/SVCB record toolkit: codecs, client policy "
                    "simulation, scanning and analysis.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_inspect = sub.add_parser(
        "inspect", help="parse one HTTPS/SVCB record and print its fields")
    p_inspect.add_argument("record", nargs="?", default=None,
                           help="presentation line or bare rdata")
    p_inspect.add_argument("--wire", help="rdata as hex instead of text")
    p_inspect.add_argument("--owner", default="example.com.",
                           help="owner name for bare rdata or wire input")
    p_inspect.add_argument("--json", action="store_true")

    p_resolve = sub.add_parser(
        "resolve", help="print the connection plan for a URL over a zone")
    p_resolve.add_argument("url")
    p_resolve.add_argument("--profile", required=True,
                           choices=sorted(builtin_profiles()))
    p_resolve.add_argument("--zone", required=True,
                           help="zone file in presentation format")
    p_resolve.add_argument("--json", action="store_true")

    p_conf = sub.add_parser(
        "conformance", help="run policy profiles against the behavior matrix")
    p_conf.add_argument("--scenario-dir",
                        help="run scenario JSON files instead of the builtins")
    p_conf.add_argument("--export", metavar="DIR",
                        help="write the builtin scenarios as JSON and exit")
    p_conf.add_argument("--profiles",
                        help="comma list; default is every builtin profile")
    p_conf.add_argument("--json", action="store_true")

    p_scan = sub.add_parser("scan", help="snapshot a ranked target list")
    p_scan.add_argument("--list", required=True,
                        help="CSV rows of rank,domain")
    p_scan.add_argument("--out", required=True, help="snapshot store root")
    p_scan.add_argument("--resolvers", default="8.8.8.8,1.1.1.1")
    p_scan.add_argument("--qps", type=float, default=20.0)
    p_scan.add_argument("--timeout", type=float, default=2.0)
    p_scan.add_argument("--retries", type=int, default=2)
    p_scan.add_argument("--workers", type=int, default=8)
    p_scan.add_argument("--probe", action=argparse.BooleanOptionalAction,
                        default=True,
                        help="TCP-probe endpoints when hints disagree "
                             "with address records")
    p_scan.add_argument("--qtypes", choices=("full", "https"), default="full",
                        help="'https' skips the follow-up record fanout")
    p_scan.add_argument("--date", help="store key; defaults to today (UTC)")
    p_scan.add_argument("--tag", choices=("hourly",),
                        help="hourly runs key the store by date and hour")
    p_scan.add_argument("--mock-zone",
                        help="serve answers from a zone file (offline mode)")

    p_an = sub.add_parser("analyze", help="compute metrics over a store")
    p_an.add_argument("--store", required=True)
    p_an.add_argument("--out", required=True)
    p_an.add_argument("--metric", default="all",
                      choices=ANALYZE_METRICS + ("all",))
    p_an.add_argument("--set", default="dynamic",
                      choices=("dynamic", "overlapping"),
                      help="per-day scanned population or the intersection "
                           "across all selected days")
    p_an.add_argument("--from", dest="date_from", metavar="DATE")
    p_an.add_argument("--to", dest="date_to", metavar="DATE")
    p_an.add_argument("--cf-ranges", metavar="FILE",
                      help="anycast prefix list for the default-shape "
                           "classifier, one prefix per line")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "inspect" and not args.record and not args.wire:
        parser.error("inspect needs a record argument or --wire")
    handlers = {
        "inspect": cmd_inspect,
        "resolve": cmd_resolve,
        "conformance": cmd_conformance,
        "scan": cmd_scan,
        "analyze": cmd_analyze,
    }
    return handlers[args.subcommand](args)


if __name__ == "__main__":
    sys.exit(main())
