"""ECH config list parser tests against frozen independently-built fixtures."""

import base64
import json
import pathlib

import pytest
from hypothesis import given, settings, strategies as st

from httpsrr import ech

FIXTURES = pathlib.Path(__file__).parent / "fixtures" / "ech_oracle.json"
ORACLE = json.loads(FIXTURES.read_text())


def oracle_cases():
    return [pytest.param(entry, id=entry["id"]) for entry in ORACLE["cases"]]


def oracle_errors():
    return [pytest.param(entry, id=entry["id"]) for entry in ORACLE["errors"]]


@pytest.mark.parametrize("entry", oracle_cases())
def test_parse_matches_oracle(entry):
    parsed = ech.parse_config_list(bytes.fromhex(entry["payload_hex"]))
    assert len(parsed.configs) == len(entry["configs"])
    for cfg, expected in zip(parsed.configs, entry["configs"]):
        assert cfg.version == expected["version"]
        if expected["recognized"]:
            assert cfg.is_recognized
            assert cfg.config_id == expected["config_id"]
            assert cfg.kem_id == expected["kem_id"]
            assert cfg.public_key.hex() == expected["public_key_hex"]
            assert [list(s) for s in cfg.cipher_suites] == expected["suites"]
            assert cfg.maximum_name_length == expected["max_name_len"]
            assert cfg.public_name == expected["public_name"]
            assert cfg.extensions.hex() == expected["extensions_hex"]
            ident = ech.key_identity(cfg)
            assert ident.config_id == expected["config_id"]
            assert ident.public_key_digest.hex() == expected["digest_hex"]
        else:
            assert not cfg.is_recognized
            assert cfg.raw.hex() == expected["raw_hex"]


@pytest.mark.parametrize("entry", oracle_cases())
def test_lossless_reserialization(entry):
    payload = bytes.fromhex(entry["payload_hex"])
    parsed = ech.parse_config_list(payload)
    assert ech.serialize_config_list(parsed) == payload


@pytest.mark.parametrize("entry", oracle_errors())
def test_malformed_payloads_raise(entry):
    with pytest.raises(ech.EchParseError):
        ech.parse_config_list(bytes.fromhex(entry["payload_hex"]))


def test_base64_entry_point():
    payload = bytes.fromhex(ORACLE["cases"][0]["payload_hex"])
    text = base64.b64encode(payload).decode()
    assert ech.parse_config_list_b64(text) == ech.parse_config_list(payload)
    with pytest.raises(ech.EchParseError):
        ech.parse_config_list_b64("!!!")


def test_public_name_first_recognized():
    mixed = next(e for e in ORACLE["cases"] if e["id"] == "mixed_opaque_first")
    parsed = ech.parse_config_list(bytes.fromhex(mixed["payload_hex"]))
    assert ech.public_name(parsed) == mixed["first_public_name"]


def test_public_name_all_opaque_errors():
    entry = next(e for e in ORACLE["cases"] if e["id"] == "opaque_only")
    parsed = ech.parse_config_list(bytes.fromhex(entry["payload_hex"]))
    with pytest.raises(ech.EchError):
        ech.public_name(parsed)
    with pytest.raises(ech.EchError):
        ech.first_identity(parsed)


def test_identities_stable_and_distinct():
    pair = next(e for e in ORACLE["cases"] if e["id"] == "pair_distinct_keys")
    parsed = ech.parse_config_list(bytes.fromhex(pair["payload_hex"]))
    first, second = parsed.configs
    assert ech.key_identity(first) == ech.key_identity(first)
    assert ech.key_identity(first) != ech.key_identity(second)
    # Identity survives a serialize/parse cycle.
    reparsed = ech.parse_config_list(ech.serialize_config_list(parsed))
    assert ech.key_identity(reparsed.configs[0]) == ech.key_identity(first)


def test_oracle_identities_all_distinct():
    seen = set()
    for entry in ORACLE["cases"]:
        parsed = ech.parse_config_list(bytes.fromhex(entry["payload_hex"]))
        for cfg in parsed.configs:
            if cfg.is_recognized:
                seen.add(ech.key_identity(cfg))
    digests = {ident.public_key_digest for ident in seen}
    keyed = {(ident.config_id, ident.public_key_digest) for ident in seen}
    assert len(keyed) == len(seen)
    assert len(digests) >= 2  # both distinct keys appear in the corpus


def test_key_identity_rejects_opaque():
    cfg = ech.EchConfig(version=0xAAAA, raw=b"\xaa\xaa\x00\x00")
    with pytest.raises(ech.EchError):
        ech.key_identity(cfg)


def test_builder_parses_back():
    entry = ech.build_config(
        config_id=11, public_key=b"\x55" * 32, public_name="cover.a.com",
    )
    parsed = ech.parse_config_list(ech.build_config_list(entry))
    assert parsed.configs[0].public_name == "cover.a.com"
    assert parsed.configs[0].config_id == 11


def test_corruptor_always_breaks_parse():
    entry = ech.build_config(
        config_id=1, public_key=b"\x11" * 32, public_name="cover.a.com",
    )
    payload = ech.build_config_list(entry)
    ech.parse_config_list(payload)  # sane before corruption
    with pytest.raises(ech.EchParseError):
        ech.parse_config_list(ech.corrupt_config_list(payload))


@given(st.binary(max_size=256))
@settings(max_examples=400, deadline=None)
def test_parser_never_crashes(blob):
    try:
        parsed = ech.parse_config_list(blob)
    except ech.EchParseError:
        return
    assert ech.serialize_config_list(parsed) == blob
