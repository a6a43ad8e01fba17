"""ECHConfigList parsing, key identities, and forward serialization.

Decodes the payload carried in the ``ech`` SvcParam. Only the TLS ECH
draft-13 version (0xfe0d) is fully decoded; entries with any other version
are retained as opaque bytes and survive re-serialization unchanged, so a
stored payload always round-trips byte-identically.

No HPKE or any other cryptography happens here. A config's key identity is
(config_id, sha256(public_key)), which is stable across scans and lets
rotation analytics compare keys without ever using them.

Wire grammar (draft-13):

    ECHConfigList:  u16 total length, then ECHConfig entries back to back
    ECHConfig:      u16 version, u16 length, then `length` content bytes
    contents:       config_id u8, kem_id u16,
                    public_key (u16-length opaque, >= 1 byte),
                    cipher_suites (u16-length list of kdf u16 + aead u16),
                    maximum_name_length u8,
                    public_name (u8-length, 1..255 bytes),
                    extensions (u16-length opaque)
"""

from __future__ import annotations

import base64
import hashlib
import struct
from dataclasses import dataclass

ECH_VERSION_DRAFT13 = 0xFE0D
KEY_DIGEST_ALG = "sha256"
MAX_PAYLOAD = 65535

_HOSTNAME_CHARS = set("abcdefghijklmnopqrstuvwxyz0123456789._-")


class EchError(ValueError):
    pass


class EchParseError(EchError):
    pass


@dataclass(frozen=True)
class EchKeyIdentity:
    config_id: int
    public_key_digest: bytes

    def short(self) -> str:
        return f"{self.config_id:02x}:{self.public_key_digest.hex()[:16]}"


@dataclass(frozen=True)
class EchConfig:
    """One ECHConfig entry; ``raw`` covers version, length and contents."""

    version: int
    raw: bytes
    config_id: int | None = None
    kem_id: int | None = None
    public_key: bytes | None = None
    cipher_suites: tuple[tuple[int, int], ...] = ()
    maximum_name_length: int | None = None
    public_name: str | None = None
    extensions: bytes | None = None

    @property
    def is_recognized(self) -> bool:
        return self.version == ECH_VERSION_DRAFT13 and self.config_id is not None


@dataclass(frozen=True)
class EchConfigList:
    configs: tuple[EchConfig, ...]


def _check_hostname(raw: bytes) -> str:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise EchParseError(f"public_name is not ASCII: {raw!r}") from None
    lowered = text.lower()
    if not lowered or set(lowered) - _HOSTNAME_CHARS:
        raise EchParseError(f"public_name is not a hostname: {text!r}")
    for label in lowered.rstrip(".").split("."):
        if not 1 <= len(label) <= 63:
            raise EchParseError(f"public_name has a bad label: {text!r}")
    return text


def _parse_draft13_contents(contents: bytes, raw: bytes) -> EchConfig:
    view = memoryview(contents)
    offset = 0

    def need(count, what):
        nonlocal offset
        if offset + count > len(view):
            raise EchParseError(f"truncated {what} at byte {offset}")
        piece = bytes(view[offset : offset + count])
        offset += count
        return piece

    config_id = need(1, "config_id")[0]
    kem_id = struct.unpack("!H", need(2, "kem_id"))[0]
    pk_len = struct.unpack("!H", need(2, "public_key length"))[0]
    if pk_len == 0:
        raise EchParseError("public_key must not be empty")
    public_key = need(pk_len, "public_key")
    cs_len = struct.unpack("!H", need(2, "cipher_suites length"))[0]
    if cs_len == 0 or cs_len % 4:
        raise EchParseError(f"cipher_suites length {cs_len} is not a positive multiple of 4")
    suites_raw = need(cs_len, "cipher_suites")
    suites = tuple(
        struct.unpack_from("!HH", suites_raw, i) for i in range(0, cs_len, 4)
    )
    maximum_name_length = need(1, "maximum_name_length")[0]
    name_len = need(1, "public_name length")[0]
    if name_len == 0:
        raise EchParseError("public_name must not be empty")
    public_name = _check_hostname(need(name_len, "public_name"))
    ext_len = struct.unpack("!H", need(2, "extensions length"))[0]
    extensions = need(ext_len, "extensions")
    if offset != len(view):
        raise EchParseError(
            f"config declares {len(view)} content bytes but grammar consumed {offset}"
        )
    return EchConfig(
        version=ECH_VERSION_DRAFT13,
        raw=raw,
        config_id=config_id,
        kem_id=kem_id,
        public_key=public_key,
        cipher_suites=suites,
        maximum_name_length=maximum_name_length,
        public_name=public_name,
        extensions=extensions,
    )


def parse_config_list(payload: bytes) -> EchConfigList:
    """Parse an ECHConfigList payload (the raw ``ech`` SvcParam value).

    Raises :class:`EchParseError` on truncation, declared-length mismatches,
    an empty list, or malformed recognized-version contents. Never raises
    anything else for any input bytes.
    """
    if len(payload) > MAX_PAYLOAD:
        raise EchParseError(f"payload exceeds {MAX_PAYLOAD} bytes")
    if len(payload) < 2:
        raise EchParseError("payload shorter than the list length prefix")
    declared = struct.unpack_from("!H", payload, 0)[0]
    if declared == 0:
        raise EchParseError("zero-length config list")
    if 2 + declared != len(payload):
        raise EchParseError(
            f"list declares {declared} bytes, payload carries {len(payload) - 2}"
        )
    configs = []
    offset = 2
    while offset < len(payload):
        if offset + 4 > len(payload):
            raise EchParseError(f"truncated config header at byte {offset}")
        version, length = struct.unpack_from("!HH", payload, offset)
        if offset + 4 + length > len(payload):
            raise EchParseError(f"config contents overrun the list at byte {offset}")
        raw = payload[offset : offset + 4 + length]
        contents = payload[offset + 4 : offset + 4 + length]
        offset += 4 + length
        if version == ECH_VERSION_DRAFT13:
            configs.append(_parse_draft13_contents(contents, raw))
        else:
            configs.append(EchConfig(version=version, raw=raw))
    return EchConfigList(configs=tuple(configs))


def parse_config_list_b64(text: str) -> EchConfigList:
    """Parse the base64 presentation encoding of an ``ech`` value."""
    try:
        payload = base64.b64decode(text, validate=True)
    except (ValueError, base64.binascii.Error) as exc:
        raise EchParseError(f"bad base64: {exc}") from None
    return parse_config_list(payload)


def serialize_config_list(config_list: EchConfigList) -> bytes:
    """Rebuild the payload; byte-identical to the parsed input."""
    body = b"".join(cfg.raw for cfg in config_list.configs)
    return struct.pack("!H", len(body)) + body


def key_identity(cfg: EchConfig) -> EchKeyIdentity:
    """Stable identity for a recognized config's key material."""
    if not cfg.is_recognized:
        raise EchError(f"no key identity for unrecognized version 0x{cfg.version:04x}")
    digest = hashlib.sha256(cfg.public_key).digest()
    return EchKeyIdentity(config_id=cfg.config_id, public_key_digest=digest)


def public_name(config_list: EchConfigList) -> str:
    """Public name of the first recognized config in the list."""
    for cfg in config_list.configs:
        if cfg.is_recognized:
            return cfg.public_name
    raise EchError("config list has no recognized-version entry")


def first_identity(config_list: EchConfigList) -> EchKeyIdentity:
    for cfg in config_list.configs:
        if cfg.is_recognized:
            return key_identity(cfg)
    raise EchError("config list has no recognized-version entry")


# ---------------------------------------------------------------------------
# Forward construction, used by the simulated network and the CLI to publish
# test configurations. Test oracles do not use these helpers.

def build_config(
    *,
    config_id: int,
    public_key: bytes,
    public_name: str,
    kem_id: int = 0x0020,
    cipher_suites: tuple[tuple[int, int], ...] = ((0x0001, 0x0001),),
    maximum_name_length: int = 0,
    extensions: bytes = b"",
    version: int = ECH_VERSION_DRAFT13,
) -> bytes:
    """Serialize one ECHConfig entry."""
    name_raw = public_name.encode("ascii")
    contents = bytearray()
    contents.append(config_id)
    contents += struct.pack("!H", kem_id)
    contents += struct.pack("!H", len(public_key)) + public_key
    suites = b"".join(struct.pack("!HH", kdf, aead) for kdf, aead in cipher_suites)
    contents += struct.pack("!H", len(suites)) + suites
    contents.append(maximum_name_length)
    contents.append(len(name_raw))
    contents += name_raw
    contents += struct.pack("!H", len(extensions)) + extensions
    return struct.pack("!HH", version, len(contents)) + bytes(contents)


def build_config_list(*entries: bytes) -> bytes:
    """Wrap serialized ECHConfig entries into an ECHConfigList payload."""
    body = b"".join(entries)
    return struct.pack("!H", len(body)) + body


def corrupt_config_list(payload: bytes) -> bytes:
    """Documented corruptor: bump the outer length prefix by one.

    The result always fails parsing with a declared-length mismatch, which
    makes malformed-configuration scenarios reproducible.
    """
    if len(payload) < 2:
        return payload + b"\x01"
    declared = struct.unpack_from("!H", payload, 0)[0]
    return struct.pack("!H", (declared + 1) & 0xFFFF) + payload[2:]
