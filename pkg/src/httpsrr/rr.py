"""HTTPS/SVCB resource record codec and validation.

Implements the RFC 9460 record model in both presentation (zone file) and
wire (rdata) form. Parsing is deliberately tolerant of semantically odd but
structurally well-formed data, because measurement code must be able to record
whatever a zone actually serves; semantic problems are reported by
:func:`validate` as issues rather than raised as parse errors.

Wire layout of the rdata:

    SvcPriority     u16
    TargetName      uncompressed domain name
    SvcParams       zero or more of (key u16, length u16, value), strictly
                    ascending by key

The presentation parser accepts ``HTTPS``, ``SVCB`` and the generic
``TYPE65``/``TYPE64`` mnemonics, including the RFC 3597 ``\\#`` form, an
optional TTL and an optional ``IN`` class token.
"""

from __future__ import annotations

import base64
import ipaddress
import struct
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

MAX_RDATA = 65535

_WIRE_TYPE_NUMBERS = {"HTTPS": 65, "SVCB": 64}


class ParamKey(IntEnum):
    MANDATORY = 0
    ALPN = 1
    NO_DEFAULT_ALPN = 2
    PORT = 3
    IPV4HINT = 4
    ECH = 5
    IPV6HINT = 6


_KEY_NAMES = {
    ParamKey.MANDATORY: "mandatory",
    ParamKey.ALPN: "alpn",
    ParamKey.NO_DEFAULT_ALPN: "no-default-alpn",
    ParamKey.PORT: "port",
    ParamKey.IPV4HINT: "ipv4hint",
    ParamKey.ECH: "ech",
    ParamKey.IPV6HINT: "ipv6hint",
}
_NAME_KEYS = {name: int(key) for key, name in _KEY_NAMES.items()}


class RecordParseError(ValueError):
    """Structured parse failure; ``position`` is a byte or token offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


def param_key_name(key: int) -> str:
    """Presentation name for a param key (``alpn`` ... or generic ``keyN``)."""
    try:
        return _KEY_NAMES[ParamKey(key)]
    except ValueError:
        return f"key{key}"


def param_key_number(name: str) -> int:
    name = name.lower()
    if name in _NAME_KEYS:
        return _NAME_KEYS[name]
    if name.startswith("key") and name[3:].isdigit():
        number = int(name[3:])
        if number <= 0xFFFF:
            return number
    raise RecordParseError(f"unknown param key name {name!r}")


# ---------------------------------------------------------------------------
# Domain name helpers.
#
# Names are handled as presentation strings, lowercase with a trailing dot.
# Bytes that are not printable ASCII decode to \DDD escapes; '.' and '\' inside
# a label escape to '\.' and '\\', so any wire name survives a round trip.

def _escape_label(label: bytes) -> str:
    out = []
    for b in label:
        ch = chr(b)
        if ch == ".":
            out.append("\\.")
        elif ch == "\\":
            out.append("\\\\")
        elif 0x21 <= b <= 0x7E and ch not in '";()':
            out.append(ch.lower())
        else:
            out.append("\\%03d" % b)
    return "".join(out)


def split_name(name: str) -> list[bytes]:
    """Split a presentation name into raw label byte strings."""
    if name == ".":
        return []
    labels: list[bytes] = []
    current = bytearray()
    i = 0
    n = len(name)
    while i < n:
        ch = name[i]
        if ch == "\\":
            if i + 3 < n + 1 and name[i + 1 : i + 4].isdigit():
                value = int(name[i + 1 : i + 4])
                if value > 255:
                    raise RecordParseError(f"bad escape in name {name!r}", i)
                current.append(value)
                i += 4
            elif i + 1 < n:
                current.append(ord(name[i + 1]))
                i += 2
            else:
                raise RecordParseError(f"dangling escape in name {name!r}", i)
        elif ch == ".":
            labels.append(bytes(current))
            current = bytearray()
            i += 1
        else:
            current.append(ord(ch))
            i += 1
    if current:
        # No trailing dot; treat the name as absolute anyway.
        labels.append(bytes(current))
    return labels


def normalize_name(name: str) -> str:
    """Lowercase, ensure a trailing dot, normalize escapes."""
    labels = split_name(name)
    if not labels:
        return "."
    for label in labels:
        if not label:
            raise RecordParseError(f"empty label in name {name!r}")
        if len(label) > 63:
            raise RecordParseError(f"label too long in name {name!r}")
    return ".".join(_escape_label(lb) for lb in labels) + "."


def encode_name(name: str) -> bytes:
    labels = split_name(name)
    out = bytearray()
    for label in labels:
        if not label:
            raise RecordParseError(f"empty label in name {name!r}")
        if len(label) > 63:
            raise RecordParseError(f"label too long in name {name!r}")
        out.append(len(label))
        out += bytes(label).lower()
    out.append(0)
    if len(out) > 255:
        raise RecordParseError(f"name too long: {name!r}")
    return bytes(out)


def decode_name(buf: bytes, offset: int) -> tuple[str, int]:
    """Decode an uncompressed wire name starting at ``offset``.

    Returns the presentation form and the offset just past the name.
    Compression pointers are rejected; rdata names must be uncompressed.
    """
    labels: list[bytes] = []
    total = 0
    while True:
        if offset >= len(buf):
            raise RecordParseError("truncated name", offset)
        length = buf[offset]
        if length == 0:
            offset += 1
            break
        if length > 63:
            raise RecordParseError("bad label length (compression not allowed)", offset)
        offset += 1
        if offset + length > len(buf):
            raise RecordParseError("truncated label", offset)
        labels.append(buf[offset : offset + length])
        offset += length
        total += length + 1
        if total > 255:
            raise RecordParseError("name too long", offset)
    if not labels:
        return ".", offset
    return ".".join(_escape_label(lb) for lb in labels) + ".", offset


# ---------------------------------------------------------------------------
# Char-string escaping for param values.

def _escape_value(data: bytes) -> str:
    out = []
    for b in data:
        ch = chr(b)
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif 0x21 <= b <= 0x7E and ch not in ";()":
            out.append(ch)
        else:
            out.append("\\%03d" % b)
    return "".join(out)


def _unescape_value(text: str) -> bytes:
    out = bytearray()
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\":
            if i + 3 < n + 1 and text[i + 1 : i + 4].isdigit():
                value = int(text[i + 1 : i + 4])
                if value > 255:
                    raise RecordParseError(f"bad escape in value {text!r}", i)
                out.append(value)
                i += 4
            elif i + 1 < n:
                out.append(ord(text[i + 1]))
                i += 2
            else:
                raise RecordParseError(f"dangling escape in value {text!r}", i)
        else:
            out.append(ord(ch))
            i += 1
    return bytes(out)


def _split_items(text: str) -> list[str]:
    """Split a comma-separated value list, honoring backslash escapes."""
    items: list[str] = []
    current: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            current.append(text[i : i + 2])
            i += 2
        elif ch == ",":
            items.append("".join(current))
            current = []
            i += 1
        else:
            current.append(ch)
            i += 1
    items.append("".join(current))
    return items


# ---------------------------------------------------------------------------
# SvcParam

@dataclass(frozen=True)
class SvcParam:
    """One SvcParam entry; ``value`` holds the wire-format value bytes."""

    key: int
    value: bytes = b""

    def __post_init__(self):
        if not 0 <= self.key <= 0xFFFF:
            raise RecordParseError(f"param key out of range: {self.key}")
        if len(self.value) > 0xFFFF:
            raise RecordParseError("param value exceeds 64 KiB")

    @property
    def key_name(self) -> str:
        return param_key_name(self.key)

    # Typed views over the wire bytes.

    def mandatory_keys(self) -> list[int]:
        if len(self.value) % 2:
            raise RecordParseError("mandatory value length not a multiple of 2")
        return [k for (k,) in struct.iter_unpack("!H", self.value)]

    def alpn_ids(self) -> list[str]:
        ids = []
        off = 0
        while off < len(self.value):
            length = self.value[off]
            off += 1
            if off + length > len(self.value):
                raise RecordParseError("alpn id overruns value", off)
            ids.append(self.value[off : off + length].decode("latin-1"))
            off += length
        return ids

    def port(self) -> int:
        if len(self.value) != 2:
            raise RecordParseError("port value must be 2 bytes")
        return struct.unpack("!H", self.value)[0]

    def ipv4_addrs(self) -> list[str]:
        if len(self.value) % 4:
            raise RecordParseError("ipv4hint length not a multiple of 4")
        return [
            str(ipaddress.IPv4Address(self.value[i : i + 4]))
            for i in range(0, len(self.value), 4)
        ]

    def ipv6_addrs(self) -> list[str]:
        if len(self.value) % 16:
            raise RecordParseError("ipv6hint length not a multiple of 16")
        return [
            str(ipaddress.IPv6Address(self.value[i : i + 16]))
            for i in range(0, len(self.value), 16)
        ]

    # Constructors from decoded values.

    @classmethod
    def make_mandatory(cls, keys: list[int]) -> "SvcParam":
        value = b"".join(struct.pack("!H", k) for k in sorted(keys))
        return cls(int(ParamKey.MANDATORY), value)

    @classmethod
    def make_alpn(cls, ids: list[str]) -> "SvcParam":
        out = bytearray()
        for ident in ids:
            raw = ident.encode("latin-1")
            if len(raw) > 255:
                raise RecordParseError(f"alpn id too long: {ident!r}")
            out.append(len(raw))
            out += raw
        return cls(int(ParamKey.ALPN), bytes(out))

    @classmethod
    def make_port(cls, port: int) -> "SvcParam":
        if not 0 <= port <= 0xFFFF:
            raise RecordParseError(f"port out of range: {port}")
        return cls(int(ParamKey.PORT), struct.pack("!H", port))

    @classmethod
    def make_ipv4hint(cls, addrs: list[str]) -> "SvcParam":
        value = b"".join(ipaddress.IPv4Address(a).packed for a in addrs)
        return cls(int(ParamKey.IPV4HINT), value)

    @classmethod
    def make_ipv6hint(cls, addrs: list[str]) -> "SvcParam":
        value = b"".join(ipaddress.IPv6Address(a).packed for a in addrs)
        return cls(int(ParamKey.IPV6HINT), value)

    @classmethod
    def make_ech(cls, payload: bytes) -> "SvcParam":
        return cls(int(ParamKey.ECH), payload)


# ---------------------------------------------------------------------------
# HttpsRecord

@dataclass(frozen=True)
class HttpsRecord:
    """One HTTPS or SVCB resource record.

    ``params`` preserves the order found in the input; the canonical wire form
    produced by :func:`to_wire` sorts them strictly ascending by key.
    """

    owner: str
    ttl: int
    svc_priority: int
    target_name: str
    params: tuple[SvcParam, ...] = ()
    rrtype: str = "HTTPS"

    def __post_init__(self):
        if not 0 <= self.svc_priority <= 0xFFFF:
            raise RecordParseError(f"priority out of range: {self.svc_priority}")
        if not 0 <= self.ttl <= 0xFFFFFFFF:
            raise RecordParseError(f"ttl out of range: {self.ttl}")
        seen = set()
        for p in self.params:
            if p.key in seen:
                raise RecordParseError(f"duplicate param key {p.key}")
            seen.add(p.key)

    @property
    def is_alias(self) -> bool:
        return self.svc_priority == 0

    def param(self, key: int) -> SvcParam | None:
        for p in self.params:
            if p.key == key:
                return p
        return None

    def has_param(self, key: int) -> bool:
        return self.param(key) is not None

    def alpn_ids(self) -> list[str] | None:
        p = self.param(ParamKey.ALPN)
        return None if p is None else p.alpn_ids()

    def port(self) -> int | None:
        p = self.param(ParamKey.PORT)
        return None if p is None else p.port()

    def ipv4hints(self) -> list[str]:
        p = self.param(ParamKey.IPV4HINT)
        return [] if p is None else p.ipv4_addrs()

    def ipv6hints(self) -> list[str]:
        p = self.param(ParamKey.IPV6HINT)
        return [] if p is None else p.ipv6_addrs()

    def ech_payload(self) -> bytes | None:
        p = self.param(ParamKey.ECH)
        return None if p is None else p.value

    def effective_target(self) -> str:
        """Target name with "." resolved to the owner."""
        return self.owner if self.target_name == "." else self.target_name

    def normalized(self) -> "HttpsRecord":
        """Copy with params sorted into canonical (ascending key) order."""
        return replace(self, params=tuple(sorted(self.params, key=lambda p: p.key)))

    def __str__(self) -> str:
        return to_presentation(self)


# ---------------------------------------------------------------------------
# Wire codec

def parse_wire(
    rdata: bytes, *, owner: str = ".", ttl: int = 300, rrtype: str = "HTTPS"
) -> HttpsRecord:
    """Parse rdata bytes into a record.

    Raises :class:`RecordParseError` for truncation, overruns, out-of-order or
    duplicate keys, oversized input, and value lengths that contradict the
    fixed arithmetic of a known key. Never raises anything else, regardless of
    input bytes.
    """
    if len(rdata) > MAX_RDATA:
        raise RecordParseError(f"rdata exceeds {MAX_RDATA} bytes")
    if len(rdata) < 2:
        raise RecordParseError("rdata shorter than priority field", len(rdata))
    priority = struct.unpack_from("!H", rdata, 0)[0]
    target, offset = decode_name(rdata, 2)
    params = []
    previous_key = -1
    while offset < len(rdata):
        if offset + 4 > len(rdata):
            raise RecordParseError("truncated param header", offset)
        key, length = struct.unpack_from("!HH", rdata, offset)
        offset += 4
        if key <= previous_key:
            raise RecordParseError(
                f"param keys not strictly ascending ({key} after {previous_key})",
                offset,
            )
        previous_key = key
        if offset + length > len(rdata):
            raise RecordParseError(f"param {key} value overruns rdata", offset)
        value = rdata[offset : offset + length]
        offset += length
        param = SvcParam(key, value)
        _check_value_arithmetic(param)
        params.append(param)
    return HttpsRecord(
        owner=normalize_name(owner),
        ttl=ttl,
        svc_priority=priority,
        target_name=target,
        params=tuple(params),
        rrtype=rrtype,
    )


def _check_value_arithmetic(param: SvcParam) -> None:
    key = param.key
    if key == ParamKey.MANDATORY:
        param.mandatory_keys()
    elif key == ParamKey.ALPN:
        param.alpn_ids()
    elif key == ParamKey.PORT:
        param.port()
    elif key == ParamKey.IPV4HINT:
        param.ipv4_addrs()
    elif key == ParamKey.IPV6HINT:
        param.ipv6_addrs()


def to_wire(rec: HttpsRecord) -> bytes:
    """Canonical rdata encoding: params sorted strictly ascending by key."""
    out = bytearray(struct.pack("!H", rec.svc_priority))
    out += encode_name(rec.target_name)
    for param in sorted(rec.params, key=lambda p: p.key):
        out += struct.pack("!HH", param.key, len(param.value))
        out += param.value
    if len(out) > MAX_RDATA:
        raise RecordParseError("encoded rdata exceeds 64 KiB")
    return bytes(out)


# ---------------------------------------------------------------------------
# Presentation codec

def _tokenize(line: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    in_quotes = False
    pending = False
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if in_quotes:
            if ch == "\\" and i + 1 < n:
                current.append(line[i : i + 2])
                i += 2
                continue
            if ch == '"':
                in_quotes = False
                i += 1
                continue
            current.append(ch)
            i += 1
            continue
        if ch == '"':
            in_quotes = True
            pending = True
            i += 1
            continue
        if ch == ";":
            break
        if ch.isspace():
            if current or pending:
                tokens.append("".join(current))
                current = []
                pending = False
            i += 1
            continue
        if ch == "\\" and i + 1 < n:
            current.append(line[i : i + 2])
            i += 2
            continue
        current.append(ch)
        i += 1
    if in_quotes:
        raise RecordParseError("unterminated quoted string", n)
    if current or pending:
        tokens.append("".join(current))
    return tokens


def parse_presentation(line: str, *, default_ttl: int = 300) -> HttpsRecord:
    """Parse one presentation-format RR of type HTTPS or SVCB.

    The TTL and class (``IN``) tokens are optional; a missing TTL defaults to
    ``default_ttl``. Generic ``TYPE65``/``TYPE64`` mnemonics and ``\\#`` rdata
    are accepted.
    """
    tokens = _tokenize(line)
    if len(tokens) < 3:
        raise RecordParseError("too few fields for a resource record", 0)
    owner = normalize_name(tokens[0])
    idx = 1
    ttl = default_ttl
    saw_ttl = False
    # TTL and class may appear in either order between owner and type.
    while idx < len(tokens):
        tok = tokens[idx]
        if tok.isdigit() and not saw_ttl:
            ttl = int(tok)
            if ttl > 0xFFFFFFFF:
                raise RecordParseError(f"ttl out of range: {ttl}", idx)
            saw_ttl = True
            idx += 1
        elif tok.upper() == "IN":
            idx += 1
        else:
            break
    if idx >= len(tokens):
        raise RecordParseError("missing record type", idx)
    type_token = tokens[idx].upper()
    idx += 1
    if type_token in ("HTTPS", "TYPE65"):
        rrtype = "HTTPS"
    elif type_token in ("SVCB", "TYPE64"):
        rrtype = "SVCB"
    else:
        raise RecordParseError(f"unsupported record type {type_token!r}", idx - 1)

    rest = tokens[idx:]
    if rest and rest[0] == "\\#":
        return _parse_generic_rdata(rest[1:], owner, ttl, rrtype, idx)
    if len(rest) < 2:
        raise RecordParseError("missing priority or target", idx)
    if not rest[0].isdigit():
        raise RecordParseError(f"priority is not a number: {rest[0]!r}", idx)
    priority = int(rest[0])
    if priority > 0xFFFF:
        raise RecordParseError(f"priority out of range: {priority}", idx)
    target = "." if rest[1] == "." else normalize_name(rest[1])
    params = []
    seen = set()
    for pos, token in enumerate(rest[2:], start=idx + 2):
        param = _parse_param_token(token, pos)
        if param.key in seen:
            raise RecordParseError(
                f"duplicate param key {param_key_name(param.key)}", pos
            )
        seen.add(param.key)
        params.append(param)
    return HttpsRecord(
        owner=owner,
        ttl=ttl,
        svc_priority=priority,
        target_name=target,
        params=tuple(params),
        rrtype=rrtype,
    )


def _parse_generic_rdata(
    tokens: list[str], owner: str, ttl: int, rrtype: str, position: int
) -> HttpsRecord:
    if not tokens:
        raise RecordParseError("generic rdata missing length", position)
    if not tokens[0].isdigit():
        raise RecordParseError("generic rdata length is not a number", position)
    declared = int(tokens[0])
    hexstr = "".join(tokens[1:])
    try:
        rdata = bytes.fromhex(hexstr)
    except ValueError as exc:
        raise RecordParseError(f"bad hex in generic rdata: {exc}", position) from None
    if len(rdata) != declared:
        raise RecordParseError(
            f"generic rdata declares {declared} bytes, got {len(rdata)}", position
        )
    return parse_wire(rdata, owner=owner, ttl=ttl, rrtype=rrtype)


def _parse_param_token(token: str, position: int) -> SvcParam:
    if "=" in token:
        name, _, text = token.partition("=")
    else:
        name, text = token, ""
    key = param_key_number(name)
    try:
        return _param_from_text(key, text)
    except RecordParseError as exc:
        raise RecordParseError(f"param {name}: {exc.args[0]}", position) from None


def _param_from_text(key: int, text: str) -> SvcParam:
    if key == ParamKey.MANDATORY:
        if not text:
            raise RecordParseError("mandatory needs a key list")
        keys = [param_key_number(item) for item in text.split(",")]
        return SvcParam.make_mandatory(keys)
    if key == ParamKey.ALPN:
        if not text:
            return SvcParam(key, b"")
        raw = _unescape_value(text).decode("latin-1")
        ids = []
        for item in _split_items(raw):
            ids.append(_unescape_value(item).decode("latin-1"))
        return SvcParam.make_alpn(ids)
    if key == ParamKey.PORT:
        if not text.isdigit():
            raise RecordParseError(f"port is not a number: {text!r}")
        return SvcParam.make_port(int(text))
    if key == ParamKey.IPV4HINT:
        if not text:
            raise RecordParseError("ipv4hint needs at least one address")
        try:
            return SvcParam.make_ipv4hint(text.split(","))
        except ipaddress.AddressValueError as exc:
            raise RecordParseError(str(exc)) from None
    if key == ParamKey.IPV6HINT:
        if not text:
            raise RecordParseError("ipv6hint needs at least one address")
        try:
            return SvcParam.make_ipv6hint(text.split(","))
        except ipaddress.AddressValueError as exc:
            raise RecordParseError(str(exc)) from None
    if key == ParamKey.ECH:
        try:
            payload = base64.b64decode(text, validate=True)
        except (ValueError, base64.binascii.Error) as exc:
            raise RecordParseError(f"bad base64: {exc}") from None
        return SvcParam.make_ech(payload)
    # no-default-alpn and unknown keys carry the raw (unescaped) bytes.
    return SvcParam(key, _unescape_value(text))


def to_presentation(rec: HttpsRecord) -> str:
    """Single-line zone form, params in ascending key order."""
    fields = [rec.owner, str(rec.ttl), "IN", rec.rrtype, str(rec.svc_priority)]
    fields.append(rec.target_name)
    for param in sorted(rec.params, key=lambda p: p.key):
        fields.append(_param_to_text(param))
    return " ".join(fields)


def _param_to_text(param: SvcParam) -> str:
    key = param.key
    name = param_key_name(key)
    if key == ParamKey.MANDATORY:
        names = [param_key_name(k) for k in param.mandatory_keys()]
        return f"{name}={','.join(names)}"
    if key == ParamKey.ALPN:
        pieces = []
        for ident in param.alpn_ids():
            raw = ident.encode("latin-1")
            escaped = raw.replace(b"\\", b"\\\\").replace(b",", b"\\,")
            pieces.append(_escape_value(escaped))
        return f"{name}={','.join(pieces)}"
    if key == ParamKey.PORT:
        return f"{name}={param.port()}"
    if key == ParamKey.IPV4HINT:
        return f"{name}={','.join(param.ipv4_addrs())}"
    if key == ParamKey.IPV6HINT:
        return f"{name}={','.join(param.ipv6_addrs())}"
    if key == ParamKey.ECH:
        return f"{name}={base64.b64encode(param.value).decode('ascii')}"
    if not param.value:
        return name
    return f"{name}={_escape_value(param.value)}"


# ---------------------------------------------------------------------------
# Validation

class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


class IssueCode(Enum):
    ALIAS_WITH_PARAMS = "ALIAS_WITH_PARAMS"
    ALIAS_TARGET_SELF = "ALIAS_TARGET_SELF"
    SERVICE_EMPTY_PARAMS = "SERVICE_EMPTY_PARAMS"
    TARGET_IS_IP_LITERAL = "TARGET_IS_IP_LITERAL"
    TARGET_IS_URL = "TARGET_IS_URL"
    MANDATORY_SELF = "MANDATORY_SELF"
    MANDATORY_MISSING_KEY = "MANDATORY_MISSING_KEY"


@dataclass(frozen=True)
class ValidationIssue:
    code: IssueCode
    severity: Severity
    detail: str


def _looks_like_ip(name: str) -> bool:
    stripped = name.rstrip(".")
    try:
        ipaddress.ip_address(stripped)
        return True
    except ValueError:
        return False


def _looks_like_url(name: str) -> bool:
    lowered = name.lower()
    return "://" in lowered or "/" in lowered or lowered.startswith(("http:", "https:"))


def validate(rec: HttpsRecord) -> list[ValidationIssue]:
    """Report conformance issues; empty list means clean.

    Pure and order-independent: permuting the record's param order never
    changes the result. Issues appear in a fixed code order.
    """
    issues: list[ValidationIssue] = []
    if rec.is_alias:
        if rec.params:
            keys = ",".join(param_key_name(p.key) for p in rec.params)
            issues.append(
                ValidationIssue(
                    IssueCode.ALIAS_WITH_PARAMS,
                    Severity.WARNING,
                    f"AliasMode record carries params ({keys}); they have no effect",
                )
            )
        if rec.target_name == "." or rec.target_name == rec.owner:
            issues.append(
                ValidationIssue(
                    IssueCode.ALIAS_TARGET_SELF,
                    Severity.ERROR,
                    "AliasMode target points back at the owner, not a true alias",
                )
            )
    elif not rec.params:
        issues.append(
            ValidationIssue(
                IssueCode.SERVICE_EMPTY_PARAMS,
                Severity.WARNING,
                "ServiceMode record provides no SvcParams",
            )
        )
    if rec.target_name != ".":
        if _looks_like_ip(rec.target_name):
            issues.append(
                ValidationIssue(
                    IssueCode.TARGET_IS_IP_LITERAL,
                    Severity.ERROR,
                    f"target {rec.target_name!r} is an IP literal, not a hostname",
                )
            )
        elif _looks_like_url(rec.target_name):
            issues.append(
                ValidationIssue(
                    IssueCode.TARGET_IS_URL,
                    Severity.ERROR,
                    f"target {rec.target_name!r} looks like a URL, not a hostname",
                )
            )
    mandatory = rec.param(ParamKey.MANDATORY)
    if mandatory is not None:
        try:
            listed = mandatory.mandatory_keys()
        except RecordParseError:
            listed = []
        if int(ParamKey.MANDATORY) in listed:
            issues.append(
                ValidationIssue(
                    IssueCode.MANDATORY_SELF,
                    Severity.ERROR,
                    "mandatory lists itself (key 0)",
                )
            )
        present = {p.key for p in rec.params}
        missing = sorted(k for k in listed if k != 0 and k not in present)
        if missing:
            names = ",".join(param_key_name(k) for k in missing)
            issues.append(
                ValidationIssue(
                    IssueCode.MANDATORY_MISSING_KEY,
                    Severity.ERROR,
                    f"mandatory lists absent keys: {names}",
                )
            )
    order = list(IssueCode)
    issues.sort(key=lambda issue: order.index(issue.code))
    return issues
