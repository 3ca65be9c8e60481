"""Names, messages and the binary codec for stateless/stateful CCN packets.

Layout (network byte order)::

    magic 0xCC 0x01 | msg_type u8 | flags u8 | total_length u32 | TLV*

``total_length`` counts the whole message, header included.  Each TLV is
``type u16 | length u16 | value``.  TLVs appear at most once and in the
fixed order Name, SupportingName, Payload, ValidationAlg,
ValidationPayload, NackReason.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union
from urllib.parse import quote, unquote_to_bytes

MAGIC = b"\xcc\x01"
HEADER = struct.Struct("!2sBBI")
TL = struct.Struct("!HH")

MAX_COMPONENTS = 64
MAX_TLV_VALUE = 0xFFFF

FLAG_SUPPORTING_NAME = 0x01

T_NAME = 0x0000
T_SUPPORTING_NAME = 0x0001
T_NAME_COMPONENT = 0x0002
T_PAYLOAD = 0x0010
T_VALIDATION_ALG = 0x0020
T_VALIDATION_PAYLOAD = 0x0021
T_NACK_REASON = 0x0030

# emission order; decode requires strictly increasing position in this list
TLV_ORDER = (
    T_NAME,
    T_SUPPORTING_NAME,
    T_PAYLOAD,
    T_VALIDATION_ALG,
    T_VALIDATION_PAYLOAD,
    T_NACK_REASON,
)

LCI_SCHEME = "lci:"
# '/' is deliberately absent: it separates components
_LCI_SAFE = "-._~!$&'()*+,;=:@"


class MalformedName(ValueError):
    pass


class MalformedMessage(ValueError):
    pass


class MessageTooLarge(ValueError):
    pass


class MsgType(enum.IntEnum):
    INTEREST = 1
    CONTENT = 2
    NACK = 3


class NackReason(enum.IntEnum):
    NO_SUPPORTING_NAME = 1
    PIT_FULL = 2


Component = Union[bytes, str]


def _as_bytes(c: Component) -> bytes:
    return c.encode() if isinstance(c, str) else bytes(c)


@dataclass(frozen=True)
class Name:
    """An ordered list of non-empty byte-string components."""

    components: tuple[bytes, ...] = ()

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) > MAX_COMPONENTS:
            raise MalformedName(f"{len(comps)} components exceeds {MAX_COMPONENTS}")
        for c in comps:
            if not isinstance(c, bytes):
                raise MalformedName(f"component {c!r} is not bytes")
            if not c:
                raise MalformedName("empty name component")
            if b"/" in c:
                raise MalformedName(f"component {c!r} contains '/'")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: Component) -> Name:
        return cls(tuple(_as_bytes(c) for c in components))

    def __len__(self) -> int:
        return len(self.components)

    def __str__(self) -> str:
        return format_lci(self)

    def __repr__(self) -> str:
        return f"Name({format_lci(self)!r})"

    def is_prefix_of(self, other: Name) -> bool:
        n = len(self.components)
        return other.components[:n] == self.components

    def append(self, *components: Component) -> Name:
        return Name(self.components + tuple(_as_bytes(c) for c in components))

    def prefix(self, n: int) -> Name:
        return Name(self.components[:n])


def parse_lci(text: str) -> Name:
    """Parse ``lci:/a/b/c`` (or ``/a/b/c``) into a :class:`Name`.

    Components may carry percent-escapes; ``lci:/`` and ``/`` are the root.
    """
    if text.startswith(LCI_SCHEME):
        text = text[len(LCI_SCHEME):]
    if not text.startswith("/"):
        raise MalformedName(f"missing 'lci:/' or '/' prefix in {text!r}")
    body = text[1:]
    if not body:
        return Name()
    parts = body.split("/")
    if len(parts) > MAX_COMPONENTS:
        raise MalformedName(f"{len(parts)} components exceeds {MAX_COMPONENTS}")
    comps = []
    for p in parts:
        if not p:
            raise MalformedName(f"empty component in {text!r}")
        comps.append(unquote_to_bytes(p))
    return Name(tuple(comps))


def format_lci(name: Name) -> str:
    return LCI_SCHEME + "/" + "/".join(quote(c, safe=_LCI_SAFE) for c in name.components)


@dataclass(frozen=True)
class Message:
    msg_type: MsgType
    name: Name
    supporting_name: Optional[Name] = None
    payload: Optional[bytes] = None
    validation_alg: Optional[bytes] = None
    validation_payload: Optional[bytes] = None
    nack_reason: Optional[NackReason] = None

    def __post_init__(self):
        object.__setattr__(self, "msg_type", MsgType(self.msg_type))
        if self.msg_type is MsgType.NACK:
            if self.nack_reason is None:
                raise MalformedMessage("Nack without a reason")
            object.__setattr__(self, "nack_reason", NackReason(self.nack_reason))
        elif self.nack_reason is not None:
            raise MalformedMessage(f"{self.msg_type.name} must not carry a nack reason")

    @property
    def is_interest(self) -> bool:
        return self.msg_type is MsgType.INTEREST

    @property
    def is_content(self) -> bool:
        return self.msg_type is MsgType.CONTENT

    @property
    def is_nack(self) -> bool:
        return self.msg_type is MsgType.NACK


def _tlv(t: int, value: bytes) -> bytes:
    if len(value) > MAX_TLV_VALUE:
        raise MessageTooLarge(f"TLV 0x{t:04x} value is {len(value)} bytes")
    return TL.pack(t, len(value)) + value


def _name_value(name: Name) -> bytes:
    return b"".join(_tlv(T_NAME_COMPONENT, c) for c in name.components)


def _tlvs(msg: Message) -> Iterable[bytes]:
    yield _tlv(T_NAME, _name_value(msg.name))
    if msg.supporting_name is not None:
        yield _tlv(T_SUPPORTING_NAME, _name_value(msg.supporting_name))
    if msg.payload is not None:
        yield _tlv(T_PAYLOAD, msg.payload)
    if msg.validation_alg is not None:
        yield _tlv(T_VALIDATION_ALG, msg.validation_alg)
    if msg.validation_payload is not None:
        yield _tlv(T_VALIDATION_PAYLOAD, msg.validation_payload)
    if msg.nack_reason is not None:
        yield _tlv(T_NACK_REASON, bytes([msg.nack_reason]))


def encode(msg: Message) -> bytes:
    body = b"".join(_tlvs(msg))
    flags = FLAG_SUPPORTING_NAME if msg.supporting_name is not None else 0
    return HEADER.pack(MAGIC, msg.msg_type, flags, HEADER.size + len(body)) + body


def _decode_name(value: bytes) -> Name:
    comps = []
    off = 0
    while off < len(value):
        if len(value) - off < TL.size:
            raise MalformedMessage("truncated name component header")
        t, n = TL.unpack_from(value, off)
        off += TL.size
        if t != T_NAME_COMPONENT:
            raise MalformedMessage(f"unexpected TLV 0x{t:04x} inside a name")
        if len(value) - off < n:
            raise MalformedMessage("truncated name component")
        comps.append(value[off:off + n])
        off += n
    try:
        return Name(tuple(comps))
    except MalformedName as e:
        raise MalformedMessage(str(e)) from e


def decode(data: bytes) -> Message:
    data = bytes(data)
    if len(data) < HEADER.size:
        raise MalformedMessage("truncated header")
    magic, mtype, flags, total = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedMessage(f"bad magic {magic!r}")
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise MalformedMessage(f"unknown message type {mtype}") from None
    if flags & ~FLAG_SUPPORTING_NAME:
        raise MalformedMessage(f"reserved flag bits set: 0x{flags:02x}")
    if total != len(data):
        raise MalformedMessage(f"total_length {total} != {len(data)} bytes received")

    fields: dict[int, bytes] = {}
    last = -1
    off = HEADER.size
    while off < len(data):
        if len(data) - off < TL.size:
            raise MalformedMessage("truncated TLV header")
        t, n = TL.unpack_from(data, off)
        off += TL.size
        if t not in TLV_ORDER:
            raise MalformedMessage(f"unknown TLV type 0x{t:04x}")
        pos = TLV_ORDER.index(t)
        if pos == last:
            raise MalformedMessage(f"duplicate TLV 0x{t:04x}")
        if pos < last:
            raise MalformedMessage(f"TLV 0x{t:04x} out of order")
        last = pos
        if len(data) - off < n:
            raise MalformedMessage(f"truncated TLV 0x{t:04x}")
        fields[t] = data[off:off + n]
        off += n

    if T_NAME not in fields:
        raise MalformedMessage("missing Name TLV")
    has_sn = bool(flags & FLAG_SUPPORTING_NAME)
    if has_sn != (T_SUPPORTING_NAME in fields):
        raise MalformedMessage("SupportingName flag and TLV disagree")
    reason = None
    if T_NACK_REASON in fields:
        raw = fields[T_NACK_REASON]
        if len(raw) != 1 or raw[0] not in NackReason._value2member_map_:
            raise MalformedMessage(f"bad nack reason {raw!r}")
        reason = NackReason(raw[0])
    if (mtype is MsgType.NACK) != (reason is not None):
        raise MalformedMessage("NackReason TLV must appear exactly on Nack messages")

    return Message(
        msg_type=mtype,
        name=_decode_name(fields[T_NAME]),
        supporting_name=_decode_name(fields[T_SUPPORTING_NAME]) if has_sn else None,
        payload=fields.get(T_PAYLOAD),
        validation_alg=fields.get(T_VALIDATION_ALG),
        validation_payload=fields.get(T_VALIDATION_PAYLOAD),
        nack_reason=reason,
    )


def validation_input(msg: Message) -> bytes:
    """Bytes a producer signs: the encoding without SupportingName or signature.

    Since the SupportingName only steers routing, a signature over these
    bytes stays valid whichever consumer the content is addressed to.
    """
    if msg.is_nack:
        raise ValueError("Nack messages carry no validation")
    return encode(replace(msg, supporting_name=None, validation_payload=None))


def _name_size(name: Name) -> int:
    return TL.size + sum(TL.size + len(c) for c in name.components)


def encoded_size(msg: Message) -> int:
    """``len(encode(msg))`` without building the bytes."""
    size = HEADER.size + _name_size(msg.name)
    if msg.supporting_name is not None:
        size += _name_size(msg.supporting_name)
    for v in (msg.payload, msg.validation_alg, msg.validation_payload):
        if v is not None:
            size += TL.size + len(v)
    if msg.nack_reason is not None:
        size += TL.size + 1
    return size
