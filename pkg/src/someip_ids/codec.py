"""SOME/IP header and message encoding.

Wire layout (16-byte header, all fields big-endian)::

    service_id:16  method_id:16
    length:32      (Request ID through end of payload, i.e. 8 + len(payload))
    client_id:16   session_id:16
    protocol_version:8  interface_version:8  message_type:8  return_code:8
    payload...
"""
from __future__ import annotations

import dataclasses
import enum
import struct

HEADER_SIZE = 16
LENGTH_OFFSET = 8  # bytes counted by the length field before the payload
PROTOCOL_VERSION = 0x01

_HEADER = struct.Struct(">HHIHHBBBB")


class CodecError(ValueError):
    pass


class InvariantViolation(CodecError):
    pass


class DecodeError(CodecError):
    pass


class Truncated(DecodeError):
    pass


class UnknownMessageType(DecodeError):
    pass


class LengthMismatch(DecodeError):
    pass


class MessageType(enum.IntEnum):
    REQUEST = 0x00
    REQUEST_NO_RETURN = 0x01
    NOTIFICATION = 0x02
    RESPONSE = 0x80
    ERROR = 0x81


@dataclasses.dataclass(frozen=True)
class SomeIpHeader:
    service_id: int
    method_id: int
    length: int
    client_id: int
    session_id: int
    protocol_version: int
    interface_version: int
    message_type: MessageType
    return_code: int = 0x00

    @property
    def payload_length(self) -> int:
        return self.length - LENGTH_OFFSET


@dataclasses.dataclass(frozen=True)
class SomeIpMessage:
    header: SomeIpHeader
    payload: bytes = b""

    @classmethod
    def build(
        cls,
        service_id: int,
        method_id: int,
        client_id: int,
        session_id: int,
        message_type: MessageType,
        payload: bytes = b"",
        *,
        interface_version: int = 0x01,
        protocol_version: int = PROTOCOL_VERSION,
        return_code: int = 0x00,
    ) -> SomeIpMessage:
        """Construct a message with the length field derived from the payload."""
        header = SomeIpHeader(
            service_id=service_id,
            method_id=method_id,
            length=LENGTH_OFFSET + len(payload),
            client_id=client_id,
            session_id=session_id,
            protocol_version=protocol_version,
            interface_version=interface_version,
            message_type=MessageType(message_type),
            return_code=return_code,
        )
        return cls(header, bytes(payload))

    def replace(self, **header_fields) -> SomeIpMessage:
        """Copy with some header fields changed (length is kept consistent)."""
        payload = header_fields.pop("payload", self.payload)
        fields = dataclasses.asdict(self.header)
        fields.update(header_fields)
        fields["length"] = LENGTH_OFFSET + len(payload)
        fields["message_type"] = MessageType(fields["message_type"])
        return SomeIpMessage(SomeIpHeader(**fields), bytes(payload))


def encode(msg: SomeIpMessage) -> bytes:
    h = msg.header
    if h.length != LENGTH_OFFSET + len(msg.payload):
        raise InvariantViolation(
            f"length field {h.length} does not cover {len(msg.payload)} payload bytes"
        )
    try:
        head = _HEADER.pack(
            h.service_id,
            h.method_id,
            h.length,
            h.client_id,
            h.session_id,
            h.protocol_version,
            h.interface_version,
            int(h.message_type),
            h.return_code,
        )
    except struct.error as exc:
        raise InvariantViolation(f"header field out of range: {exc}") from None
    return head + msg.payload


def decode(buf: bytes) -> SomeIpMessage:
    """Parse one SOME/IP message occupying exactly ``buf``.

    Raises :class:`Truncated` when ``buf`` is shorter than the header or the
    declared length, :class:`LengthMismatch` when the length field is below the
    minimum or ``buf`` carries trailing bytes, and :class:`UnknownMessageType`
    for message types outside REQUEST/REQUEST_NO_RETURN/NOTIFICATION/RESPONSE/ERROR.
    """
    if len(buf) < HEADER_SIZE:
        raise Truncated(f"need {HEADER_SIZE} header bytes, got {len(buf)}")
    sid, mid, length, cid, sess, pv, iv, mt, rc = _HEADER.unpack_from(buf)
    if length < LENGTH_OFFSET:
        raise LengthMismatch(f"length field {length} below minimum {LENGTH_OFFSET}")
    total = HEADER_SIZE - LENGTH_OFFSET + length
    if len(buf) < total:
        raise Truncated(f"length field declares {total} bytes, buffer has {len(buf)}")
    if len(buf) > total:
        raise LengthMismatch(f"{len(buf) - total} bytes beyond declared length {length}")
    try:
        msg_type = MessageType(mt)
    except ValueError:
        raise UnknownMessageType(f"message type 0x{mt:02x}") from None
    header = SomeIpHeader(sid, mid, length, cid, sess, pv, iv, msg_type, rc)
    return SomeIpMessage(header, bytes(buf[HEADER_SIZE:]))


def validate_version(msg: SomeIpMessage) -> list[str]:
    if msg.header.protocol_version != PROTOCOL_VERSION:
        return [
            f"protocol_version: expected 0x{PROTOCOL_VERSION:02x}, "
            f"got 0x{msg.header.protocol_version:02x}"
        ]
    return []
