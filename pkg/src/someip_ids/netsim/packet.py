from __future__ import annotations

import dataclasses

from ..codec import MessageType, SomeIpMessage

# Packet labels. Sequence labels use the same values.
NORMAL = 0
ERROR_ON_EVENT = 1
ERROR_ON_ERROR = 2
MISSING_RESPONSE = 3
MISSING_REQUEST = 4
NUM_CLASSES = 5

# Message types sent by the server side of an exchange.
SERVER_TYPES = frozenset({MessageType.NOTIFICATION, MessageType.RESPONSE, MessageType.ERROR})


@dataclasses.dataclass(frozen=True)
class LabeledPacket:
    """One UDP datagram carrying a SOME/IP message, with its link/network metadata.

    ``timestamp`` is in microseconds since the epoch. ``label`` is ``None`` for
    packets read back from a capture without a label sidecar.
    """

    timestamp: int
    src_mac: str
    dst_mac: str
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    someip: SomeIpMessage
    label: int | None = NORMAL

    transport = "UDP"

    @property
    def message_type(self) -> MessageType:
        return self.someip.header.message_type

    def with_label(self, label: int | None) -> LabeledPacket:
        return dataclasses.replace(self, label=label)


def conversation_key(pkt: LabeledPacket) -> tuple:
    """Direction-independent key of the client/server exchange a packet belongs to."""
    a, b = sorted((pkt.src_ip, pkt.dst_ip))
    h = pkt.someip.header
    return (a, b, h.client_id, h.session_id)


def session_key(first: LabeledPacket) -> tuple[str, str, int, int]:
    """(client ip, server ip, client_id, session_id) from any packet of the exchange."""
    h = first.someip.header
    if h.message_type in SERVER_TYPES:
        client_ip, server_ip = first.dst_ip, first.src_ip
    else:
        client_ip, server_ip = first.src_ip, first.dst_ip
    return (client_ip, server_ip, h.client_id, h.session_id)
