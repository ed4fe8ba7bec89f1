"""Normal SOME/IP traffic generation and intrusion injection.

Every (client, service, method) pairing is simulated as one episode that keeps
a constant session id. Episodes are started in round-robin order over the
services and run concurrently in simulated time; the merged stream is ordered
by timestamp.
"""
from __future__ import annotations

import collections
import random
from dataclasses import dataclass

from ..codec import MessageType, SomeIpMessage
from . import packet as P
from .config import AttackType, DeviceConfig, RpcKind, ScenarioConfig, validate
from .packet import LabeledPacket, conversation_key

EPOCH_US = 1_600_000_000 * 1_000_000

# Normal-traffic timing, microseconds.
CALL_GAP_US = (1_000, 10_000)
SERVER_DELAY_US = (500, 2_000)
EPISODE_STAGGER_US = 2_000

E_NOT_OK = 0x01


class NotEnoughSessions(ValueError):
    pass


@dataclass(frozen=True)
class Episode:
    client: DeviceConfig
    server: DeviceConfig
    service_id: int
    method_id: int
    rpc_kind: RpcKind
    interface_version: int
    session_id: int


def plan_episodes(cfg: ScenarioConfig) -> list[Episode]:
    """Episodes in start order: round-robin over services, then methods, then clients."""
    per_service = []
    for svc in cfg.services:
        server = cfg.device(svc.offered_by)
        items = [
            (cfg.device(name), server, svc, method)
            for method in svc.methods
            for name in svc.requested_by
        ]
        per_service.append(items)

    ordered = []
    for i in range(max((len(x) for x in per_service), default=0)):
        for items in per_service:
            if i < len(items):
                ordered.append(items[i])

    next_session: dict[str, int] = collections.defaultdict(lambda: 1)
    episodes = []
    for client, server, svc, method in ordered:
        sess = next_session[client.name]
        next_session[client.name] = sess % 0xFFFF + 1
        episodes.append(
            Episode(
                client=client,
                server=server,
                service_id=svc.service_id,
                method_id=method.method_id,
                rpc_kind=method.rpc_kind,
                interface_version=svc.interface_version,
                session_id=sess,
            )
        )
    return episodes


def _payload(rng: random.Random) -> bytes:
    return bytes(rng.getrandbits(8) for _ in range(rng.choice((4, 8))))


def _client_to_server(ep: Episode, t: int, msg: SomeIpMessage) -> LabeledPacket:
    return LabeledPacket(
        timestamp=t,
        src_mac=ep.client.mac,
        dst_mac=ep.server.mac,
        src_ip=ep.client.ip,
        dst_ip=ep.server.ip,
        src_port=ep.client.send_port,
        dst_port=ep.server.recv_port,
        someip=msg,
    )


def _server_to_client(ep: Episode, t: int, msg: SomeIpMessage) -> LabeledPacket:
    return LabeledPacket(
        timestamp=t,
        src_mac=ep.server.mac,
        dst_mac=ep.client.mac,
        src_ip=ep.server.ip,
        dst_ip=ep.client.ip,
        src_port=ep.server.send_port,
        dst_port=ep.client.recv_port,
        someip=msg,
    )


def _run_episode(ep: Episode, start: int, n_packets: int, rng: random.Random) -> list[LabeledPacket]:
    def msg(mtype):
        return SomeIpMessage.build(
            ep.service_id,
            ep.method_id,
            ep.client.client_id,
            ep.session_id,
            mtype,
            _payload(rng),
            interface_version=ep.interface_version,
        )

    out = []
    t = start
    if ep.rpc_kind is RpcKind.REQUEST_RESPONSE:
        for _ in range(max(1, n_packets // 2)):
            out.append(_client_to_server(ep, t, msg(MessageType.REQUEST)))
            t += rng.randint(*SERVER_DELAY_US)
            out.append(_server_to_client(ep, t, msg(MessageType.RESPONSE)))
            t += rng.randint(*CALL_GAP_US)
    elif ep.rpc_kind is RpcKind.FIRE_AND_FORGET:
        for _ in range(n_packets):
            out.append(_client_to_server(ep, t, msg(MessageType.REQUEST_NO_RETURN)))
            t += rng.randint(*CALL_GAP_US)
    else:
        for _ in range(n_packets):
            out.append(_server_to_client(ep, t, msg(MessageType.NOTIFICATION)))
            t += rng.randint(*CALL_GAP_US)
    return out


def simulate_normal(cfg: ScenarioConfig) -> list[LabeledPacket]:
    """Attack-free traffic for every configured (client, service, method) episode."""
    validate(cfg)
    rng = random.Random(cfg.seed * 2)
    tagged = []
    for k, ep in enumerate(plan_episodes(cfg)):
        start = EPOCH_US + k * EPISODE_STAGGER_US + rng.randint(0, EPISODE_STAGGER_US // 2)
        for j, pkt in enumerate(_run_episode(ep, start, cfg.packets_per_client_method_service, rng)):
            tagged.append(((pkt.timestamp, k, j), pkt))
    tagged.sort(key=lambda x: x[0])
    return [pkt for _, pkt in tagged]


# --- intrusion injection ---------------------------------------------------


def sessions_of(stream: list[LabeledPacket]) -> dict[tuple, list[int]]:
    """Stream indices per conversation, in first-appearance order."""
    groups: dict[tuple, list[int]] = {}
    for i, pkt in enumerate(stream):
        groups.setdefault(conversation_key(pkt), []).append(i)
    return groups


def _forge(template: LabeledPacket, attacker: DeviceConfig, t: int, mtype: MessageType,
           reverse: bool, label: int, payload: bytes = b"") -> LabeledPacket:
    """Attacker packet reusing the IP/port/SOME/IP identity of ``template``'s sender
    (or receiver when ``reverse``) but carrying the attacker's own MAC address."""
    if reverse:
        src_ip, dst_ip = template.dst_ip, template.src_ip
        src_port, dst_port = template.dst_port, template.src_port
        dst_mac = template.src_mac
    else:
        src_ip, dst_ip = template.src_ip, template.dst_ip
        src_port, dst_port = template.src_port, template.dst_port
        dst_mac = template.dst_mac
    rc = E_NOT_OK if mtype is MessageType.ERROR else 0x00
    msg = template.someip.replace(message_type=mtype, return_code=rc, payload=payload)
    return LabeledPacket(
        timestamp=t,
        src_mac=attacker.mac,
        dst_mac=dst_mac,
        src_ip=src_ip,
        dst_ip=dst_ip,
        src_port=src_port,
        dst_port=dst_port,
        someip=msg,
        label=label,
    )


# (opening message type, trigger message type, packets the attack inserts)
_ATTACK_SHAPE = {
    AttackType.ERROR_ON_EVENT: (MessageType.NOTIFICATION, MessageType.NOTIFICATION, 1),
    AttackType.ERROR_ON_ERROR: (MessageType.REQUEST, MessageType.RESPONSE, 2),
    AttackType.MISSING_REQUEST: (MessageType.REQUEST, MessageType.RESPONSE, 1),
    AttackType.MISSING_RESPONSE: (MessageType.REQUEST, MessageType.RESPONSE, 0),
}


def eligible_triggers(stream: list[LabeledPacket], cfg: ScenarioConfig) -> dict[tuple, list[int]]:
    """Per session, the stream indices where ``cfg.attack_type`` may be mounted.

    A trigger qualifies only if every inserted packet lands before the next
    packet of the same session, so an attack never interleaves with the
    following exchange.
    """
    opener, trigger_type, n_insert = _ATTACK_SHAPE[cfg.attack_type]
    max_delay_us = round(cfg.attacker_response_ms[1] * 1000) * n_insert
    out = {}
    for key, idxs in sessions_of(stream).items():
        if stream[idxs[0]].message_type is not opener:
            continue
        if any(stream[i].label for i in idxs):
            continue
        triggers = []
        for pos, i in enumerate(idxs):
            if stream[i].message_type is not trigger_type:
                continue
            if pos + 1 < len(idxs) and stream[idxs[pos + 1]].timestamp <= stream[i].timestamp + max_delay_us:
                continue
            triggers.append(i)
        if triggers:
            out[key] = triggers
    return out


def inject_attack(stream: list[LabeledPacket], cfg: ScenarioConfig) -> list[LabeledPacket]:
    """Mount ``cfg.attacks_to_execute`` attacks of ``cfg.attack_type``, one per session."""
    if cfg.attack_type is AttackType.NONE or cfg.attacks_to_execute == 0:
        return list(stream)
    rng = random.Random(cfg.seed * 2 + 1)
    attacker = cfg.attacker
    label = cfg.attack_type.label
    lo_us = round(cfg.attacker_response_ms[0] * 1000)
    hi_us = round(cfg.attacker_response_ms[1] * 1000)

    eligible = eligible_triggers(stream, cfg)
    if len(eligible) < cfg.attacks_to_execute:
        raise NotEnoughSessions(
            f"{cfg.attack_type.value}: {len(eligible)} eligible sessions, "
            f"{cfg.attacks_to_execute} attacks requested"
        )
    victims = rng.sample(list(eligible), cfg.attacks_to_execute)

    tagged = [((pkt.timestamp, i, 0), pkt) for i, pkt in enumerate(stream)]
    dropped = set()
    groups = sessions_of(stream)
    for key in victims:
        i = rng.choice(eligible[key])
        trig = stream[i]
        t = trig.timestamp + rng.randint(lo_us, hi_us)
        if cfg.attack_type is AttackType.ERROR_ON_EVENT:
            # the subscriber "answers" the notification with an error
            err = _forge(trig, attacker, t, MessageType.ERROR, reverse=True, label=label)
            tagged.append(((t, i, 1), err))
        elif cfg.attack_type is AttackType.MISSING_REQUEST:
            dup = _forge(trig, attacker, t, MessageType.RESPONSE, reverse=False, label=label,
                         payload=trig.someip.payload)
            tagged.append(((t, i, 1), dup))
        elif cfg.attack_type is AttackType.ERROR_ON_ERROR:
            first = _forge(trig, attacker, t, MessageType.ERROR, reverse=False, label=label)
            t2 = t + rng.randint(lo_us, hi_us)
            second = _forge(trig, attacker, t2, MessageType.ERROR, reverse=True, label=label)
            tagged.append(((t, i, 1), first))
            tagged.append(((t2, i, 2), second))
        else:
            idxs = groups[key]
            req = idxs[idxs.index(i) - 1]
            dropped.add(i)
            tagged[req] = (tagged[req][0], stream[req].with_label(label))

    tagged = [item for item in tagged if item[0][2] != 0 or item[0][1] not in dropped]
    tagged.sort(key=lambda x: x[0])
    return [pkt for _, pkt in tagged]


def simulate(cfg: ScenarioConfig) -> list[LabeledPacket]:
    return inject_attack(simulate_normal(cfg), cfg)


def summarize(packets: list[LabeledPacket]) -> dict:
    per_class = collections.Counter(p.label for p in packets)
    sessions = sessions_of(packets)
    seq_labels = collections.Counter(
        max((packets[i].label or 0) for i in idxs) for idxs in sessions.values()
    )
    return {
        "packets": len(packets),
        "packets_per_class": {str(c): per_class.get(c, 0) for c in range(P.NUM_CLASSES)},
        "sessions": len(sessions),
        "sessions_per_class": {str(c): seq_labels.get(c, 0) for c in range(P.NUM_CLASSES)},
        "max_session_length": max((len(v) for v in sessions.values()), default=0),
    }
