"""Scenario configuration for the traffic simulator.

Scenario files are YAML (or JSON) documents whose keys follow the generator's
parameter table: ``devices``, ``services``,
``packets_per_client_method_service``, ``attacks_to_execute``,
``min_response_time_attacker_ms``, ``max_response_time_attacker_ms``,
``attack`` and ``output``.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import ipaddress
import json
import re
from pathlib import Path
from typing import Any

import yaml

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


class ConfigError(ValueError):
    pass


class DeviceKind(str, enum.Enum):
    CLIENT = "client"
    SERVER = "server"
    ATTACKER = "attacker"


class RpcKind(str, enum.Enum):
    REQUEST_RESPONSE = "request_response"
    FIRE_AND_FORGET = "fire_and_forget"
    EVENT = "event"


class AttackType(str, enum.Enum):
    NONE = "none"
    ERROR_ON_EVENT = "error_on_event"
    ERROR_ON_ERROR = "error_on_error"
    MISSING_RESPONSE = "missing_response"
    MISSING_REQUEST = "missing_request"

    @property
    def label(self) -> int:
        return _ATTACK_LABELS[self]


_ATTACK_LABELS = {
    AttackType.NONE: 0,
    AttackType.ERROR_ON_EVENT: 1,
    AttackType.ERROR_ON_ERROR: 2,
    AttackType.MISSING_RESPONSE: 3,
    AttackType.MISSING_REQUEST: 4,
}

CLASS_NAMES = ("Normal", "Error on Event", "Error on Error", "Missing Response", "Missing Request")


@dataclasses.dataclass(frozen=True)
class DeviceConfig:
    name: str
    kind: DeviceKind
    mac: str
    ip: str
    send_port: int
    recv_port: int
    client_id: int = 0  # SOME/IP client id; used by clients only


@dataclasses.dataclass(frozen=True)
class MethodConfig:
    method_id: int
    rpc_kind: RpcKind


@dataclasses.dataclass(frozen=True)
class ServiceConfig:
    service_id: int
    methods: tuple[MethodConfig, ...]
    offered_by: str
    requested_by: tuple[str, ...]
    interface_version: int = 0x01


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    devices: tuple[DeviceConfig, ...]
    services: tuple[ServiceConfig, ...]
    packets_per_client_method_service: int = 50
    attacks_to_execute: int = 10
    attacker_response_ms: tuple[float, float] = (1.0, 3.0)
    attack_type: AttackType = AttackType.NONE
    seed: int = 0
    output_path: str = "output.pcap"

    def device(self, name: str) -> DeviceConfig:
        for dev in self.devices:
            if dev.name == name:
                return dev
        raise ConfigError(f"unknown device {name!r}")

    @property
    def attacker(self) -> DeviceConfig:
        return next(d for d in self.devices if d.kind is DeviceKind.ATTACKER)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "devices": [
                {
                    "name": d.name,
                    "type": d.kind.value,
                    "mac": d.mac,
                    "ip": d.ip,
                    "send_port": d.send_port,
                    "recv_port": d.recv_port,
                    "client_id": d.client_id,
                }
                for d in self.devices
            ],
            "services": [
                {
                    "service_id": s.service_id,
                    "interface_version": s.interface_version,
                    "methods": [
                        {"method_id": m.method_id, "type": m.rpc_kind.value} for m in s.methods
                    ],
                    "offered_by": s.offered_by,
                    "requested_by": list(s.requested_by),
                }
                for s in self.services
            ],
            "packets_per_client_method_service": self.packets_per_client_method_service,
            "attacks_to_execute": self.attacks_to_execute,
            "min_response_time_attacker_ms": self.attacker_response_ms[0],
            "max_response_time_attacker_ms": self.attacker_response_ms[1],
            "attack": self.attack_type.value,
            "seed": self.seed,
            "output": self.output_path,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _int(value) -> int:
    if isinstance(value, str):
        return int(value, 0)
    return int(value)


def scenario_from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    try:
        devices = tuple(
            DeviceConfig(
                name=str(d["name"]),
                kind=DeviceKind(d["type"]),
                mac=str(d["mac"]).lower(),
                ip=str(d["ip"]),
                send_port=_int(d["send_port"]),
                recv_port=_int(d["recv_port"]),
                client_id=_int(d.get("client_id", 0)),
            )
            for d in doc["devices"]
        )
        services = tuple(
            ServiceConfig(
                service_id=_int(s["service_id"]),
                methods=tuple(
                    MethodConfig(_int(m["method_id"]), RpcKind(m["type"])) for m in s["methods"]
                ),
                offered_by=str(s["offered_by"]),
                requested_by=tuple(str(n) for n in s["requested_by"]),
                interface_version=_int(s.get("interface_version", 1)),
            )
            for s in doc["services"]
        )
        cfg = ScenarioConfig(
            devices=devices,
            services=services,
            packets_per_client_method_service=_int(doc.get("packets_per_client_method_service", 50)),
            attacks_to_execute=_int(doc.get("attacks_to_execute", 10)),
            attacker_response_ms=(
                float(doc.get("min_response_time_attacker_ms", 1.0)),
                float(doc.get("max_response_time_attacker_ms", 3.0)),
            ),
            attack_type=AttackType(doc.get("attack", "none")),
            seed=_int(doc.get("seed", 0)),
            output_path=str(doc.get("output", "output.pcap")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc!r}") from None
    validate(cfg)
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return scenario_from_dict(doc)


def dump_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    path = Path(path)
    doc = cfg.to_dict()
    if path.suffix == ".json":
        path.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        path.write_text(yaml.safe_dump(doc, sort_keys=False))


def validate(cfg: ScenarioConfig) -> None:
    names = [d.name for d in cfg.devices]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate device names")
    endpoints = [(d.ip, d.recv_port) for d in cfg.devices]
    if len(set(endpoints)) != len(endpoints):
        raise ConfigError("devices must have unique (ip, recv_port)")
    for d in cfg.devices:
        if not _MAC_RE.match(d.mac):
            raise ConfigError(f"{d.name}: bad MAC address {d.mac!r}")
        try:
            ipaddress.IPv4Address(d.ip)
        except ValueError:
            raise ConfigError(f"{d.name}: bad IPv4 address {d.ip!r}") from None
        for port in (d.send_port, d.recv_port):
            if not 0 < port < 0x10000:
                raise ConfigError(f"{d.name}: port {port} out of range")
    attackers = [d for d in cfg.devices if d.kind is DeviceKind.ATTACKER]
    if len(attackers) != 1:
        raise ConfigError(f"expected exactly one attacker, found {len(attackers)}")
    client_ids = [d.client_id for d in cfg.devices if d.kind is DeviceKind.CLIENT]
    if len(set(client_ids)) != len(client_ids):
        raise ConfigError("client ids must be unique")

    by_name = {d.name: d for d in cfg.devices}
    service_ids = [s.service_id for s in cfg.services]
    if len(set(service_ids)) != len(service_ids):
        raise ConfigError("duplicate service ids")
    for s in cfg.services:
        server = by_name.get(s.offered_by)
        if server is None or server.kind is not DeviceKind.SERVER:
            raise ConfigError(f"service 0x{s.service_id:04x}: offered_by {s.offered_by!r} is not a server")
        for name in s.requested_by:
            dev = by_name.get(name)
            if dev is None or dev.kind is not DeviceKind.CLIENT:
                raise ConfigError(f"service 0x{s.service_id:04x}: requester {name!r} is not a client")
        mids = [m.method_id for m in s.methods]
        if len(set(mids)) != len(mids):
            raise ConfigError(f"service 0x{s.service_id:04x}: duplicate method ids")
        for m in s.methods:
            is_event_id = bool(m.method_id & 0x8000)
            if is_event_id != (m.rpc_kind is RpcKind.EVENT):
                raise ConfigError(
                    f"service 0x{s.service_id:04x}: method 0x{m.method_id:04x} "
                    "high bit must be set for events only"
                )

    lo, hi = cfg.attacker_response_ms
    if not 0 <= lo <= hi:
        raise ConfigError(f"attacker response time bounds {cfg.attacker_response_ms} invalid")
    if cfg.packets_per_client_method_service <= 0:
        raise ConfigError("packets_per_client_method_service must be positive")
    if cfg.attacks_to_execute < 0:
        raise ConfigError("attacks_to_execute must be non-negative")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")


def reference_scenario(attack_type: AttackType | str = AttackType.NONE, seed: int = 0) -> ScenarioConfig:
    """The 8-server / 8-client / 1-attacker, 3-service setup used for the corpus.

    Each client requests all three services; 13 methods in total give 104
    client/method/service episodes per run.
    """
    devices = []
    for i in range(1, 9):
        devices.append(
            DeviceConfig(
                name=f"server{i}",
                kind=DeviceKind.SERVER,
                mac=f"02:00:00:00:01:{i:02x}",
                ip=f"192.168.0.{10 + i}",
                send_port=30500 + i,
                recv_port=30500 + i,
            )
        )
    for i in range(1, 9):
        devices.append(
            DeviceConfig(
                name=f"client{i}",
                kind=DeviceKind.CLIENT,
                mac=f"02:00:00:00:02:{i:02x}",
                ip=f"192.168.0.{100 + i}",
                send_port=40000 + i,
                recv_port=40000 + i,
                client_id=0x0100 + i,
            )
        )
    devices.append(
        DeviceConfig(
            name="attacker",
            kind=DeviceKind.ATTACKER,
            mac="02:00:00:00:0a:01",
            ip="192.168.0.200",
            send_port=50000,
            recv_port=50000,
        )
    )
    clients = tuple(f"client{i}" for i in range(1, 9))
    rr, ff, ev = RpcKind.REQUEST_RESPONSE, RpcKind.FIRE_AND_FORGET, RpcKind.EVENT
    layouts = [
        (0x1001, "server1", [(0x0001, rr), (0x0002, rr), (0x0003, ff), (0x8001, ev)]),
        (0x1002, "server2", [(0x0001, rr), (0x0002, rr), (0x0003, ff), (0x8001, ev)]),
        (0x1003, "server3", [(0x0001, rr), (0x0002, rr), (0x0003, ff), (0x8001, ev), (0x8002, ev)]),
    ]
    services = tuple(
        ServiceConfig(
            service_id=sid,
            methods=tuple(MethodConfig(mid, kind) for mid, kind in methods),
            offered_by=server,
            requested_by=clients,
        )
        for sid, server, methods in layouts
    )
    return ScenarioConfig(
        devices=tuple(devices),
        services=services,
        packets_per_client_method_service=50,
        attacks_to_execute=10,
        attacker_response_ms=(1.0, 3.0),
        attack_type=AttackType(attack_type),
        seed=seed,
        output_path="output.pcap",
    )
