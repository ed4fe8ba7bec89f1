"""Seeded SOME/IP network simulation with intrusion injection."""
from .config import (
    CLASS_NAMES,
    AttackType,
    ConfigError,
    DeviceConfig,
    DeviceKind,
    MethodConfig,
    RpcKind,
    ScenarioConfig,
    ServiceConfig,
    dump_scenario,
    load_scenario,
    reference_scenario,
    scenario_from_dict,
)
from .packet import LabeledPacket, conversation_key, session_key
from .pcap import (
    BadMagic,
    IndexMismatch,
    MalformedRecord,
    PcapError,
    read_labeled,
    read_labels,
    read_pcap,
    write_labels,
    write_pcap,
)
from .traffic import NotEnoughSessions, inject_attack, simulate, simulate_normal, summarize

__all__ = [
    "CLASS_NAMES",
    "AttackType",
    "BadMagic",
    "ConfigError",
    "DeviceConfig",
    "DeviceKind",
    "IndexMismatch",
    "LabeledPacket",
    "MalformedRecord",
    "MethodConfig",
    "NotEnoughSessions",
    "PcapError",
    "RpcKind",
    "ScenarioConfig",
    "ServiceConfig",
    "conversation_key",
    "dump_scenario",
    "inject_attack",
    "load_scenario",
    "reference_scenario",
    "read_labeled",
    "read_labels",
    "read_pcap",
    "scenario_from_dict",
    "session_key",
    "simulate",
    "simulate_normal",
    "summarize",
    "write_labels",
    "write_pcap",
]
