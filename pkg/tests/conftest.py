import numpy as np
import pytest

from someip_ids import netsim
from someip_ids.netsim import (
    AttackType,
    DeviceConfig,
    DeviceKind,
    MethodConfig,
    RpcKind,
    ScenarioConfig,
    ServiceConfig,
)


def small_scenario(methods=(RpcKind.REQUEST_RESPONSE,), n_clients=2, packets=4,
                   attack=AttackType.NONE, attacks=0, seed=0) -> ScenarioConfig:
    """One server offering one service to ``n_clients`` clients, plus the attacker."""
    devices = [DeviceConfig("srv", DeviceKind.SERVER, "02:00:00:00:01:01", "10.0.0.1", 30501, 30501)]
    for i in range(1, n_clients + 1):
        devices.append(DeviceConfig(f"cli{i}", DeviceKind.CLIENT, f"02:00:00:00:02:{i:02x}",
                                    f"10.0.0.{100 + i}", 40000 + i, 40000 + i, client_id=0x10 + i))
    devices.append(DeviceConfig("atk", DeviceKind.ATTACKER, "02:00:00:00:0a:01", "10.0.0.200",
                                50000, 50000))
    mids = []
    next_rpc, next_ev = 1, 0x8001
    for kind in methods:
        if kind is RpcKind.EVENT:
            mids.append(MethodConfig(next_ev, kind))
            next_ev += 1
        else:
            mids.append(MethodConfig(next_rpc, kind))
            next_rpc += 1
    svc = ServiceConfig(0x1234, tuple(mids), "srv", tuple(f"cli{i}" for i in range(1, n_clients + 1)))
    return ScenarioConfig(tuple(devices), (svc,), packets_per_client_method_service=packets,
                          attacks_to_execute=attacks, attack_type=attack, seed=seed)


@pytest.fixture
def scenario_factory():
    return small_scenario


@pytest.fixture(scope="session")
def mixed_corpus():
    """Packets of one run per attack type at reduced scale, plus a normal run."""
    runs = {}
    base = small_scenario(
        methods=(RpcKind.REQUEST_RESPONSE, RpcKind.FIRE_AND_FORGET, RpcKind.EVENT),
        n_clients=8, packets=10,
    )
    for i, attack in enumerate(AttackType):
        cfg = base.replace(attack_type=attack, attacks_to_execute=0 if attack is AttackType.NONE else 3,
                           seed=100 + i)
        runs[attack] = netsim.simulate(cfg)
    return runs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} ({detail})"
        print(line)
        lines.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
