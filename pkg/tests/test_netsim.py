import json
import struct

import pytest

from someip_ids import netsim
from someip_ids.codec import MessageType
from someip_ids.netsim import AttackType, ConfigError, RpcKind
from someip_ids.netsim.traffic import NotEnoughSessions, plan_episodes, sessions_of
from someip_ids.pipeline import conformance_oracle

MT = MessageType


def _types(packets):
    return [p.message_type for p in packets]


def test_request_response_example(scenario_factory):
    cfg = scenario_factory(n_clients=1, packets=4)
    pkts = netsim.simulate_normal(cfg)
    assert _types(pkts) == [MT.REQUEST, MT.RESPONSE, MT.REQUEST, MT.RESPONSE]
    sess = {p.someip.header.session_id for p in pkts}
    assert len(sess) == 1
    assert all(p.label == 0 for p in pkts)
    # requests go client -> server, responses come back
    assert pkts[0].src_ip == pkts[1].dst_ip == "10.0.0.101"


def test_fire_and_forget_has_no_replies(scenario_factory):
    cfg = scenario_factory(methods=(RpcKind.FIRE_AND_FORGET,), packets=6)
    pkts = netsim.simulate_normal(cfg)
    assert set(_types(pkts)) == {MT.REQUEST_NO_RETURN}
    assert len(pkts) == 12


def test_events_are_server_to_client(scenario_factory):
    cfg = scenario_factory(methods=(RpcKind.EVENT,), packets=5)
    pkts = netsim.simulate_normal(cfg)
    assert set(_types(pkts)) == {MT.NOTIFICATION}
    assert all(p.src_ip == "10.0.0.1" for p in pkts)


def test_normal_traffic_well_formed():
    cfg = netsim.reference_scenario(seed=7)
    pkts = netsim.simulate_normal(cfg)
    assert MT.ERROR not in set(_types(pkts))
    for idxs in sessions_of(pkts).values():
        group = [pkts[i] for i in idxs]
        assert conformance_oracle(group) == 0
        # every REQUEST is immediately answered by exactly one RESPONSE
        types = _types(group)
        for i, t in enumerate(types):
            if t is MT.REQUEST:
                assert types[i + 1] is MT.RESPONSE
    ts = [p.timestamp for p in pkts]
    assert ts == sorted(ts)


def test_reference_scenario_shape():
    cfg = netsim.reference_scenario()
    assert len(plan_episodes(cfg)) == 104
    kinds = [d.kind.value for d in cfg.devices]
    assert kinds.count("server") == 8 and kinds.count("client") == 8 and kinds.count("attacker") == 1
    assert len(cfg.services) == 3
    assert cfg.packets_per_client_method_service == 50
    assert cfg.attacks_to_execute == 10
    assert cfg.attacker_response_ms == (1.0, 3.0)


def test_session_ids_unique_per_client():
    eps = plan_episodes(netsim.reference_scenario())
    seen = {}
    for ep in eps:
        key = (ep.client.name, ep.session_id)
        assert key not in seen
        seen[key] = ep


def test_determinism():
    cfg = netsim.reference_scenario(AttackType.MISSING_REQUEST, seed=11)
    assert netsim.simulate(cfg) == netsim.simulate(cfg)
    assert netsim.simulate(cfg) != netsim.simulate(cfg.replace(seed=12))


@pytest.mark.parametrize("attack", [a for a in AttackType if a is not AttackType.NONE])
def test_attack_cardinality_and_oracle(attack):
    cfg = netsim.reference_scenario(attack, seed=3)
    pkts = netsim.simulate(cfg)
    groups = sessions_of(pkts)
    attacked = 0
    for idxs in groups.values():
        group = [pkts[i] for i in idxs]
        label = max(p.label for p in group)
        attacked += label != 0
        assert label in (0, attack.label)
        assert conformance_oracle(group) == label
    assert attacked == cfg.attacks_to_execute


def test_error_on_event_timing_and_identity():
    cfg = netsim.reference_scenario(AttackType.ERROR_ON_EVENT, seed=5)
    pkts = netsim.simulate(cfg)
    groups = sessions_of(pkts)
    errors = [i for i, p in enumerate(pkts) if p.message_type is MT.ERROR]
    assert len(errors) == 10
    for i in errors:
        err = pkts[i]
        assert err.label == 1
        assert err.src_mac == cfg.attacker.mac
        idxs = groups[netsim.conversation_key(err)]
        pos = idxs.index(i)
        prev = pkts[idxs[pos - 1]]
        assert prev.message_type is MT.NOTIFICATION
        h, hp = err.someip.header, prev.someip.header
        assert (h.service_id, h.method_id, h.client_id, h.session_id) == (
            hp.service_id, hp.method_id, hp.client_id, hp.session_id)
        assert 1000 <= err.timestamp - prev.timestamp <= 3000


def test_missing_response_orphans_request():
    cfg = netsim.reference_scenario(AttackType.MISSING_RESPONSE, seed=5)
    pkts = netsim.simulate(cfg)
    labelled = [p for p in pkts if p.label]
    assert len(labelled) == 10
    assert all(p.message_type is MT.REQUEST and p.label == 3 for p in labelled)
    groups = sessions_of(pkts)
    for p in labelled:
        group = [pkts[i] for i in groups[netsim.conversation_key(p)]]
        pos = group.index(p)
        assert pos + 1 == len(group) or group[pos + 1].message_type is MT.REQUEST


def test_error_on_error_inserts_two_errors():
    cfg = netsim.reference_scenario(AttackType.ERROR_ON_ERROR, seed=2)
    pkts = netsim.simulate(cfg)
    errs = [p for p in pkts if p.message_type is MT.ERROR]
    assert len(errs) == 20
    assert all(p.label == 2 and p.someip.header.return_code != 0 for p in errs)


def test_missing_request_duplicates_response():
    cfg = netsim.reference_scenario(AttackType.MISSING_REQUEST, seed=2)
    base = netsim.simulate_normal(cfg)
    pkts = netsim.simulate(cfg)
    assert len(pkts) == len(base) + 10
    dups = [p for p in pkts if p.label]
    assert all(p.message_type is MT.RESPONSE and p.label == 4 for p in dups)


def test_zero_attacks_all_normal():
    cfg = netsim.reference_scenario(AttackType.ERROR_ON_ERROR, seed=1).replace(attacks_to_execute=0)
    assert all(p.label == 0 for p in netsim.simulate(cfg))


def test_not_enough_sessions(scenario_factory):
    cfg = scenario_factory(attack=AttackType.MISSING_REQUEST, attacks=5)
    with pytest.raises(NotEnoughSessions):
        netsim.simulate(cfg)


def test_config_rejects_dangling_reference(scenario_factory):
    cfg = scenario_factory()
    svc = cfg.services[0]
    bad = cfg.replace(services=(type(svc)(svc.service_id, svc.methods, "nobody", svc.requested_by),))
    with pytest.raises(ConfigError):
        netsim.simulate_normal(bad)


def test_config_yaml_json_round_trip(tmp_path):
    cfg = netsim.reference_scenario(AttackType.ERROR_ON_EVENT, seed=9)
    for name in ("s.yaml", "s.json"):
        netsim.dump_scenario(cfg, tmp_path / name)
        assert netsim.load_scenario(tmp_path / name) == cfg


def test_config_parses_hex_strings():
    doc = netsim.reference_scenario().to_dict()
    doc["services"][0]["service_id"] = "0x1001"
    assert netsim.scenario_from_dict(doc).services[0].service_id == 0x1001


def test_config_rejects_bad_values():
    doc = netsim.reference_scenario().to_dict()
    doc["devices"][0]["mac"] = "zz:00:00:00:00:00"
    with pytest.raises(ConfigError):
        netsim.scenario_from_dict(doc)
    doc = netsim.reference_scenario().to_dict()
    doc["attack"] = "teleport"
    with pytest.raises(ConfigError):
        netsim.scenario_from_dict(doc)


# --- pcap -------------------------------------------------------------------


def test_empty_pcap_is_24_bytes(tmp_path):
    path = tmp_path / "e.pcap"
    netsim.write_pcap([], path)
    raw = path.read_bytes()
    assert len(raw) == 24
    magic, major, minor, _, _, _, link = struct.unpack("<IHHiIII", raw)
    assert (magic, major, minor, link) == (0xA1B2C3D4, 2, 4, 1)
    assert netsim.read_pcap(path) == []


def test_single_packet_file_size(tmp_path, scenario_factory):
    pkt = netsim.simulate_normal(scenario_factory(n_clients=1, packets=2))[0]
    pkt = pkt.__class__(**{**pkt.__dict__, "someip": pkt.someip.replace(payload=b"")})
    path = tmp_path / "one.pcap"
    netsim.write_pcap([pkt], path)
    assert path.stat().st_size == 24 + 16 + 14 + 20 + 8 + 16


def test_pcap_round_trip(tmp_path):
    pkts = netsim.simulate(netsim.reference_scenario(AttackType.ERROR_ON_ERROR, seed=4))
    path = tmp_path / "r.pcap"
    netsim.write_pcap(pkts, path)
    back = netsim.read_pcap(path)
    assert back == [p.with_label(None) for p in pkts]


def test_pcap_big_endian_read(tmp_path, scenario_factory):
    pkts = netsim.simulate_normal(scenario_factory(n_clients=1, packets=2))
    le = tmp_path / "le.pcap"
    netsim.write_pcap(pkts, le)
    raw = le.read_bytes()
    # rewrite headers big-endian; frame bytes are already network order
    out = bytearray(struct.pack(">IHHiIII", *struct.unpack_from("<IHHiIII", raw)))
    off = 24
    while off < len(raw):
        hdr = struct.unpack_from("<IIII", raw, off)
        out += struct.pack(">IIII", *hdr)
        out += raw[off + 16:off + 16 + hdr[2]]
        off += 16 + hdr[2]
    be = tmp_path / "be.pcap"
    be.write_bytes(bytes(out))
    assert netsim.read_pcap(be) == netsim.read_pcap(le)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.pcap"
    path.write_bytes(b"\x00" * 24)
    with pytest.raises(netsim.BadMagic):
        netsim.read_pcap(path)


def test_truncated_someip_record_reports_index(tmp_path, scenario_factory):
    pkts = netsim.simulate_normal(scenario_factory(n_clients=1, packets=4))
    path = tmp_path / "t.pcap"
    netsim.write_pcap(pkts, path)
    raw = bytearray(path.read_bytes())
    # locate record 2 and shrink its SOME/IP message below 16 bytes
    off = 24
    for _ in range(2):
        off += 16 + struct.unpack_from("<I", raw, off + 8)[0]
    incl = struct.unpack_from("<I", raw, off + 8)[0]
    cut = incl - (14 + 20 + 8 + 10)
    data = raw[off + 16:off + 16 + incl - cut]
    struct.pack_into("!H", data, 14 + 2, 20 + 8 + 10)
    struct.pack_into("!H", data, 14 + 20 + 4, 8 + 10)
    rec = struct.pack("<IIII", *struct.unpack_from("<II", raw, off), len(data), len(data))
    raw[off:off + 16 + incl] = rec + data
    path.write_bytes(bytes(raw))
    with pytest.raises(netsim.MalformedRecord) as info:
        netsim.read_pcap(path)
    assert info.value.index == 2


def test_labels_round_trip_and_mismatch(tmp_path):
    pkts = netsim.simulate(netsim.reference_scenario(AttackType.MISSING_RESPONSE, seed=1))
    pcap, labels = tmp_path / "x.pcap", tmp_path / "x.jsonl"
    netsim.write_pcap(pkts, pcap)
    netsim.write_labels(pkts, labels)
    assert netsim.read_labeled(pcap, labels) == pkts
    first = json.loads(labels.read_text().splitlines()[0])
    assert first == {"index": 0, "label": 0}
    lines = labels.read_text().splitlines()
    labels.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(netsim.IndexMismatch):
        netsim.read_labeled(pcap, labels)


def test_labels_all_normal(tmp_path, scenario_factory):
    pkts = netsim.simulate_normal(scenario_factory())
    path = tmp_path / "l.jsonl"
    netsim.write_labels(pkts, path)
    assert netsim.read_labels(path) == [0] * len(pkts)


def test_summary_counts():
    pkts = netsim.simulate(netsim.reference_scenario(AttackType.ERROR_ON_EVENT, seed=0))
    s = netsim.summarize(pkts)
    assert s["sessions"] == 104
    assert s["sessions_per_class"]["1"] == 10
    assert s["packets_per_class"]["1"] == 10
    assert s["max_session_length"] <= 60
