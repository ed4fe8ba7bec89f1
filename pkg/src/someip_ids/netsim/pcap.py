"""Classic libpcap capture files (Ethernet / IPv4 / UDP / SOME/IP) and label sidecars."""
from __future__ import annotations

import ipaddress
import json
import struct
from pathlib import Path

from .. import codec
from .packet import LabeledPacket

PCAP_MAGIC = 0xA1B2C3D4
PCAP_VERSION = (2, 4)
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535

GLOBAL_HEADER = struct.Struct("<IHHiIII")
RECORD_HEADER = struct.Struct("<IIII")
ETH_HEADER = struct.Struct("!6s6sH")
IPV4_HEADER = struct.Struct("!BBHHHBBH4s4s")
UDP_HEADER = struct.Struct("!HHHH")

ETHERTYPE_IPV4 = 0x0800
IPPROTO_UDP = 17


class PcapError(ValueError):
    pass


class BadMagic(PcapError):
    pass


class MalformedRecord(PcapError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"record {index}: {reason}")
        self.index = index
        self.reason = reason


class IndexMismatch(ValueError):
    pass


def mac_bytes(mac: str) -> bytes:
    return bytes(int(part, 16) for part in mac.split(":"))


def mac_str(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\0"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def frame(pkt: LabeledPacket, ident: int = 0) -> bytes:
    """Ethernet II frame for one packet. UDP checksum is left at 0 (not computed)."""
    someip = codec.encode(pkt.someip)
    udp = UDP_HEADER.pack(pkt.src_port, pkt.dst_port, UDP_HEADER.size + len(someip), 0) + someip
    src = ipaddress.IPv4Address(pkt.src_ip).packed
    dst = ipaddress.IPv4Address(pkt.dst_ip).packed
    total_len = IPV4_HEADER.size + len(udp)
    ip = IPV4_HEADER.pack(0x45, 0, total_len, ident & 0xFFFF, 0, 64, IPPROTO_UDP, 0, src, dst)
    ip = ip[:10] + struct.pack("!H", _checksum(ip)) + ip[12:]
    eth = ETH_HEADER.pack(mac_bytes(pkt.dst_mac), mac_bytes(pkt.src_mac), ETHERTYPE_IPV4)
    return eth + ip + udp


def write_pcap(packets, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(GLOBAL_HEADER.pack(PCAP_MAGIC, *PCAP_VERSION, 0, 0, SNAPLEN, LINKTYPE_ETHERNET))
        for i, pkt in enumerate(packets):
            data = frame(pkt, ident=i)
            sec, usec = divmod(pkt.timestamp, 1_000_000)
            fh.write(RECORD_HEADER.pack(sec, usec, len(data), len(data)))
            fh.write(data)


def parse_frame(data: bytes, index: int, timestamp: int) -> LabeledPacket:
    if len(data) < ETH_HEADER.size + IPV4_HEADER.size + UDP_HEADER.size:
        raise MalformedRecord(index, f"frame too short ({len(data)} bytes)")
    dst_mac, src_mac, ethertype = ETH_HEADER.unpack_from(data)
    if ethertype != ETHERTYPE_IPV4:
        raise MalformedRecord(index, f"not IPv4 (ethertype 0x{ethertype:04x})")
    off = ETH_HEADER.size
    ver_ihl, _, total_len, _, _, _, proto, _, src, dst = IPV4_HEADER.unpack_from(data, off)
    if ver_ihl >> 4 != 4:
        raise MalformedRecord(index, "IP version is not 4")
    ihl = (ver_ihl & 0x0F) * 4
    if proto != IPPROTO_UDP:
        raise MalformedRecord(index, f"not UDP (protocol {proto})")
    if off + total_len > len(data) or ihl < IPV4_HEADER.size:
        raise MalformedRecord(index, "inconsistent IPv4 lengths")
    off += ihl
    sport, dport, udp_len, _ = UDP_HEADER.unpack_from(data, off)
    end = off + udp_len
    if udp_len < UDP_HEADER.size or end > len(data):
        raise MalformedRecord(index, "inconsistent UDP length")
    try:
        msg = codec.decode(data[off + UDP_HEADER.size:end])
    except codec.DecodeError as exc:
        raise MalformedRecord(index, f"bad SOME/IP message: {exc}") from None
    return LabeledPacket(
        timestamp=timestamp,
        src_mac=mac_str(src_mac),
        dst_mac=mac_str(dst_mac),
        src_ip=str(ipaddress.IPv4Address(src)),
        dst_ip=str(ipaddress.IPv4Address(dst)),
        src_port=sport,
        dst_port=dport,
        someip=msg,
        label=None,
    )


def read_pcap(path: str | Path) -> list[LabeledPacket]:
    """Decode every record of a little- or big-endian microsecond pcap file."""
    blob = Path(path).read_bytes()
    if len(blob) < GLOBAL_HEADER.size:
        raise BadMagic(f"{path}: file shorter than pcap global header")
    magic_le = struct.unpack_from("<I", blob)[0]
    if magic_le == PCAP_MAGIC:
        endian = "<"
    elif struct.unpack_from(">I", blob)[0] == PCAP_MAGIC:
        endian = ">"
    else:
        raise BadMagic(f"{path}: magic 0x{magic_le:08x}")
    _, _, _, _, _, _, linktype = struct.unpack_from(endian + "IHHiIII", blob)
    if linktype != LINKTYPE_ETHERNET:
        raise PcapError(f"{path}: linktype {linktype} is not Ethernet")
    rec = struct.Struct(endian + "IIII")
    packets = []
    off = GLOBAL_HEADER.size
    while off < len(blob):
        index = len(packets)
        if off + rec.size > len(blob):
            raise MalformedRecord(index, "truncated record header")
        sec, usec, incl, _ = rec.unpack_from(blob, off)
        off += rec.size
        if off + incl > len(blob):
            raise MalformedRecord(index, "truncated record data")
        packets.append(parse_frame(blob[off:off + incl], index, sec * 1_000_000 + usec))
        off += incl
    return packets


def write_labels(packets, path: str | Path) -> None:
    with open(path, "w") as fh:
        for i, pkt in enumerate(packets):
            fh.write(json.dumps({"index": i, "label": int(pkt.label or 0)}) + "\n")


def read_labels(path: str | Path, expected_count: int | None = None) -> list[int]:
    labels = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if row["index"] != len(labels):
                raise IndexMismatch(f"{path}: expected index {len(labels)}, found {row['index']}")
            if row["label"] not in range(5):
                raise IndexMismatch(f"{path}: label {row['label']!r} at index {row['index']} out of range")
            labels.append(int(row["label"]))
    if expected_count is not None and len(labels) != expected_count:
        raise IndexMismatch(f"{path}: {len(labels)} labels for {expected_count} pcap records")
    return labels


def read_labeled(pcap_path: str | Path, labels_path: str | Path) -> list[LabeledPacket]:
    packets = read_pcap(pcap_path)
    labels = read_labels(labels_path, expected_count=len(packets))
    return [p.with_label(lab) for p, lab in zip(packets, labels)]
