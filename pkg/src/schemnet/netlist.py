"""Device taxonomy and the netlist exchange format.

A netlist is a list of devices, each binding its named ports to nets.
Nets are plain strings; the ground net is canonically called ``GND``
(the SPICE alias ``"0"`` is normalized on parse).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class NetlistError(ValueError):
    """Raised for malformed or schema-violating netlist documents."""


GROUND_NET = "GND"

# Temporary port carried by *_cross devices between detection and
# post-processing; final netlists must not contain it.
CONN_PORT = "Conn"


@dataclass(frozen=True)
class DeviceKind:
    """One of the 22 recognized annotation labels.

    ``label`` is the annotation vocabulary entry (e.g. ``resistor_1``),
    ``group`` the coarse family, and ``netlist_type`` the canonical type
    used in graphs (``resistor_1`` and ``resistor_2`` both map to
    ``Resistor``).
    """

    label: str
    group: str
    netlist_type: str
    ports: tuple[str, ...]
    needs_orientation: bool = False
    allows_mirror: bool = False
    has_conn: bool = False  # *_cross kinds expose a temporary Conn port


_MOS_PORTS = ("Gate", "Drain", "Source")
_BJT_PORTS = ("Base", "Collector", "Emitter")
_TWO_PORTS = ("Pos", "Neg")

DEVICE_KINDS: dict[str, DeviceKind] = {
    k.label: k
    for k in [
        DeviceKind("nmos", "MOS", "NMOS", _MOS_PORTS, needs_orientation=True),
        DeviceKind("nmos_cross", "MOS", "NMOS", _MOS_PORTS, needs_orientation=True, has_conn=True),
        DeviceKind("nmos_bulk", "MOS", "NMOS", _MOS_PORTS + ("Body",), needs_orientation=True),
        DeviceKind("pmos", "MOS", "PMOS", _MOS_PORTS, needs_orientation=True),
        DeviceKind("pmos_cross", "MOS", "PMOS", _MOS_PORTS, needs_orientation=True, has_conn=True),
        DeviceKind("pmos_bulk", "MOS", "PMOS", _MOS_PORTS + ("Body",), needs_orientation=True),
        DeviceKind("npn", "BJT", "NPN", _BJT_PORTS, needs_orientation=True, allows_mirror=True),
        DeviceKind("npn_cross", "BJT", "NPN", _BJT_PORTS, needs_orientation=True, allows_mirror=True, has_conn=True),
        DeviceKind("pnp", "BJT", "PNP", _BJT_PORTS, needs_orientation=True, allows_mirror=True),
        DeviceKind("pnp_cross", "BJT", "PNP", _BJT_PORTS, needs_orientation=True, allows_mirror=True, has_conn=True),
        DeviceKind("siso_amp", "Amp", "SISO_Amp", ("In", "Out"), needs_orientation=True, allows_mirror=True),
        DeviceKind("diso_amp", "Amp", "DISO_Amp", ("InP", "InN", "Out"), needs_orientation=True, allows_mirror=True),
        DeviceKind("dido_amp", "Amp", "DIDO_Amp", ("InP", "InN", "OutP", "OutN"), needs_orientation=True, allows_mirror=True),
        DeviceKind("diode", "Diode", "Diode", _TWO_PORTS, needs_orientation=True),
        DeviceKind("current", "Source", "Current", _TWO_PORTS),
        DeviceKind("voltage", "Source", "Voltage", _TWO_PORTS),
        DeviceKind("voltage_lines", "Source", "Voltage_lines", _TWO_PORTS, needs_orientation=True),
        DeviceKind("resistor_1", "Passive", "Resistor", _TWO_PORTS),
        DeviceKind("resistor_2", "Passive", "Resistor", _TWO_PORTS),
        DeviceKind("capacitor", "Passive", "Capacitor", _TWO_PORTS),
        DeviceKind("inductor", "Passive", "Inductor", _TWO_PORTS),
        DeviceKind("gnd", "Gnd", "Gnd", ("Term",)),
    ]
}

ANNOTATION_LABELS = tuple(DEVICE_KINDS)


def kind_of(label: str) -> DeviceKind:
    """Look up a DeviceKind by annotation label; unknown labels are rejected."""
    try:
        return DEVICE_KINDS[label]
    except KeyError:
        raise NetlistError(f"unknown device label {label!r}") from None


@dataclass(frozen=True)
class Device:
    """A device instance binding each port name to a net name."""

    id: str
    kind: DeviceKind
    ports: dict[str, str]

    def port_order(self) -> tuple[str, ...]:
        """Canonical emission order: the kind's ports, then Conn if bound."""
        order = self.kind.ports
        if CONN_PORT in self.ports:
            order = order + (CONN_PORT,)
        return order


@dataclass(frozen=True)
class Netlist:
    """An ordered collection of devices; nets are derived from port bindings."""

    devices: tuple[Device, ...] = ()

    def net_names(self) -> list[str]:
        """All referenced nets, ordered by first appearance."""
        seen: dict[str, None] = {}
        for dev in self.devices:
            for port in dev.port_order():
                seen.setdefault(dev.ports[port], None)
        return list(seen)

    def port_count(self) -> int:
        """Total number of (device, port) bindings."""
        return sum(len(d.ports) for d in self.devices)


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding; never fatal by itself."""

    code: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.code}: {self.subject}"
        return f"{msg} ({self.detail})" if self.detail else msg


def _check_ports(dev_id: str, kind: DeviceKind, ports: dict[str, str]) -> None:
    expected = set(kind.ports)
    got = set(ports)
    extra = got - expected
    if kind.has_conn:
        extra.discard(CONN_PORT)
    missing = expected - got
    if missing:
        raise NetlistError(f"device {dev_id!r} ({kind.label}): missing port {sorted(missing)[0]}")
    if extra:
        raise NetlistError(f"device {dev_id!r} ({kind.label}): unknown port {sorted(extra)[0]}")
    for port, net in ports.items():
        if not isinstance(net, str) or not net:
            raise NetlistError(f"device {dev_id!r}: port {port} bound to empty net name")


def _normalize_net(net: str) -> str:
    return GROUND_NET if net == "0" else net


def make_device(dev_id: str, label: str, ports: dict[str, str]) -> Device:
    """Construct a validated Device, normalizing ground-net aliases."""
    kind = kind_of(label)
    normalized = {p: _normalize_net(n) for p, n in ports.items()}
    _check_ports(dev_id, kind, normalized)
    # keep canonical emission order internally
    ordered = {p: normalized[p] for p in kind.ports}
    if CONN_PORT in normalized and kind.has_conn:
        ordered[CONN_PORT] = normalized[CONN_PORT]
    return Device(dev_id, kind, ordered)


def parse_netlist(text: str | bytes) -> Netlist:
    """Parse a netlist JSON document.

    Raises NetlistError on malformed JSON, unknown device labels, port-set
    mismatches, or duplicate device ids.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetlistError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("devices"), list):
        raise NetlistError("document must be an object with a 'devices' array")
    devices = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(doc["devices"]):
        if not isinstance(entry, dict):
            raise NetlistError(f"devices[{i}] is not an object")
        try:
            dev_id = entry["id"]
            label = entry["type"]
            ports = entry["ports"]
        except KeyError as exc:
            raise NetlistError(f"devices[{i}] missing key {exc}") from None
        if not isinstance(dev_id, str) or not dev_id:
            raise NetlistError(f"devices[{i}]: id must be a non-empty string")
        if dev_id in seen_ids:
            raise NetlistError(f"duplicate device id {dev_id!r}")
        seen_ids.add(dev_id)
        if not isinstance(ports, dict):
            raise NetlistError(f"device {dev_id!r}: ports must be an object")
        devices.append(make_device(dev_id, label, ports))
    return Netlist(tuple(devices))


def serialize_netlist(netlist: Netlist) -> str:
    """Serialize to the exchange JSON format.

    Deterministic: devices in insertion order, keys in the order id, type,
    ports, and ports in the kind's canonical order.
    """
    out = {
        "devices": [
            {
                "id": dev.id,
                "type": dev.kind.label,
                "ports": {p: dev.ports[p] for p in dev.port_order()},
            }
            for dev in netlist.devices
        ]
    }
    return json.dumps(out, indent=2, ensure_ascii=False) + "\n"


def load_netlist(path) -> Netlist:
    """Read and parse a netlist JSON file."""
    with open(path, "rb") as fh:
        return parse_netlist(fh.read())


def save_netlist(netlist: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_netlist(netlist))


def validate(netlist: Netlist) -> list[Diagnostic]:
    """Check netlist invariants; returns an empty list for a clean final netlist.

    Ground devices and Conn ports are legal in intermediate netlists, so
    they surface as diagnostics rather than parse failures.
    """
    out: list[Diagnostic] = []
    seen: set[str] = set()
    net_uses: dict[str, int] = {}
    for dev in netlist.devices:
        if dev.id in seen:
            out.append(Diagnostic("duplicate-id", dev.id))
        seen.add(dev.id)
        if dev.kind.label == "gnd":
            out.append(Diagnostic("gnd-device-present", dev.id, "remove via post-processing"))
        if CONN_PORT in dev.ports:
            out.append(Diagnostic("conn-port-present", dev.id, "temporary port not merged"))
        for port, net in dev.ports.items():
            if not net:
                out.append(Diagnostic("empty-net-name", dev.id, f"port {port}"))
            net_uses[net] = net_uses.get(net, 0) + 1
    for net, uses in net_uses.items():
        if uses == 1:
            out.append(Diagnostic("dangling-net", net, "referenced by a single port"))
    return out
