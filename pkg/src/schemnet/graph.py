"""Netlist to typed-graph conversion for edit-distance scoring.

A netlist becomes an undirected bipartite multigraph: one node per device
(typed by canonical device type), one node per net (typed ``NET``), and one
typed edge per bound port. Ports that are electrically interchangeable in a
symbol are renamed to a shared edge type so that graph matching treats them
as identical:

* MOS ``Drain``/``Source``  -> ``D_S``
* Source-group ``Pos``/``Neg`` -> ``Port`` (except ``voltage_lines``)
* Passive ``Pos``/``Neg``   -> ``Port``

Device ids and net names never influence matching; only types and topology do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .netlist import CONN_PORT, Netlist

NET_TYPE = "NET"

_INDISTINGUISHABLE_GROUPS = {"MOS": {"Drain": "D_S", "Source": "D_S"}}
_PORT_MERGED_GROUPS = {"Source", "Passive"}


def edge_type_for(kind, port: str) -> str:
    """Edge type string for a device kind and port, after renaming."""
    name = port
    rename = _INDISTINGUISHABLE_GROUPS.get(kind.group)
    if rename and port in rename:
        name = rename[port]
    elif kind.group in _PORT_MERGED_GROUPS and kind.netlist_type != "Voltage_lines":
        if port in ("Pos", "Neg"):
            name = "Port"
    return f"{kind.netlist_type}_{name}"


@dataclass(frozen=True)
class HeteroGraph:
    """Undirected typed multigraph; nodes are (id, type), edges (u, v, type).

    Parallel edges are meaningful (a device may bind two ports to one net),
    hence edges form a list, not a set.
    """

    nodes: tuple[tuple[str, str], ...] = ()
    edges: tuple[tuple[str, str, str], ...] = ()

    def node_count(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return len(self.edges)


class GraphBuildError(ValueError):
    """Raised when a netlist is not in final (post-processed) form."""


def netlist_to_graph(netlist: Netlist) -> HeteroGraph:
    """Build the HeteroGraph of a final netlist.

    Requires post-processing to have run already: ground devices and
    temporary Conn ports are structural errors here, not diagnostics.
    """
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str, str]] = []
    net_ids: dict[str, str] = {}
    for dev in netlist.devices:
        if dev.kind.label == "gnd":
            raise GraphBuildError(f"gnd device {dev.id!r} present; post-process first")
        if CONN_PORT in dev.ports:
            raise GraphBuildError(f"device {dev.id!r} still carries a Conn port")
        nodes.append((dev.id, dev.kind.netlist_type))
    for dev in netlist.devices:
        for port in dev.port_order():
            net = dev.ports[port]
            if net not in net_ids:
                net_ids[net] = f"net:{net}"
                nodes.append((net_ids[net], NET_TYPE))
            edges.append((dev.id, net_ids[net], edge_type_for(dev.kind, port)))
    return HeteroGraph(tuple(nodes), tuple(edges))
