"""From detections plus wire raster to a netlist.

The pipeline: binarize and thin the drawing, fill device boxes so wires
and symbols fuse into one blob, prune clutter, decide which crossings act
as jumpers, erase device and jumper boxes, and read the surviving
connectivity domains as nets. Ports are located where wires cross each
device's box perimeter and named via the shared orientation templates.
Post-processing collapses the drawing artifacts: every net touching a
ground symbol folds into ``GND``, jumper ports merge antipodally, and the
temporary ``Conn`` terminal of parallel-gate devices joins its gate net.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .detect import CrossingDetection, DeviceDetection
from .netlist import CONN_PORT, GROUND_NET, Device, Netlist, make_device
from .raster import (BBox, LabelMap, binarize, erase_boxes, fill_boxes,
                     label_components, remove_small_components, skeletonize)
from .symbols import arc_position, port_sites, site_point

POLICY_MODES = ("auto", "all", "none")


@dataclass(frozen=True)
class JumperPolicy:
    """How crossings are interpreted: style-driven (auto), all, or never."""

    mode: str
    resolved_style: str | None = None


def resolve_jumper_style(crossings) -> JumperPolicy:
    """Decide the diagram's jumper style from its crossing inventory.

    Any bridge makes bridges the jumpers; otherwise dots and flats together
    make flats the jumpers; otherwise the diagram has no jumpers at all.
    """
    styles = {c.style for c in crossings}
    if "bridge" in styles:
        return JumperPolicy("auto", "bridge")
    if "dot" in styles and "flat" in styles:
        return JumperPolicy("auto", "flat")
    return JumperPolicy("auto", None)


@dataclass(frozen=True)
class PortPoint:
    """A named device terminal pinned to a perimeter pixel and, once
    tracked, to a net."""

    device_id: str
    port: str
    location: tuple[int, int] | None  # (x, y); None when the wire was not found
    net: str | None = None


@dataclass(frozen=True)
class JumperNode:
    """A crossing acting as a pass-over: clockwise ports paired antipodally."""

    id: str
    bbox: BBox
    ports: tuple[PortPoint, ...]
    pairs: tuple[tuple[int, int], ...]  # 1-based port numbers


def antipodal_pairs(n: int) -> list[tuple[int, int]]:
    """Pair port i with port i + n/2 (1-based); n must be even and >= 4."""
    if n < 4 or n % 2:
        raise ValueError(f"a jumper needs an even port count of at least 4, got {n}")
    return [(i, i + n // 2) for i in range(1, n // 2 + 1)]


def _ring_coords(box: BBox) -> list[tuple[int, int]]:
    """Clockwise pixel ring one step outside the box, from its top-left."""
    x0, y0 = box.x - 1, box.y - 1
    x1, y1 = box.x + box.w, box.y + box.h
    coords = [(x, y0) for x in range(x0, x1 + 1)]
    coords += [(x1, y) for y in range(y0 + 1, y1 + 1)]
    coords += [(x, y1) for x in range(x1 - 1, x0 - 1, -1)]
    coords += [(x0, y) for y in range(y1 - 1, y0, -1)]
    return coords


def find_port_points(wire_mask: np.ndarray, box: BBox) -> list[tuple[int, int]]:
    """Wire strokes crossing the box perimeter, one point each, clockwise.

    Runs of adjacent foreground ring pixels collapse to their middle pixel;
    with unit-width skeleton strokes the runs are near-singletons.
    """
    h, w = wire_mask.shape
    ring = _ring_coords(box)
    fg = [1 if 0 <= x < w and 0 <= y < h and wire_mask[y, x] else 0 for x, y in ring]
    n = len(ring)
    if not any(fg):
        return []
    if all(fg):
        return [ring[0]]
    start = fg.index(0)  # rotate to a gap so no run straddles the seam
    points: list[tuple[int, int]] = []
    run: list[int] = []
    for k in range(1, n + 1):
        i = (start + k) % n
        if fg[i]:
            run.append(i)
        elif run:
            points.append(run[len(run) // 2])
            run = []
    return [ring[i] for i in sorted(points)]


def assign_ports(device_id: str, det: DeviceDetection,
                 points: list[tuple[int, int]]) -> tuple[list[PortPoint], list[str]]:
    """Name the wire intersection points of one device.

    Oriented kinds align the clockwise point sequence against the kind's
    orientation template (the rotation minimizing total perimeter distance
    anchors one port; the rest follow in clock order). Unoriented kinds
    take their canonical port order clockwise from the top-left. A count
    mismatch degrades to diagnostics plus unbound ports.
    """
    kind = det.kind()
    sites = port_sites(det.label, det.orientation, det.mirror)
    diags: list[str] = []
    perim = 2.0 * max(det.bbox.w - 1, 1) + 2.0 * max(det.bbox.h - 1, 1)

    def arc(p: tuple[int, int]) -> float:
        return arc_position(det.bbox, p[0], p[1])

    if len(points) != len(sites):
        diags.append(
            f"{device_id} ({det.label}): expected {len(sites)} wire contacts, found {len(points)}"
        )
        names = [s[0] for s in sites]
        out = []
        for i, name in enumerate(names):
            if i < len(points):
                out.append(PortPoint(device_id, name, points[i]))
            else:
                out.append(PortPoint(device_id, name, None))
        return out, diags

    if kind.needs_orientation and det.orientation is not None:
        site_arcs = sorted((arc_position(det.bbox, *site_point(det.bbox, side, frac)), port)
                           for port, side, frac in sites)
        point_arcs = [arc(p) for p in points]
        n = len(points)
        best_rot, best_cost = 0, float("inf")
        for rot in range(n):
            cost = 0.0
            for i in range(n):
                d = abs(site_arcs[i][0] - point_arcs[(i + rot) % n])
                cost += min(d, perim - d)
            if cost < best_cost:
                best_rot, best_cost = rot, cost
        out = [PortPoint(device_id, site_arcs[i][1], points[(i + best_rot) % n])
               for i in range(n)]
        order = {s[0]: k for k, s in enumerate(sites)}
        out.sort(key=lambda pp: order[pp.port])
        return out, diags

    names = [s[0] for s in sites]
    return [PortPoint(device_id, name, pt) for name, pt in zip(names, points)], diags


def build_jumpers(crossings, policy: JumperPolicy,
                  wire_mask: np.ndarray) -> tuple[list[JumperNode], list[str]]:
    """Turn qualifying crossings into jumper nodes with paired ports.

    Crossings meeting the policy but with fewer than four or an odd number
    of wire contacts are demoted to plain connections with a diagnostic.
    """
    if policy.mode == "none":
        selected = []
    elif policy.mode == "all":
        selected = list(crossings)
    else:
        selected = [c for c in crossings if c.style == policy.resolved_style]
    jumpers: list[JumperNode] = []
    diags: list[str] = []
    for k, crossing in enumerate(selected):
        jid = f"jumper{k + 1}"
        points = find_port_points(wire_mask, crossing.bbox)
        n = len(points)
        if n < 4 or n % 2:
            diags.append(f"{jid} ({crossing.style}): {n} wire contacts, kept as plain connection")
            continue
        ports = tuple(PortPoint(jid, f"P{i + 1}", pt) for i, pt in enumerate(points))
        jumpers.append(JumperNode(jid, crossing.bbox, ports, tuple(antipodal_pairs(n))))
    return jumpers, diags


_ID_PREFIX = {
    "NMOS": "M", "PMOS": "M", "NPN": "Q", "PNP": "Q",
    "SISO_Amp": "A", "DISO_Amp": "A", "DIDO_Amp": "A",
    "Diode": "D", "Current": "I", "Voltage": "V", "Voltage_lines": "V",
    "Resistor": "R", "Capacitor": "C", "Inductor": "L", "Gnd": "G",
}


def assign_device_ids(detections) -> list[str]:
    """Stable ids in detection order: M1, M2, Q1, R1, ..."""
    counters: dict[str, int] = {}
    ids = []
    for det in detections:
        prefix = _ID_PREFIX[det.kind().netlist_type]
        counters[prefix] = counters.get(prefix, 0) + 1
        ids.append(f"{prefix}{counters[prefix]}")
    return ids


def track_nets(label_map: LabelMap, devices: list[tuple[str, DeviceDetection]],
               port_points: list[PortPoint]):
    """Group ports by the wire domain they touch.

    Returns (provisional netlist, label -> net name, resolved port points,
    diagnostics). Domains become nets ``n1..nk`` by ascending label;
    untouched ports get fresh singleton nets ``u1..`` and a diagnostic.
    """
    labels_present = sorted({
        int(label_map.labels[pt.location[1], pt.location[0]])
        for pt in port_points
        if pt.location is not None
        and 0 <= pt.location[1] < label_map.labels.shape[0]
        and 0 <= pt.location[0] < label_map.labels.shape[1]
        and label_map.labels[pt.location[1], pt.location[0]] > 0
    })
    net_of_label = {lab: f"n{i + 1}" for i, lab in enumerate(labels_present)}
    diags: list[str] = []
    fresh = 0
    resolved: list[PortPoint] = []
    by_device: dict[str, dict[str, str]] = {}
    for pt in port_points:
        label = 0
        if pt.location is not None:
            x, y = pt.location
            if 0 <= y < label_map.labels.shape[0] and 0 <= x < label_map.labels.shape[1]:
                label = int(label_map.labels[y, x])
        if label > 0:
            net = net_of_label[label]
        else:
            fresh += 1
            net = f"u{fresh}"
            diags.append(f"{pt.device_id}.{pt.port}: no wire found, bound to fresh net {net}")
        resolved.append(replace(pt, net=net))
        by_device.setdefault(pt.device_id, {})[pt.port] = net
    built = [make_device(dev_id, det.label, by_device.get(dev_id, {}))
             for dev_id, det in devices
             if set(by_device.get(dev_id, {})) >= set(det.kind().ports)]
    skipped = [dev_id for dev_id, det in devices
               if set(by_device.get(dev_id, {})) < set(det.kind().ports)]
    for dev_id in skipped:
        diags.append(f"{dev_id}: dropped, ports could not be bound")
    return Netlist(tuple(built)), net_of_label, resolved, diags


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, a: str) -> str:
        self.parent.setdefault(a, a)
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def post_process(netlist: Netlist, jumpers=()) -> Netlist:
    """Collapse drawing artifacts into the final netlist.

    Ground-symbol nets merge into ``GND`` and the symbols disappear; each
    jumper merges its antipodally paired nets and disappears; each
    parallel-gate device folds its temporary ``Conn`` net into the gate
    (or base) net. Idempotent.
    """
    uf = _UnionFind()
    grounded: list[str] = []
    for dev in netlist.devices:
        for net in dev.ports.values():
            uf.find(net)
            if net == GROUND_NET:
                grounded.append(net)
        if dev.kind.label == "gnd":
            grounded.extend(dev.ports.values())
    for a, b in zip(grounded, grounded[1:]):
        uf.union(a, b)
    for jumper in jumpers:
        for i, j in jumper.pairs:
            a = jumper.ports[i - 1].net
            b = jumper.ports[j - 1].net
            if a is not None and b is not None:
                uf.union(a, b)
    for dev in netlist.devices:
        if CONN_PORT in dev.ports:
            anchor = "Gate" if "Gate" in dev.ports else "Base"
            uf.union(dev.ports[anchor], dev.ports[CONN_PORT])
    ground_roots = {uf.find(net) for net in grounded}
    names: dict[str, str] = {root: GROUND_NET for root in ground_roots}
    devices: list[Device] = []
    for dev in netlist.devices:
        if dev.kind.label == "gnd":
            continue
        ports = {}
        for port, net in dev.ports.items():
            if port == CONN_PORT:
                continue
            root = uf.find(net)
            if root not in names:
                names[root] = net
            ports[port] = names[root]
        devices.append(make_device(dev.id, dev.kind.label, ports))
    return Netlist(tuple(devices))


def _as_detections(image: np.ndarray, source):
    if isinstance(source, tuple):
        devices, crossings = source
        return list(devices), list(crossings)
    return list(source.detect_devices(image)), list(source.detect_crossings(image))


def convert(image, detections, policy: str = "auto", debug_dir=None) -> tuple[Netlist, list[str]]:
    """Full image-to-netlist conversion.

    ``image`` is a grayscale/RGB array or a path; ``detections`` is either a
    detector object or a ``(devices, crossings)`` pair. ``policy`` selects
    jumper handling: ``auto`` (style inference), ``all`` (every crossing is
    a jumper), or ``none``. Always returns a netlist plus diagnostics;
    geometry problems degrade rather than abort.
    """
    if policy not in POLICY_MODES:
        raise ValueError(f"unknown policy {policy!r}")
    if not isinstance(image, np.ndarray):
        from .raster import load_image

        image = load_image(image)
    devices, crossings = _as_detections(image, detections)
    diagnostics: list[str] = []

    binary, _, diags = binarize(image)
    diagnostics.extend(diags)
    skeleton = skeletonize(binary)
    device_boxes = [d.bbox for d in devices]
    filled = fill_boxes(skeleton, device_boxes)
    pruned = remove_small_components(filled)

    if policy == "auto":
        jumper_policy = resolve_jumper_style(crossings)
    else:
        jumper_policy = JumperPolicy(policy)
    jumpers, diags = build_jumpers(crossings, jumper_policy, pruned)
    diagnostics.extend(diags)

    erased = erase_boxes(pruned, device_boxes + [j.bbox for j in jumpers])
    label_map = label_components(erased)

    ids = assign_device_ids(devices)
    port_points: list[PortPoint] = []
    for dev_id, det in zip(ids, devices):
        points = find_port_points(pruned, det.bbox)
        ports, diags = assign_ports(dev_id, det, points)
        diagnostics.extend(diags)
        port_points.extend(ports)
    port_points.extend(pt for j in jumpers for pt in j.ports)

    provisional, _, resolved, diags = track_nets(
        label_map, list(zip(ids, devices)), port_points)
    diagnostics.extend(diags)
    resolved_by_key = {(pt.device_id, pt.port): pt for pt in resolved}
    resolved_jumpers = [
        replace(j, ports=tuple(resolved_by_key[(j.id, p.port)] for p in j.ports))
        for j in jumpers
    ]
    netlist = post_process(provisional, resolved_jumpers)

    if debug_dir is not None:
        _dump_stages(debug_dir, binary=binary, skeleton=skeleton, filled=filled,
                     pruned=pruned, erased=erased, label_map=label_map)
    return netlist, diagnostics


def _dump_stages(debug_dir, **stages) -> None:
    import os

    from .raster import save_image

    os.makedirs(debug_dir, exist_ok=True)
    for i, (name, img) in enumerate(stages.items()):
        if isinstance(img, LabelMap):
            arr = ((img.labels * 83) % 200 + 55).astype(np.uint8)
            arr[img.labels == 0] = 0
            save_image(arr, os.path.join(debug_dir, f"stage{i}_{name}.png"))
        else:
            save_image((np.asarray(img) > 0).astype(np.uint8) * 255,
                       os.path.join(debug_dir, f"stage{i}_{name}.png"))
