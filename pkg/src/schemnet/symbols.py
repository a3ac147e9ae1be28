"""Canonical port placement templates shared by the renderer and the builder.

Each device kind gets, for the reference orientation ``u`` (unmirrored), a
perimeter site per port: a box side plus a fraction along that side.
Fractions are measured in the clockwise perimeter direction (top runs
left-to-right, right top-to-bottom, bottom right-to-left, left
bottom-to-top), which makes the transforms trivial:

* rotate 90 degrees clockwise = shift the side one step along
  top -> right -> bottom -> left, fraction unchanged;
* mirror = swap left and right sides and flip every fraction.

Mirror applies in the reference frame before rotation. Because both the
diagram renderer and the port-naming logic read this one table, round-trip
tests pin the layout down; the table itself is otherwise a free choice.
"""

from __future__ import annotations

from .netlist import kind_of
from .raster import BBox

SIDES = ("top", "right", "bottom", "left")

_MOS3 = (("Gate", "bottom", 0.5), ("Drain", "left", 0.5), ("Source", "right", 0.5))
_BJT3 = (("Base", "bottom", 0.5), ("Collector", "left", 0.5), ("Emitter", "right", 0.5))
_TWO = (("Pos", "bottom", 0.5), ("Neg", "top", 0.5))

TEMPLATES: dict[str, tuple[tuple[str, str, float], ...]] = {
    "nmos": _MOS3,
    "pmos": _MOS3,
    "nmos_bulk": _MOS3 + (("Body", "top", 0.5),),
    "pmos_bulk": _MOS3 + (("Body", "top", 0.5),),
    "nmos_cross": _MOS3 + (("Conn", "top", 0.5),),
    "pmos_cross": _MOS3 + (("Conn", "top", 0.5),),
    "npn": _BJT3,
    "pnp": _BJT3,
    "npn_cross": _BJT3 + (("Conn", "top", 0.5),),
    "pnp_cross": _BJT3 + (("Conn", "top", 0.5),),
    "siso_amp": (("In", "bottom", 0.5), ("Out", "top", 0.5)),
    "diso_amp": (("InP", "bottom", 0.3), ("InN", "bottom", 0.7), ("Out", "top", 0.5)),
    "dido_amp": (("InP", "bottom", 0.3), ("InN", "bottom", 0.7),
                 ("OutP", "top", 0.7), ("OutN", "top", 0.3)),
    "diode": _TWO,
    "current": _TWO,
    "voltage": _TWO,
    "voltage_lines": _TWO,
    "resistor_1": _TWO,
    "resistor_2": _TWO,
    "capacitor": _TWO,
    "inductor": _TWO,
    "gnd": (("Term", "top", 0.5),),
}

_ROTATIONS = {"u": 0, "r": 1, "d": 2, "l": 3}
_MIRROR_SIDE = {"top": "top", "bottom": "bottom", "left": "right", "right": "left"}


def port_sites(label: str, orientation: str | None = None,
               mirror: bool | None = None) -> list[tuple[str, str, float]]:
    """Perimeter sites (port, side, frac) for a kind at a given pose."""
    kind = kind_of(label)
    sites = TEMPLATES[label]
    out = []
    steps = _ROTATIONS[orientation or "u"]
    for port, side, frac in sites:
        if mirror and kind.allows_mirror:
            side, frac = _MIRROR_SIDE[side], 1.0 - frac
        idx = (SIDES.index(side) + steps) % 4
        out.append((port, SIDES[idx], frac))
    return out


def site_point(box: BBox, side: str, frac: float) -> tuple[int, int]:
    """Pixel on the box perimeter for a clockwise-parametrized site."""
    x1 = box.x + box.w - 1
    y1 = box.y + box.h - 1
    if side == "top":
        return box.x + round(frac * (box.w - 1)), box.y
    if side == "right":
        return x1, box.y + round(frac * (box.h - 1))
    if side == "bottom":
        return x1 - round(frac * (box.w - 1)), y1
    return box.x, y1 - round(frac * (box.h - 1))


def arc_position(box: BBox, px: int, py: int) -> float:
    """Clockwise arc length of a perimeter-adjacent point, from the top-left.

    Points within one pixel of the box are projected onto the nearest side,
    so ring intersections and template sites share one coordinate system.
    """
    x0, y0 = box.x, box.y
    x1 = box.x + box.w - 1
    y1 = box.y + box.h - 1
    d_top = abs(py - y0)
    d_right = abs(px - x1)
    d_bottom = abs(py - y1)
    d_left = abs(px - x0)
    side = min((d_top, 0), (d_right, 1), (d_bottom, 2), (d_left, 3))[1]
    fx = min(max(px - x0, 0), box.w - 1)
    fy = min(max(py - y0, 0), box.h - 1)
    if side == 0:
        return float(fx)
    if side == 1:
        return float(box.w - 1 + fy)
    if side == 2:
        return float(box.w - 1 + box.h - 1 + (box.w - 1 - fx))
    return float(2 * (box.w - 1) + box.h - 1 + (box.h - 1 - fy))
