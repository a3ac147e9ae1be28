"""Detection data model, annotation files, and the pluggable detector contract.

Neural detectors stay outside this package; anything that can produce
labeled boxes (plus orientation/mirror for the device groups that need
them) can drive the conversion pipeline. The bundled oracle detector
replays annotation files with confidence 1.0, which is how rendered
ground truth substitutes for a trained model in tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .netlist import DEVICE_KINDS, kind_of
from .raster import BBox

ORIENTATIONS = ("u", "r", "d", "l")
CROSSING_STYLES = ("bridge", "dot", "flat")


class AnnotationError(ValueError):
    """Raised for malformed annotation documents."""


@dataclass(frozen=True)
class DeviceDetection:
    bbox: BBox
    label: str
    confidence: float = 1.0
    orientation: str | None = None
    mirror: bool | None = None

    def kind(self):
        return kind_of(self.label)


@dataclass(frozen=True)
class CrossingDetection:
    bbox: BBox
    style: str
    confidence: float = 1.0


class Detector(Protocol):
    """Behavioral contract for detection backends.

    Implementations must be deterministic for a fixed input image.
    """

    def detect_devices(self, image: np.ndarray) -> list[DeviceDetection]: ...

    def detect_crossings(self, image: np.ndarray) -> list[CrossingDetection]: ...


def _parse_bbox(raw, where: str) -> BBox:
    if (not isinstance(raw, (list, tuple))) or len(raw) != 4:
        raise AnnotationError(f"{where}: bbox must be [x, y, w, h]")
    x, y, w, h = (int(v) for v in raw)
    if w <= 0 or h <= 0:
        raise AnnotationError(f"{where}: bbox must have positive size")
    return BBox(x, y, w, h)


def _clamp_box(box: BBox, width: int, height: int, where: str) -> BBox:
    clamped = box.clamped(width, height)
    if clamped is None:
        raise AnnotationError(f"{where}: box lies outside the image")
    return clamped


def parse_annotations(doc: dict) -> tuple[list[DeviceDetection], list[CrossingDetection]]:
    """Validate one annotation document (see schema in load_annotations)."""
    try:
        width = int(doc["width"])
        height = int(doc["height"])
    except (KeyError, TypeError, ValueError):
        raise AnnotationError("annotation document needs integer width/height") from None
    devices: list[DeviceDetection] = []
    for i, entry in enumerate(doc.get("devices", [])):
        where = f"devices[{i}]"
        label = entry.get("label")
        if label not in DEVICE_KINDS:
            raise AnnotationError(f"{where}: unknown device label {label!r}")
        kind = DEVICE_KINDS[label]
        box = _clamp_box(_parse_bbox(entry.get("bbox"), where), width, height, where)
        orientation = entry.get("orientation")
        if kind.needs_orientation and orientation not in ORIENTATIONS:
            raise AnnotationError(f"{where}: label {label!r} requires an orientation")
        if orientation is not None and orientation not in ORIENTATIONS:
            raise AnnotationError(f"{where}: bad orientation {orientation!r}")
        mirror = entry.get("mirror")
        if mirror is not None and not kind.allows_mirror:
            raise AnnotationError(f"{where}: label {label!r} does not take a mirror flag")
        confidence = float(entry.get("confidence", 1.0))
        devices.append(DeviceDetection(box, label, confidence, orientation, mirror))
    crossings: list[CrossingDetection] = []
    for i, entry in enumerate(doc.get("crossings", [])):
        where = f"crossings[{i}]"
        style = entry.get("label")
        if style not in CROSSING_STYLES:
            raise AnnotationError(f"{where}: unknown crossing label {style!r}")
        box = _clamp_box(_parse_bbox(entry.get("bbox"), where), width, height, where)
        crossings.append(CrossingDetection(box, style, float(entry.get("confidence", 1.0))))
    return devices, crossings


def load_annotations(path) -> tuple[list[DeviceDetection], list[CrossingDetection]]:
    """Read one annotation JSON file.

    Schema: ``{"image": str, "width": int, "height": int,
    "devices": [{"label", "bbox": [x,y,w,h], "orientation"?, "mirror"?}],
    "crossings": [{"label", "bbox": [x,y,w,h]}]}``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"malformed annotation JSON: {exc}") from exc
    return parse_annotations(doc)


def annotations_to_doc(image_name: str, width: int, height: int,
                       devices: list[DeviceDetection],
                       crossings: list[CrossingDetection]) -> dict:
    """Build the annotation document for a rendered or detected image."""
    doc: dict = {"image": image_name, "width": width, "height": height, "devices": [], "crossings": []}
    for det in devices:
        entry: dict = {"label": det.label, "bbox": [det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h]}
        if det.orientation is not None:
            entry["orientation"] = det.orientation
        if det.mirror is not None:
            entry["mirror"] = det.mirror
        doc["devices"].append(entry)
    for det in crossings:
        doc["crossings"].append(
            {"label": det.style, "bbox": [det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h]}
        )
    return doc


class OracleDetector:
    """Detector that replays an annotation file, confidence 1.0.

    Stateless with respect to the image content; safe to share across
    parallel workers.
    """

    def __init__(self, source):
        if isinstance(source, dict):
            self._devices, self._crossings = parse_annotations(source)
        else:
            self._devices, self._crossings = load_annotations(source)

    def detect_devices(self, image: np.ndarray) -> list[DeviceDetection]:
        return list(self._devices)

    def detect_crossings(self, image: np.ndarray) -> list[CrossingDetection]:
        return list(self._crossings)
