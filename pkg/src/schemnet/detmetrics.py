"""Detector-quality metrics: per-class accuracy/recall and mAP variants.

"Accuracy" here follows the reporting convention of classification work in
this domain: TP / (TP + FP) per class, i.e. what is usually called
precision. Average precision uses greedy confidence-descending matching
(each gold box claimed at most once) and every-point interpolation of the
precision-recall curve. ``map_inside`` swaps the IoU predicate for "gold
box center inside the predicted box", boundary inclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .raster import BBox


@dataclass(frozen=True)
class BoxRecord:
    """One labeled box; predictions carry a confidence, golds ignore it."""

    image: str
    label: str
    bbox: BBox
    confidence: float = 1.0


def accuracy_recall(pred_labels, gold_labels) -> dict[str, dict[str, float]]:
    """Per-class accuracy and recall over matched prediction/gold label pairs.

    A class missing one denominator reports only the defined metric; a class
    missing both is absent from the result.
    """
    pred_labels = list(pred_labels)
    gold_labels = list(gold_labels)
    if len(pred_labels) != len(gold_labels):
        raise ValueError("prediction and gold label lists must be matched pairwise")
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    for pred, gold in zip(pred_labels, gold_labels):
        if pred == gold:
            tp[pred] = tp.get(pred, 0) + 1
        else:
            fp[pred] = fp.get(pred, 0) + 1
            fn[gold] = fn.get(gold, 0) + 1
    out: dict[str, dict[str, float]] = {}
    for cls in sorted(set(tp) | set(fp) | set(fn)):
        t = tp.get(cls, 0)
        entry: dict[str, float] = {}
        if t + fp.get(cls, 0) > 0:
            entry["accuracy"] = t / (t + fp.get(cls, 0))
        if t + fn.get(cls, 0) > 0:
            entry["recall"] = t / (t + fn.get(cls, 0))
        if entry:
            out[cls] = entry
    return out


def iou(a: BBox, b: BBox) -> float:
    x0 = max(a.x, b.x)
    y0 = max(a.y, b.y)
    x1 = min(a.x + a.w, b.x + b.w)
    y1 = min(a.y + a.h, b.y + b.h)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    inter = (x1 - x0) * (y1 - y0)
    return inter / (a.w * a.h + b.w * b.h - inter)


def center_inside(pred: BBox, gold: BBox) -> bool:
    """Gold-box center within the prediction box, boundary inclusive."""
    cx, cy = gold.cx, gold.cy
    return pred.x <= cx <= pred.x + pred.w and pred.y <= cy <= pred.y + pred.h


def _average_precision(flags: list[bool], n_gold: int) -> float:
    """Every-point interpolated AP from confidence-ordered TP/FP flags."""
    if n_gold == 0:
        return 0.0
    mrec = [0.0]
    mpre = [0.0]
    tp = fp = 0
    for is_tp in flags:
        tp += is_tp
        fp += not is_tp
        mrec.append(tp / n_gold)
        mpre.append(tp / (tp + fp))
    mrec.append(1.0)
    mpre.append(0.0)
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = 0.0
    for i in range(1, len(mrec)):
        ap += (mrec[i] - mrec[i - 1]) * mpre[i]
    return ap


def _class_ap(preds: list[BoxRecord], golds: list[BoxRecord], match) -> float:
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    gold_by_image: dict[str, list[BoxRecord]] = {}
    for g in golds:
        gold_by_image.setdefault(g.image, []).append(g)
    claimed: set[tuple[str, int]] = set()
    flags: list[bool] = []
    for i in order:
        pred = preds[i]
        best_j = -1
        best_iou = -1.0
        for j, g in enumerate(gold_by_image.get(pred.image, [])):
            if (pred.image, j) in claimed or not match(pred.bbox, g.bbox):
                continue
            overlap = iou(pred.bbox, g.bbox)
            if overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j >= 0:
            claimed.add((pred.image, best_j))
            flags.append(True)
        else:
            flags.append(False)
    return _average_precision(flags, len(golds))


def _mean_ap(preds: list[BoxRecord], golds: list[BoxRecord], match) -> float:
    classes = sorted({g.label for g in golds})
    if not classes:
        return 0.0
    by_class_pred: dict[str, list[BoxRecord]] = {c: [] for c in classes}
    by_class_gold: dict[str, list[BoxRecord]] = {c: [] for c in classes}
    for p in preds:
        if p.label in by_class_pred:
            by_class_pred[p.label].append(p)
    for g in golds:
        by_class_gold[g.label].append(g)
    aps = [_class_ap(by_class_pred[c], by_class_gold[c], match) for c in classes]
    return sum(aps) / len(aps)


def map_at(preds, golds, iou_threshold: float = 0.5) -> float:
    """mAP at a single IoU threshold; mean over classes present in golds."""
    return _mean_ap(list(preds), list(golds),
                    lambda p, g: iou(p, g) >= iou_threshold)


def map_range(preds, golds, start: float = 0.5, stop: float = 0.95, step: float = 0.05) -> float:
    """mAP averaged over IoU thresholds start..stop (10 steps by default)."""
    preds = list(preds)
    golds = list(golds)
    n = int(round((stop - start) / step)) + 1
    thresholds = [start + step * i for i in range(n)]
    return sum(map_at(preds, golds, t) for t in thresholds) / len(thresholds)


def map_inside(preds, golds) -> float:
    """mAP where a prediction matches a gold iff the gold center is inside it."""
    return _mean_ap(list(preds), list(golds), center_inside)


def load_box_records(path) -> list[BoxRecord]:
    """Read a JSON array of {"image","label","bbox",["confidence"]} records.

    Annotation documents (the renderer output schema) are accepted too:
    their device and crossing boxes are flattened into records.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and ("devices" in doc or "crossings" in doc):
        image = doc.get("image", "")
        records = []
        for entry in list(doc.get("devices", [])) + list(doc.get("crossings", [])):
            x, y, w, h = entry["bbox"]
            records.append(BoxRecord(image, entry["label"], BBox(x, y, w, h),
                                     float(entry.get("confidence", 1.0))))
        return records
    if not isinstance(doc, list):
        raise ValueError("expected a JSON array of box records")
    out = []
    for entry in doc:
        x, y, w, h = entry["bbox"]
        out.append(BoxRecord(entry.get("image", ""), entry["label"], BBox(x, y, w, h),
                             float(entry.get("confidence", 1.0))))
    return out
