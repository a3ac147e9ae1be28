"""Deterministic raster preprocessing for wire extraction.

Stage order in the conversion pipeline is fixed: binarize, skeletonize,
fill device boxes, drop small components, erase device and jumper boxes,
label the surviving connectivity domains. Images are numpy arrays, row
major, origin top-left; binary images hold {0, 1} with 1 = ink.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=int)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box; (x, y) is the top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def clamped(self, width: int, height: int) -> "BBox | None":
        """Intersect with the image; None when nothing remains."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x + self.w, width)
        y1 = min(self.y + self.h, height)
        if x1 <= x0 or y1 <= y0:
            return None
        return BBox(x0, y0, x1 - x0, y1 - y0)

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0


@dataclass(frozen=True)
class LabelMap:
    """Connected-component labels, 0 = background, 1..count in scan order."""

    labels: np.ndarray
    count: int


def to_gray(img: np.ndarray) -> np.ndarray:
    """Collapse an RGB(A) image to 8-bit luma; grayscale passes through."""
    if img.ndim == 2:
        return img.astype(np.uint8, copy=False)
    rgb = img[..., :3].astype(np.float64)
    luma = rgb @ np.asarray(LUMA_WEIGHTS)
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return to_gray(np.asarray(im.convert("RGB") if im.mode not in ("L", "RGB") else im))


def save_image(img: np.ndarray, path) -> None:
    from PIL import Image

    arr = img
    if arr.dtype != np.uint8:
        arr = (np.asarray(arr) > 0).astype(np.uint8) * 255
    Image.fromarray(arr, mode="L").save(path)


def binarize(img: np.ndarray, invert: bool = False):
    """Threshold a grayscale image; ink (dark) maps to 1.

    The threshold maximizes between-class variance over the 256-bin
    histogram; pixels strictly below it become foreground. Returns
    (binary, threshold, diagnostics); a constant image has no defined
    threshold and yields all background plus a diagnostic.
    """
    if img.size == 0:
        raise ValueError("empty image")
    gray = to_gray(img)
    if invert:
        gray = 255 - gray
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        return np.zeros_like(gray, dtype=np.uint8), None, ["constant-image: threshold undefined"]
    total = hist.sum()
    omega = np.cumsum(hist) / total            # weight of class {<= t}
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b = np.nan_to_num(sigma_b[:-1], nan=-1.0, posinf=-1.0)
    t = int(np.argmax(sigma_b))               # first maximizer: deterministic
    threshold = t + 1
    return (gray < threshold).astype(np.uint8), threshold, []


def _zhang_suen_pass(img: np.ndarray, first_subiter: bool) -> int:
    p = np.pad(img, 1)
    p2 = p[:-2, 1:-1]
    p3 = p[:-2, 2:]
    p4 = p[1:-1, 2:]
    p5 = p[2:, 2:]
    p6 = p[2:, 1:-1]
    p7 = p[2:, :-2]
    p8 = p[1:-1, :-2]
    p9 = p[:-2, :-2]
    ring = [p2, p3, p4, p5, p6, p7, p8, p9]
    b = sum(n.astype(np.int16) for n in ring)
    a = sum(((ring[i] == 0) & (ring[(i + 1) % 8] == 1)) for i in range(8))
    if first_subiter:
        cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    kill = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & cond
    img[kill] = 0
    return int(kill.sum())


def _crossing_number(img: np.ndarray, y: int, x: int) -> tuple[int, int]:
    """(transitions, neighbor count) of the 8-ring around (y, x)."""
    h, w = img.shape
    offs = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]
    ring = []
    for dy, dx in offs:
        yy, xx = y + dy, x + dx
        ring.append(int(img[yy, xx]) if 0 <= yy < h and 0 <= xx < w else 0)
    trans = sum(ring[i] == 0 and ring[(i + 1) % 8] == 1 for i in range(8))
    return trans, sum(ring)


def _clear_square_blocks(img: np.ndarray) -> None:
    """Remove leftover 2x2 blocks by deleting locally simple pixels."""
    while True:
        blocks = (img[:-1, :-1] & img[1:, :-1] & img[:-1, 1:] & img[1:, 1:])
        ys, xs = np.nonzero(blocks)
        if len(ys) == 0:
            return
        progress = False
        for y, x in zip(ys.tolist(), xs.tolist()):
            for dy, dx in ((1, 1), (0, 0), (0, 1), (1, 0)):
                yy, xx = y + dy, x + dx
                if not img[yy, xx]:
                    continue
                trans, count = _crossing_number(img, yy, xx)
                if trans == 1 and count >= 2:
                    img[yy, xx] = 0
                    progress = True
                    break
        if not progress:
            return


def skeletonize(binary: np.ndarray) -> np.ndarray:
    """Thin strokes to unit width while preserving 8-connectivity.

    Two-subiteration parallel thinning, then a cleanup sweep that clears any
    surviving 2x2 foreground block, then restoration of components the
    parallel pass erased entirely (tiny isolated blobs shrink to one pixel
    rather than vanishing).
    """
    img = (np.asarray(binary) > 0).astype(np.uint8)
    before, n_before = ndimage.label(img, structure=_EIGHT)
    out = img.copy()
    while True:
        changed = _zhang_suen_pass(out, True)
        changed += _zhang_suen_pass(out, False)
        if not changed:
            break
    _clear_square_blocks(out)
    if n_before:
        survivors = np.unique(before[out == 1])
        lost = set(range(1, n_before + 1)) - set(int(s) for s in survivors)
        for comp in sorted(lost):
            ys, xs = np.nonzero(before == comp)
            out[ys[0], xs[0]] = 1
    return out


def fill_boxes(binary: np.ndarray, boxes) -> np.ndarray:
    """Set every pixel inside the given boxes to foreground."""
    out = np.asarray(binary).copy()
    h, w = out.shape
    for box in boxes:
        c = box.clamped(w, h)
        if c is not None:
            out[c.y:c.y + c.h, c.x:c.x + c.w] = 1
    return out


def erase_boxes(binary: np.ndarray, boxes) -> np.ndarray:
    """Clear every pixel inside the given boxes; inverse of fill on interiors."""
    out = np.asarray(binary).copy()
    h, w = out.shape
    for box in boxes:
        c = box.clamped(w, h)
        if c is not None:
            out[c.y:c.y + c.h, c.x:c.x + c.w] = 0
    return out


def remove_small_components(binary: np.ndarray) -> np.ndarray:
    """Drop components strictly smaller than a tenth of the largest one."""
    img = (np.asarray(binary) > 0).astype(np.uint8)
    labels, n = ndimage.label(img, structure=_EIGHT)
    if n <= 1:
        return img
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    largest = sizes.max()
    keep = sizes * 10 >= largest
    keep[0] = False
    return keep[labels].astype(np.uint8)


def label_components(binary: np.ndarray) -> LabelMap:
    """8-connected component labels, numbered by first pixel in scan order."""
    img = (np.asarray(binary) > 0).astype(np.uint8)
    labels, n = ndimage.label(img, structure=_EIGHT)
    if n == 0:
        return LabelMap(labels.astype(np.int32), 0)
    flat = labels.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    idx = np.flatnonzero(flat)
    np.minimum.at(first, flat[idx], idx)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return LabelMap(remap[labels], n)
