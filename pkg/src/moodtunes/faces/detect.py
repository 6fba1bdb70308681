"""Multi-scale sliding-window face detection and box selection.

Windows are scanned at sizes base * scale_factor^k, each evaluated
against every cascade stage with variance-normalized feature sums; raw
hits are clustered by rectangle overlap and groups below min_neighbors
are discarded.
"""

import math
from dataclasses import dataclass

import numpy as np

from .image import integral_image, pad_integral

# a window whose pixel variance is at or below this is flat: no face
VARIANCE_FLOOR = 1e-7

IOU_NEIGHBOR = 0.3
DEFAULT_SCALE_FACTOR = 1.1
DEFAULT_MIN_NEIGHBORS = 3
DEFAULT_MIN_SIZE = 24


class NoFaceError(ValueError):
    """No face box to select from."""


@dataclass(frozen=True)
class FaceBox:
    x: int
    y: int
    w: int
    h: int
    score: int = 0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"face box needs positive size, got {self.w}x{self.h}")

    @property
    def area(self):
        return self.w * self.h


def iou(a, b):
    """Intersection-over-union of two boxes (FaceBox or (x,y,w,h))."""
    ax, ay, aw, ah = (a.x, a.y, a.w, a.h) if hasattr(a, "x") else a
    bx, by, bw, bh = (b.x, b.y, b.w, b.h) if hasattr(b, "x") else b
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def _scale_stages(cascade, w, h):
    """Stage list with rects scaled to a w x h window, weights re-balanced.

    Rounding rectangle corners breaks the zero weighted-area identity,
    so the first rectangle's weight is recomputed from the others to
    restore it (keeps flat regions at feature value exactly 0).  Rects
    are clamped inside the window: independent rounding of corner and
    size can otherwise overshoot by a pixel.
    """
    sx = w / cascade.window_w
    sy = h / cascade.window_h
    scaled = []
    for stage in cascade.stages:
        stumps = []
        for stump in stage.stumps:
            rects = []
            for r in stump.rects:
                rx = min(int(round(r.x * sx)), w - 1)
                ry = min(int(round(r.y * sy)), h - 1)
                rects.append(
                    (
                        rx,
                        ry,
                        min(max(1, int(round(r.w * sx))), w - rx),
                        min(max(1, int(round(r.h * sy))), h - ry),
                    )
                )
            weights = [r.weight for r in stump.rects]
            base = rects[0]
            base_area = base[2] * base[3]
            rest = sum(
                w * rw * rh for (_, _, rw, rh), w in zip(rects[1:], weights[1:])
            )
            weights[0] = -rest / base_area
            stumps.append(
                (rects, weights, stump.threshold, stump.left_val, stump.right_val)
            )
        scaled.append((stage.threshold, stumps))
    return scaled


def _rect_sums(padded, xs, ys, x, y, w, h):
    y0 = ys + y
    x0 = xs + x
    return (
        padded[y0 + h, x0 + w]
        - padded[y0, x0 + w]
        - padded[y0 + h, x0]
        + padded[y0, x0]
    )


def _eval_positions(stages, padded, sq_padded, xs, ys, w, h):
    """Boolean mask over candidate top-left positions for one window size."""
    inv_area = 1.0 / (w * h)
    wsum = _rect_sums(padded, xs, ys, 0, 0, w, h).astype(np.float64)
    wsq = _rect_sums(sq_padded, xs, ys, 0, 0, w, h).astype(np.float64)
    mean = wsum * inv_area
    variance = wsq * inv_area - mean * mean
    alive = variance > VARIANCE_FLOOR

    idx = np.flatnonzero(alive)
    std = np.sqrt(variance[idx])
    cx = xs[idx]
    cy = ys[idx]
    for stage_threshold, stumps in stages:
        if idx.size == 0:
            break
        stage_sum = np.zeros(idx.size)
        for rects, weights, threshold, left_val, right_val in stumps:
            value = np.zeros(idx.size)
            for (rx, ry, rw, rh), weight in zip(rects, weights):
                value += weight * _rect_sums(padded, cx, cy, rx, ry, rw, rh)
            value *= inv_area
            stage_sum += np.where(value < threshold * std, left_val, right_val)
        keep = stage_sum >= stage_threshold
        idx = idx[keep]
        std = std[keep]
        cx = cx[keep]
        cy = cy[keep]
    mask = np.zeros(xs.shape[0], dtype=bool)
    mask[idx] = True
    return mask


def evaluate_window(cascade, ii, squared_ii, box):
    """True when the window passes every cascade stage.

    Flat (zero/near-zero variance) windows are rejected, never an error.
    """
    x, y, w, h = (box.x, box.y, box.w, box.h) if hasattr(box, "x") else box
    height, width = ii.shape
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(f"window ({x},{y},{w},{h}) outside {width}x{height} image")
    stages = _scale_stages(cascade, w, h)
    mask = _eval_positions(
        stages,
        pad_integral(ii),
        pad_integral(squared_ii),
        np.array([x]),
        np.array([y]),
        w,
        h,
    )
    return bool(mask[0])


def _normalize_min_size(min_size):
    if isinstance(min_size, (tuple, list)):
        mw, mh = min_size
    else:
        mw = mh = min_size
    return int(mw), int(mh)


def _group_hits(hits, min_neighbors):
    """Cluster raw hits by IoU >= 0.3; groups below min_neighbors drop out."""
    n = len(hits)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if iou(hits[i], hits[j]) >= IOU_NEIGHBOR:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(hits[i])
    boxes = []
    for members in groups.values():
        if len(members) < min_neighbors:
            continue
        arr = np.array(members, dtype=np.float64)
        mx, my, mw, mh = (int(round(v)) for v in arr.mean(axis=0))
        boxes.append(FaceBox(x=mx, y=my, w=mw, h=mh, score=len(members)))
    boxes.sort(key=lambda b: (b.y, b.x, b.w, b.h))
    return boxes


def detect_faces(
    cascade,
    gray,
    scale_factor=DEFAULT_SCALE_FACTOR,
    min_neighbors=DEFAULT_MIN_NEIGHBORS,
    min_size=DEFAULT_MIN_SIZE,
):
    """All grouped face boxes in the image, scores = neighbor counts."""
    if scale_factor <= 1.0:
        raise ValueError(f"scale_factor must exceed 1.0, got {scale_factor}")
    if min_neighbors < 1:
        raise ValueError(f"min_neighbors must be positive, got {min_neighbors}")
    min_w, min_h = _normalize_min_size(min_size)
    if min_w < cascade.window_w or min_h < cascade.window_h:
        raise ValueError(
            f"min_size {min_w}x{min_h} below the cascade base window "
            f"{cascade.window_w}x{cascade.window_h}"
        )
    if gray.width < min_w or gray.height < min_h:
        return []

    ii, sq = integral_image(gray)
    padded = pad_integral(ii)
    sq_padded = pad_integral(sq)

    hits = []
    scale = 1.0
    while True:
        w = int(round(cascade.window_w * scale))
        h = int(round(cascade.window_h * scale))
        if w > gray.width or h > gray.height:
            break
        if w >= min_w and h >= min_h:
            # power-of-two step nearest the scale (geometric rounding):
            # small even shifts map the scan grid onto itself, keeping
            # detections translation-stable
            step = 2
            while step * math.sqrt(2.0) <= scale:
                step *= 2
            xs0 = np.arange(0, gray.width - w + 1, step)
            ys0 = np.arange(0, gray.height - h + 1, step)
            grid_x, grid_y = np.meshgrid(xs0, ys0)
            xs = grid_x.ravel()
            ys = grid_y.ravel()
            stages = _scale_stages(cascade, w, h)
            mask = _eval_positions(stages, padded, sq_padded, xs, ys, w, h)
            for x, y in zip(xs[mask], ys[mask]):
                hits.append((int(x), int(y), w, h))
        scale *= scale_factor

    hits.sort()
    return _group_hits(hits, min_neighbors)


def select_primary_face(boxes):
    """Largest area wins; ties go to higher score, then top-left order."""
    if not boxes:
        raise NoFaceError("no face boxes to select from")
    return min(boxes, key=lambda b: (-b.area, -b.score, b.y, b.x))
