"""Stump-based Haar cascade definitions: parsing and validation.

Reads the widely published frontal-face XML layout: a cascade element
with `size`, then stages -> trees -> nodes, each node a depth-1 stump
with weighted feature rectangles, a threshold, and two leaf values.
"""

import importlib.resources
import xml.etree.ElementTree as ET
from dataclasses import dataclass

CASCADE_TYPE_ID = "opencv-haar-classifier"
DEFAULT_CASCADE_RESOURCE = "haarcascade_frontalface.xml"


class CascadeFormatError(ValueError):
    """Cascade definition file is malformed or uses unsupported features."""


@dataclass(frozen=True)
class FeatureRect:
    x: int
    y: int
    w: int
    h: int
    weight: float


@dataclass(frozen=True)
class Stump:
    rects: tuple
    threshold: float
    left_val: float
    right_val: float


@dataclass(frozen=True)
class Stage:
    threshold: float
    stumps: tuple


@dataclass(frozen=True)
class Cascade:
    window_w: int
    window_h: int
    stages: tuple

    @property
    def n_stages(self):
        return len(self.stages)

    @property
    def n_stumps(self):
        return sum(len(s.stumps) for s in self.stages)


def _byte_offset(text, line, column):
    """Offset of (1-based line, 0-based column) in text's UTF-8 bytes."""
    lines = text.split("\n")
    prefix = "\n".join(lines[: line - 1])
    if line > 1:
        prefix += "\n"
    return len(prefix.encode("utf-8")) + column


def _text(elem, tag, where):
    child = elem.find(tag)
    if child is None or child.text is None:
        raise CascadeFormatError(f"{where}: missing <{tag}>")
    return child.text.strip()


def _parse_rect(text, window_w, window_h, where):
    parts = text.split()
    if len(parts) != 5:
        raise CascadeFormatError(f"{where}: rect needs 'x y w h weight', got {text!r}")
    try:
        x, y, w, h = (int(p) for p in parts[:4])
        weight = float(parts[4])
    except ValueError:
        raise CascadeFormatError(f"{where}: unparseable rect {text!r}") from None
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > window_w or y + h > window_h:
        raise CascadeFormatError(
            f"{where}: rect ({x},{y},{w},{h}) outside the "
            f"{window_w}x{window_h} base window"
        )
    return FeatureRect(x=x, y=y, w=w, h=h, weight=weight)


def _parse_stump(node, window_w, window_h, where):
    if node.find("left_node") is not None or node.find("right_node") is not None:
        raise CascadeFormatError(
            f"{where}: branch to a child node; only depth-1 stumps are supported"
        )
    feature = node.find("feature")
    if feature is None:
        raise CascadeFormatError(f"{where}: missing <feature>")
    tilted = feature.find("tilted")
    if tilted is not None and tilted.text is not None and tilted.text.strip() != "0":
        raise CascadeFormatError(f"{where}: tilted features are not supported")
    rects_elem = feature.find("rects")
    if rects_elem is None:
        raise CascadeFormatError(f"{where}: missing <rects>")
    rects = tuple(
        _parse_rect(r.text or "", window_w, window_h, f"{where} rect {i}")
        for i, r in enumerate(rects_elem)
    )
    if not rects:
        raise CascadeFormatError(f"{where}: feature has no rectangles")
    weighted_area = sum(r.weight * r.w * r.h for r in rects)
    if abs(weighted_area) > 1e-6:
        raise CascadeFormatError(
            f"{where}: weighted rectangle areas sum to {weighted_area}, not 0"
        )
    try:
        return Stump(
            rects=rects,
            threshold=float(_text(node, "threshold", where)),
            left_val=float(_text(node, "left_val", where)),
            right_val=float(_text(node, "right_val", where)),
        )
    except ValueError:
        raise CascadeFormatError(f"{where}: non-numeric stump values") from None


def parse_cascade(text):
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(text, line, column)
        raise CascadeFormatError(
            f"malformed cascade XML at byte offset {offset} "
            f"(line {line}, column {column}): {exc.msg}"
        ) from exc

    cascade_elem = None
    for elem in root.iter():
        if elem.get("type_id") == CASCADE_TYPE_ID:
            cascade_elem = elem
            break
    if cascade_elem is None:
        raise CascadeFormatError(f'no element with type_id="{CASCADE_TYPE_ID}"')

    size_text = _text(cascade_elem, "size", "cascade")
    try:
        window_w, window_h = (int(p) for p in size_text.split())
    except ValueError:
        raise CascadeFormatError(f"bad <size> {size_text!r}") from None
    if window_w <= 0 or window_h <= 0:
        raise CascadeFormatError(f"base window {window_w}x{window_h} not positive")

    stages_elem = cascade_elem.find("stages")
    if stages_elem is None:
        raise CascadeFormatError("cascade: missing <stages>")
    stages = []
    for si, stage_elem in enumerate(stages_elem):
        trees = stage_elem.find("trees")
        if trees is None:
            raise CascadeFormatError(f"stage {si}: missing <trees>")
        stumps = []
        for ti, tree in enumerate(trees):
            nodes = list(tree)
            where = f"stage {si} tree {ti}"
            if len(nodes) != 1:
                raise CascadeFormatError(
                    f"{where}: {len(nodes)} nodes; only depth-1 stumps are supported"
                )
            stumps.append(_parse_stump(nodes[0], window_w, window_h, where))
        try:
            threshold = float(_text(stage_elem, "stage_threshold", f"stage {si}"))
        except ValueError:
            raise CascadeFormatError(f"stage {si}: non-numeric threshold") from None
        stages.append(Stage(threshold=threshold, stumps=tuple(stumps)))
    if not stages:
        raise CascadeFormatError("cascade has no stages")
    return Cascade(window_w=window_w, window_h=window_h, stages=tuple(stages))


def parse_cascade_file(path):
    with open(path, encoding="utf-8") as f:
        return parse_cascade(f.read())


def load_default_cascade():
    """The bundled public frontal-face cascade."""
    ref = importlib.resources.files("moodtunes.assets") / DEFAULT_CASCADE_RESOURCE
    return parse_cascade(ref.read_text(encoding="utf-8"))
