"""Reading and writing the supported SVG subset.

Supported: ``<svg>`` with absolute ``width``/``height`` and a ``viewBox`` (or a
``data-px-per-mm`` scale), ``<g>``, ``<path>`` made of M/L/H/V/Z commands,
``<line>``, ``<polyline>``, ``<polygon>`` and ``<rect>``, with ``transform``
attributes. Curves, arcs, circles and ellipses are rejected.

Plates may be annotated on a ``<g>`` with ``data-plate-id``,
``data-thickness`` and ``data-neighbor-<side>="<plate id>:<side>"``.
Without annotations, every outermost closed outline becomes a plate and the
open segments inside it become its cuts.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET

import numpy as np

from .errors import MalformedSvg, MissingUnits, UnsupportedElement
from .geometry import EPS, Point, bbox, point_in_polygon, signed_area
from .model import SIDES, Design, Plate

SVG_NS = "http://www.w3.org/2000/svg"
_UNIT_MM = {"mm": 1.0, "cm": 10.0, "in": 25.4, "pt": 25.4 / 72, "pc": 25.4 / 6,
            "px": 25.4 / 96, "": 25.4 / 96}
_IGNORED = {"title", "desc", "metadata", "defs", "style", "text", "tspan", "namedview"}
_CURVES = set("CcSsQqTtAa")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _length(value: str | None) -> tuple[float, str] | None:
    if value is None:
        return None
    m = re.fullmatch(r"\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-z%]*)\s*", value)
    if not m:
        raise MalformedSvg(f"bad length {value!r}")
    return float(m.group(1)), m.group(2)


def _numbers(s: str) -> list[float]:
    return [float(x) for x in re.findall(r"[-+]?(?:[0-9]*\.[0-9]+|[0-9]+\.?)(?:[eE][-+]?[0-9]+)?", s)]


def _parse_transform(s: str | None) -> np.ndarray:
    m = np.eye(3)
    if not s:
        return m
    for name, args in re.findall(r"(\w+)\s*\(([^)]*)\)", s):
        a = _numbers(args)
        if name == "translate":
            t = np.array([[1, 0, a[0]], [0, 1, a[1] if len(a) > 1 else 0.0], [0, 0, 1]])
        elif name == "scale":
            sy = a[1] if len(a) > 1 else a[0]
            t = np.diag([a[0], sy, 1.0])
        elif name == "matrix":
            t = np.array([[a[0], a[2], a[4]], [a[1], a[3], a[5]], [0, 0, 1]])
        elif name == "rotate":
            th = math.radians(a[0])
            c, sn = math.cos(th), math.sin(th)
            t = np.array([[c, -sn, 0], [sn, c, 0], [0, 0, 1]])
            if len(a) == 3:
                cx, cy = a[1], a[2]
                t = (np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1]]) @ t
                     @ np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1]]))
        else:
            raise UnsupportedElement(f"transform {name!r}")
        m = m @ t
    return m


def _path_polylines(d: str) -> list[tuple[list[Point], bool]]:
    tokens = re.findall(r"[A-Za-z]|[-+]?(?:[0-9]*\.[0-9]+|[0-9]+\.?)(?:[eE][-+]?[0-9]+)?", d)
    out: list[tuple[list[Point], bool]] = []
    cur: list[Point] = []
    x = y = 0.0
    start = (0.0, 0.0)
    cmd = None
    i = 0

    def flush(closed):
        nonlocal cur
        if len(cur) > 1:
            out.append((cur, closed))
        cur = []

    while i < len(tokens):
        tok = tokens[i]
        if tok.isalpha():
            if tok in _CURVES:
                raise UnsupportedElement(f"path command {tok!r} (curves are not supported)")
            if tok not in "MmLlHhVvZz":
                raise MalformedSvg(f"unknown path command {tok!r}")
            cmd = tok
            i += 1
            if cmd in "Zz":
                if cur:
                    flush(True)
                x, y = start
                cmd = None
            continue
        if cmd is None:
            raise MalformedSvg("path data without a command")
        try:
            if cmd in "Mm":
                dx, dy = float(tokens[i]), float(tokens[i + 1])
                i += 2
                flush(False)
                x, y = (x + dx, y + dy) if cmd == "m" else (dx, dy)
                start = (x, y)
                cur = [(x, y)]
                cmd = "l" if cmd == "m" else "L"
                continue
            if cmd in "Ll":
                dx, dy = float(tokens[i]), float(tokens[i + 1])
                i += 2
                x, y = (x + dx, y + dy) if cmd == "l" else (dx, dy)
            elif cmd in "Hh":
                v = float(tokens[i])
                i += 1
                x = x + v if cmd == "h" else v
            else:
                v = float(tokens[i])
                i += 1
                y = y + v if cmd == "v" else v
        except (IndexError, ValueError):
            raise MalformedSvg("truncated path data") from None
        if not cur:
            cur = [start]
        cur.append((x, y))
    flush(False)
    return out


def _element_polylines(el: ET.Element) -> list[tuple[list[Point], bool]]:
    tag = _local(el.tag)
    if tag == "path":
        return _path_polylines(el.get("d", ""))
    if tag == "line":
        pts = [(float(el.get("x1", 0)), float(el.get("y1", 0))),
               (float(el.get("x2", 0)), float(el.get("y2", 0)))]
        return [(pts, False)]
    if tag in ("polyline", "polygon"):
        nums = _numbers(el.get("points", ""))
        if len(nums) % 2:
            raise MalformedSvg(f"odd number of coordinates in <{tag}>")
        pts = list(zip(nums[0::2], nums[1::2]))
        return [(pts, tag == "polygon")] if len(pts) > 1 else []
    if tag == "rect":
        if float(el.get("rx", 0) or 0) or float(el.get("ry", 0) or 0):
            raise UnsupportedElement("rounded <rect>")
        x, y = float(el.get("x", 0)), float(el.get("y", 0))
        w, h = float(el.get("width", 0)), float(el.get("height", 0))
        return [([(x, y), (x + w, y), (x + w, y + h), (x, y + h)], True)]
    raise UnsupportedElement(f"<{tag}> is not supported")


def _root_scale(root: ET.Element) -> tuple[np.ndarray | None, tuple | None]:
    """Matrix from user units to millimetres, and the viewBox in mm."""
    vb = root.get("viewBox")
    vbox = _numbers(vb) if vb else None
    if vbox is not None and len(vbox) != 4:
        raise MalformedSvg(f"bad viewBox {vb!r}")
    ppmm = root.get("data-px-per-mm")
    if ppmm is not None:
        s = 1.0 / float(ppmm)
        m = np.diag([s, s, 1.0])
        return m, tuple(v * s for v in vbox) if vbox else None
    w, h = _length(root.get("width")), _length(root.get("height"))
    if w is None or w[1] in ("", "px", "%"):
        return None, None
    if w[1] not in _UNIT_MM:
        raise MalformedSvg(f"unknown unit {w[1]!r}")
    width_mm = w[0] * _UNIT_MM[w[1]]
    if vbox is None:
        s = _UNIT_MM["px"]
        return np.diag([s, s, 1.0]), None
    sx = width_mm / vbox[2]
    sy = sx if h is None or h[1] not in _UNIT_MM else h[0] * _UNIT_MM[h[1]] / vbox[3]
    m = np.diag([sx, sy, 1.0])
    return m, (vbox[0] * sx, vbox[1] * sy, vbox[2] * sx, vbox[3] * sy)


def _apply(m: np.ndarray, pts: list[Point]) -> list[Point]:
    a = np.asarray(pts, dtype=float)
    out = a @ m[:2, :2].T + m[:2, 2]
    return [(float(x), float(y)) for x, y in out]


def _chain(opens: list[list[Point]]) -> tuple[list[list[Point]], list[list[Point]]]:
    """Join open polylines end to end; returns (closed loops, leftovers)."""
    key = lambda p: (round(p[0] / EPS), round(p[1] / EPS))
    ends: dict = {}
    for i, pl in enumerate(opens):
        ends.setdefault(key(pl[0]), []).append(i)
        ends.setdefault(key(pl[-1]), []).append(i)
    used = [False] * len(opens)
    loops, rest = [], []
    for i, pl in enumerate(opens):
        if used[i]:
            continue
        used[i] = True
        chain = list(pl)
        members = [i]
        while True:
            if key(chain[-1]) == key(chain[0]) and len(chain) > 3:
                break
            nxt = [j for j in ends.get(key(chain[-1]), []) if not used[j]]
            if not nxt:
                break
            j = nxt[0]
            used[j] = True
            members.append(j)
            seg = opens[j] if key(opens[j][0]) == key(chain[-1]) else opens[j][::-1]
            chain.extend(seg[1:])
        if len(chain) > 3 and key(chain[-1]) == key(chain[0]):
            loops.append(chain[:-1])
        else:
            rest.extend(opens[j] for j in members)
    return loops, rest


def _segments(polylines: list[list[Point]]) -> list[tuple[Point, Point]]:
    return [(pl[k], pl[k + 1]) for pl in polylines for k in range(len(pl) - 1)
            if math.dist(pl[k], pl[k + 1]) > EPS]


def _parse_neighbors(g: ET.Element) -> dict:
    out = {}
    for side in SIDES:
        v = g.get(f"data-neighbor-{side}")
        if v:
            pid, _, oside = v.rpartition(":")
            if not pid or oside not in SIDES:
                raise MalformedSvg(f"bad neighbour reference {v!r}")
            out[side] = (pid, oside)
    return out


def parse_design(svg: bytes | str, hinge_pitch_max: float | None = None) -> Design:
    try:
        root = ET.fromstring(svg)
    except ET.ParseError as exc:
        raise MalformedSvg(str(exc)) from None
    if _local(root.tag) != "svg":
        raise MalformedSvg("root element is not <svg>")
    scale, vbox = _root_scale(root)

    # (group annotations, polyline, closed)
    collected: list[tuple[ET.Element | None, list[Point], bool]] = []

    def walk(el, m, group):
        for child in el:
            tag = _local(child.tag)
            if not child.tag.startswith("{" + SVG_NS) and child.tag.startswith("{"):
                continue
            if tag in _IGNORED:
                continue
            cm = m @ _parse_transform(child.get("transform"))
            if tag in ("g", "svg"):
                walk(child, cm, child if child.get("data-plate-id") else group)
                continue
            for pts, closed in _element_polylines(child):
                collected.append((group, (cm, pts), closed))

    walk(root, np.eye(3), None)
    if not collected:
        return Design((), vbox, *(() if hinge_pitch_max is None else (hinge_pitch_max,)))
    if scale is None:
        raise MissingUnits("svg needs absolute width/height with a viewBox, or data-px-per-mm")
    items = [(g, _apply(scale @ m, pts), closed) for g, (m, pts), closed in collected]

    groups: dict = {}
    order = []
    for g, pts, closed in items:
        if g not in groups:
            groups[g] = []
            order.append(g)
        groups[g].append((pts, closed))

    plates: list[Plate] = []
    loose_cuts: list[tuple[Point, Point]] = []
    for g in order:
        entries = groups[g]
        loops = [pts for pts, closed in entries if closed]
        more, rest = _chain([pts for pts, closed in entries if not closed])
        loops += more
        loops = [lp for lp in loops if abs(signed_area(lp)) > EPS]
        cuts = _segments(rest)
        if g is not None:
            if not loops:
                raise MalformedSvg(f"plate {g.get('data-plate-id')!r} has no closed outline")
            loops.sort(key=lambda lp: -abs(signed_area(lp)))
            thickness = g.get("data-thickness")
            plates.append(Plate(
                id=g.get("data-plate-id"),
                outline=tuple(loops[0]),
                cuts=tuple(cuts),
                holes=tuple(tuple(lp) for lp in loops[1:]),
                neighbors=_parse_neighbors(g),
                thickness=float(thickness) if thickness else None,
            ))
            continue
        outer = [lp for lp in loops
                 if not any(o is not lp and abs(signed_area(o)) > abs(signed_area(lp))
                            and point_in_polygon(lp[0], o) for o in loops)]
        base = len(plates)
        for k, lp in enumerate(outer):
            plates.append(Plate(id=f"plate-{base + k}", outline=tuple(lp)))
        for lp in loops:
            if any(lp is o for o in outer):
                continue
            host = _host(plates[base:], lp[0])
            if host is None:
                raise MalformedSvg("closed path outside every plate")
            plates[host + base] = _with(plates[host + base], holes=plates[host + base].holes + (tuple(lp),))
        loose_cuts.extend(cuts)

    for seg in loose_cuts:
        mid = (0.5 * (seg[0][0] + seg[1][0]), 0.5 * (seg[0][1] + seg[1][1]))
        host = _host(plates, mid)
        if host is None:
            raise MalformedSvg(f"segment {seg} lies outside every plate")
        plates[host] = _with(plates[host], cuts=plates[host].cuts + (seg,))

    ids = [p.id for p in plates]
    if len(set(ids)) != len(ids):
        raise MalformedSvg("duplicate plate ids")
    _check_neighbors(plates)
    kwargs = {} if hinge_pitch_max is None else {"hinge_pitch_max": hinge_pitch_max}
    return Design(tuple(plates), vbox, **kwargs)


def _with(plate: Plate, **changes) -> Plate:
    from dataclasses import replace
    return replace(plate, **changes)


def _host(plates: list[Plate], pt: Point) -> int | None:
    """Index of the smallest plate whose outline contains ``pt``."""
    best, area = None, math.inf
    for i, p in enumerate(plates):
        if point_in_polygon(pt, p.outline):
            a = abs(signed_area(p.outline))
            if a < area:
                best, area = i, a
    return best


def _check_neighbors(plates: list[Plate]) -> None:
    by_id = {p.id: p for p in plates}
    for p in plates:
        for side, (oid, oside) in p.neighbors.items():
            other = by_id.get(oid)
            if other is None:
                continue
            if other.neighbors.get(oside) != (p.id, side):
                raise MalformedSvg(f"neighbour reference {p.id}:{side} -> {oid}:{oside} is not mutual")


def _fmt(v: float) -> str:
    s = f"{v:.10f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def serialize_design(design: Design) -> bytes:
    """Design as an SVG document in millimetre user units."""
    if design.viewbox is not None:
        vx, vy, vw, vh = design.viewbox
    elif design.plates:
        x0, y0, x1, y1 = design.bbox()
        vx, vy, vw, vh = x0 - 5, y0 - 5, x1 - x0 + 10, y1 - y0 + 10
    else:
        vx, vy, vw, vh = 0.0, 0.0, 100.0, 100.0
    ET.register_namespace("", SVG_NS)
    root = ET.Element(f"{{{SVG_NS}}}svg", {
        "width": f"{_fmt(vw)}mm", "height": f"{_fmt(vh)}mm",
        "viewBox": " ".join(_fmt(v) for v in (vx, vy, vw, vh)),
    })
    style = {"fill": "none", "stroke": "#ff0000", "stroke-width": "0.1"}
    for plate in design.plates:
        attrs = {"id": plate.id, "data-plate-id": plate.id}
        if plate.thickness is not None:
            attrs["data-thickness"] = _fmt(plate.thickness)
        for side in SIDES:
            if side in plate.neighbors:
                oid, oside = plate.neighbors[side]
                attrs[f"data-neighbor-{side}"] = f"{oid}:{oside}"
        g = ET.SubElement(root, f"{{{SVG_NS}}}g", attrs)
        for loop in (plate.outline, *plate.holes):
            d = "M " + " L ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in loop) + " Z"
            ET.SubElement(g, f"{{{SVG_NS}}}path", {"d": d, **style})
        for (x1, y1), (x2, y2) in plate.cuts:
            ET.SubElement(g, f"{{{SVG_NS}}}line", {
                "x1": _fmt(x1), "y1": _fmt(y1), "x2": _fmt(x2), "y2": _fmt(y2), **style})
    ET.indent(root)
    return ET.tostring(root, xml_declaration=True, encoding="utf-8")


def load_design(path, hinge_pitch_max: float | None = None) -> Design:
    with open(path, "rb") as fh:
        return parse_design(fh.read(), hinge_pitch_max)


def save_design(design: Design, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_design(design))
