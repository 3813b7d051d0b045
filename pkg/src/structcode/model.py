"""Laser-cut design model: plates, finger-joint edges and living-hinge regions.

Coordinates are millimetres in the SVG frame (x right, y down). A plate's
perimeter is traversed counter-clockwise *as viewed*: down the left side,
along the bottom to the right, up the right side, then back along the top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

from .codec import capacity_chars
from .errors import TooFewElements
from .geometry import EPS, Point, bbox, cross, dot, same_polygon, simplify, unit

SIDES = ("left", "bottom", "right", "top")
FINGER, GAP, LINK = "finger", "gap", "link"

ALPHA_JOINTS = 80.0
ALPHA_HINGE = 45.0
HINGE_PITCH_MAX = 5.0
MIN_ELEMENTS = 8

Segment = tuple[Point, Point]


class SideFrame(NamedTuple):
    origin: Point
    u: Point  # along the side, in traversal order
    n: Point  # inward normal
    length: float

    def point(self, along: float, depth: float) -> Point:
        return (self.origin[0] + along * self.u[0] + depth * self.n[0],
                self.origin[1] + along * self.u[1] + depth * self.n[1])


def side_frames(rect: tuple[float, float, float, float]) -> dict[str, SideFrame]:
    x0, y0, x1, y1 = rect
    w, h = x1 - x0, y1 - y0
    return {
        "left": SideFrame((x0, y0), (0.0, 1.0), (1.0, 0.0), h),
        "bottom": SideFrame((x0, y1), (1.0, 0.0), (0.0, -1.0), w),
        "right": SideFrame((x1, y1), (0.0, -1.0), (-1.0, 0.0), h),
        "top": SideFrame((x1, y0), (-1.0, 0.0), (0.0, 1.0), w),
    }


@dataclass(frozen=True)
class ElementSequence:
    lengths: tuple[float, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.kinds):
            raise ValueError("lengths and kinds differ in length")
        if any(x <= 0 for x in self.lengths):
            raise ValueError("element lengths must be positive")

    def __len__(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class JointEdge:
    plate_id: str
    side: str
    kinds: tuple[str, ...]
    widths: tuple[float, ...]
    length: float

    @property
    def elements(self) -> ElementSequence:
        return ElementSequence(self.widths, self.kinds)

    @property
    def n_elements(self) -> int:
        return len(self.widths)

    @property
    def below_minimum(self) -> bool:
        return self.n_elements < MIN_ELEMENTS


@dataclass(frozen=True)
class JointPerimeter:
    """All jointed edges of one plate in perimeter order."""

    plate_id: str
    edges: tuple[JointEdge, ...]
    w_plate: float

    @property
    def n_elements(self) -> int:
        return sum(e.n_elements for e in self.edges)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(w for e in self.edges for w in e.widths)


@dataclass(frozen=True)
class Plate:
    id: str
    outline: tuple[Point, ...]
    cuts: tuple[Segment, ...] = ()
    holes: tuple[tuple[Point, ...], ...] = ()
    neighbors: dict = field(default_factory=dict)  # side -> (plate id, side)
    thickness: float | None = None

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return bbox(self.outline)

    @property
    def width(self) -> float:
        x0, _, x1, _ = self.bbox
        return x1 - x0

    @property
    def height(self) -> float:
        _, y0, _, y1 = self.bbox
        return y1 - y0

    @property
    def longest(self) -> float:
        return max(self.width, self.height)


@dataclass(frozen=True)
class Column:
    perp: float
    cuts: tuple[tuple[float, float], ...]  # (start, end) along the cut direction

    @property
    def links(self) -> tuple[float, ...]:
        return tuple(b[0] - a[1] for a, b in zip(self.cuts, self.cuts[1:]))

    @property
    def span(self) -> float:
        return self.cuts[-1][1] - self.cuts[0][0]


@dataclass(frozen=True)
class HingeRegion:
    id: str
    plate_id: str
    direction: Point  # unit vector along the cuts
    columns: tuple[Column, ...]
    bounding_box: tuple[float, float, float, float]
    cut_indices: tuple[int, ...]  # into the plate's cut list

    @property
    def across(self) -> Point:
        return (self.direction[1], -self.direction[0])

    @property
    def n_cuts(self) -> int:
        return sum(len(c.cuts) for c in self.columns)

    @property
    def links(self) -> tuple[float, ...]:
        """Link lengths in reading order: columns in turn, each top to bottom."""
        return tuple(x for c in self.columns for x in c.links)

    @property
    def n_elements(self) -> int:
        return len(self.links)

    @property
    def longest(self) -> float:
        x0, y0, x1, y1 = self.bounding_box
        return max(x1 - x0, y1 - y0)

    @property
    def elements(self) -> ElementSequence:
        links = self.links
        return ElementSequence(links, (LINK,) * len(links))

    def cut_segment(self, perp: float, start: float, end: float) -> Segment:
        u, v = self.direction, self.across
        return ((start * u[0] + perp * v[0], start * u[1] + perp * v[1]),
                (end * u[0] + perp * v[0], end * u[1] + perp * v[1]))


@dataclass(frozen=True)
class Design:
    plates: tuple[Plate, ...] = ()
    viewbox: tuple[float, float, float, float] | None = None
    hinge_pitch_max: float = HINGE_PITCH_MAX

    @cached_property
    def hinges(self) -> tuple[HingeRegion, ...]:
        out = []
        for plate in self.plates:
            for region in identify_living_hinges(plate, self.hinge_pitch_max):
                out.append(_renamed(region, f"hinge-{len(out)}"))
        return tuple(out)

    def plate(self, plate_id: str) -> Plate:
        for p in self.plates:
            if p.id == plate_id:
                return p
        raise KeyError(plate_id)

    def hinge(self, hinge_id: str) -> HingeRegion:
        for h in self.hinges:
            if h.id == hinge_id:
                return h
        raise KeyError(hinge_id)

    def bbox(self) -> tuple[float, float, float, float]:
        pts = [p for plate in self.plates for p in plate.outline]
        return bbox(pts)

    def replace_plate(self, plate: Plate) -> "Design":
        plates = tuple(plate if p.id == plate.id else p for p in self.plates)
        return Design(plates, self.viewbox, self.hinge_pitch_max)


def _renamed(region: HingeRegion, new_id: str) -> HingeRegion:
    return HingeRegion(new_id, region.plate_id, region.direction, region.columns,
                       region.bounding_box, region.cut_indices)


# ---------------------------------------------------------------------------
# finger joints


class JointModel(NamedTuple):
    rect: tuple[float, float, float, float]
    thickness: float
    sides: dict  # side -> (kinds, widths), or None for a plain side


def _outline_segments(outline: Sequence[Point]) -> list[Segment]:
    n = len(outline)
    return [(outline[i], outline[(i + 1) % n]) for i in range(n)]


def _side_runs(segments: list[Segment], frame: SideFrame) -> list[list]:
    """Depth profile along one side: ``[start, end, depth or None]`` runs.

    At each position along the side the profile holds the shallowest outline
    segment parallel to the side, i.e. the boundary seen from that edge.
    """
    L = frame.length
    par = []
    for p, q in segments:
        w = (q[0] - p[0], q[1] - p[1])
        lw = math.hypot(*w)
        if lw <= EPS or abs(cross(w, frame.u)) > EPS * lw:
            continue
        rel = (p[0] - frame.origin[0], p[1] - frame.origin[1])
        relq = (q[0] - frame.origin[0], q[1] - frame.origin[1])
        a1, a2 = sorted((dot(rel, frame.u), dot(relq, frame.u)))
        depth = dot(rel, frame.n)
        if depth >= -EPS:
            par.append((a1, a2, max(depth, 0.0)))
    marks = sorted({0.0, L} | {a for s in par for a in s[:2] if -EPS < a < L + EPS})
    runs: list[list] = []
    for b0, b1 in zip(marks, marks[1:]):
        if b1 - b0 <= EPS:
            continue
        mid = 0.5 * (b0 + b1)
        depths = [d for a1, a2, d in par if a1 - EPS <= mid <= a2 + EPS]
        depth = min(depths) if depths else None
        if runs and _same_depth(runs[-1][2], depth):
            runs[-1][1] = b1
        else:
            runs.append([b0, b1, depth])
    if runs:
        runs[0][0] = 0.0
        runs[-1][1] = L
    return runs


def _same_depth(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return abs(a - b) <= EPS


def _infer_thickness(all_runs: list[list[list]], limit: float) -> float | None:
    weight: dict[float, float] = {}
    for runs in all_runs:
        for a, b, d in runs:
            if d is not None and EPS < d < limit:
                key = round(d, 6)
                weight[key] = weight.get(key, 0.0) + (b - a)
    if not weight:
        return None
    return max(weight, key=weight.get)


def _side_elements(runs: list[list], t: float):
    """Kinds/widths of a jointed side, None for a plain side, False if irregular."""
    labelled = []
    for a, b, d in runs:
        if d is not None and abs(d) <= EPS:
            kind = FINGER
        elif d is not None and abs(d - t) <= EPS:
            kind = GAP
        else:
            kind = None
        labelled.append([a, b, kind])
    # corner notches belong to the adjacent element
    if len(labelled) > 1 and labelled[0][2] is None:
        labelled[1][0] = labelled[0][0]
        labelled.pop(0)
    if len(labelled) > 1 and labelled[-1][2] is None:
        labelled[-2][1] = labelled[-1][1]
        labelled.pop()
    if any(k is None for _, _, k in labelled):
        return False
    merged: list[list] = []
    for a, b, k in labelled:
        if merged and merged[-1][2] == k:
            merged[-1][1] = b
        else:
            merged.append([a, b, k])
    if all(k == FINGER for _, _, k in merged):
        return None
    if len(merged) < 2:
        return False
    kinds = tuple(k for _, _, k in merged)
    widths = tuple(b - a for a, b, _ in merged)
    return kinds, widths


def build_outline(rect: tuple[float, float, float, float], thickness: float,
                  sides: dict) -> list[Point]:
    """Outline polygon of a rectangular plate from its per-side elements."""
    frames = side_frames(rect)
    level = {FINGER: 0.0, GAP: thickness}
    per_side = {}
    for s in SIDES:
        spec = sides.get(s)
        if spec is None:
            per_side[s] = ((FINGER,), (frames[s].length,))
        else:
            per_side[s] = spec
    pts: list[Point] = []
    for i, s in enumerate(SIDES):
        frame = frames[s]
        kinds, widths = per_side[s]
        prev_kinds = per_side[SIDES[i - 1]][0]
        pts.append(frame.point(level[prev_kinds[-1]], level[kinds[0]]))
        pos = 0.0
        for j in range(len(kinds) - 1):
            pos += widths[j]
            pts.append(frame.point(pos, level[kinds[j]]))
            pts.append(frame.point(pos, level[kinds[j + 1]]))
    return simplify(pts)


def joint_model(plate: Plate) -> JointModel | None:
    """Parametric joint model of a rectangular plate, None if it has none."""
    outline = list(plate.outline)
    if len(outline) < 4:
        return None
    rect = bbox(outline)
    frames = side_frames(rect)
    segs = _outline_segments(outline)
    runs = {s: _side_runs(segs, frames[s]) for s in SIDES}
    limit = 0.5 * min(rect[2] - rect[0], rect[3] - rect[1])
    t = plate.thickness or _infer_thickness(list(runs.values()), limit)
    if t is None:
        return None
    sides = {}
    for s in SIDES:
        elems = _side_elements(runs[s], t)
        if elems is False:
            return None
        sides[s] = elems
    if all(v is None for v in sides.values()):
        return None
    if not same_polygon(build_outline(rect, t, sides), outline):
        return None
    return JointModel(rect, t, sides)


def identify_finger_joints(plate: Plate) -> list[JointEdge]:
    """Jointed edges of the plate in perimeter order; empty if none.

    Edges with fewer than eight elements are still returned, with
    ``below_minimum`` set.
    """
    model = joint_model(plate)
    if model is None:
        return []
    frames = side_frames(model.rect)
    edges = []
    for s in SIDES:
        spec = model.sides[s]
        if spec is None:
            continue
        kinds, widths = spec
        edges.append(JointEdge(plate.id, s, kinds, widths, frames[s].length))
    return edges


def joint_perimeter(plate: Plate) -> JointPerimeter:
    return JointPerimeter(plate.id, tuple(identify_finger_joints(plate)), plate.longest)


# ---------------------------------------------------------------------------
# living hinges


def _canonical_direction(p: Point, q: Point) -> Point:
    u = unit((q[0] - p[0], q[1] - p[1]))
    if u[1] < -EPS or (abs(u[1]) <= EPS and u[0] < 0):
        u = (-u[0], -u[1])
    return u


def identify_living_hinges(plate: Plate, pitch_max: float = HINGE_PITCH_MAX) -> list[HingeRegion]:
    """Groups of parallel cuts closer than ``pitch_max`` with at least two columns."""
    cuts = [(i, c) for i, c in enumerate(plate.cuts) if math.dist(*c) > EPS]
    by_dir: list[tuple[Point, list[int]]] = []
    for i, (p, q) in cuts:
        u = _canonical_direction(p, q)
        for d, members in by_dir:
            if abs(cross(d, u)) <= 1e-6:
                members.append(i)
                break
        else:
            by_dir.append((u, [i]))

    regions = []
    for u, members in by_dir:
        v = (u[1], -u[0])
        info = {}
        for i in members:
            p, q = plate.cuts[i]
            a1, a2 = sorted((dot(p, u), dot(q, u)))
            info[i] = (a1, a2, 0.5 * (dot(p, v) + dot(q, v)))
        parent = {i: i for i in members}

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for ai, i in enumerate(members):
            a1, a2, pi = info[i]
            for j in members[ai + 1:]:
                b1, b2, pj = info[j]
                if abs(pi - pj) >= pitch_max:
                    continue
                if max(a1, b1) - min(a2, b2) >= pitch_max:
                    continue
                parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for i in members:
            groups.setdefault(find(i), []).append(i)
        for g in groups.values():
            region = _make_region(plate, u, v, sorted(g), info)
            if region is not None:
                regions.append(region)
    regions.sort(key=lambda r: (r.bounding_box[1], r.bounding_box[0]))
    return [_renamed(r, f"{plate.id}/hinge-{k}") for k, r in enumerate(regions)]


def _make_region(plate, u, v, members, info) -> HingeRegion | None:
    cols: list[list[int]] = []
    for i in sorted(members, key=lambda i: info[i][2]):
        if cols and abs(info[cols[-1][0]][2] - info[i][2]) <= 1e-3:
            cols[-1].append(i)
        else:
            cols.append([i])
    if len(cols) < 2:
        return None
    columns = []
    for col in cols:
        col.sort(key=lambda i: info[i][0])
        spans = tuple((info[i][0], info[i][1]) for i in col)
        if any(b[0] - a[1] <= EPS for a, b in zip(spans, spans[1:])):
            return None
        perp = sum(info[i][2] for i in col) / len(col)
        columns.append(Column(perp, spans))
    pts = [p for i in members for p in plate.cuts[i]]
    return HingeRegion("", plate.id, u, tuple(columns), bbox(pts), tuple(members))


# ---------------------------------------------------------------------------
# capacity


class Capacity(NamedTuple):
    delta_d_min: float
    n_elements: int
    max_chars: int


def capacity(structure: JointPerimeter | HingeRegion, alpha: float | None = None) -> Capacity:
    if isinstance(structure, HingeRegion):
        w = structure.longest
        alpha = ALPHA_HINGE if alpha is None else alpha
    else:
        w = structure.w_plate
        alpha = ALPHA_JOINTS if alpha is None else alpha
    n = structure.n_elements
    if n < MIN_ELEMENTS:
        raise TooFewElements(f"{n} elements, at least {MIN_ELEMENTS} required")
    return Capacity(w / alpha, n, capacity_chars(n))


def capacity_for(n_elements: int, w: float, alpha: float) -> Capacity:
    if n_elements < MIN_ELEMENTS:
        raise TooFewElements(f"{n_elements} elements, at least {MIN_ELEMENTS} required")
    return Capacity(w / alpha, n_elements, capacity_chars(n_elements))
