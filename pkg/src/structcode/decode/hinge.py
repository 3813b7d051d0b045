"""Living-hinge pipeline: find groups of thin parallel cuts and read the links."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import GridInconsistent, NoCandidates
from ..imgproc import (
    RotatedRect,
    adaptive_gaussian_threshold,
    as_gray,
    homography,
    min_area_rect,
    morphology,
    otsu_from_histogram,
    warp_perspective,
)
from .joints import _outer_points, fit_line, intersect

RECTANGULARITY = 0.75
MIN_ASPECT = 5.0
MIN_GROUP = 6
MAX_ANGLE_DEG = 10.0
MAX_WIDTH_RATIO = 1.5
PITCH_FACTOR = 2.5


@dataclass(frozen=True)
class Cut:
    center: np.ndarray
    direction: np.ndarray  # unit vector along the cut, canonical
    length: float
    width: float

    @property
    def ends(self) -> tuple[np.ndarray, np.ndarray]:
        h = 0.5 * self.length * self.direction
        return self.center - h, self.center + h


@dataclass(frozen=True)
class HingeCandidate:
    quad: np.ndarray      # tl, tr, br, bl: first/last column axes and cut-end lines
    padded: np.ndarray
    direction: np.ndarray
    n_cuts: int
    cut_width: float


def canonical(u: np.ndarray) -> np.ndarray:
    if u[1] < -1e-12 or (abs(u[1]) <= 1e-12 and u[0] < 0):
        return -u
    return u


def dynamic_range(img: np.ndarray) -> float:
    lo, hi = np.percentile(img, [1, 99])
    return float(hi - lo)


def default_block_size(shape) -> int:
    b = int(round(0.05 * max(shape)))
    return max(31, b | 1)


def find_cuts(img, block_size: int | None = None, C: float | None = None) -> list[Cut]:
    """Thin bright rectangles: candidate hinge cuts."""
    img = as_gray(img)
    if block_size is None:
        block_size = default_block_size(img.shape)
    if C is None:
        C = -0.25 * dynamic_range(img)
    mask = adaptive_gaussian_threshold(img, block_size, C)
    mask = morphology(morphology(mask, "open", 1), "close", 1)
    lab, n = ndimage.label(mask > 0, structure=np.ones((3, 3), dtype=bool))
    cuts = []
    areas = np.bincount(lab.ravel())
    for i, sl in enumerate(ndimage.find_objects(lab), start=1):
        if sl is None or areas[i] < 12:
            continue
        comp = lab[sl] == i
        try:
            r: RotatedRect = min_area_rect(_outer_points(comp, sl[1].start, sl[0].start))
        except Exception:
            continue
        if r.height <= 0 or areas[i] / r.area < RECTANGULARITY or r.width / r.height < MIN_ASPECT:
            continue
        a = math.radians(r.angle)
        u = canonical(np.array([math.cos(a), math.sin(a)]))
        cuts.append(Cut(np.array(r.center), u, r.width, r.height))
    return cuts


def _group(cuts: list[Cut]) -> tuple[list[list[int]], float]:
    """Connected groups of similar, neighbouring cuts, plus the column pitch."""
    n = len(cuts)
    if n == 0:
        return [], 0.0
    C = np.array([c.center for c in cuts])
    U = np.array([c.direction for c in cuts])
    L = np.array([c.length for c in cuts])
    Wd = np.array([c.width for c in cuts])
    cosang = np.abs(U @ U.T)
    similar = cosang >= math.cos(math.radians(MAX_ANGLE_DEG))
    similar &= np.maximum.outer(Wd, Wd) <= MAX_WIDTH_RATIO * np.minimum.outer(Wd, Wd)
    D = C[None, :, :] - C[:, None, :]
    along = np.abs((D * U[:, None, :]).sum(2))
    perp = np.abs(D[:, :, 0] * U[:, None, 1] - D[:, :, 1] * U[:, None, 0])
    gap_along = np.maximum(along - 0.5 * (L[:, None] + L[None, :]), 0.0)
    overlap = gap_along == 0
    near = np.where(similar & overlap & (perp > 0.5 * Wd[:, None]), perp, np.inf)
    np.fill_diagonal(near, np.inf)
    nearest = near.min(1)
    finite = nearest[np.isfinite(nearest)]
    if len(finite) == 0:
        return [], 0.0
    pitch = float(np.median(finite))
    dist = np.hypot(D[:, :, 0], D[:, :, 1])
    adj = (similar & (perp <= PITCH_FACTOR * pitch) & (gap_along <= PITCH_FACTOR * pitch)
           & (dist <= 1.5 * np.maximum.outer(L, L)))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(adj, 1))):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) >= MIN_GROUP], pitch


def _mean_direction(cuts: list[Cut]) -> np.ndarray:
    ang = np.array([math.atan2(c.direction[1], c.direction[0]) for c in cuts])
    w = np.array([c.length for c in cuts])
    th = 0.5 * math.atan2(float((w * np.sin(2 * ang)).sum()), float((w * np.cos(2 * ang)).sum()))
    return canonical(np.array([math.cos(th), math.sin(th)]))


def _end_line(points: np.ndarray, u: np.ndarray, lowest: bool, tau: float):
    s = points @ u
    ref = s.min() if lowest else s.max()
    sel = points[np.abs(s - ref) <= tau]
    line = fit_line(sel) if len(sel) >= 2 else (sel[0], np.array([u[1], -u[0]]))
    for _ in range(2):
        p, d = line
        nrm = np.array([-d[1], d[0]])
        dist = np.abs((points - p) @ nrm)
        sel = points[dist <= 0.5 * tau]
        if len(sel) < 2:
            break
        line = fit_line(sel)
    return line


def _axis_line(cuts: list[Cut], v: np.ndarray, lowest: bool, pitch: float):
    pv = np.array([c.center @ v for c in cuts])
    ref = pv.min() if lowest else pv.max()
    first = [c for c, s in zip(cuts, pv) if abs(s - ref) <= 0.5 * pitch]
    seed = max(first, key=lambda c: c.length)
    line = (seed.center, seed.direction)
    for _ in range(3):
        p, d = line
        nrm = np.array([-d[1], d[0]])
        members = [c for c in cuts if abs((c.center - p) @ nrm) <= 0.35 * pitch]
        pts = np.array([q for c in members for q in (*c.ends, c.center)])
        if len(members) < 2:
            break
        line = fit_line(pts)
    return line


def hinge_quad(cuts: list[Cut], pitch: float) -> tuple[np.ndarray, np.ndarray]:
    u = _mean_direction(cuts)
    v = np.array([u[1], -u[0]])
    tops = np.array([min(c.ends, key=lambda p: p @ u) for c in cuts])
    bottoms = np.array([max(c.ends, key=lambda p: p @ u) for c in cuts])
    extent = float((bottoms @ u).max() - (tops @ u).min())
    tau = 0.1 * extent
    top = _end_line(tops, u, True, tau)
    bottom = _end_line(bottoms, u, False, tau)
    left = _axis_line(cuts, v, True, pitch)
    right = _axis_line(cuts, v, False, pitch)
    return np.array([intersect(top, left), intersect(top, right),
                     intersect(bottom, right), intersect(bottom, left)]), u


def locate_hinge(img, block_size: int | None = None, C: float | None = None
                 ) -> list[HingeCandidate]:
    """Groups of similar thin cuts, largest group first."""
    cuts = find_cuts(img, block_size, C)
    out = []
    groups, pitch = _group(cuts)
    for g in groups:
        members = [cuts[i] for i in g]
        try:
            quad, u = hinge_quad(members, pitch)
        except (np.linalg.LinAlgError, ValueError):
            continue
        width = float(np.median([c.width for c in members]))
        c = quad.mean(0)
        grow = np.array([np.hypot(*(p - c)) for p in quad])
        padded = c + (quad - c) * ((grow + 2 * width) / grow)[:, None]
        out.append(HingeCandidate(quad, padded, u, len(members), width))
    if not out:
        raise NoCandidates("no groups of thin parallel cuts found")
    out.sort(key=lambda h: -h.n_cuts)
    return out


# ---------------------------------------------------------------------------
# link measurement


@dataclass(frozen=True)
class HingeMeasurement:
    columns: tuple[tuple[float, ...], ...]   # link lengths per column, top to bottom
    image: np.ndarray
    column_x: tuple[float, ...]

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(v for col in self.columns for v in col)


def rectify_hinge(img, cand: HingeCandidate) -> tuple[np.ndarray, float]:
    """Warp the hinge so cuts run vertically; returns image and margin (px)."""
    q = cand.quad
    Wq = 0.5 * (np.hypot(*(q[1] - q[0])) + np.hypot(*(q[2] - q[3])))
    Hq = 0.5 * (np.hypot(*(q[3] - q[0])) + np.hypot(*(q[2] - q[1])))
    m = float(math.ceil(2 * cand.cut_width) + 2)
    dst = np.array([[m, m], [m + Wq, m], [m + Wq, m + Hq], [m, m + Hq]])
    H = homography(q, dst)
    size = (int(math.ceil(Wq + 2 * m)) + 1, int(math.ceil(Hq + 2 * m)) + 1)
    return warp_perspective(as_gray(img), H, size, as_float=True), m


def _runs_above(p: np.ndarray, T: float):
    above = p > T
    d = p - T
    idx = np.nonzero(above[:-1] != above[1:])[0]
    pos = idx + d[idx] / (d[idx] - d[idx + 1])
    edges = list(pos)
    starts, ends = [], []
    state = bool(above[0])
    cur = 0.0 if state else None
    for e in edges:
        if state:
            starts.append(cur)
            ends.append(e)
        else:
            cur = e
        state = not state
    if state:
        starts.append(cur)
        ends.append(float(len(p) - 1))
    return list(zip(starts, ends))


def group_columns(xs: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(xs)
    cols: list[list[int]] = []
    mean = None
    for i in order:
        if cols and abs(xs[i] - mean) <= tol:
            cols[-1].append(int(i))
            mean = float(np.mean(xs[cols[-1]]))
        else:
            cols.append([int(i)])
            mean = float(xs[i])
    return cols


def measure_links(rect: np.ndarray) -> HingeMeasurement:
    """Link lengths between consecutive cuts, column by column, left to right."""
    img8 = np.clip(np.rint(rect), 0, 255).astype(np.uint8)
    T = otsu_from_histogram(np.bincount(img8.ravel(), minlength=256)) - 0.5
    mask = np.where(rect >= T, 255, 0).astype(np.uint8)
    mask = morphology(mask, "open", 1) > 0
    lab, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    boxes = []
    for i, sl in enumerate(ndimage.find_objects(lab), start=1):
        if sl is None:
            continue
        h = sl[0].stop - sl[0].start
        w = sl[1].stop - sl[1].start
        if h >= 2 * w and h >= 4:
            sub = lab[sl] == i
            xs = np.nonzero(sub)[1] + sl[1].start
            boxes.append((float(xs.mean()), float(w), sl[0].start, sl[0].stop))
    if len(boxes) < MIN_GROUP:
        raise GridInconsistent("too few cuts in the rectified hinge")
    xs = np.array([b[0] for b in boxes])
    width = float(np.median([b[1] for b in boxes]))
    H = rect.shape[0]
    result = None
    for tol in (0.5 * width, 0.35 * _column_pitch(xs, width)):
        cols = group_columns(xs, tol)
        links, centres = [], []
        for col in cols:
            cx = float(np.mean(xs[col]))
            half = max(width / 4.0, 0.5)
            c0 = max(int(math.floor(cx - half)), 0)
            c1 = min(int(math.ceil(cx + half)), rect.shape[1] - 1)
            y0 = max(min(boxes[i][2] for i in col) - 3, 0)
            y1 = min(max(boxes[i][3] for i in col) + 3, H)
            p = rect[y0:y1, c0:c1 + 1].mean(1)
            runs = [r for r in _runs_above(p, T) if r[1] - r[0] >= 2.0]
            links.append(tuple(float(b[0] - a[1]) for a, b in zip(runs, runs[1:])))
            centres.append(cx)
        counts = [len(c) for c in links]
        if counts and min(counts) >= 1 and max(counts) - min(counts) <= 1:
            result = HingeMeasurement(tuple(links), rect, tuple(centres))
            break
    if result is None:
        raise GridInconsistent("columns disagree on their number of links")
    return result


def _column_pitch(xs: np.ndarray, width: float) -> float:
    s = np.diff(np.sort(xs))
    s = s[s > width]
    return float(np.median(s)) if len(s) else 2 * width
