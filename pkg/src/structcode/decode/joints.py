"""Finger-joint pipeline: find plates, rectify each, measure the elements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import ndimage

from ..errors import EdgeFitFailed, InconsistentAlternation, NoCandidates
from ..imgproc import (
    apply_homography,
    as_gray,
    gaussian_blur_float,
    homography,
    kmeans,
    min_area_rect,
    morphology,
    order_quad,
    otsu_two_thresholds,
    warp_perspective,
)
from ..model import SIDES

LOCATE_KS = (3, 6, 10)
PADDING = 0.25
EXTENSION = 1.5          # rectified margin, in gap depths
INTENSITY_WEIGHT = 4.0   # k-means feature weight of intensity against position
FEATURE_MAX_DIM = 160
MIN_RUN_PX = 3.0

# number of counter-clockwise quarter turns that bring each side to the left
_TURNS = {"left": 0, "bottom": 3, "right": 2, "top": 1}


@dataclass(frozen=True)
class PlateCandidate:
    quad: np.ndarray      # tight corners tl, tr, br, bl (px)
    padded: np.ndarray    # the same rectangle grown by PADDING
    area: float
    k: int                # the k-means pass that produced it


def _downsample(img: np.ndarray, f: int) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // f, w // f
    a = img[:h2 * f, :w2 * f].astype(np.float32)
    return a.reshape(h2, f, w2, f).mean(axis=(1, 3))


def _outer_points(mask: np.ndarray, x0: int, y0: int) -> np.ndarray:
    """Pixel-square corners of the leftmost and rightmost pixel in every row."""
    rows = np.nonzero(mask.any(1))[0]
    sub = mask[rows]
    left = sub.argmax(1)
    right = sub.shape[1] - 1 - sub[:, ::-1].argmax(1)
    ys = rows + y0
    pts = np.concatenate([
        np.c_[left + x0 - 0.5, ys - 0.5], np.c_[left + x0 - 0.5, ys + 0.5],
        np.c_[right + x0 + 0.5, ys - 0.5], np.c_[right + x0 + 0.5, ys + 0.5]])
    return pts


def _same_candidate(a: PlateCandidate, b: PlateCandidate) -> bool:
    ca, cb = a.quad.mean(0), b.quad.mean(0)
    diag = max(np.hypot(*(a.quad[2] - a.quad[0])), np.hypot(*(b.quad[2] - b.quad[0])))
    ratio = min(a.area, b.area) / max(a.area, b.area)
    return bool(np.hypot(*(ca - cb)) < 0.05 * diag and ratio > 0.8)


def iter_plate_candidates(img, ks=LOCATE_KS, seed: int = 0) -> Iterator[PlateCandidate]:
    """Plate candidates pass by pass (one per k), largest first within a pass."""
    img = as_gray(img)
    h, w = img.shape
    f = max(1, math.ceil(max(h, w) / FEATURE_MAX_DIM))
    small = _downsample(img, f)
    sh, sw = small.shape
    ys, xs = np.mgrid[0:sh, 0:sw]
    X = np.c_[small.ravel() / 255.0 * INTENSITY_WEIGHT, xs.ravel() / sw, ys.ravel() / sh]
    border = np.zeros((sh, sw), dtype=bool)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    min_area = max(0.005 * sh * sw, 30)
    seen: list[PlateCandidate] = []
    for k in ks:
        if len(X) < k:
            continue
        res = kmeans(X, k, seed=seed)
        labels = res.labels.reshape(sh, sw)
        levels = res.centers[:, 0] / INTENSITY_WEIGHT * 255.0
        bg_cluster = np.bincount(labels[border], minlength=k).argmax()
        bg = levels[bg_cluster]
        found = []
        for c in range(k):
            if abs(levels[c] - bg) < 10:
                continue
            mask = np.where(labels == c, 255, 0).astype(np.uint8)
            mask = morphology(mask, "open", 1) > 0
            lab, n = ndimage.label(mask)
            for i, sl in enumerate(ndimage.find_objects(lab), start=1):
                comp = lab[sl] == i
                if comp.sum() < min_area:
                    continue
                if sl[0].start == 0 or sl[1].start == 0 or sl[0].stop == sh or sl[1].stop == sw:
                    continue
                cand = _refine(img, sl, f, levels[c], bg, k)
                if cand is not None:
                    found.append(cand)
        found.sort(key=lambda c: -c.area)
        for cand in found:
            if any(_same_candidate(cand, s) for s in seen):
                continue
            seen.append(cand)
            yield cand


def _refine(img, sl, f, level, bg, k) -> PlateCandidate | None:
    h, w = img.shape
    pad = 2 * f
    y0 = max(sl[0].start * f - pad, 0)
    y1 = min(sl[0].stop * f + pad, h)
    x0 = max(sl[1].start * f - pad, 0)
    x1 = min(sl[1].stop * f + pad, w)
    region = img[y0:y1, x0:x1]
    T = 0.5 * (level + bg)
    mask = region >= T if level > bg else region <= T
    lab, n = ndimage.label(mask)
    if n == 0:
        return None
    sizes = np.bincount(lab.ravel())
    sizes[0] = 0
    comp = lab == sizes.argmax()
    try:
        rect = min_area_rect(_outer_points(comp, x0, y0))
    except Exception:
        return None
    quad = order_quad(rect.corners)
    centre = quad.mean(0)
    padded = centre + (1.0 + PADDING) * (quad - centre)
    return PlateCandidate(quad, padded, rect.area, k)


def locate_plate(img, ks=LOCATE_KS, seed: int = 0) -> list[PlateCandidate]:
    """All plate candidates over the k-means passes, largest first."""
    out = sorted(iter_plate_candidates(img, ks, seed), key=lambda c: -c.area)
    if not out:
        raise NoCandidates("no plate-like regions found")
    return out


# ---------------------------------------------------------------------------
# rectification


@dataclass
class RectifiedPlate:
    image: np.ndarray                  # float32, plate interior axis-aligned
    interior: tuple[float, float, float, float]
    depth: float                       # gap depth in rectified px
    jointed: dict[str, bool]
    levels: tuple[float, float, float]  # background, material, gap
    quad: np.ndarray                   # inner-edge quadrilateral in input px
    notes: list[str] = field(default_factory=list)


def _rot_forward(pts: np.ndarray, k: int, shape) -> np.ndarray:
    """Coordinates in ``np.rot90(a, k)`` of points given in ``a``."""
    h, w = shape
    x, y = pts[:, 0], pts[:, 1]
    if k == 0:
        return np.c_[x, y]
    if k == 1:
        return np.c_[y, w - 1 - x]
    if k == 2:
        return np.c_[w - 1 - x, h - 1 - y]
    return np.c_[h - 1 - y, x]


def _rot_back(pts: np.ndarray, k: int, shape) -> np.ndarray:
    """Inverse of :func:`_rot_forward`; ``shape`` is that of the unrotated array."""
    h, w = shape
    x, y = pts[:, 0], pts[:, 1]
    if k == 0:
        return np.c_[x, y]
    if k == 1:
        return np.c_[w - 1 - y, x]
    if k == 2:
        return np.c_[w - 1 - x, h - 1 - y]
    return np.c_[y, h - 1 - x]


def fit_line(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Total-least-squares line: (point, unit direction)."""
    c = pts.mean(0)
    _, _, vt = np.linalg.svd(pts - c, full_matrices=False)
    return c, vt[0]


def intersect(l1, l2) -> np.ndarray:
    (p, d), (q, e) = l1, l2
    A = np.array([d, -e]).T
    s = np.linalg.solve(A, q - p)
    return p + s[0] * d


def _left_edge_points(R: np.ndarray, mask: np.ndarray, T: float, rows: np.ndarray,
                      rising: bool) -> np.ndarray:
    """Sub-pixel boundary points on selected rows of a left-facing region.

    ``rising`` finds the last pixel of ``mask`` (inner side of a gap); else
    the first pixel of ``mask`` (outer side of a plate).
    """
    pts = []
    W = R.shape[1]
    for y in rows:
        xs = np.nonzero(mask[y])[0]
        if len(xs) == 0:
            continue
        if rising:
            x = xs[-1]
            if x + 1 >= W:
                continue
            v0, v1 = R[y, x], R[y, x + 1]
            f = (v0 - T) / (v0 - v1) if v0 != v1 else 0.5
            pts.append((x + min(max(f, 0.0), 1.0), y))
        else:
            x = xs[0]
            if x == 0:
                continue
            v0, v1 = R[y, x - 1], R[y, x]
            f = (T - v0) / (v1 - v0) if v0 != v1 else 0.5
            pts.append((x - 1 + min(max(f, 0.0), 1.0), y))
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


def rectify_plate(img, candidate: PlateCandidate, extension: float = EXTENSION) -> RectifiedPlate:
    """Straighten a plate so its inner joint lines are axis-aligned.

    Gap regions are those bright blobs that open onto the background. A line
    is fitted through the inner ends of the gaps on every side with at least
    two of them; sides without gaps fall back to the plate's outer boundary.
    """
    img = as_gray(img)
    q = order_quad(candidate.padded)
    wp = int(round(max(np.hypot(*(q[1] - q[0])), np.hypot(*(q[2] - q[3])))))
    hp = int(round(max(np.hypot(*(q[3] - q[0])), np.hypot(*(q[2] - q[1])))))
    if wp < 8 or hp < 8:
        raise EdgeFitFailed("candidate region is too small")
    H1 = homography(q, [[0, 0], [wp - 1, 0], [wp - 1, hp - 1], [0, hp - 1]])
    A = gaussian_blur_float(warp_perspective(img, H1, (wp, hp), as_float=True), 1.0)

    hist = np.bincount(np.clip(np.rint(A), 0, 255).astype(np.uint8).ravel(), minlength=256)
    t1, t2 = otsu_two_thresholds(hist)
    bg = float(A[A < t1].mean()) if np.any(A < t1) else 0.0
    mat = float(A[(A >= t1) & (A < t2)].mean()) if np.any((A >= t1) & (A < t2)) else float(t1)
    gap = float(A[A >= t2].mean()) if np.any(A >= t2) else 255.0
    Tb, Tg = 0.5 * (bg + mat), 0.5 * (mat + gap)

    plate_lab, n = ndimage.label(A >= Tb)
    if n == 0:
        raise EdgeFitFailed("no plate in candidate region")
    sizes = np.bincount(plate_lab.ravel())
    sizes[0] = 0
    plate = plate_lab == sizes.argmax()
    pys, pxs = np.nonzero(plate.any(1))[0], np.nonzero(plate.any(0))[0]
    ex0, ex1, ey0, ey1 = pxs[0], pxs[-1], pys[0], pys[-1]

    gap_lab, _ = ndimage.label(A >= Tg)
    dark = A < Tb
    gaps: dict[str, list] = {s: [] for s in SIDES}
    perp_all = []
    for i, sl in enumerate(ndimage.find_objects(gap_lab), start=1):
        if sl is None:
            continue
        comp = gap_lab[sl] == i
        if comp.sum() < 6:
            continue
        gy0, gy1 = max(sl[0].start - 5, 0), sl[0].stop + 5
        gx0, gx1 = max(sl[1].start - 5, 0), sl[1].stop + 5
        grown = ndimage.binary_dilation(gap_lab[gy0:gy1, gx0:gx1] == i, iterations=5)
        if not np.any(grown & dark[gy0:gy1, gx0:gx1]):
            continue  # enclosed by material: a cut, not a joint gap
        cy = 0.5 * (sl[0].start + sl[0].stop - 1)
        cx = 0.5 * (sl[1].start + sl[1].stop - 1)
        dist = {"left": cx - ex0, "right": ex1 - cx, "top": cy - ey0, "bottom": ey1 - cy}
        side = min(dist, key=dist.get)
        bw, bh = sl[1].stop - sl[1].start, sl[0].stop - sl[0].start
        perp = bw if side in ("left", "right") else bh
        gaps[side].append((i, perp, sl))
        perp_all.append(perp)
    if not perp_all:
        raise EdgeFitFailed("no joint gaps found")
    depth = float(np.median(perp_all))
    for s in SIDES:
        gaps[s] = [g for g in gaps[s] if g[1] <= 1.6 * depth]
    jointed = {s: len(gaps[s]) >= 2 for s in SIDES}
    if not any(jointed.values()):
        raise EdgeFitFailed("no plate edge has two or more gaps")

    lines = {}
    for s in SIDES:
        k = _TURNS[s]
        if jointed[s]:
            pts = []
            for gid, _, sl in gaps[s]:
                gy0, gx0 = max(sl[0].start - 2, 0), max(sl[1].start - 2, 0)
                box = (slice(gy0, sl[0].stop + 2), slice(gx0, sl[1].stop + 2))
                sub = A[box]
                Rs = np.rot90(sub, k)
                Ms = np.rot90(gap_lab[box] == gid, k)
                ys = np.nonzero(Ms.any(1))[0]
                lo, hi = ys[0], ys[-1]
                trim = 0.25 * (hi - lo)
                rows = np.arange(int(math.ceil(lo + trim)), int(math.floor(hi - trim)) + 1)
                local = _left_edge_points(Rs, Ms, Tg, rows, rising=True)
                pts.append(_rot_back(local, k, sub.shape) + np.array([gx0, gy0]))
            pts = np.concatenate(pts)
        else:
            pl = np.rot90(plate, k)
            rows_any = np.nonzero(pl.any(1))[0]
            lo, hi = rows_any[0], rows_any[-1]
            trim = 0.15 * (hi - lo)
            rows = np.arange(int(math.ceil(lo + trim)), int(math.floor(hi - trim)) + 1)
            pts = _rot_back(_left_edge_points(np.rot90(A, k), pl, Tb, rows, rising=False),
                            k, A.shape)
        if len(pts) < 2:
            raise EdgeFitFailed(f"too few edge points on the {s} side")
        lines[s] = fit_line(pts)

    try:
        Q = np.array([intersect(lines["left"], lines["top"]), intersect(lines["top"], lines["right"]),
                      intersect(lines["right"], lines["bottom"]), intersect(lines["bottom"], lines["left"])])
    except np.linalg.LinAlgError:
        raise EdgeFitFailed("edge lines are parallel") from None
    Wq = 0.5 * (np.hypot(*(Q[1] - Q[0])) + np.hypot(*(Q[2] - Q[3])))
    Hq = 0.5 * (np.hypot(*(Q[3] - Q[0])) + np.hypot(*(Q[2] - Q[1])))
    if not (Wq > 4 * depth and Hq > 4 * depth):
        raise EdgeFitFailed("fitted edges do not enclose a plate")
    e = max(float(math.ceil(extension * depth)), 3.0)
    size = (int(math.ceil(Wq + 2 * e)) + 1, int(math.ceil(Hq + 2 * e)) + 1)
    dst = np.array([[e, e], [e + Wq, e], [e + Wq, e + Hq], [e, e + Hq]])
    H2 = homography(Q, dst)
    rect = warp_perspective(img, H2 @ H1, size, as_float=True)
    quad_img = apply_homography(np.linalg.inv(H1), Q)
    return RectifiedPlate(rect, (e, e, e + Wq, e + Hq), depth, jointed, (bg, mat, gap), quad_img,
                          [f"gaps per side: " + ", ".join(f"{s}={len(gaps[s])}" for s in SIDES)])


# ---------------------------------------------------------------------------
# measurement


@dataclass(frozen=True)
class JointMeasurement:
    sides: dict[str, tuple[float, ...]]   # element lengths (px), in reading order
    kinds: dict[str, tuple[str, ...]]

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(v for s in SIDES for v in self.sides[s])


def _crossings(p: np.ndarray, T: float, offset: float) -> np.ndarray:
    d = p - T
    idx = np.nonzero((d[:-1] > 0) != (d[1:] > 0))[0]
    f = d[idx] / (d[idx] - d[idx + 1])
    return offset + idx + f


def measure_joint_elements(rp: RectifiedPlate) -> JointMeasurement:
    """Element lengths along each jointed side, counter-clockwise as viewed.

    Sides are read left (top to bottom), bottom, right, top. Each side runs
    over the full plate edge, so a corner belongs to the elements that end
    there; the outer ends are located where the profile meets the background.
    """
    bg, mat, gap = rp.levels
    Tg, Tb = 0.5 * (mat + gap), 0.5 * (bg + mat)
    t = rp.depth
    sides, kinds = {}, {}
    order = list(SIDES)
    for idx, s in enumerate(order):
        if not rp.jointed[s]:
            sides[s], kinds[s] = (), ()
            continue
        k = _TURNS[s]
        R = np.rot90(rp.image, k)
        x0, y0, x1, y1 = rp.interior
        corners = _rot_forward(np.array([[x0, y0], [x1, y1]]), k, rp.image.shape)
        ix0 = corners[:, 0].min()
        iy0, iy1 = corners[:, 1].min(), corners[:, 1].max()
        c0 = int(math.ceil(ix0 - 0.75 * t))
        c1 = int(math.floor(ix0 - 0.25 * t))
        if c1 < c0:
            c0 = c1 = int(round(ix0 - 0.5 * t))
        c0 = max(c0, 0)
        prev_j = rp.jointed[order[idx - 1]]
        next_j = rp.jointed[order[(idx + 1) % 4]]
        start = iy0 - (t if prev_j else 0.0)
        end = iy1 + (t if next_j else 0.0)
        ya = max(int(math.floor(start - t)), 0)
        yb = min(int(math.ceil(end + t)) + 1, R.shape[0])
        p = R[ya:yb, c0:c1 + 1].mean(1)

        bcross = _crossings(p, Tb, ya)
        if len(bcross):
            near = bcross[np.argmin(np.abs(bcross - start))]
            if abs(near - start) <= 0.6 * t:
                start = near
            near = bcross[np.argmin(np.abs(bcross - end))]
            if abs(near - end) <= 0.6 * t:
                end = near
        inner = [c for c in _crossings(p, Tg, ya) if start + 2 < c < end - 2]
        bounds = [start] + inner + [end]
        bounds = _merge_short(bounds, MIN_RUN_PX)
        if len(bounds) < 3:
            raise InconsistentAlternation(f"no element boundaries on the {s} side")
        lengths = np.diff(bounds)
        kk = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            seg = p[max(int(math.ceil(a)) - ya, 0):max(int(math.floor(b)) - ya + 1, 1)]
            kk.append("gap" if seg.size and float(np.median(seg)) > Tg else "finger")
        if any(u == v for u, v in zip(kk, kk[1:])):
            raise InconsistentAlternation(f"elements on the {s} side do not alternate")
        sides[s] = tuple(float(v) for v in lengths)
        kinds[s] = tuple(kk)
    return JointMeasurement(sides, kinds)


def _merge_short(bounds: list[float], min_len: float) -> list[float]:
    b = list(bounds)
    while len(b) > 2:
        lengths = np.diff(b)
        i = int(np.argmin(lengths))
        if lengths[i] >= min_len:
            break
        if i == 0:
            del b[1]
        elif i == len(lengths) - 1:
            del b[-2]
        else:
            del b[i:i + 2]
    return b
