"""Raster primitives for both decoding pipelines.

Images are 2-D ``uint8`` numpy arrays (row-major, intensities 0..255).
Every neighbourhood operation replicates edge pixels at the border.
Pixel centres sit at integer coordinates; points are ``(x, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import fft as sp_fft
from scipy import ndimage

from .errors import (
    BadBlockSize,
    BadKernelSize,
    DegenerateContour,
    DegenerateImage,
    DegenerateQuad,
    NonBinaryInput,
    TooFewPoints,
)


def as_gray(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError(f"expected a single-channel image, got shape {a.shape}")
    if a.dtype != np.uint8:
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def to_uint8(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Gaussian filtering


def default_ksize(sigma: float) -> int:
    return 2 * max(1, math.ceil(3 * sigma)) + 1


def gaussian_kernel1d(sigma: float, ksize: int) -> np.ndarray:
    if ksize < 1 or ksize % 2 == 0:
        raise BadKernelSize(f"kernel size must be a positive odd integer, got {ksize}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.arange(ksize) - ksize // 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel2d(sigma: float, ksize: int) -> np.ndarray:
    """Sampled ``exp(-(x^2+y^2)/(2 sigma^2)) / (2 pi sigma^2)``, normalised to sum 1."""
    k = gaussian_kernel1d(sigma, ksize)
    return np.outer(k, k)


FFT_MIN_TAPS = 16


def _correlate_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    r = len(k) // 2
    if r == 0:
        return a * k[0]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    p = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    if len(k) >= FFT_MIN_TAPS:
        # same sum, computed as a product of spectra
        L = sp_fft.next_fast_len(p.shape[axis], real=True)
        K = sp_fft.rfft(k[::-1].astype(np.float64), L)
        shape = [1, 1]
        shape[axis] = -1
        full = sp_fft.irfft(sp_fft.rfft(p, L, axis=axis) * K.reshape(shape), L, axis=axis)
        sl = [slice(None), slice(None)]
        sl[axis] = slice(2 * r, 2 * r + n)
        return full[tuple(sl)].astype(a.dtype)
    out = np.zeros_like(a)
    for i, w in enumerate(k):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += w * p[tuple(sl)]
    return out


def separable_filter(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    a = np.asarray(img, dtype=np.float32)
    k = k.astype(np.float32)
    return _correlate_axis(_correlate_axis(a, k, 1), k, 0)


def gaussian_blur_float(img, sigma: float, ksize: int | None = None) -> np.ndarray:
    if ksize is None:
        ksize = default_ksize(sigma)
    return separable_filter(img, gaussian_kernel1d(sigma, ksize))


def gaussian_blur(img, sigma: float, ksize: int | None = None) -> np.ndarray:
    """Weighted neighbourhood average with a normalised sampled Gaussian."""
    return to_uint8(gaussian_blur_float(as_gray(img), sigma, ksize))


# ---------------------------------------------------------------------------
# thresholding


def histogram(img) -> np.ndarray:
    return np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256).astype(np.float64)


def otsu_from_histogram(hist: np.ndarray) -> int:
    """Threshold ``t`` (class 1 is ``I >= t``) maximising between-class variance."""
    hist = np.asarray(hist, dtype=np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) < 2:
        raise DegenerateImage("image has a single intensity")
    levels = np.arange(len(hist))
    w0 = np.cumsum(hist)[:-1]            # pixels below t = 1..255
    m0 = np.cumsum(hist * levels)[:-1]
    w1 = total - w0
    mt = (hist * levels).sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mt * w0 - m0 * total) ** 2 / (w0 * w1)
    between[(w0 == 0) | (w1 == 0)] = -1
    return int(np.argmax(between)) + 1


def otsu_threshold(img) -> tuple[int, np.ndarray]:
    img = as_gray(img)
    t = otsu_from_histogram(histogram(img))
    return t, np.where(img >= t, 255, 0).astype(np.uint8)


def otsu_two_thresholds(hist: np.ndarray) -> tuple[int, int]:
    """Three-class Otsu: ``(t1, t2)`` splitting into ``<t1``, ``[t1, t2)``, ``>=t2``."""
    hist = np.asarray(hist, dtype=np.float64)
    if np.count_nonzero(hist) < 3:
        t = otsu_from_histogram(hist)
        return t, t
    p = hist / hist.sum()
    levels = np.arange(256)
    c0 = np.concatenate([[0.0], np.cumsum(p)])          # mass below index
    c1 = np.concatenate([[0.0], np.cumsum(p * levels)])
    t = np.arange(1, 256)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    valid = T2 > T1
    wa, ma = c0[T1], c1[T1]
    wb, mb = c0[T2] - c0[T1], c1[T2] - c1[T1]
    wc, mc = 1.0 - c0[T2], c1[256] - c1[T2]
    with np.errstate(divide="ignore", invalid="ignore"):
        score = ma ** 2 / wa + mb ** 2 / wb + mc ** 2 / wc
    score[~valid | (wa <= 0) | (wb <= 0) | (wc <= 0)] = -1
    i, j = np.unravel_index(int(np.argmax(score)), score.shape)
    return int(t[i]), int(t[j])


def adaptive_gaussian_threshold(img, block_size: int, C: float,
                                sigma: float | None = None) -> np.ndarray:
    """255 where ``I >= gaussian_local_mean - C``, else 0."""
    if block_size < 3 or block_size % 2 == 0:
        raise BadBlockSize(f"block size must be odd and >= 3, got {block_size}")
    img = as_gray(img)
    if sigma is None:
        sigma = 0.3 * ((block_size - 1) * 0.5 - 1) + 0.8
    local = separable_filter(img, gaussian_kernel1d(sigma, block_size))
    return np.where(img >= local - C, 255, 0).astype(np.uint8)


# ---------------------------------------------------------------------------
# CLAHE


def clip_histogram(hist: np.ndarray, limit: float, max_iter: int = 1000) -> np.ndarray:
    """Clip at ``limit`` and share the excess over all bins until no bin exceeds it."""
    h = np.asarray(hist, dtype=np.float64).copy()
    total = h.sum()
    for _ in range(max_iter):
        excess = np.maximum(h - limit, 0.0).sum()
        if excess <= 1e-9 * total:
            break
        h = np.minimum(h, limit) + excess / len(h)
    return h


def clahe(img, clip_limit: float = 2.0, tile_grid: tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalisation.

    ``clip_limit`` is in multiples of the uniform bin height (tile pixels /
    256). Each tile maps ``x -> CDF(x) * 255``; pixels blend the mappings of
    the four nearest tile centres bilinearly.
    """
    img = as_gray(img)
    if clip_limit < 1:
        raise ValueError("clip_limit must be >= 1")
    ty, tx = tile_grid
    if ty < 1 or tx < 1:
        raise ValueError("tile grid must be at least 1x1")
    h, w = img.shape
    ty, tx = min(ty, h), min(tx, w)
    ys = np.linspace(0, h, ty + 1).round().astype(int)
    xs = np.linspace(0, w, tx + 1).round().astype(int)
    luts = np.empty((ty, tx, 256))
    for i in range(ty):
        for j in range(tx):
            tile = img[ys[i]:ys[i + 1], xs[j]:xs[j + 1]]
            n = tile.size
            hist = clip_histogram(histogram(tile), clip_limit * n / 256.0)
            luts[i, j] = np.cumsum(hist) / n * 255.0
    cy = 0.5 * (ys[:-1] + ys[1:] - 1)
    cx = 0.5 * (xs[:-1] + xs[1:] - 1)

    def weights(centres, size):
        pos = np.arange(size, dtype=np.float64)
        i1 = np.searchsorted(centres, pos, side="right")
        i0 = np.clip(i1 - 1, 0, len(centres) - 1)
        i1 = np.clip(i1, 0, len(centres) - 1)
        span = centres[i1] - centres[i0]
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(span > 0, (pos - centres[i0]) / span, 0.0)
        return i0, i1, np.clip(f, 0.0, 1.0)

    r0, r1, fy = weights(cy, h)
    c0, c1, fx = weights(cx, w)
    I = img.astype(np.intp)
    R0, R1 = r0[:, None], r1[:, None]
    C0, C1 = c0[None, :], c1[None, :]
    FY, FX = fy[:, None], fx[None, :]
    out = ((1 - FY) * ((1 - FX) * luts[R0, C0, I] + FX * luts[R0, C1, I])
           + FY * ((1 - FX) * luts[R1, C0, I] + FX * luts[R1, C1, I]))
    return to_uint8(out)


# ---------------------------------------------------------------------------
# morphology


def _check_binary(img) -> np.ndarray:
    img = as_gray(img)
    counts = np.bincount(img.ravel(), minlength=256)
    if counts[1:255].any():
        raise NonBinaryInput("morphology expects a 0/255 image")
    return img


def _rank_filter(img: np.ndarray, radius: int, fn) -> np.ndarray:
    out = img
    for axis in (1, 0):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        p = np.pad(out, pad, mode="edge")
        n = out.shape[axis]
        acc = None
        for i in range(2 * radius + 1):
            sl = [slice(None), slice(None)]
            sl[axis] = slice(i, i + n)
            acc = p[tuple(sl)] if acc is None else fn(acc, p[tuple(sl)])
        out = acc
    return out


def erode(img, radius: int = 1) -> np.ndarray:
    return _rank_filter(_check_binary(img), radius, np.minimum)


def dilate(img, radius: int = 1) -> np.ndarray:
    return _rank_filter(_check_binary(img), radius, np.maximum)


def morphology(img, op: str, radius: int = 1) -> np.ndarray:
    """Opening or closing with a ``(2r+1) x (2r+1)`` square."""
    img = _check_binary(img)
    if radius < 1:
        return img.copy()
    if op == "open":
        return dilate(erode(img, radius), radius)
    if op == "close":
        return erode(dilate(img, radius), radius)
    raise ValueError(f"unknown morphology op {op!r}")


# ---------------------------------------------------------------------------
# connected components

_EIGHT = np.ones((3, 3), dtype=bool)
# clockwise neighbour order in (dy, dx), starting west
_DIRS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


@dataclass
class Component:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive
    contour: np.ndarray              # (n, 2) boundary pixels (x, y), clockwise
    holes: int


def label_components(mask) -> tuple[np.ndarray, int]:
    """8-connected labelling of the non-zero pixels."""
    return ndimage.label(np.asarray(mask) > 0, structure=_EIGHT)


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbour boundary trace of the first component in raster order."""
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        return np.zeros((0, 2), dtype=int)
    p = np.pad(mask.astype(bool), 1)
    start = (int(ys[0]) + 1, int(xs[0]) + 1)
    contour = [start]
    cur, search = start, 0
    first_move = None
    for _ in range(4 * p.size):
        for k in range(8):
            d = (search + k) % 8
            ny, nx = cur[0] + _DIRS[d][0], cur[1] + _DIRS[d][1]
            if p[ny, nx]:
                break
        else:
            break  # isolated pixel
        if first_move is None:
            first_move = d
        elif cur == start and d == first_move:
            break
        cur = (ny, nx)
        search = (d + 5) % 8
        contour.append(cur)
    if len(contour) > 1 and contour[-1] == start:
        contour.pop()
    c = np.array(contour) - 1
    return c[:, ::-1]


def _count_holes(mask: np.ndarray) -> int:
    bg = np.pad(~mask, 1, constant_values=True)
    lab, n = ndimage.label(bg)
    return max(n - 1, 0)


def connected_components(img, contours: bool = True) -> list[Component]:
    lab, n = label_components(img)
    out = []
    for i, sl in enumerate(ndimage.find_objects(lab), start=1):
        if sl is None:
            continue
        sub = lab[sl] == i
        y0, x0 = sl[0].start, sl[1].start
        if contours:
            contour = trace_contour(sub) + np.array([x0, y0])
        else:
            contour = np.zeros((0, 2), dtype=int)
        out.append(Component(i, int(sub.sum()), (x0, y0, sl[1].stop - 1, sl[0].stop - 1),
                             contour, _count_holes(sub)))
    return out


# ---------------------------------------------------------------------------
# hulls and rectangles


def convex_hull(points) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise in (x, y) math orientation."""
    pts = np.unique(np.asarray(points, dtype=np.float64).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts

    def half(seq):
        h: list = []
        for p in seq:
            while len(h) >= 2:
                (ax, ay), (bx, by) = h[-2], h[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= 0:
                    h.pop()
                else:
                    break
            h.append((p[0], p[1]))
        return h

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


class RotatedRect(NamedTuple):
    center: tuple[float, float]
    width: float    # the longer side
    height: float
    angle: float    # direction of the longer side, degrees in [0, 180)
    corners: np.ndarray

    @property
    def area(self) -> float:
        return self.width * self.height


def min_area_rect(points) -> RotatedRect:
    """Minimum-area enclosing rectangle by rotating calipers over the hull."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise DegenerateContour("need at least three points")
    hull = convex_hull(pts)
    if len(hull) < 3:
        raise DegenerateContour("points are collinear")
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 1e-12
    e = edges[keep] / lengths[keep, None]
    nrm = np.stack([-e[:, 1], e[:, 0]], axis=1)
    pu = hull @ e.T
    pv = hull @ nrm.T
    wu = pu.max(0) - pu.min(0)
    wv = pv.max(0) - pv.min(0)
    k = int(np.argmin(wu * wv))
    if wu[k] * wv[k] <= 1e-12:
        raise DegenerateContour("points are collinear")
    u, v = e[k], nrm[k]
    umin, umax = pu[:, k].min(), pu[:, k].max()
    vmin, vmax = pv[:, k].min(), pv[:, k].max()
    corners = np.array([u * a + v * b for a, b in
                        ((umin, vmin), (umax, vmin), (umax, vmax), (umin, vmax))])
    center = corners.mean(0)
    if wu[k] >= wv[k]:
        width, height, axis = wu[k], wv[k], u
    else:
        width, height, axis = wv[k], wu[k], v
    angle = math.degrees(math.atan2(axis[1], axis[0])) % 180.0
    if angle > 180.0 - 1e-9:
        angle = 0.0
    return RotatedRect((float(center[0]), float(center[1])), float(width), float(height),
                       float(angle), order_quad(corners))


def pixel_corners(xy: np.ndarray) -> np.ndarray:
    """The four corners of every pixel square, for exact-extent hulls."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    offs = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    return (xy[:, None, :] + offs[None]).reshape(-1, 2)


# ---------------------------------------------------------------------------
# perspective warps


def order_quad(pts) -> np.ndarray:
    """Corners as top-left, top-right, bottom-right, bottom-left (image frame)."""
    q = np.asarray(pts, dtype=np.float64).reshape(4, 2)
    c = q.mean(0)
    ang = np.arctan2(q[:, 1] - c[1], q[:, 0] - c[0])
    q = q[np.argsort(ang)]
    start = int(np.argmin(q[:, 0] + q[:, 1]))
    return np.roll(q, -start, axis=0)


def check_quad(quad) -> np.ndarray:
    q = np.asarray(quad, dtype=np.float64).reshape(4, 2)
    crosses = []
    for i in range(4):
        a, b, c = q[i], q[(i + 1) % 4], q[(i + 2) % 4]
        crosses.append((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]))
    crosses = np.array(crosses)
    scale = max(np.ptp(q[:, 0]), np.ptp(q[:, 1]), 1e-12) ** 2
    if np.any(np.abs(crosses) <= 1e-9 * scale) or not (np.all(crosses > 0) or np.all(crosses < 0)):
        raise DegenerateQuad("quadrilateral is not convex and simple")
    return q


def homography(src, dst) -> np.ndarray:
    """3x3 projective map sending four ``src`` points onto ``dst``."""
    src = np.asarray(src, dtype=np.float64).reshape(4, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(4, 2)
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i], b[2 * i + 1] = u, v
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise DegenerateQuad("points do not define a homography") from None
    return np.append(h, 1.0).reshape(3, 3)


def apply_homography(H: np.ndarray, pts) -> np.ndarray:
    p = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    q = np.c_[p, np.ones(len(p))] @ H.T
    return q[:, :2] / q[:, 2:3]


def sample_bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray,
                    fill: float | None = None) -> np.ndarray:
    """Bilinear lookup at float coordinates; outside the image, ``fill`` or the edge."""
    h, w = img.shape
    src = np.asarray(img, dtype=np.float32).ravel()
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.float32)
    xc = np.clip(x, 0, w - 1)
    yc = np.clip(y, 0, h - 1)
    x0 = np.minimum(xc.astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(yc.astype(np.intp), max(h - 2, 0))
    fx = xc - x0
    fy = yc - y0
    i = y0 * w + x0
    dx = 1 if w > 1 else 0
    dy = w if h > 1 else 0
    top = src.take(i)
    top += fx * (src.take(i + dx) - top)
    bot = src.take(i + dy)
    bot += fx * (src.take(i + dy + dx) - bot)
    top += fy * (bot - top)
    if fill is not None:
        outside = (x < -0.5) | (x > w - 0.5) | (y < -0.5) | (y > h - 0.5)
        top[outside] = fill
    return top


def warp_perspective(img, H: np.ndarray, size: tuple[int, int],
                     fill: float | None = None, as_float: bool = False) -> np.ndarray:
    """Output pixel ``p`` takes the input at ``H^-1 p``; ``size`` is (width, height)."""
    w, h = size
    Hinv = np.linalg.inv(H).astype(np.float32)
    xs = np.arange(w, dtype=np.float32)[None, :]
    ys = np.arange(h, dtype=np.float32)[:, None]
    Z = Hinv[2, 0] * xs + Hinv[2, 1] * ys + Hinv[2, 2]
    X = (Hinv[0, 0] * xs + Hinv[0, 1] * ys + Hinv[0, 2]) / Z
    Y = (Hinv[1, 0] * xs + Hinv[1, 1] * ys + Hinv[1, 2]) / Z
    out = sample_bilinear(np.asarray(img), X, Y, fill)
    return out if as_float else to_uint8(out)


def warp_perspective_4pt(img, quad, size: tuple[int, int] | None = None,
                         fill: float | None = None) -> np.ndarray:
    """Map ``quad`` (tl, tr, br, bl) onto an axis-aligned ``size`` rectangle."""
    img = as_gray(img)
    q = check_quad(quad)
    if size is None:
        w = max(np.hypot(*(q[1] - q[0])), np.hypot(*(q[2] - q[3])))
        h = max(np.hypot(*(q[3] - q[0])), np.hypot(*(q[2] - q[1])))
        size = (int(round(w)) + 1, int(round(h)) + 1)
    w, h = size
    dst = np.array([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=np.float64)
    return warp_perspective(img, homography(q, dst), size, fill)


# ---------------------------------------------------------------------------
# k-means


class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    inertia: float


def _plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    idx = [int(rng.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            rest = np.setdiff1d(np.arange(n), idx)
            j = int(rng.choice(rest))
        else:
            j = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            j = min(j, n - 1)
        idx.append(j)
        d2 = np.minimum(d2, ((X - X[j]) ** 2).sum(1))
    return X[idx].copy()


def _sq_dist(X: np.ndarray, centers: np.ndarray, xx: np.ndarray) -> np.ndarray:
    d = xx[:, None] - 2.0 * (X @ centers.T) + (centers ** 2).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _lloyd(X, centers, max_iter, tol):
    k = len(centers)
    xx = (X ** 2).sum(1)
    for _ in range(max_iter):
        d = _sq_dist(X, centers, xx)
        labels = d.argmin(1)
        counts = np.bincount(labels, minlength=k)
        sums = np.stack([np.bincount(labels, weights=X[:, j], minlength=k)
                         for j in range(X.shape[1])], axis=1)
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        if not filled.all():
            far = np.argsort(-d[np.arange(len(X)), labels])
            for c, j in zip(np.nonzero(~filled)[0], far):
                new[c] = X[j]
        shift = np.sqrt(((new - centers) ** 2).sum(1)).max()
        centers = new
        if shift < tol:
            break
    d = _sq_dist(X, centers, xx)
    labels = d.argmin(1)
    return labels, centers, float(d[np.arange(len(X)), labels].sum())


def kmeans(points, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6,
           n_init: int = 1) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; deterministic for a given seed.

    ``tol`` bounds the largest centre movement relative to the data spread, so
    results do not depend on the units of ``points``. With ``n_init > 1`` the
    lowest-inertia run wins.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if k < 1 or len(X) < k:
        raise TooFewPoints(f"{len(X)} points cannot form {k} clusters")
    scale = float(np.ptp(X, axis=0).max()) or 1.0
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        res = _lloyd(X, _plusplus(X, k, rng), max_iter, tol * scale)
        if best is None or res[2] < best[2] - 1e-12 * scale * scale:
            best = res
    return KMeansResult(*best)
