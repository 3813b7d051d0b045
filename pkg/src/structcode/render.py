"""Synthetic camera: rasterise a design and photograph it under a pinhole model.

The renderer is the ground-truth oracle for the decoders. Material plates
are drawn at ``material`` intensity, anything cut away inside a plate's
envelope (finger gaps, holes, hinge cuts) at ``gap`` intensity as if lit from
behind, and the rest of the frame at ``background``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import EmptyDesign
from .imgproc import apply_homography, gaussian_blur_float, to_uint8, warp_perspective
from .model import Design

Point = tuple[float, float]


@dataclass(frozen=True)
class RenderConfig:
    px_per_mm: float = 10.0
    material: int = 90
    gap: int = 200
    background: int = 30
    yaw: float = 0.0
    pitch: float = 0.0
    blur_sigma: float = 1.0
    noise_sigma: float = 2.0
    seed: int = 0
    margin_mm: float = 20.0
    cut_width_mm: float = 0.5
    camera_distance_mm: float | None = None
    supersample: int = 4

    def __post_init__(self):
        if not self.px_per_mm > 0:
            raise ValueError("px_per_mm must be positive")
        for name in ("yaw", "pitch"):
            if abs(getattr(self, name)) > 80:
                raise ValueError(f"{name} must lie in [-80, 80] degrees")
        for name in ("material", "gap", "background"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} intensity must lie in [0, 255]")
        if self.blur_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("blur and noise must be non-negative")
        if self.supersample < 1 or self.margin_mm < 0 or self.cut_width_mm <= 0:
            raise ValueError("invalid raster parameters")

    def with_(self, **changes) -> "RenderConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# design -> raster


def design_to_pixel(design: Design, cfg: RenderConfig) -> np.ndarray:
    """Affine map (3x3) from design millimetres to frontal raster pixels."""
    x0, y0, _, _ = design.bbox()
    s = cfg.px_per_mm
    return np.array([[s, 0, (cfg.margin_mm - x0) * s - 0.5],
                     [0, s, (cfg.margin_mm - y0) * s - 0.5],
                     [0, 0, 1.0]])


def raster_size(design: Design, cfg: RenderConfig) -> tuple[int, int]:
    x0, y0, x1, y1 = design.bbox()
    s = cfg.px_per_mm
    return (int(math.ceil((x1 - x0 + 2 * cfg.margin_mm) * s)),
            int(math.ceil((y1 - y0 + 2 * cfg.margin_mm) * s)))


def _fill_polygons(canvas: np.ndarray, polys: Sequence[np.ndarray], value: int, ss: int) -> None:
    """Even-odd fill of ``polys`` (in output pixel coords) on a supersampled canvas."""
    H, W = canvas.shape
    pts = np.concatenate(polys)
    cx0 = max(int(math.floor((pts[:, 0].min() + 0.5) * ss)) - 1, 0)
    cx1 = min(int(math.ceil((pts[:, 0].max() + 0.5) * ss)) + 1, W)
    cy0 = max(int(math.floor((pts[:, 1].min() + 0.5) * ss)) - 1, 0)
    cy1 = min(int(math.ceil((pts[:, 1].max() + 0.5) * ss)) + 1, H)
    if cx1 <= cx0 or cy1 <= cy0:
        return
    toggles = np.zeros((cy1 - cy0, cx1 - cx0 + 1), dtype=np.uint8)
    for poly in polys:
        a = poly
        b = np.roll(poly, -1, axis=0)
        for (xa, ya), (xb, yb) in zip(a, b):
            if ya == yb:
                continue
            lo, hi = min(ya, yb), max(ya, yb)
            # sub-row r has centre (r + 0.5) / ss - 0.5 in output pixels
            r0 = max(int(math.ceil((lo + 0.5) * ss - 0.5)), cy0)
            r1 = min(int(math.ceil((hi + 0.5) * ss - 0.5)), cy1)
            if r1 <= r0:
                continue
            rows = np.arange(r0, r1)
            yc = (rows + 0.5) / ss - 0.5
            xc = xa + (yc - ya) * (xb - xa) / (yb - ya)
            cols = np.ceil((xc + 0.5) * ss - 0.5).astype(np.intp) - cx0
            cols = np.clip(cols, 0, cx1 - cx0)
            np.bitwise_xor.at(toggles, (rows - cy0, cols), 1)
    inside = np.bitwise_xor.accumulate(toggles, axis=1)[:, :-1].astype(bool)
    canvas[cy0:cy1, cx0:cx1][inside] = value


def _cut_polygon(p: np.ndarray, q: np.ndarray, half: float) -> np.ndarray:
    d = q - p
    n = np.hypot(*d)
    if n == 0:
        return np.array([p + (-half, -half), p + (half, -half), p + (half, half), p + (-half, half)])
    nrm = np.array([-d[1], d[0]]) / n * half
    return np.array([p + nrm, q + nrm, q - nrm, p - nrm])


def rasterize(design: Design, cfg: RenderConfig = RenderConfig()) -> np.ndarray:
    """Frontal, noise-free raster of ``design`` with a ``margin_mm`` border."""
    if not design.plates or all(len(p.outline) < 3 for p in design.plates):
        raise EmptyDesign("design has no plates")
    W, H = raster_size(design, cfg)
    ss = cfg.supersample
    M = design_to_pixel(design, cfg)
    canvas = np.full((H * ss, W * ss), cfg.background, dtype=np.uint8)
    half = 0.5 * cfg.cut_width_mm * cfg.px_per_mm
    for plate in design.plates:
        outline = apply_homography(M, plate.outline)
        x0, y0 = outline.min(0)
        x1, y1 = outline.max(0)
        envelope = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        _fill_polygons(canvas, [envelope], cfg.gap, ss)
        _fill_polygons(canvas, [outline] + [apply_homography(M, h) for h in plate.holes],
                       cfg.material, ss)
        for p, q in plate.cuts:
            pq = apply_homography(M, [p, q])
            _fill_polygons(canvas, [_cut_polygon(pq[0], pq[1], half)], cfg.gap, ss)
    if ss == 1:
        return canvas
    sums = canvas.reshape(H, ss, W, ss).sum(axis=(1, 3), dtype=np.uint32)
    return ((sums * 2 + ss * ss) // (2 * ss * ss)).astype(np.uint8)


# ---------------------------------------------------------------------------
# camera


def view_homography(shape: tuple[int, int], cfg: RenderConfig) -> np.ndarray:
    """Pinhole map from frontal pixels to the rotated view, about the image centre.

    Yaw turns the plate about the vertical image axis, pitch about the
    horizontal one. At zero rotation the map is the identity.
    """
    h, w = shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    D = cfg.camera_distance_mm
    D = 3.0 * max(w, h) if D is None else D * cfg.px_per_mm
    a, b = math.radians(cfg.yaw), math.radians(cfg.pitch)
    Ry = np.array([[math.cos(a), 0, math.sin(a)], [0, 1, 0], [-math.sin(a), 0, math.cos(a)]])
    Rx = np.array([[1, 0, 0], [0, math.cos(b), -math.sin(b)], [0, math.sin(b), math.cos(b)]])
    R = Rx @ Ry
    K = np.array([[D, 0, cx], [0, D, cy], [0, 0, 1.0]])
    Rt = np.column_stack([R[:, 0], R[:, 1], [0, 0, D]])
    S = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1.0]])
    H = K @ Rt @ S
    return H / H[2, 2]


def apply_view(img: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    if cfg.yaw == 0 and cfg.pitch == 0:
        return np.array(img, dtype=np.uint8, copy=True)
    H = view_homography(img.shape, cfg)
    return warp_perspective(img, H, (img.shape[1], img.shape[0]), fill=cfg.background)


def degrade(img: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    """Blur, then add seeded Gaussian noise, clamped to [0, 255]."""
    out = np.asarray(img, dtype=np.float32)
    if cfg.blur_sigma > 0:
        out = gaussian_blur_float(out, cfg.blur_sigma)
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        out = out + rng.normal(0.0, cfg.noise_sigma, out.shape).astype(np.float32)
    return to_uint8(out)


@dataclass(frozen=True)
class Rendering:
    image: np.ndarray
    mm_to_px: np.ndarray  # 3x3 homography from design mm to final image pixels

    def project(self, points) -> np.ndarray:
        return apply_homography(self.mm_to_px, points)


def render_scene(design: Design, cfg: RenderConfig = RenderConfig()) -> Rendering:
    frontal = rasterize(design, cfg)
    H = view_homography(frontal.shape, cfg) @ design_to_pixel(design, cfg)
    return Rendering(degrade(apply_view(frontal, cfg), cfg), H / H[2, 2])


def render(design: Design, cfg: RenderConfig = RenderConfig()) -> np.ndarray:
    return render_scene(design, cfg).image
