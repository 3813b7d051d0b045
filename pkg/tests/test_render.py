from pathlib import Path

import numpy as np
import pytest

from structcode.embedder import embed_message
from structcode.errors import EmptyDesign
from structcode.imgproc import apply_homography
from structcode.model import Design, joint_model
from structcode.render import (
    RenderConfig,
    apply_view,
    degrade,
    design_to_pixel,
    rasterize,
    render,
    render_scene,
    view_homography,
)
from structcode.svg import load_design

FIX = Path(__file__).parent / "fixtures"
JOINTS = load_design(FIX / "joints_150x100.svg")
HINGE = load_design(FIX / "hinge_5x3_7.svg")
CLEAN = RenderConfig(blur_sigma=0.0, noise_sigma=0.0)


def crossings(p, T):
    d = np.asarray(p, float) - T
    idx = np.nonzero((d[:-1] > 0) != (d[1:] > 0))[0]
    return idx + d[idx] / (d[idx] - d[idx + 1])


def test_raster_size():
    img = rasterize(JOINTS, CLEAN)
    m = int(CLEAN.margin_mm * CLEAN.px_per_mm)
    assert img.shape == (1000 + 2 * m, 1500 + 2 * m)


def test_intensities_exact_before_noise():
    img = rasterize(JOINTS, CLEAN)
    M = design_to_pixel(JOINTS, CLEAN)
    (cx, cy), = apply_homography(M, [(75, 50)])
    assert img[int(cy), int(cx)] == CLEAN.material
    assert img[5, 5] == CLEAN.background
    # a gap square just inside the top-left corner region
    edge = joint_model(JOINTS.plates[0]).sides["bottom"]
    x_mm = edge[1][0] + edge[1][1] / 2
    (gx, gy), = apply_homography(M, [(x_mm, 98.0)])
    assert img[int(round(gy)), int(round(gx))] == CLEAN.gap
    assert set(np.unique(img)) >= {CLEAN.material, CLEAN.gap, CLEAN.background}


def test_widths_match_embedding():
    new, _ = embed_message(JOINTS, "plate-0", "Red Oak")
    img = rasterize(new, CLEAN)
    M = design_to_pixel(new, CLEAN)
    widths = joint_model(new.plates[0]).sides["bottom"][1]
    (_, y), = apply_homography(M, [(0, 98.0)])
    measured = np.diff(crossings(img[int(round(y))], (CLEAN.material + CLEAN.gap) / 2))
    expected = np.array(widths[1:-1]) * CLEAN.px_per_mm
    assert len(measured) == len(expected)
    assert np.abs(measured - expected).max() <= 1.0


def test_length_ratios_at_frontal_view():
    new, _ = embed_message(JOINTS, "plate-0", "Zz9")
    img = rasterize(new, CLEAN)
    M = design_to_pixel(new, CLEAN)
    widths = np.array(joint_model(new.plates[0]).sides["bottom"][1][1:-1])
    (_, y), = apply_homography(M, [(0, 98.0)])
    measured = np.diff(crossings(img[int(round(y))], 145))
    assert measured / measured[0] == pytest.approx(widths / widths[0], abs=1.0 / measured[0])


def test_empty_design():
    with pytest.raises(EmptyDesign):
        rasterize(Design(()))


@pytest.mark.parametrize("kw", [{"px_per_mm": 0}, {"yaw": 81}, {"pitch": -90},
                                {"material": 300}, {"noise_sigma": -1}])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        RenderConfig(**kw)


def test_zero_view_is_identity():
    img = rasterize(HINGE, CLEAN)
    assert np.array_equal(apply_view(img, CLEAN), img)
    np.testing.assert_allclose(view_homography(img.shape, CLEAN), np.eye(3), atol=1e-12)


def test_view_preserves_collinearity():
    cfg = CLEAN.with_(yaw=25.0, pitch=-10.0)
    H = view_homography((1400, 1900), cfg)
    t = np.linspace(0, 1, 50)[:, None]
    line = np.array([100.0, 200.0]) + t * np.array([1500.0, 900.0])
    out = apply_homography(H, line)
    c = out.mean(0)
    _, s, vt = np.linalg.svd(out - c)
    dist = np.abs((out - c) @ vt[1])
    assert dist.max() < 0.5


def test_scene_projection_tracks_corners():
    cfg = CLEAN.with_(yaw=20.0)
    scene = render_scene(JOINTS, cfg)
    (x, y), = scene.project([(75.0, 50.0)])
    assert scene.image[int(round(y)), int(round(x))] == CLEAN.material


def test_degrade_identity():
    img = rasterize(HINGE, CLEAN)
    assert np.array_equal(degrade(img, CLEAN), img)


def test_fixed_seed_is_bit_identical():
    cfg = RenderConfig(yaw=10.0, seed=42)
    assert np.array_equal(render(HINGE, cfg), render(HINGE, cfg))
    assert not np.array_equal(render(HINGE, cfg), render(HINGE, cfg.with_(seed=43)))


def test_noise_tail():
    flat = np.full((500, 500), 128, np.uint8)
    out = degrade(flat, RenderConfig(blur_sigma=0.0, noise_sigma=2.0, seed=7))
    assert np.mean(np.abs(out.astype(int) - 128) <= 12) >= 0.9999
