import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from structcode.errors import (
    BadBlockSize,
    BadKernelSize,
    DegenerateContour,
    DegenerateImage,
    DegenerateQuad,
    NonBinaryInput,
    TooFewPoints,
)
from structcode.imgproc import (
    adaptive_gaussian_threshold,
    apply_homography,
    clahe,
    connected_components,
    gaussian_blur,
    gaussian_kernel2d,
    homography,
    kmeans,
    min_area_rect,
    morphology,
    otsu_threshold,
    warp_perspective,
    warp_perspective_4pt,
)


def brute_force_otsu(img):
    """Between-class variance evaluated separately at every threshold."""
    x = img.ravel().astype(np.float64)
    best, best_t = -1.0, None
    for t in range(1, 256):
        hi = x >= t
        n1 = hi.sum()
        n0 = x.size - n1
        if n0 == 0 or n1 == 0:
            continue
        var = n0 * n1 * (x[~hi].mean() - x[hi].mean()) ** 2
        if var > best + 1e-9:
            best, best_t = var, t
    return best_t


# -- blur ---------------------------------------------------------------------

def test_blur_constant():
    img = np.full((20, 30), 117, np.uint8)
    assert np.array_equal(gaussian_blur(img, 2.0), img)


def test_blur_impulse_matches_kernel():
    img = np.zeros((41, 41), np.uint8)
    img[20, 20] = 255
    out = gaussian_blur(img, 1.5, 9).astype(float)
    k = gaussian_kernel2d(1.5, 9) * 255
    assert np.abs(out[16:25, 16:25] - k).max() <= 1
    assert out[:16].max() == 0


def test_blur_semigroup():
    rng = np.random.default_rng(0)
    img = (rng.random((64, 64)) * 255).astype(np.uint8)
    img = gaussian_blur(img, 2.0)
    twice = gaussian_blur(gaussian_blur(img, 1.5, 13), 1.5, 13).astype(int)
    once = gaussian_blur(img, 1.5 * np.sqrt(2), 17).astype(int)
    assert np.abs(twice - once)[8:-8, 8:-8].max() <= 2


def test_blur_bad_kernel():
    with pytest.raises(BadKernelSize):
        gaussian_blur(np.zeros((5, 5), np.uint8), 1.0, 4)


def test_blur_preserves_mean():
    rng = np.random.default_rng(3)
    img = (rng.random((100, 100)) * 255).astype(np.uint8)
    assert abs(gaussian_blur(img, 2.0).mean() - img.mean()) <= 0.5


# -- Otsu ---------------------------------------------------------------------

def test_otsu_halves():
    img = np.full((10, 20), 10, np.uint8)
    img[:, 10:] = 240
    t, binary = otsu_threshold(img)
    assert 10 < t <= 240
    assert (binary[:, 10:] == 255).all() and (binary[:, :10] == 0).all()


def test_otsu_degenerate():
    with pytest.raises(DegenerateImage):
        otsu_threshold(np.full((4, 4), 7, np.uint8))


def test_otsu_gaussian_mixture():
    rng = np.random.default_rng(1)
    truth = rng.random((200, 200)) < 0.4
    img = np.where(truth, rng.normal(200, 5, truth.shape), rng.normal(60, 5, truth.shape))
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    t, binary = otsu_threshold(img)
    assert np.mean((binary == 255) != truth) < 1e-3
    assert t == brute_force_otsu(img)


@settings(max_examples=25, deadline=None)
@given(arrays(np.uint8, (12, 12)))
def test_otsu_matches_brute_force(img):
    if len(np.unique(img)) < 2:
        return
    assert otsu_threshold(img)[0] == brute_force_otsu(img)


# -- adaptive threshold -------------------------------------------------------

def ramp_stripes(h=120, w=240, period=12):
    x = np.arange(w)
    truth = np.tile((x // (period // 2)) % 2 == 1, (h, 1))
    light = np.linspace(20, 200, w)[None, :].repeat(h, 0)
    img = light + np.where(truth, 40.0, 0.0)
    return np.clip(img, 0, 255).astype(np.uint8), truth


def test_adaptive_beats_global_on_ramp():
    img, truth = ramp_stripes()
    _, glob = otsu_threshold(img)
    assert np.mean((glob == 255) != truth) > 0.1
    out = adaptive_gaussian_threshold(img, 25, 0)
    assert np.mean((out == 255) != truth) < 0.01


def test_adaptive_constant_is_white():
    img = np.full((20, 20), 80, np.uint8)
    assert (adaptive_gaussian_threshold(img, 5, 4) == 255).all()


def test_adaptive_checkerboard():
    yy, xx = np.mgrid[:40, :40]
    board = (((yy // 4) + (xx // 4)) % 2 * 255).astype(np.uint8)
    out = adaptive_gaussian_threshold(board, 7, 0)
    assert np.array_equal(out[4:-4, 4:-4], board[4:-4, 4:-4])


def test_adaptive_large_block_is_global_mean():
    rng = np.random.default_rng(2)
    for _ in range(3):
        img = (rng.random((31, 31)) * 255).astype(np.uint8)
        # a flat kernel spanning the whole image: the centre sees the exact mean
        out = adaptive_gaussian_threshold(img, 31, 0, sigma=1e6)
        assert out[15, 15] == (255 if img[15, 15] >= img.mean() - 1e-6 else 0)
        two = np.where(rng.random((31, 31)) < 0.5, 40, 200).astype(np.uint8)
        ref = np.where(two >= two.mean(), 255, 0)
        out = adaptive_gaussian_threshold(two, 10001, 0, sigma=1e6)
        assert np.array_equal(out, ref)


def test_adaptive_bad_block():
    with pytest.raises(BadBlockSize):
        adaptive_gaussian_threshold(np.zeros((5, 5), np.uint8), 4, 0)


# -- CLAHE --------------------------------------------------------------------

def test_clahe_uniform_tiles_identity():
    tile = np.arange(256, dtype=np.uint8).reshape(16, 16)
    img = np.tile(tile, (4, 4))
    out = clahe(img, clip_limit=2.0, tile_grid=(4, 4)).astype(int)
    assert np.abs(out - img).max() <= 1


def test_clahe_stretches_ramp():
    img = np.tile(np.linspace(100, 130, 128), (64, 1)).astype(np.uint8)
    out = clahe(img, clip_limit=1000.0, tile_grid=(1, 1))
    assert out.min() <= 10 and out.max() >= 245


@settings(max_examples=20, deadline=None)
@given(arrays(np.uint8, (32, 48)))
def test_clahe_full_clip_is_identity(img):
    out = clahe(img, clip_limit=1.0, tile_grid=(2, 3)).astype(int)
    assert np.abs(out - img.astype(int)).max() <= 1


# -- morphology ---------------------------------------------------------------

def test_open_removes_speck():
    img = np.zeros((9, 9), np.uint8)
    img[4, 4] = 255
    assert morphology(img, "open", 1).max() == 0


def test_close_fills_hole():
    img = np.full((9, 9), 255, np.uint8)
    img[4, 4] = 0
    assert morphology(img, "close", 1).min() == 255


@settings(max_examples=25, deadline=None)
@given(arrays(np.bool_, (16, 16)))
def test_open_idempotent(mask):
    img = mask.astype(np.uint8) * 255
    once = morphology(img, "open", 1)
    assert np.array_equal(morphology(once, "open", 1), once)


def test_non_binary_rejected():
    with pytest.raises(NonBinaryInput):
        morphology(np.full((4, 4), 7, np.uint8), "open", 1)


# -- components ---------------------------------------------------------------

def test_two_squares():
    img = np.zeros((30, 30), np.uint8)
    img[2:7, 2:7] = 255
    img[10:20, 15:25] = 255
    comps = sorted(connected_components(img), key=lambda c: c.area)
    assert [c.area for c in comps] == [25, 100]
    assert comps[1].bbox == (15, 10, 24, 19)


def test_empty_components():
    assert connected_components(np.zeros((8, 8), np.uint8)) == []


def test_ring_has_hole_and_outer_contour():
    img = np.zeros((20, 20), np.uint8)
    img[3:17, 3:17] = 255
    img[7:13, 7:13] = 0
    (c,) = connected_components(img)
    assert c.holes == 1
    xs, ys = c.contour[:, 0], c.contour[:, 1]
    assert xs.min() == 3 and xs.max() == 16 and ys.min() == 3 and ys.max() == 16
    # every contour pixel is on the outer boundary
    assert np.all((xs == 3) | (xs == 16) | (ys == 3) | (ys == 16))


def test_diagonal_pixels_are_one_component():
    img = np.zeros((5, 5), np.uint8)
    img[1, 1] = img[2, 2] = img[3, 3] = 255
    assert len(connected_components(img)) == 1


# -- rotated rectangles -------------------------------------------------------

def test_min_area_rect_axis_aligned():
    pts = [(0, 0), (10, 0), (10, 4), (0, 4), (5, 2)]
    r = min_area_rect(pts)
    assert r.width == pytest.approx(10) and r.height == pytest.approx(4)
    assert r.angle == pytest.approx(0.0)


def test_min_area_rect_rotated():
    a = np.radians(30)
    R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    pts = np.array([(0, 0), (10, 0), (10, 4), (0, 4)]) @ R.T
    r = min_area_rect(pts)
    assert r.area == pytest.approx(40, rel=0.02)
    assert r.angle == pytest.approx(30, abs=1)


def test_min_area_rect_collinear():
    with pytest.raises(DegenerateContour):
        min_area_rect([(0, 0), (1, 1), (2, 2), (3, 3)])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=3, max_size=30))
def test_min_area_rect_encloses(points):
    pts = np.array(points)
    try:
        r = min_area_rect(pts)
    except DegenerateContour:
        return
    c = r.corners
    for i in range(4):
        a, b = c[i], c[(i + 1) % 4]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        assert np.all(cross >= -1e-6 * max(1.0, r.area))


# -- warps --------------------------------------------------------------------

def test_warp_identity():
    rng = np.random.default_rng(4)
    img = (rng.random((30, 40)) * 255).astype(np.uint8)
    quad = [(0, 0), (39, 0), (39, 29), (0, 29)]
    out = warp_perspective_4pt(img, quad, size=(40, 30))
    assert np.abs(out.astype(int) - img).max() <= 1


def test_warp_checkerboard():
    sq = 20
    yy, xx = np.mgrid[:8 * sq, :8 * sq]
    board = (((yy // sq) + (xx // sq)) % 2 * 200 + 30).astype(np.uint8)
    src = np.array([(0, 0), (159, 0), (159, 159), (0, 159)], float)
    dst = np.array([(40, 30), (230, 50), (210, 220), (30, 190)], float)
    H = homography(src, dst)
    photo = warp_perspective(board, H, (260, 250), fill=0)
    rect = warp_perspective_4pt(photo, apply_homography(H, src), size=(160, 160))
    for line in (rect[sq * 3 + sq // 2], rect[:, sq * 5 + sq // 2]):
        edges = np.flatnonzero(np.diff((line > 130).astype(int)) != 0)
        assert np.abs(np.diff(edges) - sq).max() <= 1


def test_warp_roundtrip_interior():
    rng = np.random.default_rng(5)
    img = gaussian_blur((rng.random((80, 80)) * 255).astype(np.uint8), 2.0)
    H = homography([(0, 0), (79, 0), (79, 79), (0, 79)], [(5, 3), (75, 8), (70, 76), (2, 70)])
    there = warp_perspective(img, H, (80, 80), as_float=True)
    back = warp_perspective(there, np.linalg.inv(H), (80, 80))
    assert np.abs(back.astype(int) - img)[15:-15, 15:-15].max() <= 3


def test_bowtie_quad_rejected():
    with pytest.raises(DegenerateQuad):
        warp_perspective_4pt(np.zeros((10, 10), np.uint8), [(0, 0), (9, 9), (9, 0), (0, 9)])


# -- k-means ------------------------------------------------------------------

def test_kmeans_small_1d():
    x = np.array([2.0, 2.0, 3.0, 3.1, 4.0, 4.05])[:, None]
    res = kmeans(x, 3, seed=0, n_init=3)
    labels = res.labels
    assert labels[0] == labels[1] and labels[2] == labels[3] and labels[4] == labels[5]
    assert len(set(labels)) == 3


def test_kmeans_k_equals_n():
    x = np.array([[0.0, 0], [1, 5], [7, 2], [3, 3]])
    res = kmeans(x, 4)
    assert res.inertia == pytest.approx(0.0)
    assert len(set(res.labels)) == 4


def test_kmeans_too_few():
    with pytest.raises(TooFewPoints):
        kmeans(np.zeros((2, 1)), 3)


def test_kmeans_deterministic():
    x = np.random.default_rng(0).random((200, 3))
    a, b = kmeans(x, 4, seed=7), kmeans(x, 4, seed=7)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.centers, b.centers)


def test_kmeans_two_blobs_over_many_seeds():
    rng = np.random.default_rng(11)
    accs = []
    for seed in range(1000):
        a = rng.normal((0, 0), 1.0, (50, 2))
        b = rng.normal((8, 3), 1.0, (50, 2))
        x = np.vstack([a, b])
        truth = np.r_[np.zeros(50), np.ones(50)]
        lab = kmeans(x, 2, seed=seed).labels
        acc = max(np.mean(lab == truth), np.mean(lab != truth))
        accs.append(acc)
    assert np.mean(accs) >= 0.99
