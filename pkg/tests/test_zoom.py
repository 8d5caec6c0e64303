import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import noise_image
from scaleaug.annotations import AnnotatedImage, Box, mean_color
from scaleaug.policy import AreaRatios, Policy, ZoomParams, identity_policy, searched_policy
from scaleaug.zoom import (
    ORIGINAL,
    ZOOM_IN,
    ZOOM_OUT,
    ZoomDomainError,
    apply_image_level,
    sample_zoom,
    zoom_in,
    zoom_out,
    zoom_ratio_from_magnitude,
)


def zoom_policy(p_in, m_in, p_out, m_out):
    base = identity_policy()
    return Policy(ZoomParams(p_in, m_in), ZoomParams(p_out, m_out), base.sub_policies, AreaRatios(1, 1, 1))


def test_ratio_mapping():
    assert zoom_ratio_from_magnitude(ZOOM_OUT, 10) == pytest.approx(1.5)
    assert zoom_ratio_from_magnitude(ZOOM_IN, 0) == 1.0
    assert zoom_ratio_from_magnitude(ZOOM_IN, 4) == pytest.approx(0.8)
    assert zoom_ratio_from_magnitude(ZOOM_IN, 10) == pytest.approx(0.5)
    with pytest.raises(ZoomDomainError):
        zoom_ratio_from_magnitude(ZOOM_IN, 11)


def test_identity_ratios(annotated, rng):
    for out in (zoom_in(annotated, 1.0, rng), zoom_out(annotated, 1.0, rng)):
        np.testing.assert_array_equal(out.pixels, annotated.pixels)
        assert out.boxes == annotated.boxes


def test_ratio_domain(annotated, rng):
    with pytest.raises(ZoomDomainError):
        zoom_in(annotated, 0.4, rng)
    with pytest.raises(ZoomDomainError):
        zoom_out(annotated, 1.6, rng)


def test_zoom_in_box_equal_to_window_covers_image(rng):
    img = AnnotatedImage(noise_image(rng, 100, 120), (Box.from_xywh(30, 20, 60, 50),))
    out = zoom_in(img, 0.5, offset=(30, 20))
    (b,) = out.boxes
    assert b.corners() == pytest.approx((0, 0, 120, 100))


def test_zoom_in_drops_invisible_box(rng):
    img = AnnotatedImage(noise_image(rng, 100, 100), (Box(80, 80, 10, 10),))
    assert zoom_in(img, 0.5, offset=(0, 0)).boxes == ()


def test_zoom_in_drops_sliver_keeps_clipped(rng):
    img = AnnotatedImage(noise_image(rng, 100, 100),
                         (Box.from_xywh(45, 10, 10, 10), Box.from_xywh(48, 30, 10, 10)))
    out = zoom_in(img, 0.5, offset=(0, 0))
    # first box keeps 50% of its area, second only 20%
    assert len(out.boxes) == 1
    assert out.boxes[0].corners() == pytest.approx((90, 20, 100, 40))


def test_zoom_out_scales_boxes(annotated, rng):
    out = zoom_out(annotated, 1.5, rng)
    for a, b in zip(annotated.boxes, out.boxes):
        assert b.h == pytest.approx(a.h * 2 / 3, abs=0.5)
        assert b.w == pytest.approx(a.w * 2 / 3, abs=0.5)


def test_zoom_out_canvas_is_mean_color(rng):
    px = noise_image(rng, 90, 120)
    out = zoom_out(AnnotatedImage(px), 1.5, offset=(40, 30))
    assert out.pixels.shape == px.shape
    np.testing.assert_array_equal(out.pixels[0, 0], mean_color(px))
    np.testing.assert_array_equal(out.pixels[-1, 0], mean_color(px))


def paint(H, W, boxes):
    px = np.zeros((H, W, 3), np.uint8)
    for b in boxes:
        x0, y0, x1, y1 = (int(round(v)) for v in b.corners())
        px[y0:y1, x0:x1] = 255
    return px


def detected_extent(px, box, margin=6):
    x0, y0, x1, y1 = box.corners()
    H, W = px.shape[:2]
    sl = (slice(max(0, int(y0) - margin), min(H, int(y1) + margin)),
          slice(max(0, int(x0) - margin), min(W, int(x1) + margin)))
    mask = px[sl][..., 0] >= 128
    ys, xs = np.nonzero(mask)
    return (xs.min() + sl[1].start, ys.min() + sl[0].start, xs.max() + 1 + sl[1].start, ys.max() + 1 + sl[0].start)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), ratio=st.sampled_from([0.5, 0.6, 0.7, 0.8, 0.9]))
def test_box_pixel_consistency_zoom_in(seed, ratio):
    rng = np.random.default_rng(seed)
    box = Box.from_xywh(int(rng.integers(50, 90)), int(rng.integers(40, 70)), 24, 18)
    img = AnnotatedImage(paint(160, 200, [box]), (box,))
    out = zoom_in(img, ratio, offset=(int(rng.integers(0, 200 - round(200 * ratio) + 1)) // 4,
                                      int(rng.integers(0, 160 - round(160 * ratio) + 1)) // 4))
    for b in out.boxes:
        got = detected_extent(out.pixels, b)
        cb = b.corners()
        # interior edges only: clipped edges coincide with the image border
        assert np.allclose(got, cb, atol=2)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), ratio=st.sampled_from([1.1, 1.2, 1.3, 1.4, 1.5]))
def test_box_pixel_consistency_zoom_out(seed, ratio):
    rng = np.random.default_rng(seed)
    box = Box.from_xywh(int(rng.integers(10, 150)), int(rng.integers(10, 110)), 30, 24)
    img = AnnotatedImage(paint(160, 200, [box]), (box,))
    out = zoom_out(img, ratio, rng)
    (b,) = out.boxes
    assert np.allclose(detected_extent(out.pixels, b), b.corners(), atol=2)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_shape_preserved_and_boxes_in_bounds(seed):
    rng = np.random.default_rng(seed)
    px = noise_image(rng, 60, 80)
    boxes = tuple(Box.from_xywh(rng.uniform(0, 70), rng.uniform(0, 50), rng.uniform(2, 30), rng.uniform(2, 30))
                  for _ in range(4))
    img = AnnotatedImage(px, boxes)
    for _ in range(3):
        img = zoom_in(img, rng.uniform(0.5, 1.0), rng) if rng.random() < 0.5 else zoom_out(img, rng.uniform(1, 1.5), rng)
        assert img.pixels.shape == px.shape
        for b in img.boxes:
            x0, y0, x1, y1 = b.corners()
            assert 0 <= x0 < x1 <= 80 and 0 <= y0 < y1 <= 60


def test_identity_policy_always_original(annotated):
    rng = np.random.default_rng(0)
    for _ in range(200):
        assert sample_zoom(identity_policy(), rng).branch == ORIGINAL
    out = apply_image_level(annotated, identity_policy(), rng)
    np.testing.assert_array_equal(out.pixels, annotated.pixels)


def test_no_original_when_probabilities_sum_to_one():
    rng = np.random.default_rng(0)
    pol = zoom_policy(0.5, 2, 0.5, 2)
    assert all(sample_zoom(pol, rng).branch != ORIGINAL for _ in range(10_000))


def test_branch_frequencies_chi_square():
    rng = np.random.default_rng(2024)
    pol = searched_policy()
    n = 100_000
    draws = [sample_zoom(pol, rng).branch for _ in range(n)]
    counts = [draws.count(b) for b in (ZOOM_IN, ZOOM_OUT, ORIGINAL)]
    assert chisquare(counts, [0.2 * n, 0.4 * n, 0.4 * n]).pvalue > 0.01
    assert np.allclose(np.array(counts) / n, [0.2, 0.4, 0.4], atol=0.01)
