"""Image-level zoom-in / zoom-out with box coordinate updates.

Output rasters always keep the input size: zoom-in crops a window and
resizes it up, zoom-out shrinks the image and pastes it on a mean-color
canvas.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .annotations import AnnotatedImage, Box, clip_box, mean_color
from .policy import Policy

ZOOM_IN = "zoom_in"
ZOOM_OUT = "zoom_out"
ORIGINAL = "original"
BRANCHES = (ZOOM_IN, ZOOM_OUT, ORIGINAL)

# boxes keeping less than this fraction of their area after cropping are dropped
MIN_VISIBLE_FRACTION = 0.25


class ZoomDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ZoomDecision:
    branch: str
    ratio: float


def zoom_ratio_from_magnitude(branch: str, m: int) -> float:
    if not 0 <= m <= 10:
        raise ZoomDomainError(f"magnitude {m!r} outside [0, 10]")
    if branch == ZOOM_IN:
        return 1.0 - 0.05 * m
    if branch == ZOOM_OUT:
        return 1.0 + 0.05 * m
    raise ZoomDomainError(f"no zoom ratio for branch {branch!r}")


def _resize(pixels: np.ndarray, size_hw: tuple[int, int], box=None) -> np.ndarray:
    im = Image.fromarray(pixels)
    out = im.resize((size_hw[1], size_hw[0]), Image.BILINEAR, box=box)
    return np.asarray(out)


def _draw_offset(rng: np.random.Generator, max_y: int, max_x: int) -> tuple[int, int]:
    oy = int(rng.integers(0, max_y + 1))
    ox = int(rng.integers(0, max_x + 1))
    return ox, oy


def zoom_in(img: AnnotatedImage, ratio: float, rng: np.random.Generator | None = None,
            offset: tuple[int, int] | None = None) -> AnnotatedImage:
    """Crop a ``ratio``-sized window and resize it back up.

    The window's top-left ``offset`` = (x, y) is drawn uniformly unless given.
    """
    if not 0.5 - 1e-9 <= ratio <= 1.0 + 1e-9:
        raise ZoomDomainError(f"zoom-in ratio {ratio!r} outside [0.5, 1.0]")
    H, W = img.height, img.width
    ch = min(H, max(1, round(ratio * H)))
    cw = min(W, max(1, round(ratio * W)))
    if ch == H and cw == W:
        return img.with_(pixels=img.pixels.copy())
    ox, oy = offset if offset is not None else _draw_offset(rng, H - ch, W - cw)
    pixels = _resize(img.pixels, (H, W), box=(ox, oy, ox + cw, oy + ch))

    sx, sy = W / cw, H / ch
    boxes = []
    for b in img.boxes:
        if b.area <= 0:
            continue
        x0, y0, x1, y1 = b.corners()
        ix0, iy0 = max(x0, ox), max(y0, oy)
        ix1, iy1 = min(x1, ox + cw), min(y1, oy + ch)
        if ix1 <= ix0 or iy1 <= iy0:
            continue
        if (ix1 - ix0) * (iy1 - iy0) < MIN_VISIBLE_FRACTION * b.area:
            continue
        mapped = Box.from_corners(
            (ix0 - ox) * sx, (iy0 - oy) * sy, (ix1 - ox) * sx, (iy1 - oy) * sy, b.category_id
        )
        clipped = clip_box(mapped, H, W)
        if clipped is not None:
            boxes.append(clipped)
    return img.with_(pixels=pixels, boxes=tuple(boxes))


def zoom_out(img: AnnotatedImage, ratio: float, rng: np.random.Generator | None = None,
             offset: tuple[int, int] | None = None) -> AnnotatedImage:
    """Shrink by ``1 / ratio`` and paste on a mean-color canvas at ``offset`` = (x, y)."""
    if not 1.0 - 1e-9 <= ratio <= 1.5 + 1e-9:
        raise ZoomDomainError(f"zoom-out ratio {ratio!r} outside [1.0, 1.5]")
    H, W = img.height, img.width
    nh = min(H, max(1, round(H / ratio)))
    nw = min(W, max(1, round(W / ratio)))
    if nh == H and nw == W:
        return img.with_(pixels=img.pixels.copy())
    small = _resize(img.pixels, (nh, nw))
    canvas = np.empty_like(img.pixels)
    canvas[...] = mean_color(img.pixels)
    ox, oy = offset if offset is not None else _draw_offset(rng, H - nh, W - nw)
    canvas[oy:oy + nh, ox:ox + nw] = small

    sx, sy = nw / W, nh / H
    boxes = []
    for b in img.boxes:
        x0, y0, x1, y1 = b.corners()
        mapped = Box.from_corners(x0 * sx + ox, y0 * sy + oy, x1 * sx + ox, y1 * sy + oy, b.category_id)
        clipped = clip_box(mapped, H, W)
        if clipped is not None:
            boxes.append(clipped)
    return img.with_(pixels=canvas, boxes=tuple(boxes))


def sample_zoom(policy: Policy, rng: np.random.Generator) -> ZoomDecision:
    """Draw zoom-in / zoom-out / original with probabilities (P_in, P_out, 1 - P_in - P_out)."""
    u = rng.random()
    p_in, p_out = policy.zoom_in.probability, policy.zoom_out.probability
    if u < p_in:
        return ZoomDecision(ZOOM_IN, zoom_ratio_from_magnitude(ZOOM_IN, policy.zoom_in.magnitude))
    if u < p_in + p_out:
        return ZoomDecision(ZOOM_OUT, zoom_ratio_from_magnitude(ZOOM_OUT, policy.zoom_out.magnitude))
    return ZoomDecision(ORIGINAL, 1.0)


def apply_zoom(img: AnnotatedImage, decision: ZoomDecision, rng: np.random.Generator) -> AnnotatedImage:
    if decision.branch == ZOOM_IN:
        return zoom_in(img, decision.ratio, rng)
    if decision.branch == ZOOM_OUT:
        return zoom_out(img, decision.ratio, rng)
    return img


def apply_image_level(img: AnnotatedImage, policy: Policy, rng: np.random.Generator) -> AnnotatedImage:
    return apply_zoom(img, sample_zoom(policy, rng), rng)
