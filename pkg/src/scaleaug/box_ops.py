"""Box-level color and geometric operations, blended in with a Gaussian map.

Every op produces a full-size candidate raster; only the Gaussian-weighted
neighborhood of the box survives the blend.  Annotations are never moved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageEnhance, ImageOps
from scipy import ndimage

from .annotations import AnnotatedImage, Box, mean_color, scale_category
from .gaussian import TRANSFORM_AT_CENTER, BoxGeometry, GaussianMapParams, blend, gaussian_map
from .policy import COLOR_OPS, GEOMETRIC_OPS, BoxOpSpec, Policy


class MagnitudeDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MagnitudeMapping:
    op_kind: str
    low: float | None
    high: float | None
    signed: bool = False


_MAPPINGS = {
    "Brightness": MagnitudeMapping("Brightness", 0.1, 1.9),
    "Color": MagnitudeMapping("Color", 0.1, 1.9),
    "Contrast": MagnitudeMapping("Contrast", 0.1, 1.9),
    "Sharpness": MagnitudeMapping("Sharpness", 0.1, 1.9),
    "Cutout": MagnitudeMapping("Cutout", 0.0, 60.0),
    "Solarize": MagnitudeMapping("Solarize", 0.0, 256.0),
    "SolarizeAdd": MagnitudeMapping("SolarizeAdd", 0.0, 110.0),
    "Equalize": MagnitudeMapping("Equalize", None, None),
    "Hflip": MagnitudeMapping("Hflip", None, None),
    "Rotate": MagnitudeMapping("Rotate", -30.0, 30.0, signed=True),
    "ShearX": MagnitudeMapping("ShearX", -0.3, 0.3, signed=True),
    "ShearY": MagnitudeMapping("ShearY", -0.3, 0.3, signed=True),
    "TranslateX": MagnitudeMapping("TranslateX", -150.0, 150.0, signed=True),
    "TranslateY": MagnitudeMapping("TranslateY", -150.0, 150.0, signed=True),
}
assert set(_MAPPINGS) == set(COLOR_OPS) | set(GEOMETRIC_OPS)

CUTOUT_GRAY = 128
SOLARIZE_ADD_THRESHOLD = 128


def magnitude_mapping(op_kind: str) -> MagnitudeMapping:
    return _MAPPINGS[op_kind]


def map_magnitude(op_kind: str, m: int, rng: np.random.Generator | None = None) -> float | None:
    """Physical value for discrete magnitude ``m`` in 0..10.

    Signed ops get a uniformly drawn sign when ``rng`` is given, otherwise
    the positive value.  Magnitude-free ops return ``None``.
    """
    if not 0 <= m <= 10:
        raise MagnitudeDomainError(f"magnitude {m!r} outside [0, 10]")
    mp = _MAPPINGS[op_kind]
    if mp.low is None:
        return None
    if mp.signed:
        value = m / 10 * mp.high
        if rng is not None and rng.random() < 0.5:
            value = -value
        return value
    return mp.low + m / 10 * (mp.high - mp.low)


# ------------------------------------------------------------------ color ---

_ENHANCERS = {
    "Brightness": ImageEnhance.Brightness,
    "Color": ImageEnhance.Color,
    "Contrast": ImageEnhance.Contrast,
    "Sharpness": ImageEnhance.Sharpness,
}


def solarize(pixels: np.ndarray, threshold: float) -> np.ndarray:
    return np.where(pixels >= threshold, 255 - pixels, pixels).astype(pixels.dtype)


def solarize_add(pixels: np.ndarray, amount: float) -> np.ndarray:
    added = np.clip(np.rint(pixels.astype(np.float64) + amount), 0, 255).astype(pixels.dtype)
    return np.where(pixels < SOLARIZE_ADD_THRESHOLD, added, pixels)


def cutout(pixels: np.ndarray, side: float, center: tuple[float, float]) -> np.ndarray:
    """Gray square of ``side`` pixels centered at ``center`` = (x, y)."""
    out = pixels.copy()
    half = side / 2
    x0 = max(0, int(round(center[0] - half)))
    x1 = min(pixels.shape[1], int(round(center[0] + half)))
    y0 = max(0, int(round(center[1] - half)))
    y1 = min(pixels.shape[0], int(round(center[1] + half)))
    if x1 > x0 and y1 > y0:
        out[y0:y1, x0:x1] = CUTOUT_GRAY
    return out


def apply_color_op_value(pixels: np.ndarray, op_kind: str, value: float | None,
                         rng: np.random.Generator | None = None, box: Box | None = None) -> np.ndarray:
    """Color op at an explicit physical value."""
    if op_kind in _ENHANCERS:
        if value == 1.0:
            return pixels.copy()
        return np.asarray(_ENHANCERS[op_kind](Image.fromarray(pixels)).enhance(value))
    if op_kind == "Equalize":
        return np.asarray(ImageOps.equalize(Image.fromarray(pixels)))
    if op_kind == "Solarize":
        return solarize(pixels, value)
    if op_kind == "SolarizeAdd":
        return solarize_add(pixels, value)
    if op_kind == "Cutout":
        rng = rng if rng is not None else np.random.default_rng(0)
        if box is not None:
            cx = box.x_c + (rng.random() - 0.5) * box.w
            cy = box.y_c + (rng.random() - 0.5) * box.h
        else:
            cx, cy = rng.random() * pixels.shape[1], rng.random() * pixels.shape[0]
        return cutout(pixels, value, (cx, cy))
    raise ValueError(f"{op_kind!r} is not a color op")


def apply_color_op(pixels: np.ndarray, spec: BoxOpSpec, rng: np.random.Generator | None = None,
                   box: Box | None = None) -> np.ndarray:
    """Pixel-value transform of the whole raster; blending is the caller's job.

    Cutout places its square at a random point inside ``box`` (or the image).
    """
    if not spec.is_color:
        raise ValueError(f"{spec.op_kind} is not a color op")
    return apply_color_op_value(pixels, spec.op_kind, map_magnitude(spec.op_kind, spec.magnitude), rng, box)


# -------------------------------------------------------------- geometric ---


def _forward_matrix(op_kind: str, value: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Forward map in (x, y) as linear part and translation, about the origin."""
    if op_kind == "Rotate":
        t = math.radians(value)
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, s], [-s, c]]), np.zeros(2)
    if op_kind == "ShearX":
        return np.array([[1.0, value], [0.0, 1.0]]), np.zeros(2)
    if op_kind == "ShearY":
        return np.array([[1.0, 0.0], [value, 1.0]]), np.zeros(2)
    if op_kind == "TranslateX":
        return np.eye(2), np.array([value, 0.0])
    if op_kind == "TranslateY":
        return np.eye(2), np.array([0.0, value])
    if op_kind == "Hflip":
        return np.array([[-1.0, 0.0], [0.0, 1.0]]), np.zeros(2)
    raise ValueError(f"{op_kind!r} is not a geometric op")


def warp_about(pixels: np.ndarray, center_xy: tuple[float, float], linear: np.ndarray,
               shift: np.ndarray, fill: np.ndarray | None = None) -> np.ndarray:
    """Apply ``p' = linear (p - c) + c + shift`` with bilinear resampling.

    Points are continuous (x, y); out-of-frame samples take ``fill``
    (defaults to the per-image mean color).
    """
    if fill is None:
        fill = mean_color(pixels)
    # index space: (row, col) = (y - 0.5, x - 0.5)
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    lin_rc = swap @ linear @ swap
    c_rc = np.array([center_xy[1] - 0.5, center_xy[0] - 0.5])
    t_rc = shift[::-1]
    inv = np.linalg.inv(lin_rc)
    offset = c_rc - inv @ (c_rc + t_rc)
    out = np.empty(pixels.shape, dtype=np.float64)
    for ch in range(pixels.shape[2]):
        out[..., ch] = ndimage.affine_transform(
            pixels[..., ch].astype(np.float64), inv, offset=offset, order=1,
            mode="constant", cval=float(fill[ch]), prefilter=False,
        )
    return np.clip(np.rint(out), 0, 255).astype(pixels.dtype)


def apply_geometric_op_value(pixels: np.ndarray, box: BoxGeometry | Box, op_kind: str,
                             value: float | None) -> np.ndarray:
    linear, shift = _forward_matrix(op_kind, value)
    cx, cy = box.x_c, box.y_c
    if op_kind == "Hflip":
        # snap the mirror axis to the half-pixel grid so the flip is a pure permutation
        cx = round(2 * cx) / 2
    return warp_about(pixels, (cx, cy), linear, shift)


def apply_geometric_op(pixels: np.ndarray, box: BoxGeometry | Box, spec: BoxOpSpec,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Affine transform of the image content about the box center."""
    if spec.is_color:
        raise ValueError(f"{spec.op_kind} is not a geometric op")
    return apply_geometric_op_value(pixels, box, spec.op_kind, map_magnitude(spec.op_kind, spec.magnitude, rng))


# --------------------------------------------------------------- pipeline ---


def augment_boxes(img: AnnotatedImage, policy: Policy, rng: np.random.Generator,
                  direction: str = TRANSFORM_AT_CENTER, audit: list | None = None) -> AnnotatedImage:
    """Apply one uniformly chosen sub-policy per box, Gaussian-blended at the box.

    The area ratio comes from the box's current scale category.  When
    ``audit`` is a list, one dict per processed box is appended to it.
    """
    current = img.pixels
    H, W = img.height, img.width
    for idx, box in enumerate(img.boxes):
        if box.area <= 0:
            continue
        k = int(rng.integers(len(policy.sub_policies)))
        sub = policy.sub_policies[k]
        do_color = rng.random() < sub.color.probability
        do_geo = rng.random() < sub.geometric.probability
        scale = scale_category(box)
        ratio = policy.area_ratios.for_scale(scale)
        record = {"box": idx, "sub_policy": k, "scale": scale, "area_ratio": ratio,
                  "color": sub.color.op_kind if do_color else None,
                  "geometric": sub.geometric.op_kind if do_geo else None}
        if audit is not None:
            audit.append(record)
        if not (do_color or do_geo):
            continue
        transformed = current
        if do_color:
            transformed = apply_color_op(transformed, sub.color, rng, box)
        if do_geo:
            transformed = apply_geometric_op(transformed, box, sub.geometric, rng)
        params = GaussianMapParams(BoxGeometry(box.x_c, box.y_c, box.h, box.w, H, W), ratio)
        record["sigma_x"], record["sigma_y"] = params.sigma_x, params.sigma_y
        current = blend(current, transformed, gaussian_map(params), direction)
    return img.with_(pixels=current)
