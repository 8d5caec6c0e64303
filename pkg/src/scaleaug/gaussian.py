"""Gaussian blend maps for box-level augmentation.

Coordinates are continuous pixel coordinates: pixel (row i, col j) covers
[j, j+1] x [i, i+1] and is sampled at its center (j + 0.5, i + 0.5).

Axis convention: the deviation derived from the box height, ``sigma_x``,
spreads along the image height (rows) and ``sigma_y`` along the width
(columns), so the map always follows the box's aspect ratio.  Integrating
over ``[0, H] x [0, W]`` with ``x`` running along the height is what makes
``sigma_x / sigma_y = (h / H) / (w / W)`` an aspect-matching relation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORIGINAL_AT_CENTER = "original_at_center"
TRANSFORM_AT_CENTER = "transform_at_center"
BLEND_DIRECTIONS = (ORIGINAL_AT_CENTER, TRANSFORM_AT_CENTER)


class GaussianDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoxGeometry:
    """Box center (``x_c`` horizontal, ``y_c`` vertical), box size and image size."""

    x_c: float
    y_c: float
    h: float
    w: float
    H: int
    W: int

    def __post_init__(self):
        for name in ("h", "w", "H", "W"):
            v = getattr(self, name)
            if not v > 0 or not math.isfinite(v):
                raise GaussianDomainError(f"{name} must be positive, got {v!r}")


def derive_sigmas(geometry: BoxGeometry, r: float) -> tuple[float, float]:
    """Deviations whose Gaussian integrates to ``r * h * w`` over the plane.

    Returns ``(sigma_x, sigma_y)`` with ``sigma_x = h sqrt((W/H) r / 2pi)`` and
    ``sigma_y = w sqrt((H/W) r / 2pi)``.
    """
    if not r > 0 or not math.isfinite(r):
        raise GaussianDomainError(f"area ratio must be positive, got {r!r}")
    g = geometry
    sigma_x = g.h * math.sqrt((g.W / g.H) / (2 * math.pi) * r)
    sigma_y = g.w * math.sqrt((g.H / g.W) / (2 * math.pi) * r)
    return sigma_x, sigma_y


@dataclass(frozen=True)
class GaussianMapParams:
    geometry: BoxGeometry
    area_ratio: float
    sigma_x: float = field(init=False)
    sigma_y: float = field(init=False)

    def __post_init__(self):
        sx, sy = derive_sigmas(self.geometry, self.area_ratio)
        object.__setattr__(self, "sigma_x", sx)
        object.__setattr__(self, "sigma_y", sy)

    @property
    def sigma_rows(self) -> float:
        return self.sigma_x

    @property
    def sigma_cols(self) -> float:
        return self.sigma_y

    def normalized_distance(self, col: np.ndarray, row: np.ndarray) -> np.ndarray:
        """Mahalanobis distance of continuous points from the box center."""
        g = self.geometry
        return np.sqrt(((row - g.y_c) / self.sigma_rows) ** 2 + ((col - g.x_c) / self.sigma_cols) ** 2)


def gaussian_factors(params: GaussianMapParams) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors; the map is their outer product."""
    g = params.geometry
    rows = np.arange(g.H) + 0.5
    cols = np.arange(g.W) + 0.5
    f_rows = np.exp(-((rows - g.y_c) ** 2) / (2 * params.sigma_rows**2))
    f_cols = np.exp(-((cols - g.x_c) ** 2) / (2 * params.sigma_cols**2))
    return f_rows, f_cols


def gaussian_map(params: GaussianMapParams) -> np.ndarray:
    """H x W alpha map, 1.0 at the box center and decaying over the whole image."""
    f_rows, f_cols = gaussian_factors(params)
    return np.outer(f_rows, f_cols)


def numeric_area(alpha: np.ndarray) -> float:
    """Midpoint-rule integral of an alpha map (unit pixel area)."""
    return float(np.sum(alpha, dtype=np.float64))


def blend(
    original: np.ndarray,
    transformed: np.ndarray,
    alpha: np.ndarray,
    direction: str = TRANSFORM_AT_CENTER,
    quantize: bool = True,
) -> np.ndarray:
    """Per-pixel convex blend of two rasters under ``alpha``.

    ``original_at_center`` weights the original by alpha (``a I + (1 - a) T``);
    ``transform_at_center`` weights the transformed raster by alpha, so the
    augmentation is strongest at the box center.  With ``quantize`` the
    result is rounded and clipped back to ``original``'s integer dtype.
    """
    if original.shape != transformed.shape:
        raise GaussianDomainError(f"raster shapes differ: {original.shape} vs {transformed.shape}")
    if alpha.shape != original.shape[:2]:
        raise GaussianDomainError(f"alpha shape {alpha.shape} does not match raster {original.shape[:2]}")
    if direction not in BLEND_DIRECTIONS:
        raise GaussianDomainError(f"unknown blend direction {direction!r}")

    a = alpha.astype(np.float64)
    if original.ndim == 3:
        a = a[..., None]
    i = original.astype(np.float64)
    t = transformed.astype(np.float64)
    if direction == ORIGINAL_AT_CENTER:
        out = a * i + (1.0 - a) * t
    else:
        out = a * t + (1.0 - a) * i
    if not quantize:
        return out
    if np.issubdtype(original.dtype, np.integer):
        info = np.iinfo(original.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(original.dtype)
    return out.astype(original.dtype)


def alpha_to_image(alpha: np.ndarray) -> np.ndarray:
    """Grayscale uint8 rendering (values x 255, rounded)."""
    return np.clip(np.rint(alpha * 255.0), 0, 255).astype(np.uint8)
