"""Annotated images and box geometry shared by the augmentation stages."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

SMALL_MAX_AREA = 32**2
MIDDLE_MAX_AREA = 96**2


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in center form; ``x_c`` is horizontal, ``h`` is the height."""

    x_c: float
    y_c: float
    h: float
    w: float
    category_id: int = 0

    @classmethod
    def from_xywh(cls, x_min: float, y_min: float, w: float, h: float, category_id: int = 0) -> "Box":
        return cls(x_min + w / 2, y_min + h / 2, h, w, category_id)

    @classmethod
    def from_corners(cls, x0: float, y0: float, x1: float, y1: float, category_id: int = 0) -> "Box":
        return cls((x0 + x1) / 2, (y0 + y1) / 2, y1 - y0, x1 - x0, category_id)

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.x_c - self.w / 2, self.y_c - self.h / 2, self.w, self.h)

    def corners(self) -> tuple[float, float, float, float]:
        return (self.x_c - self.w / 2, self.y_c - self.h / 2, self.x_c + self.w / 2, self.y_c + self.h / 2)

    @property
    def area(self) -> float:
        return self.h * self.w


def scale_category(box: Box) -> str:
    a = box.area
    if a < SMALL_MAX_AREA:
        return "small"
    if a < MIDDLE_MAX_AREA:
        return "middle"
    return "large"


@dataclass(frozen=True, eq=False)
class AnnotatedImage:
    pixels: np.ndarray  # H x W x 3, uint8
    boxes: tuple[Box, ...] = ()
    image_id: Any = None

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def with_(self, **changes) -> "AnnotatedImage":
        return replace(self, **changes)


def clip_box(box: Box, H: int, W: int) -> Box | None:
    """Clip to the image; ``None`` when nothing is left."""
    x0, y0, x1, y1 = box.corners()
    x0, x1 = max(0.0, x0), min(float(W), x1)
    y0, y1 = max(0.0, y0), min(float(H), y1)
    if x1 <= x0 or y1 <= y0:
        return None
    return Box.from_corners(x0, y0, x1, y1, box.category_id)


def mean_color(pixels: np.ndarray) -> np.ndarray:
    """Per-channel mean, rounded to the raster dtype."""
    m = pixels.reshape(-1, pixels.shape[-1]).mean(axis=0)
    if np.issubdtype(pixels.dtype, np.integer):
        return np.rint(m).astype(pixels.dtype)
    return m.astype(pixels.dtype)
