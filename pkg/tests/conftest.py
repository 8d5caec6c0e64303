import numpy as np
import pytest

from scaleaug.annotations import AnnotatedImage, Box


def gradient_image(H=64, W=80):
    yy, xx = np.mgrid[0:H, 0:W]
    return np.stack([(xx * 3) % 256, (yy * 5) % 256, (xx + yy) % 256], axis=-1).astype(np.uint8)


def noise_image(rng, H=96, W=128):
    return rng.integers(0, 256, size=(H, W, 3), dtype=np.uint8)


def random_boxes(rng, H, W, n):
    boxes = []
    for _ in range(n):
        w = float(rng.uniform(6, W / 2))
        h = float(rng.uniform(6, H / 2))
        x = float(rng.uniform(0, W - w))
        y = float(rng.uniform(0, H - h))
        boxes.append(Box.from_xywh(x, y, w, h, int(rng.integers(1, 4))))
    return tuple(boxes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def annotated(rng):
    px = noise_image(rng)
    return AnnotatedImage(px, random_boxes(rng, px.shape[0], px.shape[1], 3), image_id=7)
