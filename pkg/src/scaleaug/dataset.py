"""COCO-style dataset ingestion and the image-level -> box-level augmentation pipeline."""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .annotations import AnnotatedImage, Box
from .box_ops import augment_boxes
from .gaussian import TRANSFORM_AT_CENTER
from .policy import Policy
from .zoom import BRANCHES, ORIGINAL, apply_zoom, sample_zoom

log = logging.getLogger(__name__)

JPEG_QUALITY = 95


class DatasetError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class ImageEntry:
    image_id: Any
    file_name: str
    height: int
    width: int


@dataclass(frozen=True)
class Annotation:
    image_id: Any
    box: Box
    annotation_id: Any = None

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return self.box.to_xywh()


@dataclass
class DatasetIndex:
    images: list[ImageEntry]
    annotations: list[Annotation]
    categories: list[dict] = field(default_factory=list)
    image_root: Path = Path(".")

    def annotations_for(self, image_id) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]

    def load_image(self, entry: ImageEntry) -> AnnotatedImage:
        path = self.image_root / entry.file_name
        with Image.open(path) as im:
            pixels = np.asarray(im.convert("RGB"))
        return AnnotatedImage(pixels, tuple(a.box for a in self.annotations_for(entry.image_id)), entry.image_id)


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DatasetError(path, f"expected a number, got {v!r}")
    return v


def dataset_from_dict(doc: Any, image_root: str | Path = ".") -> DatasetIndex:
    if not isinstance(doc, dict):
        raise DatasetError("", "expected an object")
    for key in ("images", "annotations"):
        if not isinstance(doc.get(key), list):
            raise DatasetError(key, "missing or not a list")
    images = []
    for i, im in enumerate(doc["images"]):
        path = f"images[{i}]"
        if not isinstance(im, dict):
            raise DatasetError(path, "expected an object")
        for k in ("id", "file_name", "height", "width"):
            if k not in im:
                raise DatasetError(f"{path}.{k}", "missing field")
        images.append(ImageEntry(im["id"], str(im["file_name"]),
                                 int(_number(im["height"], f"{path}.height")),
                                 int(_number(im["width"], f"{path}.width"))))
    ids = {e.image_id for e in images}
    if len(ids) != len(images):
        raise DatasetError("images", "duplicate image ids")
    anns, dangling = [], []
    for i, a in enumerate(doc["annotations"]):
        path = f"annotations[{i}]"
        if not isinstance(a, dict):
            raise DatasetError(path, "expected an object")
        for k in ("image_id", "bbox"):
            if k not in a:
                raise DatasetError(f"{path}.{k}", "missing field")
        bbox = a["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise DatasetError(f"{path}.bbox", "expected [x_min, y_min, w, h]")
        x, y, w, h = (_number(v, f"{path}.bbox") for v in bbox)
        if not (w > 0 and h > 0):
            raise DatasetError(f"{path}.bbox", f"non-positive size w={w}, h={h}")
        if a["image_id"] not in ids:
            dangling.append(a["image_id"])
            continue
        anns.append(Annotation(a["image_id"], Box.from_xywh(x, y, w, h, a.get("category_id", 0)), a.get("id")))
    if dangling:
        raise DatasetError("annotations", f"references unknown image ids {sorted(set(map(str, dangling)))}")
    return DatasetIndex(images, anns, list(doc.get("categories", [])), Path(image_root))


def load_dataset(annotation_path: str | Path, image_root: str | Path) -> DatasetIndex:
    try:
        doc = json.loads(Path(annotation_path).read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(str(annotation_path), f"malformed JSON: {e}") from None
    except OSError as e:
        raise DatasetError(str(annotation_path), str(e)) from None
    return dataset_from_dict(doc, image_root)


def derive_seed(base_seed: int, image_id) -> int:
    """Per-image seed, independent of processing order."""
    digest = hashlib.blake2b(f"{base_seed}:{image_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class ImageResult:
    entry: ImageEntry
    boxes: tuple[Box, ...] = ()
    branch: str | None = None
    boxes_in: int = 0
    error: str | None = None


def augment_image(img: AnnotatedImage, policy: Policy, rng: np.random.Generator,
                  direction: str = TRANSFORM_AT_CENTER) -> tuple[AnnotatedImage, str]:
    """Image-level zoom first, then box-level ops on the post-zoom boxes."""
    decision = sample_zoom(policy, rng)
    zoomed = apply_zoom(img, decision, rng)
    return augment_boxes(zoomed, policy, rng, direction), decision.branch


def _save(pixels: np.ndarray, src: Path, dst: Path):
    dst.parent.mkdir(parents=True, exist_ok=True)
    fmt = None
    if src.exists():
        with Image.open(src) as probe:
            fmt = probe.format
    im = Image.fromarray(pixels)
    if fmt == "JPEG":
        im.save(dst, format="JPEG", quality=JPEG_QUALITY)
    else:
        im.save(dst, format=fmt or "PNG")


def _process(index: DatasetIndex, entry: ImageEntry, policy: Policy, seed: int,
             out_dir: Path, direction: str) -> ImageResult:
    n_in = len(index.annotations_for(entry.image_id))
    src = index.image_root / entry.file_name
    try:
        img = index.load_image(entry)
    except (OSError, ValueError) as e:
        log.warning("skipping unreadable image %s: %s", src, e)
        return ImageResult(entry, boxes_in=n_in, error=str(e))
    rng = np.random.default_rng(derive_seed(seed, entry.image_id))
    out, branch = augment_image(img, policy, rng, direction)
    dst = out_dir / "images" / entry.file_name
    if branch == ORIGINAL and np.array_equal(out.pixels, img.pixels):
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src, dst)
    else:
        _save(out.pixels, src, dst)
    return ImageResult(entry, out.boxes, branch, n_in)


def augment_dataset(index: DatasetIndex, policy: Policy, seed: int, out_dir: str | Path,
                    direction: str = TRANSFORM_AT_CENTER, workers: int = 1) -> dict:
    """Augment every image, write images plus ``annotations.json`` and ``report.json``.

    Unchanged images are copied byte-for-byte; others keep their input
    format (JPEG at quality :data:`JPEG_QUALITY`).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def job(entry):
        return _process(index, entry, policy, seed, out_dir, direction)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, index.images))
    else:
        results = [job(e) for e in index.images]

    images_doc, anns_doc = [], []
    branches = Counter()
    skipped = []
    kept = dropped_zoom = dropped_unreadable = 0
    for res in results:
        if res.error is not None:
            skipped.append({"image_id": res.entry.image_id, "file_name": res.entry.file_name, "error": res.error})
            dropped_unreadable += res.boxes_in
            continue
        branches[res.branch] += 1
        e = res.entry
        images_doc.append({"id": e.image_id, "file_name": e.file_name, "height": e.height, "width": e.width})
        for b in res.boxes:
            x, y, w, h = b.to_xywh()
            anns_doc.append({"id": len(anns_doc) + 1, "image_id": e.image_id, "bbox": [x, y, w, h],
                             "area": w * h, "category_id": b.category_id})
        kept += len(res.boxes)
        dropped_zoom += res.boxes_in - len(res.boxes)

    (out_dir / "annotations.json").write_text(
        json.dumps({"images": images_doc, "annotations": anns_doc, "categories": index.categories}, indent=1)
    )
    processed = sum(branches.values())
    report = {
        "images_processed": processed,
        "images_skipped": skipped,
        "boxes_in": len(index.annotations),
        "boxes_kept": kept,
        "boxes_dropped": dropped_zoom + dropped_unreadable,
        "boxes_dropped_by_zoom": dropped_zoom,
        "boxes_dropped_unreadable": dropped_unreadable,
        "branch_counts": {b: branches.get(b, 0) for b in BRANCHES},
        "branch_frequencies": {b: (branches.get(b, 0) / processed if processed else 0.0) for b in BRANCHES},
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    return report
