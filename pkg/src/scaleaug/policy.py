"""Policy types, the discrete search space, genome encoding and the policy document format.

A policy holds image-level zoom parameters, five box-level sub-policies
(one color and one geometric op each) and one area ratio per object scale.
Genomes are flat tuples of integer gene values used by the evolutionary
search; the document format is JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

COLOR_OPS = (
    "Brightness",
    "Color",
    "Contrast",
    "Cutout",
    "Equalize",
    "Sharpness",
    "Solarize",
    "SolarizeAdd",
)
GEOMETRIC_OPS = ("Hflip", "Rotate", "ShearX", "ShearY", "TranslateX", "TranslateY")

ZOOM_PROBABILITIES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
OP_PROBABILITIES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
MAGNITUDES = (0, 2, 4, 6, 8, 10)
AREA_RATIOS = (0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0)

# Box-op probability genes hold tenths (0..10) so externally loaded policies
# such as (Hflip, 0.3) stay encodable; the search only draws even values.
OP_PROBABILITY_DECILES = tuple(range(11))
OP_PROBABILITY_SEARCH_GENES = (0, 2, 4, 6, 8, 10)

NUM_SUB_POLICIES = 5
GENES_PER_SUB_POLICY = 6
GENOME_LENGTH = 4 + NUM_SUB_POLICIES * GENES_PER_SUB_POLICY + 3

SCALES = ("small", "middle", "large")


class InvalidPolicyError(ValueError):
    """A policy value lies off its grid or the policy shape is wrong."""


class InvalidGenomeError(ValueError):
    pass


class PolicyParseError(ValueError):
    """Malformed policy document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _grid_index(value: float, grid: Sequence[float], what: str) -> int:
    for i, g in enumerate(grid):
        if math.isclose(value, g, rel_tol=0.0, abs_tol=1e-9):
            return i
    raise InvalidPolicyError(f"{what}={value!r} is not on grid {tuple(grid)}")


def _decile(p: float) -> int | None:
    """Return round(10 p) when ``p`` is a multiple of 0.1 in [0, 1]."""
    d = round(p * 10)
    if 0 <= d <= 10 and math.isclose(p, d / 10, rel_tol=0.0, abs_tol=1e-9):
        return d
    return None


@dataclass(frozen=True)
class ZoomParams:
    probability: float
    magnitude: int

    def __post_init__(self):
        _grid_index(self.probability, ZOOM_PROBABILITIES, "zoom probability")
        _grid_index(self.magnitude, MAGNITUDES, "zoom magnitude")
        object.__setattr__(self, "probability", float(self.probability))
        object.__setattr__(self, "magnitude", int(self.magnitude))


@dataclass(frozen=True)
class BoxOpSpec:
    """One box-level op. ``probability`` may be any tenth in [0, 1]; searched
    values come from :data:`OP_PROBABILITIES`. ``magnitude`` is on the 0..10
    grid and is ignored by Equalize and Hflip."""

    op_kind: str
    probability: float
    magnitude: int

    def __post_init__(self):
        if self.op_kind not in COLOR_OPS and self.op_kind not in GEOMETRIC_OPS:
            raise InvalidPolicyError(f"unknown op {self.op_kind!r}")
        d = _decile(self.probability)
        if d is None:
            raise InvalidPolicyError(
                f"op probability {self.probability!r} is not a multiple of 0.1 in [0, 1]"
            )
        _grid_index(self.magnitude, MAGNITUDES, "op magnitude")
        object.__setattr__(self, "probability", d / 10)
        object.__setattr__(self, "magnitude", int(self.magnitude))

    @property
    def is_color(self) -> bool:
        return self.op_kind in COLOR_OPS

    @property
    def on_search_grid(self) -> bool:
        return round(self.probability * 10) in OP_PROBABILITY_SEARCH_GENES


@dataclass(frozen=True)
class SubPolicy:
    color: BoxOpSpec
    geometric: BoxOpSpec

    def __post_init__(self):
        if not self.color.is_color:
            raise InvalidPolicyError(f"{self.color.op_kind} is not a color op")
        if self.geometric.is_color:
            raise InvalidPolicyError(f"{self.geometric.op_kind} is not a geometric op")


@dataclass(frozen=True)
class AreaRatios:
    small: float
    middle: float
    large: float

    def __post_init__(self):
        for name in SCALES:
            v = getattr(self, name)
            _grid_index(v, AREA_RATIOS, f"area ratio {name}")
            object.__setattr__(self, name, float(v))

    def for_scale(self, scale: str) -> float:
        return getattr(self, scale)


@dataclass(frozen=True)
class Policy:
    zoom_in: ZoomParams
    zoom_out: ZoomParams
    sub_policies: tuple[SubPolicy, ...]
    area_ratios: AreaRatios

    def __post_init__(self):
        object.__setattr__(self, "sub_policies", tuple(self.sub_policies))
        if len(self.sub_policies) != NUM_SUB_POLICIES:
            raise InvalidPolicyError(
                f"expected {NUM_SUB_POLICIES} sub-policies, got {len(self.sub_policies)}"
            )
        if self.zoom_in.probability + self.zoom_out.probability > 1.0 + 1e-12:
            raise InvalidPolicyError("zoom probabilities sum above 1")

    @property
    def p_original(self) -> float:
        return 1.0 - self.zoom_in.probability - self.zoom_out.probability


def searched_policy() -> Policy:
    """The published searched policy. "Original" is probability-0 Brightness."""
    op = BoxOpSpec
    return Policy(
        zoom_in=ZoomParams(0.2, 4),
        zoom_out=ZoomParams(0.4, 10),
        sub_policies=(
            SubPolicy(op("Color", 0.4, 2), op("TranslateX", 0.4, 4)),
            SubPolicy(op("Brightness", 0.2, 4), op("Rotate", 0.4, 2)),
            SubPolicy(op("Sharpness", 0.4, 2), op("ShearX", 0.2, 6)),
            SubPolicy(op("SolarizeAdd", 0.2, 2), op("Hflip", 0.3, 0)),
            SubPolicy(op("Brightness", 0.0, 0), op("TranslateY", 0.2, 8)),
        ),
        area_ratios=AreaRatios(6.0, 2.0, 0.4),
    )


def identity_policy() -> Policy:
    """All probabilities and magnitudes zero; area ratios at 1.0."""
    sub = SubPolicy(BoxOpSpec(COLOR_OPS[0], 0.0, 0), BoxOpSpec(GEOMETRIC_OPS[0], 0.0, 0))
    return Policy(ZoomParams(0.0, 0), ZoomParams(0.0, 0), (sub,) * 5, AreaRatios(1.0, 1.0, 1.0))


# ---------------------------------------------------------------- genome ---

Genome = tuple[int, ...]


def _gene_layout() -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """Per-gene (valid range size, values the search may draw)."""
    n6 = tuple(range(6))
    sizes = [6, 6, 6, 6]
    choices = [n6, n6, n6, n6]
    for _ in range(NUM_SUB_POLICIES):
        sizes += [len(COLOR_OPS), 11, 6, len(GEOMETRIC_OPS), 11, 6]
        choices += [
            tuple(range(len(COLOR_OPS))),
            OP_PROBABILITY_SEARCH_GENES,
            n6,
            tuple(range(len(GEOMETRIC_OPS))),
            OP_PROBABILITY_SEARCH_GENES,
            n6,
        ]
    sizes += [10, 10, 10]
    choices += [tuple(range(10))] * 3
    return tuple(sizes), tuple(choices)


GENE_SIZES, GENE_CHOICES = _gene_layout()
assert len(GENE_SIZES) == GENOME_LENGTH


def encode_policy(p: Policy) -> Genome:
    genes = [
        _grid_index(p.zoom_in.probability, ZOOM_PROBABILITIES, "zoom_in.probability"),
        _grid_index(p.zoom_in.magnitude, MAGNITUDES, "zoom_in.magnitude"),
        _grid_index(p.zoom_out.probability, ZOOM_PROBABILITIES, "zoom_out.probability"),
        _grid_index(p.zoom_out.magnitude, MAGNITUDES, "zoom_out.magnitude"),
    ]
    for sp in p.sub_policies:
        for spec, ops in ((sp.color, COLOR_OPS), (sp.geometric, GEOMETRIC_OPS)):
            genes.append(ops.index(spec.op_kind))
            genes.append(round(spec.probability * 10))
            genes.append(_grid_index(spec.magnitude, MAGNITUDES, "magnitude"))
    for scale in SCALES:
        genes.append(_grid_index(p.area_ratios.for_scale(scale), AREA_RATIOS, scale))
    return tuple(genes)


def validate_genome(g: Sequence[int]) -> Genome:
    if len(g) != GENOME_LENGTH:
        raise InvalidGenomeError(f"genome length {len(g)} != {GENOME_LENGTH}")
    out = []
    for i, (v, size) in enumerate(zip(g, GENE_SIZES)):
        if int(v) != v or not 0 <= v < size:
            raise InvalidGenomeError(f"gene {i} = {v!r} outside [0, {size - 1}]")
        out.append(int(v))
    return tuple(out)


def decode_genome(g: Sequence[int]) -> Policy:
    g = validate_genome(g)
    zoom_in = ZoomParams(ZOOM_PROBABILITIES[g[0]], MAGNITUDES[g[1]])
    zoom_out = ZoomParams(ZOOM_PROBABILITIES[g[2]], MAGNITUDES[g[3]])
    subs = []
    for k in range(NUM_SUB_POLICIES):
        c = g[4 + k * 6: 4 + (k + 1) * 6]
        subs.append(
            SubPolicy(
                BoxOpSpec(COLOR_OPS[c[0]], c[1] / 10, MAGNITUDES[c[2]]),
                BoxOpSpec(GEOMETRIC_OPS[c[3]], c[4] / 10, MAGNITUDES[c[5]]),
            )
        )
    a = g[-3:]
    ratios = AreaRatios(AREA_RATIOS[a[0]], AREA_RATIOS[a[1]], AREA_RATIOS[a[2]])
    return Policy(zoom_in, zoom_out, tuple(subs), ratios)


def random_genome(rng: np.random.Generator) -> Genome:
    """Uniform draw from the search space."""
    return tuple(int(c[rng.integers(len(c))]) for c in GENE_CHOICES)


def random_policy(rng: np.random.Generator) -> Policy:
    return decode_genome(random_genome(rng))


def search_space_cardinality() -> int:
    image_level = 6**4
    color = len(COLOR_OPS) * len(OP_PROBABILITIES) * len(MAGNITUDES)
    geometric = len(GEOMETRIC_OPS) * len(OP_PROBABILITIES) * len(MAGNITUDES)
    return image_level * (color * geometric) ** NUM_SUB_POLICIES * len(AREA_RATIOS) ** 3


# ------------------------------------------------------------- documents ---


def policy_to_dict(p: Policy) -> dict[str, Any]:
    def op(s: BoxOpSpec):
        return {"op": s.op_kind, "probability": s.probability, "magnitude": s.magnitude}

    return {
        "zoom_in": {"probability": p.zoom_in.probability, "magnitude": p.zoom_in.magnitude},
        "zoom_out": {"probability": p.zoom_out.probability, "magnitude": p.zoom_out.magnitude},
        "sub_policies": [{"color": op(s.color), "geometric": op(s.geometric)} for s in p.sub_policies],
        "area_ratios": {s: p.area_ratios.for_scale(s) for s in SCALES},
    }


def serialize_policy(p: Policy) -> str:
    return json.dumps(policy_to_dict(p), indent=2) + "\n"


def _expect_keys(obj: Any, keys: Sequence[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise PolicyParseError(path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(keys))
    if unknown:
        raise PolicyParseError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown field")
    for k in keys:
        if k not in obj:
            raise PolicyParseError(f"{path}.{k}" if path else k, "missing field")
    return obj


def _number(obj: dict, key: str, path: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise PolicyParseError(f"{path}.{key}", f"expected a number, got {v!r}")
    return v


def _integer(obj: dict, key: str, path: str) -> int:
    v = _number(obj, key, path)
    if v != int(v):
        raise PolicyParseError(f"{path}.{key}", f"expected an integer, got {v!r}")
    return int(v)


def _parse_op(obj: Any, path: str, want_color: bool) -> BoxOpSpec:
    obj = _expect_keys(obj, ("op", "probability", "magnitude"), path)
    name = obj["op"]
    if name == "Original" and want_color:
        return BoxOpSpec("Brightness", 0.0, 0)
    allowed = COLOR_OPS if want_color else GEOMETRIC_OPS
    if name not in allowed:
        raise PolicyParseError(f"{path}.op", f"unknown op {name!r}; expected one of {allowed}")
    try:
        return BoxOpSpec(name, _number(obj, "probability", path), _integer(obj, "magnitude", path))
    except InvalidPolicyError as e:
        raise PolicyParseError(path, str(e)) from None


def policy_from_dict(doc: Any) -> Policy:
    doc = _expect_keys(doc, ("zoom_in", "zoom_out", "sub_policies", "area_ratios"), "")
    try:
        zooms = {}
        for key in ("zoom_in", "zoom_out"):
            z = _expect_keys(doc[key], ("probability", "magnitude"), key)
            try:
                zooms[key] = ZoomParams(_number(z, "probability", key), _integer(z, "magnitude", key))
            except InvalidPolicyError as e:
                raise PolicyParseError(key, str(e)) from None
        subs_doc = doc["sub_policies"]
        if not isinstance(subs_doc, list) or len(subs_doc) != NUM_SUB_POLICIES:
            raise PolicyParseError("sub_policies", f"expected a list of {NUM_SUB_POLICIES}")
        subs = []
        for i, s in enumerate(subs_doc):
            path = f"sub_policies[{i}]"
            s = _expect_keys(s, ("color", "geometric"), path)
            subs.append(
                SubPolicy(
                    _parse_op(s["color"], f"{path}.color", True),
                    _parse_op(s["geometric"], f"{path}.geometric", False),
                )
            )
        a = _expect_keys(doc["area_ratios"], SCALES, "area_ratios")
        try:
            ratios = AreaRatios(*(_number(a, s, "area_ratios") for s in SCALES))
        except InvalidPolicyError as e:
            raise PolicyParseError("area_ratios", str(e)) from None
        return Policy(zooms["zoom_in"], zooms["zoom_out"], tuple(subs), ratios)
    except InvalidPolicyError as e:
        raise PolicyParseError("", str(e)) from None


def parse_policy(doc: str) -> Policy:
    if not doc.strip():
        raise PolicyParseError("", "empty policy document")
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as e:
        raise PolicyParseError("", f"malformed JSON: {e}") from None
    return policy_from_dict(data)
