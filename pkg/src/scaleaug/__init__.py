"""Scale-aware augmentation policy search for object detection."""
from .annotations import AnnotatedImage, Box, scale_category
from .gaussian import BoxGeometry, GaussianMapParams, blend, derive_sigmas, gaussian_map, numeric_area
from .metric import ScaleStats, loss_std, pareto_scale_balance, pearson, penalty
from .policy import (
    Policy,
    decode_genome,
    encode_policy,
    parse_policy,
    search_space_cardinality,
    serialize_policy,
    searched_policy,
)

__version__ = "0.1.0"
