"""Train-time crop augmentation.

Same semantics as the pipeline's crop generator (relative margins bounded
by k1/k2, uniform integer draws, seeding by (seed, image id)); a golden
rectangle fixture in the tests pins the two implementations together.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CropConfig:
    k1: float = 0.05
    k2: float = 0.20
    n: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.k1 <= self.k2 < 0.5:
            raise ValueError("need 0 <= k1 <= k2 < 0.5")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def crop_rects(width, height, config, image_id=""):
    """n integer rectangles (x1, y1, x2, y2), deterministic per image id."""
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed & (2**64 - 1), key]))

    lo_x1, hi_x1 = math.ceil(config.k1 * width), math.floor(config.k2 * width)
    lo_y1, hi_y1 = math.ceil(config.k1 * height), math.floor(config.k2 * height)
    lo_x2, hi_x2 = math.ceil((1 - config.k2) * width), math.floor((1 - config.k1) * width)
    lo_y2, hi_y2 = math.ceil((1 - config.k2) * height), math.floor((1 - config.k1) * height)
    if lo_x1 > hi_x1 or lo_y1 > hi_y1 or lo_x2 > hi_x2 or lo_y2 > hi_y2 \
            or hi_x1 >= lo_x2 or hi_y1 >= lo_y2:
        raise ValueError(f"image {width}x{height} too small for crop bounds")

    rects = []
    for _ in range(config.n):
        rects.append((
            int(rng.integers(lo_x1, hi_x1 + 1)),
            int(rng.integers(lo_y1, hi_y1 + 1)),
            int(rng.integers(lo_x2, hi_x2 + 1)),
            int(rng.integers(lo_y2, hi_y2 + 1)),
        ))
    return rects
