"""Occlusion-sensitivity analysis for black-box image scorers.

Random patches are replaced with the image's mean color; the score delta
attributes each patch either to the safety-contributing mask (occlusion
lowered the score) or to the unsafety mask (occlusion raised it).
"""

import csv
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import InvalidInputError, ScoringError


@dataclass(frozen=True)
class OcclusionConfig:
    n_patches: int = 1000
    min_patch_fraction: float = 0.10
    max_patch_fraction: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if self.n_patches < 1:
            raise InvalidInputError("n_patches must be >= 1")
        if not 0.0 < self.min_patch_fraction <= self.max_patch_fraction <= 1.0:
            raise InvalidInputError("patch fractions must satisfy 0 < min <= max <= 1")


@dataclass
class ContributionMasks:
    positive: np.ndarray  # H x W, regions whose occlusion lowers the score
    negative: np.ndarray  # H x W, regions whose occlusion raises the score
    trials: np.ndarray  # H x W per-pixel trial counts
    baseline_score: float
    records: list  # (x1, y1, x2, y2, delta) per trial


def occlude(image, rect):
    """Replace `rect` with the per-channel mean of the original image.

    `image` is an HxWxC uint8 array; `rect` is (x1, y1, x2, y2) with
    0 <= x1 <= x2 <= W and 0 <= y1 <= y2 <= H.
    """
    x1, y1, x2, y2 = rect
    h, w = image.shape[:2]
    if not (0 <= x1 <= x2 <= w and 0 <= y1 <= y2 <= h):
        raise InvalidInputError(f"rect {rect} outside image {w}x{h}")
    out = image.copy()
    if x2 > x1 and y2 > y1:
        mean = image.reshape(-1, image.shape[2]).mean(axis=0)
        out[y1:y2, x1:x2] = np.round(mean).astype(image.dtype)
    return out


def sensitivity_map(image, handle, config=OcclusionConfig()):
    """Monte-Carlo contribution masks for one image against one scorer."""
    image = np.asarray(image)
    h, w = image.shape[:2]
    side_lo = max(1, int(round(config.min_patch_fraction * min(w, h))))
    side_hi = max(side_lo, int(round(config.max_patch_fraction * min(w, h))))
    if side_hi > min(w, h):
        raise InvalidInputError("patch does not fit inside the image")

    rng = np.random.default_rng(config.seed)
    try:
        baseline = handle.score_array(image)
    except ScoringError as exc:
        raise ScoringError(f"baseline scoring failed: {exc}") from exc

    positive = np.zeros((h, w))
    negative = np.zeros((h, w))
    trials = np.zeros((h, w))
    records = []
    for trial in range(config.n_patches):
        side = int(rng.integers(side_lo, side_hi + 1))
        x1 = int(rng.integers(0, w - side + 1))
        y1 = int(rng.integers(0, h - side + 1))
        rect = (x1, y1, x1 + side, y1 + side)
        try:
            score = handle.score_array(occlude(image, rect))
        except ScoringError as exc:
            raise ScoringError(f"trial {trial}: {exc}", index=trial) from exc
        delta = score - baseline
        trials[y1:y1 + side, x1:x1 + side] += 1
        if delta < 0:
            positive[y1:y1 + side, x1:x1 + side] += -delta
        elif delta > 0:
            negative[y1:y1 + side, x1:x1 + side] += delta
        records.append((x1, y1, x1 + side, y1 + side, delta))

    covered = trials > 0
    positive[covered] /= trials[covered]
    negative[covered] /= trials[covered]
    return ContributionMasks(
        positive=positive,
        negative=negative,
        trials=trials,
        baseline_score=baseline,
        records=records,
    )


def write_mask_png(path, mask):
    """Save a mask as 8-bit grayscale, scaled so the peak maps to 255."""
    peak = mask.max()
    scaled = (mask / peak * 255.0) if peak > 0 else mask
    Image.fromarray(scaled.astype(np.uint8), mode="L").save(path)


def write_trials_csv(path, masks):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "y1", "x2", "y2", "delta"])
        for rec in masks.records:
            writer.writerow([rec[0], rec[1], rec[2], rec[3], repr(rec[4])])
