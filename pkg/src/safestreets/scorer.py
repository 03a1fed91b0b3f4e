"""Black-box image scoring: crop augmentation, the scorer/1 wire protocol
and deterministic synthetic scorers used throughout the test suite.

scorer/1 protocol: newline-delimited JSON on the scorer process's
stdin/stdout. Request `{"id": "...", "path": "..."}`, response
`{"id": "...", "score": <float in [0, 10]>}`, one response line per request
line, in request order.
"""

import hashlib
import json
import math
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError, ProtocolError, ScoringError


@dataclass(frozen=True)
class ImageMeta:
    width: int
    height: int
    channels: int = 3

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInputError("image dimensions must be positive")


@dataclass(frozen=True)
class CropRect:
    x1: int
    y1: int
    x2: int
    y2: int

    def area(self):
        return (self.x2 - self.x1) * (self.y2 - self.y1)


@dataclass(frozen=True)
class CropConfig:
    k1: float = 0.05
    k2: float = 0.20
    n: int = 30
    seed: int = 0
    # Optional minimum pairwise IoU-distance constraint; None disables it.
    max_pairwise_iou: float = None

    def __post_init__(self):
        if not 0.0 <= self.k1 <= self.k2 < 0.5:
            raise InvalidInputError("need 0 <= k1 <= k2 < 0.5")
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")


def _crop_rng(config, image_id):
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([config.seed & (2**64 - 1), key]))


def _iou(a, b):
    ix1, iy1 = max(a.x1, b.x1), max(a.y1, b.y1)
    ix2, iy2 = min(a.x2, b.x2), min(a.y2, b.y2)
    inter = max(0, ix2 - ix1) * max(0, iy2 - iy1)
    union = a.area() + b.area() - inter
    return inter / union if union else 0.0


def generate_crops(meta, config, image_id=""):
    """Draw n crop rectangles whose relative margins all lie in [k1, k2].

    Each of x1/W, y1/H, 1-x2/W, 1-y2/H is uniform over the admissible
    integer range. Deterministic given (config.seed, image_id).
    """
    W, H = meta.width, meta.height
    lo_x1, hi_x1 = math.ceil(config.k1 * W), math.floor(config.k2 * W)
    lo_y1, hi_y1 = math.ceil(config.k1 * H), math.floor(config.k2 * H)
    lo_x2, hi_x2 = math.ceil((1 - config.k2) * W), math.floor((1 - config.k1) * W)
    lo_y2, hi_y2 = math.ceil((1 - config.k2) * H), math.floor((1 - config.k1) * H)
    if lo_x1 > hi_x1 or lo_y1 > hi_y1 or lo_x2 > hi_x2 or lo_y2 > hi_y2 \
            or hi_x1 >= lo_x2 or hi_y1 >= lo_y2:
        raise InvalidInputError(
            f"image {W}x{H} too small for crop bounds k1={config.k1}, k2={config.k2}"
        )

    rng = _crop_rng(config, image_id)
    crops = []
    attempts = 0
    while len(crops) < config.n:
        crop = CropRect(
            x1=int(rng.integers(lo_x1, hi_x1 + 1)),
            y1=int(rng.integers(lo_y1, hi_y1 + 1)),
            x2=int(rng.integers(lo_x2, hi_x2 + 1)),
            y2=int(rng.integers(lo_y2, hi_y2 + 1)),
        )
        attempts += 1
        if config.max_pairwise_iou is not None and attempts < 100 * config.n:
            if any(_iou(crop, prev) > config.max_pairwise_iou for prev in crops):
                continue
        crops.append(crop)
    return crops


# --- Scorer handles ----------------------------------------------------------


class ScorerHandle:
    """Anything that maps an image to a [0, 10] score."""

    def score_path(self, path):
        raise NotImplementedError

    def score_array(self, array):
        """Score an HxWx3 uint8 array; default round-trips through a PNG."""
        with tempfile.NamedTemporaryFile(suffix=".png", delete=False) as tmp:
            Image.fromarray(array).save(tmp.name)
            path = tmp.name
        try:
            return self.score_path(path)
        finally:
            Path(path).unlink(missing_ok=True)

    def close(self):
        pass


class ConstantScorer(ScorerHandle):
    def __init__(self, value):
        self.value = float(value)

    def score_path(self, path):
        _load_image(path)  # still validates readability
        return self.value

    def score_array(self, array):
        return self.value


class GreenMeanScorer(ScorerHandle):
    """10 x mean normalized green-channel intensity."""

    def score_path(self, path):
        return self.score_array(_load_image(path))

    def score_array(self, array):
        return 10.0 * float(np.mean(array[:, :, 1])) / 255.0


class RegionBoxScorer(ScorerHandle):
    """10 x (marker pixels / total pixels).

    Marker pixels are those with red channel >= threshold; synthetic fixtures
    paint the designated rectangle bright so the score equals the visible
    fraction of the image the rectangle occupies.
    """

    def __init__(self, threshold=128):
        self.threshold = threshold

    def score_path(self, path):
        return self.score_array(_load_image(path))

    def score_array(self, array):
        marker = array[:, :, 0] >= self.threshold
        return 10.0 * float(np.count_nonzero(marker)) / marker.size


def synthetic_scorer(kind, **kwargs):
    """Build one of the deterministic test scorers.

    kind: "constant" (kwarg value), "green-mean", or "region-box"
    (kwarg threshold, default 128).
    """
    if kind == "constant":
        return ConstantScorer(kwargs.get("value", 5.0))
    if kind == "green-mean":
        return GreenMeanScorer()
    if kind == "region-box":
        return RegionBoxScorer(kwargs.get("threshold", 128))
    raise InvalidInputError(f"unknown synthetic scorer kind {kind!r}")


def _load_image(path):
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except Exception as exc:
        raise ScoringError(f"unreadable image {path}: {exc}") from exc


class SubprocessScorer(ScorerHandle):
    """Client side of scorer/1 over a child process's stdio."""

    def __init__(self, command, timeout=60.0):
        self.command = command
        self.timeout = timeout
        self._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._counter = 0

    def score_path(self, path):
        self._counter += 1
        request_id = f"req-{self._counter}"
        request = json.dumps({"id": request_id, "path": str(path)})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ScoringError(f"scorer process died: {exc}") from exc
        if not line:
            raise ProtocolError("scorer closed its stdout mid-conversation")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"non-JSON reply: {line!r}") from exc
        if reply.get("id") != request_id:
            raise ProtocolError(
                f"out-of-order reply: expected id {request_id!r}, got {reply.get('id')!r}"
            )
        if "error" in reply:
            raise ScoringError(f"scorer error: {reply['error']}")
        score = reply.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 10.0:
            raise ProtocolError(f"score missing or outside [0, 10]: {line!r}")
        return float(score)

    def close(self):
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        if self._proc.poll() is None:
            self._proc.wait(timeout=10)


def score_augmented(image_path, handle, config, image_id=None):
    """Mean scorer output over the n crops of one image."""
    array = _load_image(image_path)
    meta = ImageMeta(width=array.shape[1], height=array.shape[0])
    if image_id is None:
        image_id = str(image_path)
    crops = generate_crops(meta, config, image_id=image_id)
    total = 0.0
    for i, crop in enumerate(crops):
        piece = array[crop.y1:crop.y2, crop.x1:crop.x2]
        try:
            total += handle.score_array(piece)
        except ScoringError as exc:
            raise ScoringError(f"crop {i}: {exc}", index=i) from exc
    return total / len(crops)


# --- scorer/1 server loop ----------------------------------------------------


def serve(handle, stdin=None, stdout=None):
    """Serve scorer/1 requests until stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        try:
            score = handle.score_path(request["path"])
            reply = {"id": request["id"], "score": min(10.0, max(0.0, score))}
        except ScoringError as exc:
            reply = {"id": request["id"], "error": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def serve_main(argv=None):
    """CLI entry: run a synthetic scorer as a scorer/1 process."""
    import argparse

    parser = argparse.ArgumentParser(description="Serve a synthetic scorer over scorer/1")
    parser.add_argument("--kind", required=True, choices=["constant", "green-mean", "region-box"])
    parser.add_argument("--value", type=float, default=5.0, help="constant scorer value")
    parser.add_argument("--threshold", type=int, default=128, help="region-box marker threshold")
    args = parser.parse_args(argv)
    handle = synthetic_scorer(args.kind, value=args.value, threshold=args.threshold)
    serve(handle)
    return 0


if __name__ == "__main__":
    sys.exit(serve_main())
