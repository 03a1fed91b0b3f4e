"""Fine-tune the regression network on labeled images.

Training samples are (image path, score) pairs with scores in [0, 10].
Each image contributes its crop-augmented variants; every iteration draws
a random batch of (image, crop) pairs and takes one SGD step on the
squared-error loss.
"""

import argparse
import csv
import sys

import numpy as np
import torch

from .crops import crop_rects
from .model import TrainConfig, build_model, load_image, preprocess, resize_image, save_artifact


def _load_samples(pairs, config):
    """Load images, draw their crop rectangles, and compute the mean image.

    Returns (samples, mean_image) where each sample is
    (image array, crop rects, label); crops are resized lazily at batch
    time. The mean image is the dataset mean of the resized full images.
    """
    samples = []
    mean_acc = np.zeros((config.input_size, config.input_size, 3), dtype=np.float64)
    for path, label in pairs:
        label = float(label)
        if not 0.0 <= label <= 10.0:
            raise ValueError(f"label {label} for {path} outside [0, 10]")
        array = load_image(path)
        rects = crop_rects(array.shape[1], array.shape[0], config.crops, image_id=str(path))
        samples.append((array, rects, label))
        mean_acc += resize_image(array, config.input_size)
    mean_image = (mean_acc / len(samples)).astype(np.float32)
    return samples, mean_image


def _dataset_loss(model, samples, mean_image, config, batch_size=32):
    """Mean squared error over the resized full images."""
    model.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start:start + batch_size]
            x = torch.stack([
                preprocess(arr, mean_image, config.input_size) for arr, _, _ in chunk
            ])
            y = torch.tensor([lab for _, _, lab in chunk], dtype=torch.float32)
            pred = model(x).squeeze(1)
            total += float(torch.sum((pred - y) ** 2))
    return total / len(samples)


def fine_tune(pairs, config, eval_every=None):
    """Train on (path, label) pairs; returns (model, mean_image, losses).

    `losses` holds the full-dataset mean squared error before training,
    at each `eval_every` checkpoint, and after the final iteration.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least 2 training images")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    samples, mean_image = _load_samples(pairs, config)
    model = build_model(config.base_weights)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=config.learning_rate, momentum=config.momentum
    )
    criterion = torch.nn.MSELoss()

    losses = [_dataset_loss(model, samples, mean_image, config)]
    for it in range(config.iterations):
        model.train()
        batch, labels = [], []
        for i in rng.integers(0, len(samples), size=config.batch_size):
            array, rects, label = samples[i]
            x1, y1, x2, y2 = rects[rng.integers(0, len(rects))]
            batch.append(preprocess(array[y1:y2, x1:x2], mean_image, config.input_size))
            labels.append(label)
        x = torch.stack(batch)
        y = torch.tensor(labels, dtype=torch.float32)
        optimizer.zero_grad()
        loss = criterion(model(x).squeeze(1), y)
        loss.backward()
        optimizer.step()
        if eval_every and (it + 1) % eval_every == 0 and (it + 1) != config.iterations:
            losses.append(_dataset_loss(model, samples, mean_image, config))
    losses.append(_dataset_loss(model, samples, mean_image, config))
    model.eval()
    return model, mean_image, losses


def read_manifest(path):
    """CSV with columns path,score -> list of (path, float) pairs."""
    pairs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pairs.append((row["path"], float(row["score"])))
    return pairs


def main(argv=None):
    parser = argparse.ArgumentParser(description="Fine-tune the image scorer")
    parser.add_argument("--manifest", required=True, help="CSV with columns path,score")
    parser.add_argument("--out", required=True, help="output artifact path")
    parser.add_argument("--iterations", type=int, default=10000)
    parser.add_argument("--learning-rate", type=float, default=1e-4)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--base-weights", default=None)
    args = parser.parse_args(argv)

    config = TrainConfig(
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        base_weights=args.base_weights,
    )
    pairs = read_manifest(args.manifest)
    model, mean_image, losses = fine_tune(pairs, config)
    save_artifact(args.out, model, mean_image, config)
    print(f"trained {config.iterations} iterations on {len(pairs)} images; "
          f"loss {losses[0]:.4f} -> {losses[-1]:.4f}; saved {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
