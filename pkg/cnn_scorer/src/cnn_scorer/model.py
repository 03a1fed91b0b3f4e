"""Model architecture, preprocessing and artifact (de)serialization.

The scorer is an AlexNet-style convolutional network whose 1000-way
classification head is replaced by a single linear regression output.
Preprocessing is identical at train and inference time: resize to
input_size x input_size (bilinear), float32, subtract the dataset mean
image, channels-first.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from PIL import Image
from torchvision import models

from .crops import CropConfig


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 10000
    learning_rate: float = 1e-4
    batch_size: int = 8
    input_size: int = 227
    momentum: float = 0.9
    seed: int = 0
    # Optional path to a state dict for the convolutional trunk, e.g. a
    # scene-classification checkpoint; None starts from random weights.
    base_weights: str = None
    crops: CropConfig = field(default_factory=CropConfig)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def build_model(base_weights=None):
    """AlexNet trunk with a scalar regression head."""
    net = models.alexnet(weights=None)
    if base_weights is not None:
        state = torch.load(base_weights, map_location="cpu")
        net.load_state_dict(state, strict=False)
    net.classifier[6] = torch.nn.Linear(net.classifier[6].in_features, 1)
    return net


def resize_image(array, size):
    """HxWx3 uint8 -> size x size x 3 float32 via bilinear resampling."""
    img = Image.fromarray(array).resize((size, size), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32)


def preprocess(array, mean_image, size):
    """Resized, mean-subtracted, channels-first tensor of shape (3, size, size)."""
    resized = resize_image(array, size) - mean_image
    return torch.from_numpy(np.ascontiguousarray(resized.transpose(2, 0, 1)))


def load_image(path):
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_artifact(path, model, mean_image, config):
    payload = {
        "state_dict": model.state_dict(),
        "mean_image": torch.from_numpy(mean_image),
        "config": asdict(config),
    }
    torch.save(payload, path)


def load_artifact(path):
    """Returns (model in eval mode, mean_image float32 array, config)."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg_dict = dict(payload["config"])
    cfg_dict["crops"] = CropConfig(**cfg_dict["crops"])
    config = TrainConfig(**cfg_dict)
    model = models.alexnet(weights=None)
    model.classifier[6] = torch.nn.Linear(model.classifier[6].in_features, 1)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    mean_image = payload["mean_image"].numpy().astype(np.float32)
    return model, mean_image, config


def predict(model, mean_image, config, array):
    """Score one image array; raw regression output (not clipped)."""
    tensor = preprocess(array, mean_image, config.input_size).unsqueeze(0)
    with torch.no_grad():
        return float(model(tensor).item())
