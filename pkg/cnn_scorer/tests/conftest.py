from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from cnn_scorer.model import TrainConfig, save_artifact
from cnn_scorer.train import fine_tune

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def training_images(tmp_path_factory):
    """Small labeled set whose score tracks green-channel intensity."""
    root = tmp_path_factory.mktemp("train_imgs")
    rng = np.random.default_rng(5)
    pairs = []
    for i in range(50):
        label = float(rng.uniform(0, 10))
        array = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
        array[:, :, 1] = int(round(label * 25.5))
        path = root / f"train_{i:02d}.png"
        Image.fromarray(array).save(path)
        pairs.append((str(path), label))
    return pairs


@pytest.fixture(scope="session")
def artifact_path(tmp_path_factory, training_images):
    """A minimally trained artifact, enough to exercise serving."""
    config = TrainConfig(iterations=2, batch_size=4, seed=0)
    model, mean_image, _ = fine_tune(training_images[:4], config)
    path = tmp_path_factory.mktemp("artifact") / "model.pt"
    save_artifact(path, model, mean_image, config)
    return str(path)
