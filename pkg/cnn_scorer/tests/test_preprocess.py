import numpy as np
import torch

from cnn_scorer.model import load_artifact, load_image, predict, preprocess, resize_image


def test_recorded_tensor_parity(data_dir):
    # The served preprocessing must reproduce the recorded tensor exactly.
    golden = np.load(data_dir / "preprocess_golden.npz")
    array = load_image(str(data_dir / "img_0.png"))
    tensor = preprocess(array, golden["mean_image"], 227)
    assert tensor.shape == (3, 227, 227)
    assert tensor.dtype == torch.float32
    np.testing.assert_array_equal(tensor.numpy(), golden["tensor"])


def test_resize_shape_and_dtype():
    array = np.zeros((100, 150, 3), dtype=np.uint8)
    out = resize_image(array, 227)
    assert out.shape == (227, 227, 3)
    assert out.dtype == np.float32


def test_mean_subtraction_is_applied():
    array = np.full((30, 30, 3), 200, dtype=np.uint8)
    mean = np.full((227, 227, 3), 50, dtype=np.float32)
    tensor = preprocess(array, mean, 227)
    assert torch.allclose(tensor, torch.full((3, 227, 227), 150.0))


def test_artifact_roundtrip_preserves_prediction(artifact_path, data_dir):
    model, mean_image, config = load_artifact(artifact_path)
    array = load_image(str(data_dir / "img_1.png"))
    a = predict(model, mean_image, config, array)
    b = predict(model, mean_image, config, array)
    assert a == b
    assert config.input_size == 227
