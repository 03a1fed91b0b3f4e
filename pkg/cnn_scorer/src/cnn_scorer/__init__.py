"""cnn_scorer: scorer/1 image-scoring service backed by a CNN regressor."""

__version__ = "0.1.0"
