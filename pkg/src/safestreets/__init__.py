"""safestreets: perceived-safety mapping and spatially corrected activity
regressions from street-level imagery scores and cell-grid population counts."""

__version__ = "0.1.0"
