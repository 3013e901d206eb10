"""EEG emotion-recognition pipeline: DE/PSD feature cubes fused by mutual
cross-attention and classified by a small 3D CNN, all backed by explicit,
testable numeric kernels."""

__version__ = "0.1.0"
