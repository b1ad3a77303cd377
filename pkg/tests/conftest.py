from __future__ import annotations

import numpy as np
import pytest

from treeseg import ModelConfig, SegModel


def quantize(image: np.ndarray) -> np.ndarray:
    """Snap a float image onto the 8-bit grid (what the generator emits)."""
    return (np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0).astype(np.float32)


def random_image(rng: np.random.Generator, h: int = 16, w: int = 16) -> np.ndarray:
    return quantize(rng.uniform(0.0, 1.0, size=(h, w, 3)))


TINY_CONFIG = ModelConfig(
    num_classes=4,
    feature_dim=8,
    hidden_channels=(12, 12),
    dilations=(1, 2, 2),
    min_input=4,
)


@pytest.fixture(scope="session")
def tiny_model() -> SegModel:
    """Small random-weight net shared by read-only tests (RF = 11 px)."""
    return SegModel(TINY_CONFIG, seed=1)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
