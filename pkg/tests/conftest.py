import numpy as np
import pytest

from artrestore.degrade import DistortionType, random_texture, synthesize_dataset
from artrestore.image import Image, save_image


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def small_rgb():
    return random_texture(24, 20, 3, seed=7)


@pytest.fixture()
def small_gray():
    return random_texture(16, 16, 1, seed=8)


@pytest.fixture()
def clean_dir(tmp_path):
    """Six small clean textures on disk."""
    d = tmp_path / "clean"
    d.mkdir()
    for i in range(6):
        save_image(random_texture(40, 40, 3, seed=100 + i), d / f"img_{i}.png")
    return d


@pytest.fixture()
def tiny_manifest(tmp_path, clean_dir):
    """Gaussian-only dataset big enough to train a toy model on."""
    return synthesize_dataset(
        clean_dir,
        tmp_path / "data",
        per_image=2,
        seed=3,
        split_fractions=(0.5, 0.25, 0.25),
        types=[DistortionType.GAUSSIAN_NOISE],
        levels=[3],
    )


def random_image(rng, h, w, c):
    return Image(rng.random((h, w, c), dtype=np.float32))
