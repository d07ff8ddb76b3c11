import numpy as np
import pytest

from gridvqa.io import RunConfig
from gridvqa.raster import Nomenclature
from gridvqa.templates import load_registry


@pytest.fixture(scope="session")
def nomenclature():
    return Nomenclature.load(RunConfig().nomenclature)


@pytest.fixture(scope="session")
def registry():
    return load_registry(RunConfig().templates)


def random_raster(rng: np.random.Generator, size: int = 120, min_classes: int = 2, max_classes: int = 10) -> np.ndarray:
    """Random blobby segmentation raster: a base class plus random rectangles."""
    n_classes = int(rng.integers(min_classes, max_classes + 1))
    classes = rng.choice(np.arange(44), size=n_classes, replace=False)
    data = np.full((size, size), classes[0], dtype=np.uint8)
    for c in classes[1:]:
        for _ in range(int(rng.integers(1, 4))):
            h = int(rng.integers(1, size))
            w = int(rng.integers(1, size))
            y = int(rng.integers(0, size - h + 1))
            x = int(rng.integers(0, size - w + 1))
            data[y : y + h, x : x + w] = c
    return data
