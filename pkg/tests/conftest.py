import os

import numpy as np
import pytest

from denselearn import mnist

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def mnist_dir() -> str:
    return os.environ.get("MNIST_DIR") or os.path.join(REPO_ROOT, "data", "mnist")


@pytest.fixture(scope="session")
def mnist_split():
    """(train, val, test) from the real MNIST files."""
    train_file, test_file = mnist.load_mnist(mnist_dir())
    return mnist.split(train_file, test_file)


@pytest.fixture(scope="session")
def tiny_data():
    """A small synthetic dataset triple for fast trainer/sweep tests: class =
    which image quadrant is bright, learnable by any of the rules."""
    rng = np.random.default_rng(42)
    def make(n):
        images = rng.uniform(0.0, 0.3, size=(n, 1, 28, 28))
        labels = rng.integers(0, 4, size=n)
        for i, lab in enumerate(labels):
            r, c = divmod(int(lab), 2)
            images[i, 0, r * 14:(r + 1) * 14, c * 14:(c + 1) * 14] += 0.7
        return mnist.Dataset(np.clip(images, 0, 1), labels.astype(np.int64))
    return make(256), make(64), make(64)
