import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from metricnet import load_dataset
from metricnet.mnist_io import MNIST_FILE_NAMES, resolve_mnist_path

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("METRICNET_MNIST_DIR", REPO_ROOT / "data"))


def mnist_paths() -> dict[str, Path] | None:
    try:
        return {
            key: resolve_mnist_path(DATA_DIR, name)
            for key, name in MNIST_FILE_NAMES.items()
        }
    except FileNotFoundError:
        return None


requires_mnist = pytest.mark.skipif(
    mnist_paths() is None,
    reason=f"MNIST IDX files not found in {DATA_DIR} (set METRICNET_MNIST_DIR)",
)


@pytest.fixture(scope="session")
def mnist_files() -> dict[str, Path]:
    paths = mnist_paths()
    if paths is None:
        pytest.skip("MNIST data not available")
    return paths


@pytest.fixture(scope="session")
def mnist_test(mnist_files):
    return load_dataset(mnist_files["test_images"], mnist_files["test_labels"])


@pytest.fixture(scope="session")
def mnist_train(mnist_files):
    return load_dataset(mnist_files["train_images"], mnist_files["train_labels"])
