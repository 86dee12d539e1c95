import numpy as np
import pytest

from bratskit.volume import BinaryMask, Geometry, LabelVolume


def mask_from_coords(dims, coords, spacing=(1.0, 1.0, 1.0)):
    bits = np.zeros(dims, dtype=bool)
    for c in coords:
        bits[c] = True
    return BinaryMask(Geometry(dims, spacing), bits)


def labels_from_array(array, spacing=(1.0, 1.0, 1.0)):
    array = np.asarray(array, dtype=np.uint8)
    return LabelVolume(Geometry(array.shape, spacing), array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
