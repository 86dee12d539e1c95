import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bratskit.regions import REGIONS, Region, extract_region, reconstruct_labels
from bratskit.volume import BinaryMask, Geometry, LabelVolume

from conftest import labels_from_array


def test_label_sets():
    assert Region.WT.labels == {1, 2, 3}
    assert Region.TC.labels == {1, 3}
    assert Region.ET.labels == {3}


def test_all_zero_labels_give_empty_masks():
    labels = labels_from_array(np.zeros((4, 4, 4)))
    for region in REGIONS:
        assert not extract_region(labels, region).any()


@pytest.mark.parametrize("label,expected", [
    (3, {Region.WT, Region.TC, Region.ET}),
    (1, {Region.WT, Region.TC}),
    (2, {Region.WT}),
])
def test_single_voxel_membership(label, expected):
    vox = np.zeros((3, 3, 3), np.uint8)
    vox[1, 1, 1] = label
    labels = labels_from_array(vox)
    for region in REGIONS:
        mask = extract_region(labels, region)
        assert mask.bits[1, 1, 1] == (region in expected)
        assert mask.count() == (1 if region in expected else 0)


def test_reconstruct_override_order():
    g = Geometry((1, 1, 1))
    t = np.ones((1, 1, 1), bool)
    f = np.zeros((1, 1, 1), bool)
    # et alone wins despite wt/tc false
    out = reconstruct_labels(BinaryMask(g, f), BinaryMask(g, f), BinaryMask(g, t))
    assert out.voxels[0, 0, 0] == 3
    out = reconstruct_labels(BinaryMask(g, t), BinaryMask(g, f), BinaryMask(g, f))
    assert out.voxels[0, 0, 0] == 2
    out = reconstruct_labels(BinaryMask(g, t), BinaryMask(g, t), BinaryMask(g, f))
    assert out.voxels[0, 0, 0] == 1
    out = reconstruct_labels(BinaryMask(g, f), BinaryMask(g, f), BinaryMask(g, f))
    assert out.voxels[0, 0, 0] == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=27, max_size=27))
def test_round_trip_and_nesting(flat):
    labels = labels_from_array(np.array(flat, np.uint8).reshape(3, 3, 3))
    wt = extract_region(labels, Region.WT)
    tc = extract_region(labels, Region.TC)
    et = extract_region(labels, Region.ET)
    # nesting: ET <= TC <= WT voxelwise
    assert not (et.bits & ~tc.bits).any()
    assert not (tc.bits & ~wt.bits).any()
    assert reconstruct_labels(wt, tc, et) == labels
