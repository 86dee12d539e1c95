import numpy as np
import pytest

from bratskit.metrics import (
    HD95_PENALTY,
    MatchParams,
    MetricMode,
    case_metrics_legacy,
    case_metrics_lesionwise,
    dice,
    hd95,
    lesion_match,
    metrics_rows,
)
from bratskit.errors import IncompatibleGeometryError
from bratskit.phantom import random_phantom_spec, generate_phantom
from bratskit.regions import REGIONS, Region, extract_region
from bratskit.volume import BinaryMask, Geometry, LabelVolume

from conftest import labels_from_array, mask_from_coords
from oracles import brute_dice, brute_hd95


class TestDice:
    def test_identity(self, rng):
        mask = mask_from_coords((5, 5, 5), [(1, 1, 1), (2, 2, 2)])
        assert dice(mask, mask) == 1.0

    def test_both_empty(self):
        empty = mask_from_coords((4, 4, 4), [])
        assert dice(empty, empty) == 1.0

    def test_one_empty(self):
        empty = mask_from_coords((4, 4, 4), [])
        other = mask_from_coords((4, 4, 4), [(0, 0, 0)])
        assert dice(empty, other) == 0.0
        assert dice(other, empty) == 0.0

    def test_hand_counted_overlap(self):
        a = mask_from_coords((6, 6, 6), [(0, 0, 0), (1, 0, 0)])
        b = mask_from_coords((6, 6, 6), [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)])
        assert dice(a, b) == pytest.approx(2 * 2 / (2 + 4))

    def test_symmetric_random(self, rng):
        for _ in range(20):
            g = Geometry((6, 6, 6))
            a = BinaryMask(g, rng.random((6, 6, 6)) < 0.4)
            b = BinaryMask(g, rng.random((6, 6, 6)) < 0.4)
            assert dice(a, b) == dice(b, a)
            assert dice(a, b) == pytest.approx(brute_dice(a.bits, b.bits))

    def test_geometry_mismatch(self):
        a = mask_from_coords((4, 4, 4), [])
        b = mask_from_coords((4, 4, 5), [])
        with pytest.raises(IncompatibleGeometryError):
            dice(a, b)


class TestHD95:
    def test_identity_zero(self):
        mask = mask_from_coords((6, 6, 6), [(2, 2, 2), (3, 2, 2)])
        assert hd95(mask, mask) == 0.0

    def test_penalty_conventions(self):
        empty = mask_from_coords((6, 6, 6), [])
        blob = mask_from_coords((6, 6, 6), [(1, 1, 1)])
        assert hd95(empty, empty) == 0.0
        assert hd95(empty, blob) == HD95_PENALTY
        assert hd95(blob, empty) == HD95_PENALTY

    def test_two_voxels_axis_distance(self):
        a = mask_from_coords((8, 8, 8), [(1, 1, 1)])
        b = mask_from_coords((8, 8, 8), [(4, 1, 1)])
        assert hd95(a, b) == pytest.approx(3.0)

    def test_matches_brute_force_random(self, rng):
        for _ in range(15):
            g = Geometry((10, 10, 10))
            a = BinaryMask(g, rng.random((10, 10, 10)) < 0.2)
            b = BinaryMask(g, rng.random((10, 10, 10)) < 0.2)
            assert hd95(a, b) == pytest.approx(brute_hd95(a.bits, b.bits), abs=1e-5)

    def test_anisotropic_matches_brute_force(self, rng):
        spacing = (0.7, 1.3, 2.1)
        g = Geometry((9, 9, 9), spacing)
        a = BinaryMask(g, rng.random((9, 9, 9)) < 0.15)
        b = BinaryMask(g, rng.random((9, 9, 9)) < 0.15)
        if a.any() and b.any():
            assert hd95(a, b) == pytest.approx(brute_hd95(a.bits, b.bits, spacing), abs=1e-5)

    def test_spacing_linearity(self, rng):
        g1 = Geometry((9, 9, 9), (1.0, 1.0, 1.0))
        g2 = Geometry((9, 9, 9), (2.5, 2.5, 2.5))
        bits_a = rng.random((9, 9, 9)) < 0.2
        bits_b = rng.random((9, 9, 9)) < 0.2
        v1 = hd95(BinaryMask(g1, bits_a), BinaryMask(g1, bits_b))
        v2 = hd95(BinaryMask(g2, bits_a), BinaryMask(g2, bits_b))
        assert v2 == pytest.approx(2.5 * v1)


class TestLegacyCaseMetrics:
    def test_perfect_prediction(self, rng):
        spec = random_phantom_spec(rng, perturb=False)
        gt, pred = generate_phantom(spec)
        case = case_metrics_legacy(gt, pred, "case0")
        for region in REGIONS:
            assert case.per_region[region].dsc == 1.0
            assert case.per_region[region].hd95 == 0.0

    def test_spurious_et_penalty(self):
        vox_gt = np.zeros((8, 8, 8), np.uint8)
        vox_gt[2:5, 2:5, 2:5] = 2  # WT only
        vox_pred = vox_gt.copy()
        vox_pred[3, 3, 3] = 3  # spurious ET (also TC)
        case = case_metrics_legacy(labels_from_array(vox_gt), labels_from_array(vox_pred))
        assert case.per_region[Region.ET].dsc == 0.0
        assert case.per_region[Region.ET].hd95 == HD95_PENALTY

    def test_equals_region_by_region_recomputation(self, rng):
        spec = random_phantom_spec(rng)
        gt, pred = generate_phantom(spec)
        case = case_metrics_legacy(gt, pred)
        for region in REGIONS:
            gm = extract_region(gt, region)
            pm = extract_region(pred, region)
            assert case.per_region[region].dsc == pytest.approx(
                brute_dice(gm.bits, pm.bits), abs=1e-6)
            assert case.per_region[region].hd95 == pytest.approx(
                brute_hd95(gm.bits, pm.bits), abs=1e-5)


def two_blob_masks():
    g = Geometry((20, 20, 20))
    gt = np.zeros((20, 20, 20), bool)
    gt[2:5, 2:5, 2:5] = True
    return g, gt


class TestLesionMatch:
    def test_exact_single_lesion(self):
        g, gt = two_blob_masks()
        report = lesion_match(BinaryMask(g, gt), BinaryMask(g, gt.copy()))
        assert report.n_matched == 1
        assert report.false_positives == []
        assert report.false_negatives == []
        gid, pids, pair = report.matched[0]
        assert pair.dsc == 1.0 and pair.hd95 == 0.0

    def test_distant_blob_is_fp(self):
        g, gt = two_blob_masks()
        pred = gt.copy()
        pred[15:18, 15:18, 15:18] = True
        report = lesion_match(BinaryMask(g, gt), BinaryMask(g, pred))
        assert report.n_matched == 1
        assert len(report.false_positives) == 1
        assert report.false_negatives == []

    def test_missing_lesion_is_fn(self):
        g, gt = two_blob_masks()
        gt2 = gt.copy()
        gt2[15:18, 15:18, 15:18] = True
        report = lesion_match(BinaryMask(g, gt2), BinaryMask(g, gt))
        assert report.n_matched == 1
        assert report.false_positives == []
        assert len(report.false_negatives) == 1

    def test_multi_gt_assignment_largest_intersection(self):
        # one pred spanning two gt lesions goes to the one it overlaps more
        g = Geometry((20, 8, 8))
        gt = np.zeros((20, 8, 8), bool)
        gt[2:4, 2:5, 2:5] = True     # lesion 1, overlap 2 slabs
        gt[8:13, 2:5, 2:5] = True    # lesion 2, overlap 5 slabs
        pred = np.zeros((20, 8, 8), bool)
        pred[2:13, 2:5, 2:5] = True
        report = lesion_match(BinaryMask(g, gt), BinaryMask(g, pred))
        assert report.n_matched == 1
        gid, pids, _ = report.matched[0]
        assert gid == 2  # bigger overlap
        assert len(report.false_negatives) == 1

    def test_every_component_accounted_once(self, rng):
        g = Geometry((16, 16, 16))
        gt = BinaryMask(g, rng.random((16, 16, 16)) < 0.08)
        pred = BinaryMask(g, rng.random((16, 16, 16)) < 0.08)
        report = lesion_match(gt, pred)
        matched_pids = [pid for _, pids, _ in report.matched for pid in pids]
        assert len(matched_pids) == len(set(matched_pids))
        from bratskit.morphology import connected_components
        n_pred = connected_components(pred, report.params.connectivity).count
        n_gt = connected_components(gt, report.params.connectivity).count
        assert len(matched_pids) + len(report.false_positives) == n_pred
        assert report.n_matched + len(report.false_negatives) == n_gt


class TestLesionwiseCaseMetrics:
    def test_perfect_prediction(self, rng):
        spec = random_phantom_spec(rng, perturb=False)
        gt, pred = generate_phantom(spec)
        case, _ = case_metrics_lesionwise(gt, pred)
        for region in REGIONS:
            assert case.per_region[region].dsc == 1.0
            assert case.per_region[region].hd95 == 0.0

    def test_one_perfect_plus_one_fp_average(self):
        vox_gt = np.zeros((24, 24, 24), np.uint8)
        vox_gt[2:6, 2:6, 2:6] = 2
        vox_pred = vox_gt.copy()
        vox_pred[18:21, 18:21, 18:21] = 2  # far-away FP lesion
        case, reports = case_metrics_lesionwise(
            labels_from_array(vox_gt), labels_from_array(vox_pred))
        assert case.per_region[Region.WT].dsc == pytest.approx(0.5)
        assert case.per_region[Region.WT].hd95 == pytest.approx(HD95_PENALTY / 2)
        assert len(reports[Region.WT].false_positives) == 1

    def test_empty_empty_region(self):
        vox = np.zeros((6, 6, 6), np.uint8)
        vox[2, 2, 2] = 2  # WT only; TC and ET empty on both sides
        case, _ = case_metrics_lesionwise(labels_from_array(vox), labels_from_array(vox))
        assert case.per_region[Region.ET].dsc == 1.0
        assert case.per_region[Region.ET].hd95 == 0.0

    def test_fp_monotone_penalty(self):
        vox_gt = np.zeros((30, 30, 30), np.uint8)
        vox_gt[2:6, 2:6, 2:6] = 2
        vox_pred = vox_gt.copy()
        base, _ = case_metrics_lesionwise(labels_from_array(vox_gt),
                                          labels_from_array(vox_pred))
        vox_pred2 = vox_pred.copy()
        vox_pred2[24:27, 24:27, 24:27] = 2
        worse, _ = case_metrics_lesionwise(labels_from_array(vox_gt),
                                           labels_from_array(vox_pred2))
        assert worse.per_region[Region.WT].dsc <= base.per_region[Region.WT].dsc
        assert worse.per_region[Region.WT].hd95 >= base.per_region[Region.WT].hd95

    def test_single_matched_lesion_equals_legacy(self, rng):
        spec = random_phantom_spec(rng, max_lesions=1, perturb=False)
        gt, pred = generate_phantom(spec)
        legacy = case_metrics_legacy(gt, pred)
        lesionwise, _ = case_metrics_lesionwise(gt, pred)
        for region in REGIONS:
            assert lesionwise.per_region[region].dsc == pytest.approx(
                legacy.per_region[region].dsc)
            assert lesionwise.per_region[region].hd95 == pytest.approx(
                legacy.per_region[region].hd95)

    def test_min_gt_lesion_size_filter(self):
        vox_gt = np.zeros((20, 20, 20), np.uint8)
        vox_gt[2, 2, 2] = 2  # tiny lesion
        vox_gt[10:14, 10:14, 10:14] = 2
        vox_pred = np.zeros((20, 20, 20), np.uint8)
        vox_pred[10:14, 10:14, 10:14] = 2
        params = MatchParams(min_gt_lesion_size=5)
        case, reports = case_metrics_lesionwise(
            labels_from_array(vox_gt), labels_from_array(vox_pred), params)
        assert reports[Region.WT].false_negatives == []
        assert case.per_region[Region.WT].dsc == 1.0


def test_metrics_rows_schema():
    vox = np.zeros((6, 6, 6), np.uint8)
    vox[2, 2, 2] = 3
    case, reports = case_metrics_lesionwise(labels_from_array(vox), labels_from_array(vox))
    rows = metrics_rows(case, reports)
    assert [r[2] for r in rows] == ["ET", "TC", "WT"]
    assert all(r[1] == MetricMode.LesionWise.value for r in rows)
    assert rows[0][3] == "1.000000" and rows[0][4] == "0.000000"
