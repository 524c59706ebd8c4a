from datetime import datetime

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roadghg.counts import classify_length, estimate_counts, flow_per_vehicle, vehicle_length_cm
from roadghg.errors import SpeedUnavailableError, ValidationError
from roadghg.ingest import Detection
from roadghg.speed import SpeedEstimate
from roadghg.vehicles import LENGTH_CLASSES, Direction

S, M, L, VL = LENGTH_CLASSES


def det(length_px, gsd=0.31, width_px=5.0, label="Small car"):
    return Detection((0.0, length_px, 0.0, width_px), label, 0.9, gsd)


def of_length_cm(cm, gsd=0.31):
    return det(cm / 100.0 / gsd, gsd, width_px=1.0)


class TestClassify:
    def test_fifteen_px(self):
        d = det(15)
        assert vehicle_length_cm(d) == pytest.approx(465)
        assert classify_length(d) is S

    def test_forty_px_is_very_large(self):
        assert vehicle_length_cm(det(40)) == pytest.approx(1240)
        assert classify_length(det(40)) is VL

    @pytest.mark.parametrize("cm,cls", [(520, S), (521, M), (660, M), (661, L), (1160, L), (1161, VL), (1, S)])
    def test_boundaries(self, cm, cls):
        assert classify_length(of_length_cm(cm)) is cls

    def test_longer_edge_used(self):
        d = Detection((0, 5, 0, 15), "Bus", 0.9, 0.31)
        assert vehicle_length_cm(d) == pytest.approx(465)


class TestEstimate:
    def test_ten_small_at_sixty(self):
        est = estimate_counts([det(10)] * 10, 60.0, 1.0)
        assert est.counts_15min[S] == pytest.approx(150)
        assert est.total_15min == pytest.approx(150)
        assert est.n_detected[S] == 10

    def test_no_detections(self):
        est = estimate_counts([], 80.0, 2.0)
        assert all(v == 0 for v in est.counts_15min.values())
        assert est.total_15min == 0

    def test_zero_speed(self):
        est = estimate_counts([det(10), det(40)], 0.0, 1.0)
        assert est.total_15min == 0

    @pytest.mark.parametrize("length", [0.0, -1.0])
    def test_bad_segment(self, length):
        with pytest.raises(ValidationError):
            estimate_counts([det(10)], 60.0, length)

    def test_failed_speed_asks_for_historical(self):
        failed = SpeedEstimate(None, 0, (), 1, 0)
        with pytest.raises(SpeedUnavailableError, match="historical"):
            estimate_counts([det(10)], failed, 1.0)
        with pytest.raises(SpeedUnavailableError):
            estimate_counts([det(10)], None, 1.0)

    def test_speed_estimate_accepted(self):
        est = estimate_counts([det(10)], SpeedEstimate(60.0, 1, (4.33,), 1, 1), 1.0)
        assert est.total_15min == pytest.approx(15)

    def test_to_record_is_a_count_record(self):
        est = estimate_counts([det(10)] * 3 + [det(40)], 72.0, 1.5)
        rec = est.to_record(datetime(2018, 6, 12, 11), "LUT01A", Direction.A)
        assert rec.total == pytest.approx(est.total_15min)
        assert rec.mean_speed_kmh == 72.0
        assert not rec.missing

    def test_flow_per_vehicle(self):
        assert flow_per_vehicle(60.0, 1.0) == 15.0


lengths_px = st.lists(st.floats(1.0, 60.0), max_size=40)


@given(lengths_px, st.floats(0.0, 200.0), st.floats(0.05, 20.0))
def test_class_partition(lengths, speed, seg):
    est = estimate_counts([det(x) for x in lengths], speed, seg)
    assert sum(est.n_detected.values()) == len(lengths)
    assert est.total_15min == pytest.approx(sum(est.counts_15min.values()))
    assert all(v >= 0 for v in est.counts_15min.values())


@given(lengths_px, st.floats(1.0, 200.0), st.floats(0.05, 20.0))
def test_unit_coherence(lengths, speed, seg):
    dets = [det(x) for x in lengths]
    a = estimate_counts(dets, speed, seg)
    b = estimate_counts(dets, speed / seg, 1.0)
    for c in LENGTH_CLASSES:
        assert a.counts_15min[c] == pytest.approx(b.counts_15min[c], rel=1e-12)


@given(lengths_px, st.sampled_from([10.0, 19.0, 30.0, 45.0]), st.floats(1.0, 200.0))
def test_linearity_in_one_class(lengths, extra_px, speed):
    dets = [det(x) for x in lengths]
    extra = [det(extra_px)] * 3
    cls = classify_length(extra[0])
    base = estimate_counts(dets, speed, 1.3)
    only = estimate_counts(extra, speed, 1.3)
    doubled = estimate_counts(extra * 2, speed, 1.3)
    assert doubled.counts_15min[cls] == pytest.approx(2 * only.counts_15min[cls])
    combined = estimate_counts(dets + extra, speed, 1.3)
    for c in LENGTH_CLASSES:
        expected = base.counts_15min[c] + (only.counts_15min[c] if c is cls else 0.0)
        assert combined.counts_15min[c] == pytest.approx(expected)
