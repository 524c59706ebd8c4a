import json
from datetime import datetime, timezone

import pytest
from conftest import make_record
from hypothesis import given
from hypothesis import strategies as st

from roadghg.errors import ParseError, SchemaError, ValidationError
from roadghg.ingest import (
    COUNT_HEADER,
    Detection,
    ImageMeta,
    count_rows,
    filter_confident,
    parse_count_history,
    parse_detections,
    parse_factors,
    parse_la_truth,
    validate_site,
    write_count_history,
    write_detections,
    write_factors,
)
from roadghg.vehicles import Direction, LengthClass, RoadType, VehicleType

HEADER = ",".join(COUNT_HEADER)


def _meta(**kw):
    base = dict(
        acquisition_timestamp=datetime(2018, 6, 12, 10, 5, tzinfo=timezone.utc), site_id="LUT01A",
        la_name="Luton", direction=Direction.A, segment_length_km=1.5, gsd_m_per_px=0.31,
    )
    base.update(kw)
    return ImageMeta(**base)


def _write_doc(path, meta, detections):
    path.write_text(json.dumps({"meta": meta, "detections": detections}, indent=1))


class TestDetections:
    def test_single_record_round_trip(self, tmp_path):
        det = Detection((10, 26, 5, 13), "Small car", 0.9, 0.31)
        path = tmp_path / "d.json"
        write_detections(path, [det], _meta())
        dets, meta = parse_detections(path)
        assert dets == [det]
        assert meta == _meta()
        assert meta.band_time_lag_s == 0.26

    def test_empty_array(self, tmp_path):
        path = tmp_path / "d.json"
        write_detections(path, [], _meta())
        dets, meta = parse_detections(path)
        assert dets == []
        assert meta.site_id == "LUT01A"

    def test_degenerate_bbox_names_invariant_and_line(self, tmp_path):
        path = tmp_path / "d.json"
        good = {"bbox": [1, 5, 1, 5], "class": "Bus", "confidence": 0.5}
        bad = {"bbox": [10, 10, 5, 13], "class": "Small car", "confidence": 0.9}
        write_detections(path, [Detection((1, 5, 1, 5), "Bus", 0.5, 0.31)] * 2, _meta())
        lines = path.read_text().splitlines()
        lines[3] = "  " + json.dumps(bad)
        path.write_text("\n".join(lines))
        assert json.dumps(good) in lines[2]
        with pytest.raises(ParseError) as exc:
            parse_detections(path)
        assert exc.value.line == 4
        assert "x_min < x_max" in str(exc.value)

    def test_missing_meta_field(self, tmp_path):
        meta = _meta().to_json()
        del meta["gsd_m_per_px"]
        path = tmp_path / "d.json"
        _write_doc(path, meta, [])
        with pytest.raises(SchemaError, match="gsd_m_per_px"):
            parse_detections(path)

    def test_malformed_json_has_line(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text('{"meta": {},\n"detections": [\n{"bbox": [1,2,3,}\n]}')
        with pytest.raises(ParseError) as exc:
            parse_detections(path)
        assert exc.value.line == 3

    def test_missing_class_field(self, tmp_path):
        path = tmp_path / "d.json"
        _write_doc(path, _meta().to_json(), [{"bbox": [1, 2, 3, 4], "confidence": 0.5}])
        with pytest.raises(ParseError, match="class"):
            parse_detections(path)

    def test_timestamp_is_utc(self, tmp_path):
        meta = _meta().to_json()
        meta["acquisition_timestamp"] = "2018-06-12T11:05:00+01:00"
        path = tmp_path / "d.json"
        _write_doc(path, meta, [])
        _, parsed = parse_detections(path)
        assert parsed.acquisition_timestamp == datetime(2018, 6, 12, 10, 5, tzinfo=timezone.utc)

    def test_confidence_filter(self):
        dets = [Detection((0, 1, 0, 1), "Bus", c, 0.3) for c in (0.1, 0.25, 0.9)]
        assert [d.confidence for d in filter_confident(dets)] == [0.25, 0.9]


class TestCountHistory:
    def test_spec_row(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\n2017-03-01T08:15,site1,A,12,3,4,1,20,98.2\n")
        (rec,) = parse_count_history(path)
        assert rec.counts == {LengthClass.SMALL: 12, LengthClass.MEDIUM: 3, LengthClass.LARGE: 4,
                              LengthClass.VERY_LARGE: 1}
        assert rec.total == 20
        assert rec.mean_speed_kmh == 98.2
        assert rec.timestamp == datetime(2017, 3, 1, 8, 15)
        assert not rec.missing

    def test_total_mismatch_names_row(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\n2017-03-01T08:00,s,A,1,1,1,1,4,90\n2017-03-01T08:15,s,A,12,3,4,1,21,98.2\n")
        with pytest.raises(ParseError) as exc:
            parse_count_history(path)
        assert exc.value.line == 3
        assert "total" in str(exc.value)

    def test_missing_speed_is_flagged(self, tmp_path):
        path = tmp_path / "h.csv"
        rows = [f"2017-03-01T08:{m:02d},s,A,1,1,1,1,4,90" for m in (0, 15, 30, 45)]
        rows[2] = rows[2].rsplit(",", 1)[0] + ","
        path.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
        recs = parse_count_history(path)
        assert len(recs) == 4
        assert [r.missing for r in recs] == [False, False, True, False]

    def test_bad_timestamp(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\nyesterday,s,A,1,1,1,1,4,90\n")
        with pytest.raises(ParseError, match="timestamp"):
            parse_count_history(path)

    def test_off_boundary_timestamp(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\n2017-03-01T08:10,s,A,1,1,1,1,4,90\n")
        with pytest.raises(ParseError, match="15-minute"):
            parse_count_history(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("timestamp,site\n")
        with pytest.raises(SchemaError):
            parse_count_history(path)

    def test_sorted_by_timestamp(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\n2017-03-01T09:00,s,A,1,1,1,1,4,90\n2017-03-01T08:00,s,A,2,1,1,1,5,90\n")
        assert [r.total for r in parse_count_history(path)] == [5, 4]

    def test_round_trip(self, tmp_path):
        recs = [make_record(), make_record("2017-03-01T08:30", (5, None, 1, 0)),
                make_record("2017-03-01T08:45", speed=None)]
        path = tmp_path / "h.csv"
        write_count_history(path, recs)
        back = parse_count_history(path)
        assert back == recs
        write_count_history(tmp_path / "again.csv", back)
        assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()

    def test_fractional_counts_need_opt_in(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text(HEADER + "\n2017-03-01T08:15,s,A,1.5,0,0,0,1.5,90\n")
        with pytest.raises(ParseError):
            parse_count_history(path)
        (rec,) = parse_count_history(path, allow_fractional=True)
        assert rec.total == 1.5


class TestValidateSite:
    @staticmethod
    def _records(n, n_missing):
        out = []
        for i in range(n):
            ts = f"2017-01-{1 + i // 96:02d}T{(i % 96) // 4:02d}:{15 * (i % 4):02d}"
            out.append(make_record(ts, speed=None if i < n_missing else 90.0))
        return out

    def test_five_percent_usable(self):
        rep = validate_site(self._records(100, 5))
        assert rep.usable and rep.missing_fraction == 0.05 and rep.n_missing == 5

    def test_eleven_percent_unusable(self):
        assert not validate_site(self._records(100, 11)).usable

    def test_single_complete_record(self):
        rep = validate_site(self._records(1, 0))
        assert rep.usable and rep.missing_fraction == 0.0

    def test_empty_is_error(self):
        with pytest.raises(ValidationError):
            validate_site([])

    @given(st.integers(1, 60), st.data())
    def test_fraction_monotone_when_adding_complete(self, n, data):
        k = data.draw(st.integers(0, n))
        before = validate_site(self._records(n, k)).missing_fraction
        after = validate_site(self._records(n + 1, k)).missing_fraction
        assert after <= before


class TestFactors:
    def test_bundled_table_values(self):
        f = parse_factors()
        assert f.road_length_km[("Luton", RoadType.MOTORWAYS)] == 4.18
        assert f.conversion_kgco2e_per_litre["petrol"] == 2.16
        assert f.conversion_kgco2e_per_litre["diesel"] == 2.56
        assert f.fuel_km_per_litre[(VehicleType.CARS_TAXIS, "petrol")] == 20
        assert f.fuel_mix == {"petrol": 0.59, "diesel": 0.40}
        assert f.fuel_mix_residual == pytest.approx(0.01)

    def test_all_five_las_present(self):
        f = parse_factors()
        for la in ("Luton", "Blackburn", "Hounslow", "Havering", "Trafford"):
            assert (la, RoadType.MOTORWAYS) in f.road_length_km

    def test_round_trip(self, tmp_path):
        f = parse_factors()
        write_factors(tmp_path / "f.csv", f)
        assert parse_factors(tmp_path / "f.csv") == f

    def test_fuel_mix_file(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("table,key,subkey,value,vintage\n"
                        "road_length_km,X,Motorways,1,\nconversion_kgco2e_per_litre,petrol,,2.16,\n"
                        "fuel_km_per_litre,cars_taxis,petrol,20,\nfuel_mix,petrol,,0.59,\nfuel_mix,diesel,,0.40,\n")
        assert parse_factors(path).fuel_mix_residual == pytest.approx(0.01)

    @pytest.mark.parametrize("row", ["road_length_km,X,Motorways,0,", "road_length_km,X,Motorways,-2,"])
    def test_non_positive_rejected(self, tmp_path, row):
        path = tmp_path / "f.csv"
        path.write_text("table,key,subkey,value,vintage\n" + row + "\n")
        with pytest.raises(ParseError, match="positive"):
            parse_factors(path)

    def test_unknown_road_type(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("table,key,subkey,value,vintage\nroad_length_km,X,Cycle Lanes,3,\n")
        with pytest.raises(ParseError):
            parse_factors(path)

    def test_fuel_mix_over_one(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("table,key,subkey,value,vintage\nfuel_mix,petrol,,0.7,\nfuel_mix,diesel,,0.4,\n")
        with pytest.raises(ValidationError):
            parse_factors(path)


def test_la_truth_header_checked(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("la,year\n")
    with pytest.raises(SchemaError):
        parse_la_truth(path)


def test_count_rows_blank_for_missing():
    rows = count_rows([make_record(speed=None)])
    assert rows[0][-1] == ""
