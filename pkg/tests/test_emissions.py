import csv
import io
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from roadghg.emissions import (
    EMISSIONS_HEADER,
    XVIEW_LABELS,
    apportion_aadt,
    compute_emissions,
    emissions_rows,
    map_xview_to_uk,
)
from roadghg.errors import ValidationError
from roadghg.ingest import Detection, parse_factors
from roadghg.vehicles import VEHICLE_TYPES, AADTVector, RoadType, VehicleType

FACTORS = parse_factors()
CARS, LGV, HGV, BUS = VEHICLE_TYPES
aadt_values = st.floats(0, 2e5, allow_subnormal=False)


def det(label):
    return Detection((0, 10, 0, 4), label, 0.9, 0.31)


class TestCompute:
    def test_zero(self):
        rep = compute_emissions(AADTVector(0, 0, 0, 0), FACTORS, "Luton", RoadType.MOTORWAYS)
        assert rep.total_kgco2e == 0
        assert all(v == 0 for v in rep.vkt_per_type.values())

    def test_luton_cars_hand_value(self):
        # 10,000 x 4.18 x 365 = 15,257,000 km; petrol 450,081.5 l -> 972,176.04 kg;
        # diesel 265,339.1304... l -> 679,268.1739... kg
        rep = compute_emissions(AADTVector(10_000, 0, 0, 0), FACTORS, "Luton", "Motorways")
        assert rep.vkt_per_type[CARS] == pytest.approx(15_257_000, rel=1e-12)
        assert rep.litres_per_type_fuel[(CARS, "petrol")] == pytest.approx(450_081.5, rel=1e-12)
        assert rep.kgco2e_per_type_fuel[(CARS, "petrol")] == pytest.approx(972_176.04, rel=1e-12)
        assert rep.kgco2e_per_type_fuel[(CARS, "diesel")] == pytest.approx(679_268.1739130435, rel=1e-12)
        assert rep.total_kgco2e == pytest.approx(1_651_444.2139130435, rel=1e-12)
        assert rep.total_kgco2e == pytest.approx(float(oracles.emissions_total("Luton", 10_000, 0, 0, 0)),
                                                 rel=1e-12)

    @given(aadt_values, aadt_values, aadt_values, aadt_values, st.sampled_from(sorted(oracles.ROAD_KM)))
    def test_matches_oracle(self, c, l, h, b, la):
        rep = compute_emissions(AADTVector(c, l, h, b), FACTORS, la, RoadType.MOTORWAYS)
        ref = oracles.emissions(la, c, l, h, b)
        for v in VEHICLE_TYPES:
            assert rep.per_type_kgco2e[v] == pytest.approx(float(ref[v.value]), rel=1e-9, abs=1e-9)

    @given(aadt_values, aadt_values, aadt_values, aadt_values)
    def test_halving_halves(self, c, l, h, b):
        full = compute_emissions(AADTVector(c, l, h, b), FACTORS, "Trafford", RoadType.MOTORWAYS)
        half = compute_emissions(AADTVector(c / 2, l / 2, h / 2, b / 2), FACTORS, "Trafford", RoadType.MOTORWAYS)
        for key, kg in full.kgco2e_per_type_fuel.items():
            assert half.kgco2e_per_type_fuel[key] == kg / 2

    @given(st.floats(1, 1e5))
    def test_longer_road_more_emissions(self, aadt):
        vec = AADTVector(aadt, aadt, aadt, aadt)
        short = compute_emissions(vec, FACTORS, "Luton", RoadType.MOTORWAYS).total_kgco2e
        long_ = compute_emissions(vec, FACTORS, "Havering", RoadType.MOTORWAYS).total_kgco2e
        assert long_ > short

    @given(aadt_values, aadt_values)
    def test_fuel_mix_completeness(self, c, l):
        rep = compute_emissions(AADTVector(c, l, 0, 0), FACTORS, "Luton", RoadType.MOTORWAYS)
        for v in (CARS, LGV):
            litres = sum(x for (t, _), x in rep.litres_per_type_fuel.items() if t is v)
            expected = rep.vkt_per_type[v] * sum(
                FACTORS.fuel_mix[f] / FACTORS.fuel_km_per_litre[(v, f)] for f in ("petrol", "diesel"))
            assert litres == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_single_fuel_types_all_diesel(self):
        rep = compute_emissions(AADTVector(0, 0, 100, 100), FACTORS, "Luton", RoadType.MOTORWAYS)
        assert set(rep.litres_per_type_fuel) >= {(HGV, "diesel"), (BUS, "diesel")}
        assert (HGV, "petrol") not in rep.litres_per_type_fuel

    def test_missing_road_length_named(self):
        with pytest.raises(ValidationError, match=r"road_length_km\[Luton, A-Roads\]"):
            compute_emissions(AADTVector(1, 1, 1, 1), FACTORS, "Luton", RoadType.A_ROADS)

    def test_report_rows_and_text(self):
        rep = compute_emissions(AADTVector(40000, 7000, 5000, 300), FACTORS, "Luton", RoadType.MOTORWAYS)
        rows = emissions_rows([rep])
        assert len(rows[0]) == len(EMISSIONS_HEADER)
        assert sum(r[-1] for r in rows) == pytest.approx(rep.total_kgco2e)
        text = rep.format()
        assert "TOTAL" in text and "assumptions" in text
        buf = io.StringIO()
        csv.writer(buf).writerows(rows)
        assert buf.getvalue().count("\n") == len(rows) == 6


TABLE = {
    "Passenger vehicle": CARS, "Small car": CARS, "Passenger car": CARS,
    "Pickup Truck": LGV, "Utility Truck": LGV, "Truck": LGV, "Trailer": LGV, "Truck w/ Box": LGV, "Cargo car": LGV,
    "Cargo Truck": HGV, "Truck Tractor": HGV, "Truck w/ Flatbed": HGV, "Truck w/Liquid": HGV,
    "Bus": BUS,
}


class TestMapping:
    @pytest.mark.parametrize("label,vtype", TABLE.items())
    def test_table(self, label, vtype):
        assert map_xview_to_uk(label) is vtype

    def test_normalisation(self):
        assert map_xview_to_uk("  pickup   TRUCK ") is LGV
        assert map_xview_to_uk("truck w /liquid") is HGV

    def test_labels_complete(self):
        assert set(XVIEW_LABELS) == set(TABLE)

    @pytest.mark.parametrize("label", ["Motorcycle", "Aircraft", "", "Busses"])
    def test_unknown_lists_alternatives(self, label):
        with pytest.raises(ValidationError) as exc:
            map_xview_to_uk(label)
        for valid in TABLE:
            assert valid in str(exc.value)


class TestApportion:
    def test_cars_and_buses(self):
        out = apportion_aadt(50_000, [det("Small car")] * 8 + [det("Bus")] * 2)
        assert out.as_tuple() == (40_000, 0, 0, 10_000)

    def test_one_class(self):
        assert apportion_aadt(1234.5, [det("Truck Tractor")] * 3).hgv == 1234.5

    def test_zero_total(self):
        assert apportion_aadt(0, [det("Bus"), det("Truck")]).total == 0

    def test_unmapped_warned_and_excluded(self):
        with pytest.warns(RuntimeWarning, match="1 detection"):
            out = apportion_aadt(100, [det("Bus"), det("Motorcycle")])
        assert out.buses_coaches == 100

    def test_nothing_mappable(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(ValidationError):
                apportion_aadt(100, [det("Motorcycle")])

    @given(st.floats(0, 1e6), st.lists(st.sampled_from(sorted(TABLE)), min_size=1, max_size=60))
    def test_conservation(self, total, labels):
        out = apportion_aadt(total, [det(x) for x in labels])
        assert out.total == pytest.approx(total, rel=1e-9, abs=1e-9)
        n = {v: sum(TABLE[x] is v for x in labels) for v in VEHICLE_TYPES}
        for v in VEHICLE_TYPES:
            assert out[v] == pytest.approx(total * n[v] / len(labels), rel=1e-12)


def test_vehicle_type_enum_has_four_values():
    assert len(VehicleType) == 4
