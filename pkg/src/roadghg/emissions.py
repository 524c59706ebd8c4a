"""Annual GHG emissions from LA AADT, and the detection-based vehicle-type fallback.

Per vehicle type::

    VKT     = AADT * road length (km) * 365
    litres  = sum over fuels of  share(fuel) * VKT / km_per_litre(type, fuel)
    kg CO2e = sum over fuels of  litres(fuel) * kgCO2e_per_litre(fuel)

Types with more than one fuel entry (cars, LGVs) are split by the fleet fuel
mix; the unassigned share (electric/hybrid) burns nothing. Types with a
single entry (HGVs, buses) use it for the whole fleet.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from .errors import ValidationError
from .ingest import EmissionsFactors
from .vehicles import VEHICLE_TYPES, AADTVector, RoadType, VehicleType

DAYS_PER_YEAR = 365
EMISSIONS_HEADER = ["la", "road_type", "vehicle_type", "fuel", "vkt_km", "litres", "kgco2e"]

ASSUMPTIONS = (
    "HGV and bus/coach fleets are 100% diesel",
    "bus/coach fuel consumption reuses the HGV km/litre figure",
    "the diesel conversion factor applies to LGV, HGV and bus diesel; petrol to car and LGV petrol",
    "the fuel-mix residual (electric/hybrid) has zero tailpipe emissions",
)


@dataclass(frozen=True)
class EmissionsReport:
    la_name: str
    road_type: RoadType
    road_length_km: float
    vkt_per_type: dict  # VehicleType -> km / year
    litres_per_type_fuel: dict  # (VehicleType, fuel) -> litres / year
    kgco2e_per_type_fuel: dict  # (VehicleType, fuel) -> kg CO2e / year
    assumptions: tuple = field(default=ASSUMPTIONS, compare=False)

    @property
    def per_type_kgco2e(self) -> dict:
        out = {v: 0.0 for v in VEHICLE_TYPES}
        for (vtype, _), kg in self.kgco2e_per_type_fuel.items():
            out[vtype] += kg
        return out

    @property
    def total_kgco2e(self) -> float:
        return sum(self.per_type_kgco2e.values())

    def rows(self) -> list[list]:
        return [
            [self.la_name, self.road_type.value, vtype.value, fuel,
             self.vkt_per_type[vtype], litres, self.kgco2e_per_type_fuel[(vtype, fuel)]]
            for (vtype, fuel), litres in self.litres_per_type_fuel.items()
        ]

    def format(self) -> str:
        lines = [f"{self.la_name} {self.road_type.value} ({self.road_length_km} km)"]
        lines.append(f"{'vehicle_type':<14}{'VKT km/yr':>16}{'kg CO2e/yr':>18}")
        per_type = self.per_type_kgco2e
        for vtype in VEHICLE_TYPES:
            lines.append(f"{vtype.value:<14}{self.vkt_per_type[vtype]:>16,.0f}{per_type[vtype]:>18,.0f}")
        lines.append(f"{'TOTAL':<14}{sum(self.vkt_per_type.values()):>16,.0f}{self.total_kgco2e:>18,.0f}")
        lines.append("assumptions:")
        lines.extend(f"  - {a}" for a in self.assumptions)
        return "\n".join(lines)


def compute_emissions(aadt: AADTVector, factors: EmissionsFactors, la_name: str, road_type) -> EmissionsReport:
    road_type = RoadType(road_type) if not isinstance(road_type, RoadType) else road_type
    key = (la_name, road_type)
    if key not in factors.road_length_km:
        raise ValidationError(f"missing factor road_length_km[{la_name}, {road_type.value}]")
    length = factors.road_length_km[key]
    vkt, litres, kg = {}, {}, {}
    for vtype in VEHICLE_TYPES:
        vkt[vtype] = aadt[vtype] * length * DAYS_PER_YEAR
        fuels = factors.fuels_for(vtype)
        if not fuels:
            raise ValidationError(f"missing factor fuel_km_per_litre[{vtype.value}, *]")
        for fuel in fuels:
            if len(fuels) == 1:
                share = 1.0
            elif fuel in factors.fuel_mix:
                share = factors.fuel_mix[fuel]
            else:
                raise ValidationError(f"missing factor fuel_mix[{fuel}]")
            if fuel not in factors.conversion_kgco2e_per_litre:
                raise ValidationError(f"missing factor conversion_kgco2e_per_litre[{fuel}]")
            litres[(vtype, fuel)] = share * vkt[vtype] / factors.fuel_km_per_litre[(vtype, fuel)]
            kg[(vtype, fuel)] = litres[(vtype, fuel)] * factors.conversion_kgco2e_per_litre[fuel]
    return EmissionsReport(la_name, road_type, length, vkt, litres, kg)


def emissions_rows(reports) -> list[list]:
    return [row for r in reports for row in r.rows()]


# -- no-vehicle-type fallback --------------------------------------------------------------

_XVIEW_TABLE = {
    VehicleType.CARS_TAXIS: ("Passenger vehicle", "Small car", "Passenger car"),
    VehicleType.LGV: ("Pickup Truck", "Utility Truck", "Truck", "Trailer", "Truck w/ Box", "Cargo car"),
    VehicleType.HGV: ("Cargo Truck", "Truck Tractor", "Truck w/ Flatbed", "Truck w/Liquid"),
    VehicleType.BUSES_COACHES: ("Bus",),
}


def _normalize_label(label: str) -> str:
    text = re.sub(r"\s+", " ", label.strip().lower())
    return re.sub(r"\s*/\s*", "/", text)


XVIEW_LABELS = tuple(label for labels in _XVIEW_TABLE.values() for label in labels)
_XVIEW_LOOKUP = {_normalize_label(label): vtype for vtype, labels in _XVIEW_TABLE.items() for label in labels}


def map_xview_to_uk(label: str) -> VehicleType:
    """Map an xView vehicle label onto a UK vehicle type (case and spacing insensitive)."""
    try:
        return _XVIEW_LOOKUP[_normalize_label(label)]
    except KeyError:
        raise ValidationError(f"unknown xView vehicle label {label!r}; valid labels: {', '.join(XVIEW_LABELS)}") from None


def apportion_aadt(total_aadt: float, detections) -> AADTVector:
    """Split a single AADT figure by the share of detections in each vehicle type."""
    if not total_aadt >= 0:
        raise ValidationError(f"total AADT must be non-negative, got {total_aadt}")
    counts = {v: 0 for v in VEHICLE_TYPES}
    unmapped = 0
    for d in detections:
        label = getattr(d, "source_class", d)
        try:
            counts[map_xview_to_uk(label)] += 1
        except ValidationError:
            unmapped += 1
    n = sum(counts.values())
    if n == 0:
        raise ValidationError("no detections map to a UK vehicle type; cannot apportion AADT")
    if unmapped:
        warnings.warn(f"{unmapped} detection(s) with unmapped labels excluded from apportioning", RuntimeWarning,
                      stacklevel=2)
    return AADTVector(**{v.value: total_aadt * counts[v] / n for v in VEHICLE_TYPES})
