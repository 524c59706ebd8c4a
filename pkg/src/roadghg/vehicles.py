"""Vehicle categories shared across the pipeline.

Two taxonomies meet here: the length classes reported by motorway count
sites, and the four vehicle types used for LA AADT and emissions.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields


class LengthClass(str, enum.Enum):
    SMALL = "S"
    MEDIUM = "M"
    LARGE = "L"
    VERY_LARGE = "VL"

    @property
    def column(self) -> str:
        return _LENGTH_COLUMNS[self]


# upper bound (inclusive) in cm for each class; VERY_LARGE is open-ended
LENGTH_BOUNDS_CM = {
    LengthClass.SMALL: 520.0,
    LengthClass.MEDIUM: 660.0,
    LengthClass.LARGE: 1160.0,
    LengthClass.VERY_LARGE: float("inf"),
}

# fixed column order in count files
LENGTH_CLASSES = (LengthClass.SMALL, LengthClass.MEDIUM, LengthClass.LARGE, LengthClass.VERY_LARGE)

_LENGTH_COLUMNS = {
    LengthClass.SMALL: "small",
    LengthClass.MEDIUM: "medium",
    LengthClass.LARGE: "large",
    LengthClass.VERY_LARGE: "very_large",
}


def length_class_for_cm(length_cm: float) -> LengthClass:
    # rounding keeps float noise (e.g. 520.0000000000001) on the intended side
    length = round(length_cm, 6)
    for cls in LENGTH_CLASSES:
        if length <= LENGTH_BOUNDS_CM[cls]:
            return cls
    return LengthClass.VERY_LARGE


class VehicleType(str, enum.Enum):
    """UK dataset vehicle categories used for AADT and emissions."""

    CARS_TAXIS = "cars_taxis"
    LGV = "lgv"
    HGV = "hgv"
    BUSES_COACHES = "buses_coaches"


VEHICLE_TYPES = (VehicleType.CARS_TAXIS, VehicleType.LGV, VehicleType.HGV, VehicleType.BUSES_COACHES)


class RoadType(str, enum.Enum):
    MOTORWAYS = "Motorways"
    A_ROADS = "A-Roads"
    MINOR_ROADS = "Minor Roads"

    @property
    def slug(self) -> str:
        return self.value.lower().replace(" ", "-")

    @classmethod
    def parse(cls, text: str) -> "RoadType":
        key = text.strip().lower().replace("_", "-").replace(" ", "-")
        for member in cls:
            if member.slug == key:
                return member
        raise ValueError(f"unknown road type {text!r}; expected one of {[m.value for m in cls]}")


class Direction(str, enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class AADTVector:
    """Annual average daily traffic per vehicle type, vehicles/day."""

    cars_taxis: float = 0.0
    lgv: float = 0.0
    hgv: float = 0.0
    buses_coaches: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value >= 0:
                raise ValueError(f"AADT component {f.name} must be non-negative, got {value}")

    def __getitem__(self, vtype: VehicleType | str) -> float:
        return getattr(self, VehicleType(vtype).value)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cars_taxis, self.lgv, self.hgv, self.buses_coaches)

    def as_dict(self) -> dict[VehicleType, float]:
        return dict(zip(VEHICLE_TYPES, self.as_tuple()))

    @property
    def total(self) -> float:
        return sum(self.as_tuple())

    @classmethod
    def from_sequence(cls, values) -> "AADTVector":
        values = [float(v) for v in values]
        if len(values) != 4:
            raise ValueError(f"AADT vector needs 4 components, got {len(values)}")
        return cls(*values)

    @classmethod
    def from_mapping(cls, mapping) -> "AADTVector":
        return cls(**{VehicleType(k).value: float(v) for k, v in mapping.items()})

    def scaled(self, factor: float) -> "AADTVector":
        return AADTVector(*(v * factor for v in self.as_tuple()))
