"""Grasp taxonomy (33 classes) and the tripod virtual-finger allocation."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Union

from .errors import ConfigurationError, InvalidInputError

FINGERS = (1, 2, 3, 4, 5)
FINGER_NAMES = {1: "thumb", 2: "index", 3: "middle", 4: "ring", 5: "little"}
PALM = "P"
CSV_HEADER = ("id", "name", "type", "opposition", "thumb", "vf1", "vf2", "vf3", "min_fingers")


class GraspType(str, enum.Enum):
    POWER = "Power"
    PRECISION = "Precision"
    INTERMEDIATE = "Intermediate"


class Opposition(str, enum.Enum):
    PALM = "Palm"
    PAD = "Pad"
    SIDE = "Side"


class Thumb(str, enum.Enum):
    ABDUCTED = "Abducted"
    ADDUCTED = "Adducted"


@dataclass(frozen=True, order=True)
class VFMember:
    """One entry of a virtual-finger cell: a finger id or the palm."""

    part: Union[int, str]
    optional: bool = False

    def __str__(self) -> str:
        return f"{self.part}{'~' if self.optional else ''}"


def parse_vf_cell(text: str) -> Optional[tuple[VFMember, ...]]:
    """Parse ``"2-3-4-5"``, ``"1-P"``, ``"1~"``; empty means unspecified (None)."""
    text = text.strip()
    if not text:
        return None
    members = []
    for tok in text.split("-"):
        optional = tok.endswith("~")
        tok = tok.rstrip("~")
        if tok == PALM:
            part: Union[int, str] = PALM
        else:
            try:
                part = int(tok)
            except ValueError:
                raise ConfigurationError(f"bad virtual-finger token {tok!r}") from None
            if part not in FINGERS:
                raise ConfigurationError(f"finger id {part} out of range 1-5")
        members.append(VFMember(part, optional))
    return tuple(members)


def format_vf_cell(cell: Optional[tuple[VFMember, ...]]) -> str:
    if cell is None:
        return ""
    return "-".join(str(m) for m in cell)


@dataclass(frozen=True)
class GraspClass:
    id: int
    name: str
    grasp_type: GraspType
    opposition: Opposition
    thumb: Thumb
    vf1: Optional[tuple[VFMember, ...]]
    vf2: Optional[tuple[VFMember, ...]]
    vf3: Optional[tuple[VFMember, ...]]
    min_fingers: int

    @property
    def vf_allocation(self) -> dict[str, Optional[tuple[VFMember, ...]]]:
        return {"VF1": self.vf1, "VF2": self.vf2, "VF3": self.vf3}

    def csv_row(self) -> list[str]:
        return [str(self.id), self.name, self.grasp_type.value, self.opposition.value,
                self.thumb.value, format_vf_cell(self.vf1), format_vf_cell(self.vf2),
                format_vf_cell(self.vf3), str(self.min_fingers)]


@dataclass(frozen=True)
class GraspQuery:
    grasp_type: Optional[GraspType] = None
    opposition: Optional[Opposition] = None
    thumb: Optional[Thumb] = None
    max_min_fingers: Optional[int] = None

    def __post_init__(self):
        if (self.grasp_type is None and self.opposition is None and self.thumb is None
                and self.max_min_fingers is None):
            raise InvalidInputError("grasp query needs at least one field set")
        # accept plain strings
        if self.grasp_type is not None:
            object.__setattr__(self, "grasp_type", GraspType(self.grasp_type))
        if self.opposition is not None:
            object.__setattr__(self, "opposition", Opposition(self.opposition))
        if self.thumb is not None:
            object.__setattr__(self, "thumb", Thumb(self.thumb))

    def matches(self, g: GraspClass) -> bool:
        return ((self.grasp_type is None or g.grasp_type is self.grasp_type)
                and (self.opposition is None or g.opposition is self.opposition)
                and (self.thumb is None or g.thumb is self.thumb)
                and (self.max_min_fingers is None or g.min_fingers <= self.max_min_fingers))


class TaxonomyTable(tuple):
    """Immutable, id-ordered tuple of :class:`GraspClass` with id lookup."""

    def by_id(self, grasp_id: int) -> GraspClass:
        for g in self:
            if g.id == grasp_id:
                return g
        raise KeyError(grasp_id)

    @property
    def version(self) -> int:
        return self._version  # type: ignore[attr-defined]


def _validate(table: list[GraspClass]) -> None:
    ids = [g.id for g in table]
    if len(table) != 33 or sorted(ids) != list(range(1, 34)):
        raise ConfigurationError("taxonomy must hold ids 1..33 exactly once")
    for g in table:
        if g.min_fingers not in (2, 3):
            raise ConfigurationError(f"grasp {g.id}: min_fingers {g.min_fingers} not in {{2, 3}}")
        seen: set = set()
        for cell in (g.vf1, g.vf2, g.vf3):
            for m in cell or ():
                if m.part in seen:
                    raise ConfigurationError(f"grasp {g.id}: {m.part} in two virtual fingers")
                seen.add(m.part)


def _from_record(rec: dict) -> GraspClass:
    try:
        return GraspClass(
            id=int(rec["id"]), name=str(rec["name"]),
            grasp_type=GraspType(rec["type"]), opposition=Opposition(rec["opposition"]),
            thumb=Thumb(rec["thumb"]),
            vf1=parse_vf_cell(rec["vf1"]), vf2=parse_vf_cell(rec["vf2"]),
            vf3=parse_vf_cell(rec["vf3"]), min_fingers=int(rec["min_fingers"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"corrupt taxonomy record {rec!r}: {exc}") from exc


def table_from_json(text: str) -> TaxonomyTable:
    try:
        doc = json.loads(text)
        records = doc["grasps"]
        version = int(doc["version"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigurationError(f"corrupt taxonomy data: {exc}") from exc
    table = sorted((_from_record(r) for r in records), key=lambda g: g.id)
    _validate(table)
    out = TaxonomyTable(table)
    out._version = version  # type: ignore[attr-defined]
    return out


@lru_cache(maxsize=1)
def load_taxonomy() -> TaxonomyTable:
    text = resources.files("tripod_haptics").joinpath("data/taxonomy.json").read_text("utf-8")
    return table_from_json(text)


def filter_grasps(q: GraspQuery, table: Optional[Iterable[GraspClass]] = None) -> list[GraspClass]:
    table = load_taxonomy() if table is None else table
    return sorted((g for g in table if q.matches(g)), key=lambda g: g.id)


@dataclass(frozen=True)
class VFAssignment:
    vf1: frozenset
    vf2: frozenset
    vf3: frozenset

    def __iter__(self):
        return iter((self.vf1, self.vf2, self.vf3))

    def vf_of(self, finger: int) -> Optional[int]:
        for i, members in enumerate(self, start=1):
            if finger in members:
                return i
        return None


def assign_virtual_fingers(active_fingers: Iterable[int]) -> VFAssignment:
    """Tripod allocation: thumb -> VF1, index -> VF2, middle/ring/little -> VF3."""
    active = frozenset(active_fingers)
    if not active:
        raise InvalidInputError("no active fingers")
    if not active <= set(FINGERS):
        raise InvalidInputError(f"finger ids must be in 1..5, got {sorted(active)}")
    return VFAssignment(active & {1}, active & {2}, active & {3, 4, 5})


def export_csv(grasps: Iterable[GraspClass]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for g in grasps:
        w.writerow(g.csv_row())
    return buf.getvalue()
