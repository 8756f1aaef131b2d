"""Array facts and the program-order fact store."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .symbolic import Assumptions, Property, Relation, SymRange, compare


@dataclass(frozen=True)
class FactEntry:
    """A fact about ``array`` over the subscript must-range ``subscript``.

    Exactly one of ``value`` / ``prop`` is set.  Monotonic properties use
    adjacent-pair semantics: for every t in the range, ``array[t-1]`` and
    ``array[t]`` are ordered.  All other payloads hold element-wise.
    """

    array: str
    subscript: SymRange
    value: Optional[SymRange] = None
    prop: Optional[Property] = None
    loop_id: str = ""
    rule: str = ""
    # resolved from values relative to a loop's entry when the loop collapsed
    composed: bool = field(default=False, compare=False)

    @property
    def payload(self) -> str:
        return self.prop.value if self.prop is not None else "ValueRange"

    def element_range(self) -> SymRange:
        """Elements whose values the fact constrains."""
        if self.prop is not None and self.prop.is_monotonic:
            return SymRange(self.subscript.lo - 1, self.subscript.hi)
        return self.subscript

    @property
    def implies_injective(self) -> bool:
        return self.prop in (
            Property.Injective,
            Property.Identity,
            Property.StrictMonotonic_inc,
            Property.StrictMonotonic_dec,
        )

    def render(self) -> str:
        what = self.value.render() if self.value is not None else self.prop.value
        return f"{self.array}: {self.subscript.render()}, {what}"

    def to_json(self) -> dict:
        return {
            "array": self.array,
            "subscript": [self.subscript.lo.render(), self.subscript.hi.render()],
            "payload": self.payload,
            "value": None if self.value is None else [self.value.lo.render(), self.value.hi.render()],
            "provenance": {"loop": self.loop_id, "rule": self.rule, "composed": self.composed},
            "text": self.render(),
        }


def disjoint(a: SymRange, b: SymRange, asm: Optional[Assumptions] = None) -> bool:
    """Provably no index lies in both ranges."""
    if a.is_bottom or b.is_bottom:
        return False
    return compare(a.hi, b.lo, asm) is Relation.LT or compare(b.hi, a.lo, asm) is Relation.LT


@dataclass
class Snapshot:
    point: int  # index of the top-level statement just executed
    line: int
    facts: Tuple[FactEntry, ...]
    scalars: Dict[str, SymRange]


@dataclass
class ProgramFacts:
    """Facts and scalar values valid at the current top-level program point."""

    params: frozenset = frozenset()
    facts: List[FactEntry] = field(default_factory=list)
    scalars: Dict[str, SymRange] = field(default_factory=dict)
    timeline: List[Snapshot] = field(default_factory=list)

    def assumptions(self) -> Assumptions:
        return Assumptions(self.params, {}, tuple(self.facts))

    def about(self, array: str) -> List[FactEntry]:
        return [f for f in self.facts if f.array == array]

    def kill(self, array: str, written: Optional[SymRange]) -> List[FactEntry]:
        """Drop facts on ``array`` that may overlap ``written`` (None: whole array)."""
        asm = self.assumptions()
        killed, kept = [], []
        for f in self.facts:
            if f.array == array and (written is None or not disjoint(f.element_range(), written, asm)):
                killed.append(f)
            else:
                kept.append(f)
        self.facts = kept
        return killed

    def add(self, fact: FactEntry) -> None:
        if fact not in self.facts:
            self.facts.append(fact)

    def snapshot(self, point: int, line: int) -> None:
        self.timeline.append(Snapshot(point, line, tuple(self.facts), dict(self.scalars)))

    def copy(self) -> "ProgramFacts":
        return ProgramFacts(self.params, list(self.facts), dict(self.scalars), list(self.timeline))

    def to_json(self) -> list:
        return [f.to_json() for f in self.facts]
