"""Structured pass/fail records shared by every verification routine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class Measurement:
    quantity: str
    value: float
    limit: float | None = None
    relation: str = "info"  # one of "<", "<=", ">", ">=", "info"

    @property
    def passed(self) -> bool:
        v, lim = self.value, self.limit
        if self.relation == "info" or lim is None:
            return True
        if v != v:  # NaN never passes a bound
            return False
        return {
            "<": v < lim,
            "<=": v <= lim,
            ">": v > lim,
            ">=": v >= lim,
        }[self.relation]

    def line(self) -> str:
        if self.relation == "info" or self.limit is None:
            return f"  {self.quantity} = {self.value:.10g}"
        mark = "ok" if self.passed else "FAIL"
        return f"  {self.quantity} = {self.value:.10g}  ({self.relation} {self.limit:.3g}) {mark}"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification: passes iff every bounded measurement does."""

    name: str
    measured: tuple[Measurement, ...]
    tolerance: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.measured)

    def get(self, quantity: str) -> float:
        for m in self.measured:
            if m.quantity == quantity:
                return m.value
        raise KeyError(quantity)

    def failures(self) -> list[Measurement]:
        return [m for m in self.measured if not m.passed]

    def text(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        lines = [head] + [m.line() for m in self.measured] + [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.text()


def combine(name: str, reports: Iterable[CheckReport]) -> CheckReport:
    """Merge several reports, prefixing each measurement with its origin."""
    measured, notes = [], []
    for r in reports:
        measured += [Measurement(f"{r.name}: {m.quantity}", m.value, m.limit, m.relation)
                     for m in r.measured]
        notes += [f"{r.name}: {n}" for n in r.notes]
    return CheckReport(name, tuple(measured), None, tuple(notes))
