"""Irregular towers over symbolic block hierarchies.

An irregular tower is a family of atoms; atom ``a`` has a base of measure
``base`` and a column of ``height`` levels, level ``k`` being the image of the
base under ``T^k``.  Levels carry labels: a single label for a pure level, or a
mapping label -> fraction of the level when the level is mixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .blocks import BlockHierarchy, Ref
from .errors import CapExceededError, InvalidInputError

DEFAULT_HEIGHT_CAP = 10**5


@dataclass(frozen=True)
class TowerAtom:
    name: str
    height: int
    base: Fraction
    levels: Optional[tuple] = None

    def __post_init__(self):
        if self.height < 1:
            raise InvalidInputError("tower heights must be at least 1")
        if self.base < 0:
            raise InvalidInputError("base measures must be nonnegative")
        if self.levels is not None and len(self.levels) != self.height:
            raise InvalidInputError("one label per level is required")


@dataclass(frozen=True)
class IrregularTower:
    atoms: tuple
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.mass() > 1:
            raise InvalidInputError("tower mass exceeds 1")

    def mass(self) -> Fraction:
        return sum((a.base * a.height for a in self.atoms), Fraction(0))

    def heights(self) -> list:
        return [a.height for a in self.atoms]


@dataclass(frozen=True)
class PartitionSpec:
    cells: tuple
    assignment: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if len(set(self.cells)) != len(self.cells):
            raise InvalidInputError("partition cells must be distinct")
        if any(c not in self.cells for c in self.assignment.values()):
            raise InvalidInputError("assignment points to an unknown cell")

    @classmethod
    def by_symbol(cls, symbols) -> "PartitionSpec":
        symbols = tuple(symbols)
        return cls(symbols, {s: s for s in symbols})

    def cell_of(self, label):
        try:
            return self.assignment[label]
        except KeyError:
            raise InvalidInputError(f"label {label!r} outside the partition's domain") from None


def towers_from_level(h: BlockHierarchy, n: int, top: Optional[int] = None, height_cap: int = DEFAULT_HEIGHT_CAP) -> IrregularTower:
    """One atom per level-n type, with base measure mu(R_n^i) at finite scale."""
    top = h.n_max if top is None else top
    if n == top:
        values = [Fraction(int(i == 0)) for i in range(h.num_types(n))]
    else:
        values = h.tower_measures(n, top)["values"]
    atoms, notes = [], []
    for i, v in enumerate(values):
        length = h.length(n, i)
        levels = None
        if length <= height_cap:
            levels = tuple(int(s) for s in h.expand(n, i, cap=height_cap).symbols)
        else:
            notes.append(f"type {i}: height {length} above cap {height_cap}, levels kept symbolic")
        atoms.append(TowerAtom(f"B{n}^{i}", length, v / length, levels))
    return IrregularTower(tuple(atoms), tuple(notes))


def canonical_embedding(h: BlockHierarchy, n: int, max_entries: int = 10**6) -> dict:
    """Where each level-n block sits inside each level-(n+1) block.

    Returns ``{coarse type j: [(fine type i, offset), ...]}``.
    """
    out = {j: [] for j in range(h.num_types(n))}
    total = 0
    for i, bt in enumerate(h.types(n + 1)):
        total += sum(h.direct_counts(n + 1, i))
        if total > max_entries:
            raise CapExceededError("too many block occurrences to list")
        period = h.length(n + 1, i) // bt.repeat
        for r in range(bt.repeat):
            pos = r * period
            for item in bt.items:
                if isinstance(item, Ref):
                    clen = h.length(n, item.index)
                    for c in range(item.count):
                        out[item.index].append((i, pos + c * clen))
                pos += h._item_length(n + 1, item)
    return out


def check_nesting(fine: IrregularTower, coarse: IrregularTower, embedding: dict) -> dict:
    """Check that each coarse column sits inside fine columns at the given offsets."""
    violations = []
    used = {}
    for j, entries in embedding.items():
        if not 0 <= j < len(coarse.atoms):
            violations.append({"coarse": j, "problem": "unknown coarse atom"})
            continue
        cj = coarse.atoms[j]
        mass = Fraction(0)
        for i, l in entries:
            if not 0 <= i < len(fine.atoms):
                violations.append({"coarse": j, "fine": i, "problem": "unknown fine atom"})
                continue
            fi = fine.atoms[i]
            if l < 0 or l + cj.height > fi.height:
                violations.append({"coarse": j, "fine": i, "offset": l, "problem": "column crosses a fine height"})
                continue
            used.setdefault(i, []).append((l, l + cj.height, j))
            mass += fi.base
            if cj.levels is not None and fi.levels is not None and fi.levels[l : l + cj.height] != cj.levels:
                violations.append({"coarse": j, "fine": i, "offset": l, "problem": "level labels disagree"})
        if mass != cj.base:
            violations.append({"coarse": j, "problem": "base measure mismatch", "expected": cj.base, "found": mass})
    for i, spans in used.items():
        spans.sort()
        for (a0, a1, ja), (b0, b1, jb) in zip(spans, spans[1:]):
            if b0 < a1:
                violations.append({"fine": i, "problem": "overlapping columns", "coarse": [ja, jb], "offsets": [a0, b0]})
    return {"ok": not violations, "violations": violations}


def eps_refine_deficit(tower: IrregularTower, target: PartitionSpec) -> Fraction:
    """Least sum of mu(A symmetric-difference A') over unions A' of tower levels.

    The complement of the tower is counted in full: it can never be matched.
    A level joins the cell it overlaps most, or no cell when that overlap is
    below half of the level.
    """
    total = Fraction(1)
    for atom in tower.atoms:
        if atom.levels is None:
            raise CapExceededError(f"atom {atom.name} has symbolic levels; raise the height cap")
        for label in atom.levels:
            if isinstance(label, dict):
                overlap = {}
                for lab, w in label.items():
                    cell = target.cell_of(lab)
                    overlap[cell] = overlap.get(cell, Fraction(0)) + Fraction(w)
                best = max(overlap.values())
            else:
                target.cell_of(label)
                best = Fraction(1)
            # Joining a cell changes the sum by mu(L) - 2 mu(L and A).
            total += min(Fraction(0), atom.base * (1 - 2 * best))
    return total
