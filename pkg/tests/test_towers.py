from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowkit.blocks import BlockHierarchy, BlockType, Literal, Ref, Spacer
from shadowkit.errors import InvalidInputError
from shadowkit.towers import (
    IrregularTower,
    PartitionSpec,
    TowerAtom,
    canonical_embedding,
    check_nesting,
    eps_refine_deficit,
    towers_from_level,
)
from shadowkit.words import Alphabet

F = Fraction


def toy(levels=3):
    base = [BlockType([Literal((1, 2))]), BlockType([Literal((3,))])]
    lv = [base]
    for _ in range(levels - 1):
        lv.append([BlockType([Ref(0), Spacer(1), Ref(1, 2)]), BlockType([Ref(1), Ref(0, 2)])])
    return BlockHierarchy(Alphabet(4), 1, lv)


def oracle_deficit(tower, target):
    """Exhaustive search over the assignments of levels to cells (or to none)."""
    levels = []
    for atom in tower.atoms:
        for label in atom.levels:
            overlap = {}
            items = label.items() if isinstance(label, dict) else [(label, F(1))]
            for lab, wgt in items:
                c = target.cell_of(lab)
                overlap[c] = overlap.get(c, F(0)) + atom.base * F(wgt)
            levels.append((atom.base, overlap))
    best = None
    for choice in product([None, *target.cells], repeat=len(levels)):
        # sum over cells of mu(A) + mu(A') - 2 mu(A and A'); the in-tower parts of mu(A) sum to the mass
        total = 1 - tower.mass() + tower.mass()
        for (mu, overlap), c in zip(levels, choice):
            if c is not None:
                total += mu - 2 * overlap.get(c, F(0))
        best = total if best is None else min(best, total)
    return best


def test_level_tower_shape():
    h = toy()
    t = towers_from_level(h, 2)
    assert t.heights() == [5, 5]
    assert t.mass() <= 1
    assert t.atoms[0].levels == (1, 2, 0, 3, 3)


def test_single_type_is_rokhlin():
    h = BlockHierarchy(Alphabet(2), 1, [[BlockType([Literal((1,))])], [BlockType([Ref(0, 3), Spacer(1)])]])
    t = towers_from_level(h, 1)
    assert len(t.atoms) == 1 and t.atoms[0].base == F(3, 4)
    assert h.tower_measures(1)["values"] == [1 - h.spacer_fraction(2, 0)]


def test_canonical_nesting_holds():
    h = toy(4)
    for n in (1, 2):
        fine = towers_from_level(h, n + 1)
        coarse = towers_from_level(h, n)
        assert check_nesting(fine, coarse, canonical_embedding(h, n))["ok"]


def test_self_nesting_and_negative():
    t = towers_from_level(toy(), 2)
    emb = {j: [(j, 0)] for j in range(len(t.atoms))}
    assert check_nesting(t, t, emb)["ok"]
    small = IrregularTower((TowerAtom("c", 3, t.atoms[0].base),))
    bad = check_nesting(t, small, {0: [(0, 3)]})
    assert not bad["ok"]
    assert bad["violations"][0]["problem"] == "column crosses a fine height"


def test_deficit_examples():
    t = towers_from_level(toy(), 2)
    target = PartitionSpec.by_symbol(range(4))
    assert eps_refine_deficit(t, target) == 1 - t.mass()
    with pytest.raises(InvalidInputError):
        eps_refine_deficit(t, PartitionSpec.by_symbol([0, 1]))


def test_deficit_matches_exhaustive_on_mixed_tower():
    atoms = (
        TowerAtom("a", 3, F(1, 10), ({0: F(1, 3), 1: F(2, 3)}, 2, {1: F(1, 2), 2: F(1, 2)})),
        TowerAtom("b", 2, F(1, 5), ({2: F(3, 4), 0: F(1, 4)}, {0: F(2, 5), 1: F(3, 5)})),
    )
    tower = IrregularTower(atoms)
    for cells in ([0, 1, 2], [0, 0, 1]):
        target = PartitionSpec(tuple(sorted(set(cells))), dict(enumerate(cells)))
        assert eps_refine_deficit(tower, target) == oracle_deficit(tower, target)


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 5)), min_size=1, max_size=3), st.data())
def test_deficit_property(spec, data):
    atoms = []
    for k, (height, wgt) in enumerate(spec):
        levels = []
        for _ in range(height):
            a, b = data.draw(st.integers(0, 2)), data.draw(st.integers(0, 4))
            levels.append({a: F(b, 4), (a + 1) % 3: 1 - F(b, 4)} if 0 < b < 4 else a)
        atoms.append(TowerAtom(f"t{k}", height, F(wgt, 40), tuple(levels)))
    tower = IrregularTower(tuple(atoms))
    target = PartitionSpec.by_symbol(range(3))
    assert eps_refine_deficit(tower, target) == oracle_deficit(tower, target)


def test_deficit_shrinks_with_level():
    h = toy(4)
    target = PartitionSpec.by_symbol(range(4))
    values = [eps_refine_deficit(towers_from_level(h, n), target) for n in (1, 2, 3)]
    assert values == sorted(values, reverse=True)
