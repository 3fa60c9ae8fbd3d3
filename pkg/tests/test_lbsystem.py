from fractions import Fraction

import numpy as np
import pytest

from shadowkit.constructions.lbsystem import (
    UNKNOWN,
    LBSystemParams,
    choose_separated_family,
    coincidences,
    corrupt,
    decode_window,
    exclusion_bound,
    floor_power,
    ceil_power,
    iroot,
    lb_system,
)
from shadowkit.errors import InfeasibleError, InvalidInputError
from shadowkit.words import FiniteWord


@pytest.fixture(scope="module")
def system():
    return lb_system(LBSystemParams(gamma=2, beta=Fraction(1, 8), l0=64, n_max=5))


def test_integer_roots():
    for x in range(0, 3000, 7):
        for k in (1, 2, 3, 8):
            r = iroot(x, k)
            assert r**k <= x < (r + 1) ** k
    assert floor_power(4608, Fraction(1, 8)) == 2
    assert ceil_power(64, Fraction(9, 8)) == 108


def test_exclusion_bound_examples():
    e = exclusion_bound(4, 3, 2, 3)
    assert (e["E"], e["b_pow_p"], e["ok"], e["max_N"]) == (33, 81, True, 3)
    assert not exclusion_bound(4, 3, 2, 4)["ok"]
    assert exclusion_bound(5, 2, 5, 32)["E"] == 1
    with pytest.raises(InvalidInputError):
        exclusion_bound(3, 2, 4, 2)


def test_family_examples():
    fam = choose_separated_family(2, 4, 3, 2, seed=1)
    assert len(fam) == 2 and coincidences(*fam) <= 1
    assert len(choose_separated_family(5, 2, 2, 3)) == 5
    with pytest.raises(InfeasibleError) as info:
        choose_separated_family(2, 3, 1, 2)
    assert info.value.diagnosis["exclusion_bound"]["E"] == 1
    assert choose_separated_family(3, 4, 3, 2, seed=7) == choose_separated_family(3, 4, 3, 2, seed=7)


def test_realized_log(system):
    l4, l5 = system.level_log(4), system.level_log(5)
    assert (l4["l"], l4["N"], l4["b"], l4["l_prime"], l4["epsilon"]) == (4608, 8, 8, 405, Fraction(8, 27))
    assert (l5["l"], l5["N"], l5["epsilon"]) == (36928, 8, Fraction(2197, 13824))
    for entry in (l4, l5):
        assert entry["l_formula"] == entry["l"]
        assert entry["spacer_fraction"] <= entry["spacer_bound"]
        assert entry["gate_ok"] and entry["decodable"]


def test_structure(system):
    h = system.hierarchy
    assert h.alphabet.size == 64 * 64 + 1
    assert h.lengths(3) == [64] * 64
    for n in (4, 5):
        assert len(set(h.lengths(n))) == 1
        vals = h.tower_measures(n - 1, n)["values"]
        assert len(set(vals)) == 1
        for j in range(h.num_types(n)):
            assert h.spacer_fraction(n, j, above=n - 1) <= Fraction(1, (n - 1) ** 2)


def test_erasing_spacers_merges_types(system):
    h = system.hierarchy
    devs = [h.expand(4, j).symbols for j in range(h.num_types(4))]
    stripped = {tuple(d[d != 0]) for d in devs}
    assert len(stripped) == 1 and len({tuple(d) for d in devs}) == len(devs)


def test_decoder_exhaustive_on_two_types(system):
    h = system.hierarchy
    L = system.min_window(4)
    for j in (0, 5):
        for off in range(h.length(4, j) - L + 1):
            assert decode_window(system, h.expand(4, j, off, off + L), 4) == (4, j, off)


def test_decoder_corrupted(system):
    h = system.hierarchy
    rng = np.random.default_rng(9)
    L = system.min_window(5)
    frac = system.epsilon(5) / 2 * Fraction(99, 100)
    for _ in range(20):
        j = int(rng.integers(8))
        off = int(rng.integers(h.length(5, j) - L + 1))
        w = corrupt(h.expand(5, j, off, off + L), frac, rng)
        assert decode_window(system, w, 5) == (5, j, off)


def test_decoder_rejections(system):
    L = system.min_window(4)
    alphabet = system.hierarchy.alphabet
    assert decode_window(system, FiniteWord([0] * L, alphabet), 4) == UNKNOWN
    with pytest.raises(InvalidInputError):
        decode_window(system, FiniteWord([1] * (L - 1), alphabet), 4)


def test_deterministic_under_seed():
    a = lb_system(LBSystemParams(seed=3, n_max=4))
    b = lb_system(LBSystemParams(seed=3, n_max=4))
    assert a.families == b.families and a.hierarchy.to_json() == b.hierarchy.to_json()


def test_bad_params():
    with pytest.raises(InvalidInputError):
        LBSystemParams(Gamma=2, gamma=Fraction(3, 2))
    with pytest.raises(InvalidInputError):
        LBSystemParams(beta=1)
