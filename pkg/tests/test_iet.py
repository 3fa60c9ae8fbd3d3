from fractions import Fraction
from math import lcm

import pytest

from shadowkit.constructions.iet import (
    IETSpec,
    golden_convergent,
    iet_itinerary,
    iet_kneading,
    iet_shadow_check,
    one_sided_itinerary,
    silver_convergent,
    sturmian_word,
)
from shadowkit.errors import InvalidInputError
from shadowkit.words import word_complexity

F = Fraction


def brute_orbit(spec, x, steps):
    """Plain Fraction orbit, written independently of the integer grid."""
    lefts = spec.left_ends()
    imgs = spec.image_left_ends()
    out = []
    for _ in range(steps):
        i = max(k for k in range(spec.d) if lefts[k] <= x)
        out.append(i)
        x = x - lefts[i] + imgs[i]
    return tuple(out)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        IETSpec((F(1, 2), F(1, 3)), (0, 1))
    with pytest.raises(InvalidInputError):
        IETSpec((F(1, 2), F(1, 2)), (0, 0))


def test_rational_rotation_periodic():
    spec = IETSpec.rotation(F(3, 7))
    word, audit = iet_itinerary(spec, F(0), 70, strict=False)
    t = word.as_tuple()
    assert t[:7] * 10 == t
    assert audit["min_distance_to_D"] == 0


def test_strict_audit_refuses_hits():
    with pytest.raises(InvalidInputError):
        iet_itinerary(IETSpec.rotation(F(1, 4)), F(1, 2), 10)


def test_identity_permutation():
    spec = IETSpec((F(1, 3), F(2, 3)), (0, 1))
    assert set(iet_itinerary(spec, F(1, 2), 20)[0].as_tuple()) == {1}


def test_matches_fraction_orbit():
    spec = IETSpec((F(1, 5), F(3, 10), F(1, 2)), (2, 0, 1))
    x = F(17, 131)
    assert iet_itinerary(spec, x, 200)[0].as_tuple() == brute_orbit(spec, x, 200)


def test_sturmian_complexity():
    alpha = golden_convergent(10**6)
    assert alpha == F(832040, 1346269)
    word = sturmian_word(alpha, 5000, F(1, 3))
    for k in (1, 2, 5, 10, 20):
        assert word_complexity(word, k) == k + 1


def test_kneading_side_limits():
    spec = IETSpec((F(1, 5), F(3, 10), F(1, 2)), (2, 0, 1))
    kn = iet_kneading(spec, 40)
    assert len(kn) == 2 * spec.d
    q = lcm(*(x.denominator for x in spec.lengths))
    for entry in kn:
        shift = F(1, 2 * q * 10**6)
        near = entry["point"] + shift if entry["side"] == "+" else entry["point"] - shift
        assert entry["itinerary"].as_tuple() == brute_orbit(spec, near, 40)


def test_rotation_kneading_count():
    assert len(iet_kneading(IETSpec.rotation(silver_convergent(1000)), 10)) == 4
    with pytest.raises(InvalidInputError):
        one_sided_itinerary(IETSpec.rotation(F(1, 3)), F(0), "-", 5)


def test_shadow_check_golden():
    spec = IETSpec.rotation(golden_convergent(10**6))
    r = iet_shadow_check(spec, F(3141592, 10**7), 10**4)
    assert r["ok"] and r["increasing"] and r["exact_count"] >= 5


def test_shadow_check_refuses_discontinuity():
    spec = IETSpec.rotation(F(2, 7))
    with pytest.raises(InvalidInputError):
        iet_shadow_check(spec, spec.left_ends()[1], 10)


def test_unseparated_points_share_names():
    spec = IETSpec.rotation(golden_convergent(10**5))
    x, y = F(3, 10), F(3, 10) + F(1, 10**9)
    wx, ax = iet_itinerary(spec, x, 300)
    wy, _ = iet_itinerary(spec, y, 300)
    assert ax["min_distance_to_D"] > abs(y - x)
    assert wx == wy
