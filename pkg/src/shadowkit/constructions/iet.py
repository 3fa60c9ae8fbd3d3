"""Interval exchanges with exact rational data, their itineraries and kneading sequences.

Interval ``i`` is ``[L_i, L_i + lengths[i])``; the map sends it to slot
``permutation[i]`` of the image order.  Internally every point is an integer
numerator over the common denominator ``Q`` of the lengths and the point.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from ..errors import InvalidInputError
from ..words import Alphabet, FiniteWord


@dataclass(frozen=True)
class IETSpec:
    lengths: tuple
    permutation: tuple

    def __post_init__(self):
        lengths = tuple(Fraction(x) for x in self.lengths)
        perm = tuple(int(x) for x in self.permutation)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "permutation", perm)
        if not lengths or any(x <= 0 for x in lengths) or sum(lengths) != 1:
            raise InvalidInputError("lengths must be positive and sum to 1")
        if sorted(perm) != list(range(len(lengths))):
            raise InvalidInputError("permutation must be a bijection on interval indices")

    @classmethod
    def rotation(cls, alpha) -> "IETSpec":
        """x -> x + alpha mod 1 as an exchange of [0, 1-alpha) and [1-alpha, 1)."""
        alpha = Fraction(alpha)
        if not 0 < alpha < 1:
            raise InvalidInputError("rotation angle must lie in (0, 1)")
        return cls((1 - alpha, alpha), (1, 0))

    @property
    def d(self) -> int:
        return len(self.lengths)

    def left_ends(self) -> list:
        out, acc = [], Fraction(0)
        for x in self.lengths:
            out.append(acc)
            acc += x
        return out

    def image_left_ends(self) -> list:
        order = sorted(range(self.d), key=lambda i: self.permutation[i])
        ends, acc = [None] * self.d, Fraction(0)
        for i in order:
            ends[i] = acc
            acc += self.lengths[i]
        return ends

    def discontinuities(self) -> list:
        """The points 0, L_1, ..., L_{d-1}, 1 with the sides they can be approached from."""
        pts = [(Fraction(0), "+")]
        for x in self.left_ends()[1:]:
            pts.append((x, "-"))
            pts.append((x, "+"))
        pts.append((Fraction(1), "-"))
        return pts

    def inverse(self) -> "IETSpec":
        order = sorted(range(self.d), key=lambda i: self.permutation[i])
        return IETSpec(tuple(self.lengths[i] for i in order), tuple(order.index(i) for i in range(self.d)))


class _Grid:
    """Integer model of an exchange on the grid (1/Q)Z."""

    def __init__(self, spec: IETSpec, extra=()):
        self.spec = spec
        self.Q = lcm(*(x.denominator for x in spec.lengths), *(Fraction(e).denominator for e in extra))
        self.left = [int(x * self.Q) for x in spec.left_ends()]
        self.img = [int(x * self.Q) for x in spec.image_left_ends()]
        self.inner = self.left[1:]

    def index(self, y: int, side: str = "+") -> int:
        if side == "+":
            return bisect_right(self.left, y) - 1
        # left limit: intervals taken as (L, R]
        return bisect_right(self.left, y - 1) - 1

    def step(self, y: int, side: str = "+") -> tuple:
        i = self.index(y, side)
        return i, y - self.left[i] + self.img[i]

    def dist_to_D(self, y: int) -> int:
        best = min(y, self.Q - y)
        for c in self.inner:
            best = min(best, abs(y - c))
        return best


def _alphabet(spec):
    return Alphabet(spec.d)


def iet_itinerary(spec: IETSpec, x, horizon: int, strict: bool = True):
    """P-name of x for ``horizon`` steps plus the orbit's distance to D.

    With ``strict`` an orbit point on an interior discontinuity is an error;
    otherwise such hits are listed in the audit and the name uses the
    left-closed convention.
    """
    x = Fraction(x)
    if not 0 <= x < 1 or horizon < 1:
        raise InvalidInputError("need 0 <= x < 1 and horizon >= 1")
    g = _Grid(spec, (x,))
    inner = set(g.inner)
    y = int(x * g.Q)
    names, hits = [], []
    gap = None
    for k in range(horizon):
        if y in inner:
            if strict:
                raise InvalidInputError(f"orbit meets a discontinuity at step {k}")
            hits.append(k)
        dist = g.dist_to_D(y)
        gap = dist if gap is None else min(gap, dist)
        i, y = g.step(y)
        names.append(i)
    audit = {"min_distance_to_D": Fraction(gap, g.Q), "hits": hits}
    return FiniteWord(names, _alphabet(spec)), audit


def one_sided_itinerary(spec: IETSpec, point, side: str, horizon: int) -> FiniteWord:
    """Itinerary of point+ (right limit) or point- (left limit)."""
    point = Fraction(point)
    if side not in "+-" or not 0 <= point <= 1:
        raise InvalidInputError("bad point or side")
    if (point == 0 and side == "-") or (point == 1 and side == "+"):
        raise InvalidInputError("that one-sided limit does not exist")
    g = _Grid(spec, (point,))
    y = int(point * g.Q)
    out = []
    for _ in range(horizon):
        i, y = g.step(y, side)
        out.append(i)
    return FiniteWord(out, _alphabet(spec))


def iet_kneading(spec: IETSpec, horizon: int) -> list:
    """Right and left itineraries of every discontinuity, tagged by point and side."""
    return [
        {"point": d, "side": s, "itinerary": one_sided_itinerary(spec, d, s, horizon)}
        for d, s in spec.discontinuities()
    ]


def iet_shadow_check(spec: IETSpec, x, horizon: int, min_matches: int = 5) -> dict:
    """Match the backward name of x against kneading sequences at record approaches.

    At each time n where T^{-n}x comes strictly closer to D than before, the
    symbols of x's name at times -n..0 must equal the first n+1 symbols of the
    kneading sequence of the nearest discontinuity, approached from the side
    T^{-n}x lies on.
    """
    x = Fraction(x)
    inv = spec.inverse()
    gi = _Grid(inv, (x,))
    g = _Grid(spec, (x,))
    if gi.Q != g.Q:
        raise AssertionError("inverse grid mismatch")
    Q = g.Q
    y = int(x * Q)
    back = [y]
    for _ in range(horizon):
        _, y = gi.step(y)
        if y in g.inner or y == 0:
            raise InvalidInputError("backward orbit meets a discontinuity")
        back.append(y)
    if back[0] in g.inner or back[0] == 0:
        raise InvalidInputError("x lies on a discontinuity")
    names = [g.index(p) for p in back]  # names[n] = symbol of T^{-n}x
    records = []
    best = None
    for n, p in enumerate(back):
        dist = g.dist_to_D(p)
        if best is None or dist < best:
            best = dist
            records.append((n, p, dist))
    matches = []
    cache = {}
    for n, p, dist in records:
        if p == dist:
            d, side = 0, "+"
        elif Q - p == dist:
            d, side = Q, "-"
        else:
            d = min(c for c in g.inner if abs(p - c) == dist)
            side = "+" if p > d else "-"
        key = (d, side)
        need = n + 1
        if key not in cache or len(cache[key]) < need:
            cache[key] = one_sided_itinerary(spec, Fraction(d, Q), side, max(need, 2 * need)).as_tuple()
        knead = cache[key][:need]
        forward = tuple(names[n - k] for k in range(n + 1))
        matches.append({
            "n": n,
            "distance": Fraction(dist, Q),
            "discontinuity": Fraction(d, Q),
            "side": side,
            "length": need,
            "exact": forward == knead,
        })
    exact = [m for m in matches if m["exact"]]
    lengths = [m["length"] for m in exact]
    return {
        "matches": matches,
        "exact_count": len(exact),
        "all_exact": len(exact) == len(matches),
        "increasing": all(a < b for a, b in zip(lengths, lengths[1:])),
        "ok": len(exact) >= min_matches and len(exact) == len(matches),
        "min_matches": min_matches,
    }


def continued_fraction_convergent(partial_quotients, min_denominator: int) -> Fraction:
    """First convergent [0; a1, a2, ...] (quotients cycled) with denominator above the bound."""
    qs = list(partial_quotients)
    if not qs or any(q < 1 for q in qs):
        raise InvalidInputError("partial quotients must be positive")
    p0, q0, p1, q1 = 0, 1, 1, qs[0]
    k = 1
    while q1 <= min_denominator:
        a = qs[k % len(qs)]
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        k += 1
    return Fraction(p1, q1)


def golden_convergent(min_denominator: int) -> Fraction:
    return continued_fraction_convergent([1], min_denominator)


def silver_convergent(min_denominator: int) -> Fraction:
    return continued_fraction_convergent([2], min_denominator)


def sturmian_word(alpha, length: int, rho=0) -> FiniteWord:
    """Coding of the rotation by alpha with the partition [0,1-alpha), [1-alpha,1)."""
    spec = IETSpec.rotation(alpha)
    word, _ = iet_itinerary(spec, Fraction(rho), length, strict=False)
    return word
