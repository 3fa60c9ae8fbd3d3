"""Atoms of the refined natural partition for a product of two circle rotations."""

from __future__ import annotations

from fractions import Fraction

from ..errors import InvalidInputError


def circle_max_atom(alpha, n: int) -> Fraction:
    """Largest atom of the join of R^{-k}P, k < n, for P = {[0,1-a), [1-a,1)}.

    The atoms are the arcs cut by the points -k*a and 1-a-k*a (mod 1).
    """
    alpha = Fraction(alpha)
    if n < 1:
        raise InvalidInputError("n must be positive")
    q = alpha.denominator
    p = alpha.numerator
    cuts = set()
    for k in range(n):
        cuts.add((-k * p) % q)
        cuts.add((q - p - k * p) % q)
    pts = sorted(cuts)
    gaps = [b - a for a, b in zip(pts, pts[1:])] + [pts[0] + q - pts[-1]]
    return Fraction(max(gaps), q)


def torus_atom_series(alpha1, alpha2, n_list, safety: int = 4) -> list:
    """(n, max atom measure) for the product rotation and its natural partition."""
    a1, a2 = Fraction(alpha1), Fraction(alpha2)
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise InvalidInputError("n values must be positive")
    for a in (a1, a2):
        if not 0 < a < 1:
            raise InvalidInputError("angles must lie in (0, 1)")
        if a.denominator < safety * max(n_list):
            raise InvalidInputError(
                f"denominator {a.denominator} too small for n up to {max(n_list)} (aliasing)"
            )
    return [(n, circle_max_atom(a1, n) * circle_max_atom(a2, n)) for n in n_list]
