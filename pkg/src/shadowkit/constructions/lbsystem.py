"""The loosely Bernoulli, non-shadowed block system with spacer-coded types.

Level n+1 types all list the level-n blocks in the same order and differ only
in the spacer gaps between them.  Gaps are read in sub-blocks of ``h`` n-blocks:
inside a sub-block the gap after block k is ``f^i(ceil(k / r))`` with
``r = n**2``, and the last gap of each sub-block tops the sub-block's spacer
total up to ``h * b``.  The functions ``f^i`` form a separated family.

At laptop scale the asymptotic size formulas do not give usable integers, so
every derived size is recorded twice in the log: the formula value and the
value actually realized.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from ..blocks import BlockHierarchy, BlockType, Literal, Ref, Spacer
from ..errors import InfeasibleError, InvalidInputError
from ..words import Alphabet, FiniteWord, dbar


@dataclass(frozen=True)
class LBSystemParams:
    Gamma: Fraction = Fraction(3, 2)
    gamma: Fraction = Fraction(2)
    beta: Fraction = Fraction(1, 8)
    l0: int = 64
    n0: int = 3
    n_max: int = 5
    seed: int = 0
    min_gap_values: int = 8
    values_per_subblock: int = 1
    max_types: Optional[int] = None
    proposal_budget: int = 20000

    def __post_init__(self):
        for name in ("Gamma", "gamma", "beta"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.Gamma <= 1:
            raise InvalidInputError("Gamma must exceed 1")
        if self.gamma <= max(self.Gamma, 1):
            raise InvalidInputError("gamma must exceed max(Gamma, 1)")
        if not 0 < self.beta < 1:
            raise InvalidInputError("beta must lie in (0, 1)")
        if self.l0 < 1 or self.n0 < 2 or self.n_max <= self.n0:
            raise InvalidInputError("need l0 >= 1 and 2 <= n0 < n_max")
        if self.values_per_subblock < 1 or self.min_gap_values < 1:
            raise InvalidInputError("values_per_subblock and min_gap_values must be positive")


def iroot(x: int, k: int) -> int:
    """Largest integer r with r**k <= x."""
    if x < 0 or k < 1:
        raise InvalidInputError("iroot needs x >= 0 and k >= 1")
    if x < 2:
        return x
    r = 1 << ((x.bit_length() + k - 1) // k)
    while True:
        s = ((k - 1) * r + x // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def floor_power(l: int, e: Fraction) -> int:
    """floor(l ** e) for a positive rational exponent, exactly."""
    return iroot(l**e.numerator, e.denominator)


def ceil_power(l: int, e: Fraction) -> int:
    f = floor_power(l, e)
    return f if f**e.denominator == l**e.numerator else f + 1


def exclusion_bound(p: int, b: int, delta: int, N: int) -> dict:
    """Count of functions with >= delta coincidences against a fixed one."""
    if p < 1 or b < 1:
        raise InvalidInputError("p and b must be positive")
    if not 1 <= delta <= p:
        raise InvalidInputError("delta must lie in 1..p")
    E = sum(comb(p, q) * (b - 1) ** (p - q) for q in range(delta, p + 1))
    total = b**p
    return {"E": E, "b_pow_p": total, "N": N, "ok": (N - 1) * E < total, "max_N": (total - 1) // E + 1}


def coincidences(f, g) -> int:
    return sum(1 for x, y in zip(f, g) if x == y)


def choose_separated_family(count: int, p: int, b: int, delta: int, seed: int = 0, budget: int = 20000) -> list:
    """Greedy family of functions {1..p} -> {1..b} with pairwise < delta coincidences.

    Functions are tuples of values; the first one is constant 1.  When all
    b**p functions fit in the budget they are scanned in a seeded random order,
    otherwise uniform random proposals are drawn.
    """
    if count < 1 or p < 1 or b < 1 or delta < 1:
        raise InvalidInputError("count, p, b and delta must be positive")
    rng = np.random.default_rng(seed)
    family = [(1,) * p]

    def admissible(f):
        return all(coincidences(f, g) < delta for g in family)

    if b**p <= budget:
        order = rng.permutation(b**p)
        for code in order:
            if len(family) >= count:
                break
            f = tuple(int(d) + 1 for d in _digits(int(code), b, p))
            if delta > p or admissible(f):
                family.append(f)
    else:
        for _ in range(budget):
            if len(family) >= count:
                break
            f = tuple(int(v) for v in rng.integers(1, b + 1, size=p))
            if delta > p or admissible(f):
                family.append(f)
    if len(family) < count:
        diag = exclusion_bound(p, b, min(delta, p), count) if delta <= p else {}
        raise InfeasibleError(
            f"found only {len(family)} of {count} separated functions (p={p}, b={b}, delta={delta})",
            {"found": len(family), "requested": count, "exclusion_bound": diag},
        )
    family = family[:count]
    for x in range(count):
        for y in range(x + 1, count):
            if delta <= p and coincidences(family[x], family[y]) >= delta:
                raise AssertionError("separation check failed")
    return family


def _digits(code: int, base: int, width: int):
    out = []
    for _ in range(width):
        code, d = divmod(code, base)
        out.append(d)
    return out


def gap_sequence(f, count: int, h: int, r: int, b: int) -> list:
    """Gaps after each of ``count`` blocks for one separated function."""
    gaps = []
    sub_sum = 0
    for k in range(1, count + 1):
        kk = (k - 1) % h + 1
        if kk == h or k == count:
            g = kk * b - sub_sum
            sub_sum = 0
        else:
            g = f[(kk - 1) // r]
            sub_sum += g
        gaps.append(g)
    return gaps


@dataclass
class LBSystem:
    hierarchy: BlockHierarchy
    params: LBSystemParams
    log: list
    families: dict
    gaps: dict

    def level_log(self, n: int) -> dict:
        for entry in self.log:
            if entry["n"] == n:
                return entry
        raise InvalidInputError(f"no level {n}")

    def epsilon(self, n: int) -> Fraction:
        return self.level_log(n)["epsilon"]

    def min_window(self, n: int) -> int:
        return self.level_log(n)["l_prime"]

    def block_starts(self, n: int, j: int) -> list:
        """Offsets of the level-(n-1) blocks inside B_n^j."""
        l_prev = self.hierarchy.length(n - 1, 0)
        starts, pos = [], 0
        for g in self.gaps[n][j]:
            starts.append(pos)
            pos += l_prev + g
        return starts

    def summary(self) -> dict:
        return {"params": {k: v for k, v in asdict(self.params).items()}, "levels": self.log}


def lb_system(p: LBSystemParams) -> LBSystem:
    l = p.l0
    N = p.l0 ** (p.gamma - 1) if (p.gamma - 1).denominator == 1 else floor_power(p.l0, p.gamma - 1)
    N = int(N)
    base = [BlockType([Literal(tuple(range(i * l + 1, (i + 1) * l + 1)))]) for i in range(N)]
    levels = [base]
    eps = Fraction(1)
    log = [{
        "n": p.n0, "l": l, "N": N, "N_formula": N, "epsilon": eps, "l_prime": 1, "l_prime_formula": 1,
    }]
    families, gaps = {}, {}
    for n in range(p.n0, p.n_max):
        r = n * n
        b_formula = floor_power(l, p.beta)
        b_budget = l // (r - 1)
        b = max(b_formula, min(p.min_gap_values, b_budget), 1)
        vals = p.values_per_subblock
        h = vals * r + 1
        delta = max(1, -(-h // (n**4)))
        if delta > vals:
            delta = vals
        l_next = N * (l + b)
        N_formula = floor_power(l_next, p.gamma - 1)
        gate = exclusion_bound(vals, b, delta, 1)
        N_next = min(N_formula, gate["max_N"])
        if p.max_types is not None:
            N_next = min(N_next, p.max_types)
        gate = exclusion_bound(vals, b, delta, N_next)
        family = choose_separated_family(N_next, vals, b, delta, seed=p.seed * 1000 + n, budget=p.proposal_budget)
        seqs = [gap_sequence(f, N, h, r, b) for f in family]
        level = []
        for gs in seqs:
            items = []
            for k, g in enumerate(gs):
                items.append(Ref(k))
                items.append(Spacer(g))
            level.append(BlockType(items))
        levels.append(level)
        families[n + 1] = family
        gaps[n + 1] = seqs
        spacer_frac = Fraction(N * b, l_next)
        gmax = max(max(gs) for gs in seqs)
        blocks_needed = 2 if vals == 1 else h + 1
        lp_formula = ceil_power(l, 1 + p.beta)
        lp = max(lp_formula, (blocks_needed + 1) * (l + gmax))
        eps = eps * (1 - Fraction(3, n * n)) ** 3
        log.append({
            "n": n + 1,
            "from_level": n,
            "l": l_next,
            "l_formula": N * l * (1 + Fraction(b, l)),
            "l_real": float(N * l * (1 + l ** (float(p.beta) - 1))),
            "N": N_next,
            "N_formula": N_formula,
            "b": b,
            "b_formula": b_formula,
            "segment_length": r,
            "values": vals,
            "h": h,
            "h_formula": Fraction(b_formula, r),
            "delta": delta,
            "delta_formula": Fraction(h, n**4),
            "E": gate["E"],
            "b_pow_p": gate["b_pow_p"],
            "gate_ok": gate["ok"],
            "spacer_fraction": spacer_frac,
            "spacer_bound": Fraction(1, n * n),
            "l_prime": lp,
            "l_prime_formula": lp_formula,
            "decodable": lp <= l_next,
            "epsilon": eps,
        })
        l, N = l_next, N_next
    h_obj = BlockHierarchy(Alphabet(p.l0 * int(log[0]["N"]) + 1), p.n0, levels)
    for entry in log:
        n = entry["n"]
        if any(x != entry["l"] for x in h_obj.lengths(n)):
            raise AssertionError("non-uniform level lengths")
    return LBSystem(h_obj, p, log, families, gaps)


UNKNOWN = "unknown"


def decode_window(system: LBSystem, window: FiniteWord, level: int, epsilon: Optional[Fraction] = None):
    """Locate a window inside a level block from its spacer gaps.

    Returns ``(level, type, offset)``, with the offset of the window's first
    symbol inside ``b_level^type``, or ``"unknown"`` when no unique block type
    and offset fit within distance epsilon (default: the level's epsilon).
    """
    h = system.hierarchy
    h._check_level(level)
    if len(window) < system.min_window(level):
        raise InvalidInputError(f"window shorter than {system.min_window(level)} for level {level}")
    eps = system.epsilon(level) if epsilon is None else Fraction(epsilon)
    w = np.asarray(window.symbols)
    if level == h.n0:
        cands = _base_candidates(system, w)
    else:
        cands = _upper_candidates(system, w, level)
    return _pick(system, window, level, cands, eps)


def _pick(system, window, level, cands, eps):
    h = system.hierarchy
    L = len(window)
    scored = []
    for j, off in cands:
        if off < 0 or off + L > h.length(level, j):
            continue
        ref = h.expand(level, j, off, off + L)
        scored.append((dbar(window, ref), j, off))
    scored.sort()
    if not scored or scored[0][0] >= eps:
        return UNKNOWN
    if len(scored) > 1 and scored[1][0] == scored[0][0]:
        return UNKNOWN
    return (level, scored[0][1], scored[0][2])


def _base_votes(system, w):
    """Votes (start, type, count) for base blocks from individual symbols."""
    l0 = system.params.l0
    t = np.nonzero(w)[0]
    if t.size == 0:
        return []
    s = w[t] - 1
    types = s // l0
    starts = t - s % l0
    keys, counts = np.unique(np.stack([starts, types], axis=1), axis=0, return_counts=True)
    return [(int(a), int(k), int(c)) for (a, k), c in zip(keys, counts)]


def _base_candidates(system, w):
    votes = _base_votes(system, w)
    votes.sort(key=lambda v: (-v[2], v[0], v[1]))
    return [(k, -a) for a, k, _ in votes[:4]]


def _anchors(system, w, level):
    """Starts and types of level-(level-1) blocks seen in the window."""
    below = level - 1
    h = system.hierarchy
    lb = h.length(below, 0)
    if below == h.n0:
        found = {}
        for a, k, c in _base_votes(system, w):
            visible = min(len(w), a + lb) - max(0, a)
            if visible > 0 and 2 * c > visible:
                found[a] = k
        return found
    sub = system.min_window(below)
    stride = max(1, sub // 2)
    found = {}
    for t in range(0, len(w) - sub + 1, stride):
        piece = FiniteWord(w[t : t + sub], h.alphabet)
        res = decode_window(system, piece, below)
        if res != UNKNOWN:
            _, k, off = res
            found.setdefault(t - off, k)
    return found


def _upper_candidates(system, w, level):
    h = system.hierarchy
    anchors = _anchors(system, w, level)
    if not anchors:
        return []
    lb = h.length(level - 1, 0)
    starts = sorted(anchors)
    reads = []
    for a0, a1 in zip(starts, starts[1:]):
        s0, s1 = anchors[a0], anchors[a1]
        if s1 == s0 + 1:
            reads.append((s0, a1 - a0 - lb))
    gaps = system.gaps[level]
    scores = [sum(1 for k, g in reads if gs[k] == g) for gs in gaps]
    top = max(scores)
    chosen = [j for j, sc in enumerate(scores) if sc == top]
    a = starts[len(starts) // 2]
    k = anchors[a]
    cands = []
    for j in chosen:
        cands.append((j, system.block_starts(level, j)[k] - a))
    return cands


def corrupt(window: FiniteWord, fraction: Fraction, rng) -> FiniteWord:
    """Replace ``floor(fraction * |w|)`` random positions with other symbols."""
    w = np.array(window.symbols)
    m = int(Fraction(fraction) * len(w))
    if m:
        pos = rng.choice(len(w), size=m, replace=False)
        shift = rng.integers(1, window.alphabet.size, size=m)
        w[pos] = (w[pos] + shift) % window.alphabet.size
    return FiniteWord(w, window.alphabet)
