"""Finite-data checks around shadowing: covers, windows, balls, genericity, rank one."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .blocks import BlockHierarchy, BlockType, Literal, Ref
from .errors import CapExceededError, InvalidInputError
from .words import Alphabet, EmpiricalMeasure, FiniteWord, dbar, empirical_measure, tv_distance


@dataclass(frozen=True)
class ShadowSequence:
    """A candidate shadowing sequence, held as a finite word or lazily as b_n^i."""

    word: Optional[FiniteWord] = None
    provenance: str = ""
    hierarchy: Optional[BlockHierarchy] = None
    block: Optional[tuple] = None

    def __post_init__(self):
        if self.word is None and (self.hierarchy is None or self.block is None):
            raise InvalidInputError("a shadow sequence needs a word or a hierarchy block")
        if self.word is not None and len(self.word) == 0:
            raise InvalidInputError("a shadow sequence cannot be empty")

    @classmethod
    def from_block(cls, h: BlockHierarchy, n: int, i: int = 0, provenance: str = "") -> "ShadowSequence":
        h._check_type(n, i)
        return cls(None, provenance or f"development of type {i} at level {n}", h, (n, i))

    def length(self) -> int:
        if self.word is not None:
            return len(self.word)
        return self.hierarchy.length(*self.block)

    def __len__(self):
        return self.length()

    def prefix(self, n: int) -> FiniteWord:
        if not 0 < n <= self.length():
            raise InvalidInputError("prefix length outside the sequence")
        if self.word is not None:
            return self.word[:n]
        return self.hierarchy.expand(*self.block, 0, n)

    def prefix_measure(self, n: int, k: int) -> EmpiricalMeasure:
        if k > n:
            raise InvalidInputError("block order exceeds prefix length")
        if self.word is not None:
            return empirical_measure(self.word[:n], k)
        return self.hierarchy.prefix_measure(*self.block, n, k)


def _as_sequence(omega) -> ShadowSequence:
    return omega if isinstance(omega, ShadowSequence) else ShadowSequence(omega)


def generated_name(h: BlockHierarchy, level: int, blocks: int, seed: int = 0, weights=None, cap: Optional[int] = None) -> FiniteWord:
    """Concatenation of ``blocks`` level blocks drawn independently (uniform types by default)."""
    count = h.num_types(level)
    if blocks < 1:
        raise InvalidInputError("need at least one block")
    rng = np.random.default_rng(seed)
    p = None
    if weights is not None:
        w = np.array([float(x) for x in weights])
        p = w / w.sum()
    picks = rng.choice(count, size=blocks, p=p)
    total = sum(h.length(level, int(i)) for i in picks)
    if cap is not None and total > cap:
        raise CapExceededError(f"name of {total} symbols exceeds cap {cap}")
    devs = {int(i): np.asarray(h.expand(level, int(i), cap=total).symbols) for i in set(picks.tolist())}
    return FiniteWord(np.concatenate([devs[int(i)] for i in picks]), h.alphabet)


# -- covers ------------------------------------------------------------------


@dataclass(frozen=True)
class CoverReport:
    total_length: int
    segments: tuple
    uncovered_fraction: Fraction
    epsilon: Fraction
    length_window: tuple
    lower_bound: bool = False

    @property
    def covered(self) -> int:
        return sum(s[1] for s in self.segments)


def _min_length(eps: Fraction) -> int:
    return math.ceil(1 / eps)


def _threshold(eps: Fraction, length: np.ndarray) -> np.ndarray:
    """Largest admissible mismatch count: mismatches < eps * length."""
    return (eps.numerator * length - 1) // eps.denominator


def admissible_lengths(name: FiniteWord, omega, epsilon, N: int, lengths=None) -> tuple:
    """Boolean table ``ok[t, j]``: segment [t, t+lens[j]) is within epsilon of the prefix."""
    x = np.asarray(name.symbols)
    w = np.asarray(omega.prefix(N).symbols)
    n = len(x)
    lo = _min_length(epsilon)
    lens = np.arange(lo, N + 1) if lengths is None else np.array(sorted(set(int(l) for l in lengths)))
    limit = _threshold(epsilon, lens)
    padded = np.concatenate([x, np.full(N, -1, dtype=x.dtype)])
    ok = np.zeros((n, len(lens)), dtype=bool)
    rows = max(1, 4_000_000 // N)
    for t0 in range(0, n, rows):
        t1 = min(n, t0 + rows)
        win = np.lib.stride_tricks.sliding_window_view(padded[t0 : t1 + N - 1], N)[: t1 - t0]
        cm = np.cumsum(win != w, axis=1)[:, lens - 1]
        fits = (np.arange(t0, t1)[:, None] + lens[None, :]) <= n
        ok[t0:t1] = (cm <= limit[None, :]) & fits
    return ok, lens


def cover_c2(name: FiniteWord, omega, epsilon, N: int, length_grid: Optional[float] = None) -> CoverReport:
    """Maximal coverage of ``name`` by disjoint epsilon-copies of prefixes of omega.

    With ``length_grid`` set to a ratio > 1 only a geometric grid of segment
    lengths is tried and the coverage is a lower bound on the optimum.
    """
    omega = _as_sequence(omega)
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise InvalidInputError("epsilon must lie in (0, 1)")
    lo = _min_length(eps)
    if not lo <= N <= omega.length():
        raise InvalidInputError(f"need ceil(1/eps) = {lo} <= N <= |omega| = {omega.length()}")
    if len(name) < N:
        raise InvalidInputError("name shorter than N")
    grid = None
    if length_grid is not None:
        if length_grid <= 1:
            raise InvalidInputError("length grid ratio must exceed 1")
        grid, l = set(), float(lo)
        while l <= N:
            grid.add(int(l))
            l *= length_grid
        grid.add(N)
    ok, lens = admissible_lengths(name, omega, eps, N, grid)
    n = len(name)
    best = np.zeros(n + 1, dtype=np.int64)
    choice = np.zeros(n, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        row = lens[ok[t]]
        skip = best[t + 1]
        if row.size:
            vals = row + best[t + row]
            k = int(np.flatnonzero(vals == vals.max())[-1])
            if vals[k] > skip:
                best[t] = vals[k]
                choice[t] = row[k]
                continue
        best[t] = skip
    segments = []
    t = 0
    wx = omega.prefix(N)
    while t < n:
        l = int(choice[t])
        if l:
            segments.append((t, l, dbar(name[t : t + l], wx[:l])))
            t += l
        else:
            t += 1
    covered = sum(s[1] for s in segments)
    return CoverReport(n, tuple(segments), 1 - Fraction(covered, n), eps, (lo, N), grid is not None)


def validate_cover(report: CoverReport, name: FiniteWord, omega) -> list:
    """Problems found when re-checking a cover from scratch (empty when fine)."""
    omega = _as_sequence(omega)
    problems = []
    lo, N = report.length_window
    end = 0
    for start, length, value in report.segments:
        if start < end:
            problems.append(f"segment at {start} overlaps the previous one")
        if not lo <= length <= N:
            problems.append(f"segment at {start} has length {length} outside [{lo}, {N}]")
        if start + length > len(name):
            problems.append(f"segment at {start} runs past the name")
            continue
        d = dbar(name[start : start + length], omega.prefix(length))
        if d != value or d >= report.epsilon:
            problems.append(f"segment at {start} has distance {d}")
        end = start + length
    covered = sum(s[1] for s in report.segments)
    if report.uncovered_fraction != 1 - Fraction(covered, len(name)):
        problems.append("uncovered fraction does not match the segments")
    return problems


# -- windows -------------------------------------------------------------------


def best_window_alignment(name: FiniteWord, anchor: int, omega, min_len: int) -> dict:
    """Window [a, b) around ``anchor`` closest in dbar to the prefix of omega of the same length.

    Windows are half-open and must contain the anchor.  Ties go to the longer
    window, then to the smaller start.
    """
    omega = _as_sequence(omega)
    n = len(name)
    if not 0 <= anchor < n or min_len < 1:
        raise InvalidInputError("need 0 <= anchor < |name| and min_len >= 1")
    L = min(omega.length(), n)
    w = np.asarray(omega.prefix(L).symbols)
    x = np.asarray(name.symbols)
    best = None
    for a in range(max(0, anchor - L + 1), anchor + 1):
        span = min(L, n - a)
        first = max(min_len, anchor - a + 1)
        if first > span:
            continue
        cm = np.cumsum(x[a : a + span] != w[:span])
        ls = np.arange(first, span + 1)
        mis = cm[ls - 1]
        ratio = mis / ls
        k = np.flatnonzero(ratio == ratio.min())[-1]
        cand = (Fraction(int(mis[k]), int(ls[k])), -int(ls[k]), a)
        if best is None or cand < best:
            best = cand
    if best is None:
        raise InvalidInputError("no admissible window")
    value, neg_len, a = best
    return {"window": (a, a - neg_len), "dbar": value, "note": "one-sided finite name, half-open window containing the anchor"}


# -- balls ----------------------------------------------------------------------


@dataclass(frozen=True)
class BallEstimate:
    word_length: int
    epsilon: Fraction
    sample_count: int
    hits: int
    estimate: Fraction
    standard_error: float


class NameSampler:
    """Uniformly positioned windows of a long name."""

    def __init__(self, name: FiniteWord):
        self.name = name
        self.array = np.asarray(name.symbols)

    def positions(self, length: int, count: int, rng) -> np.ndarray:
        if length > len(self.array):
            raise InvalidInputError("name shorter than the requested windows")
        return rng.integers(0, len(self.array) - length + 1, size=count)

    def window(self, start: int, length: int) -> FiniteWord:
        return self.name[start : start + length]


def _count_close(arr: np.ndarray, w: np.ndarray, starts: np.ndarray, limit: int) -> int:
    """How many windows at ``starts`` have at most ``limit`` mismatches against w."""
    alive = starts
    mism = np.zeros(len(starts), dtype=np.int64)
    col, n = 0, len(w)
    while col < n and alive.size:
        chunk = max(16, min(n - col, 4_000_000 // alive.size))
        c1 = min(n, col + chunk)
        idx = alive[:, None] + np.arange(col, c1)[None, :]
        mism = mism + np.count_nonzero(arr[idx] != w[col:c1], axis=1)
        keep = mism <= limit
        alive, mism = alive[keep], mism[keep]
        col = c1
    return int(alive.size)


def _closed_limit(eps: Fraction, n: int) -> int:
    # balls are closed: dbar <= eps, so eps = 0 means an exact match
    return (eps.numerator * n) // eps.denominator


def ball_measure(sampler: NameSampler, w: FiniteWord, epsilon, samples: int, seed: int = 0) -> BallEstimate:
    """Monte Carlo estimate of the measure of the dbar-ball of radius epsilon around w.

    The ball is closed, so radius 0 estimates the frequency of w itself.
    """
    eps = Fraction(epsilon)
    if samples < 1 or eps < 0:
        raise InvalidInputError("need samples >= 1 and epsilon >= 0")
    rng = np.random.default_rng(seed)
    starts = sampler.positions(len(w), samples, rng)
    limit = _closed_limit(eps, len(w))
    hits = _count_close(sampler.array, np.asarray(w.symbols), starts, limit)
    p = hits / samples
    return BallEstimate(len(w), eps, samples, hits, Fraction(hits, samples), math.sqrt(p * (1 - p) / samples))


def ball_frequency(sampler: NameSampler, w: FiniteWord, epsilon, chunk: int = 200_000) -> Fraction:
    """Exact frequency, over every position of the name, of windows in the epsilon-ball of w."""
    eps = Fraction(epsilon)
    n = len(w)
    total = len(sampler.array) - n + 1
    if total < 1:
        raise InvalidInputError("name shorter than the word")
    limit = _closed_limit(eps, n)
    arr, ws = sampler.array, np.asarray(w.symbols)
    hits = sum(_count_close(arr, ws, np.arange(a, min(total, a + chunk)), limit) for a in range(0, total, chunk))
    return Fraction(hits, total)


def max_ball_estimate(sampler: NameSampler, length: int, epsilon, samples: int, candidates: int = 8, seed: int = 0) -> dict:
    """Largest ball estimate over candidate centers drawn from the name itself."""
    rng = np.random.default_rng(seed + 1)
    centers = sampler.positions(length, candidates, rng)
    ests = [ball_measure(sampler, sampler.window(int(c), length), epsilon, samples, seed) for c in centers]
    best = max(range(len(ests)), key=lambda i: (ests[i].estimate, -i))
    return {"length": length, "best": ests[best], "center": int(centers[best]), "all": ests}


def necessary_series(terms: Sequence, epsilon=None, margin: float = 0.1) -> dict:
    """Partial sums of max ball measures and a log-log decay fit."""
    terms = [(int(n), Fraction(v)) for n, v in terms]
    if not terms:
        raise InvalidInputError("no terms")
    if any(a[0] >= b[0] for a, b in zip(terms, terms[1:])):
        raise InvalidInputError("terms must be sorted by n")
    partial, acc = [], Fraction(0)
    for _, v in terms:
        acc += v
        partial.append(acc)
    pos = [(n, v) for n, v in terms if v > 0]
    exponent = None
    if len(pos) >= 2:
        xs = np.log([n for n, _ in pos])
        ys = np.log([float(v) for _, v in pos])
        exponent = float(np.polyfit(xs, ys, 1)[0])
    summable = exponent is not None and exponent < -1 - margin
    return {
        "epsilon": None if epsilon is None else Fraction(epsilon),
        "partial_sums": partial,
        "fitted_exponent": exponent,
        "margin": margin,
        "summable": summable,
        "verdict": "summable: shadowing obstruction" if summable else "not shown summable",
    }


# -- genericity --------------------------------------------------------------------


def quasi_generic_check(omega, reference, k: int, checkpoints: Sequence[int], tolerance=Fraction(1, 20)) -> dict:
    """TV distances between k-block statistics of omega prefixes and a reference.

    ``reference`` may be a word, a shadow sequence (its full length is used) or
    an empirical measure.
    """
    omega = _as_sequence(omega)
    if isinstance(reference, EmpiricalMeasure):
        ref = reference
    elif isinstance(reference, ShadowSequence):
        ref = reference.prefix_measure(reference.length(), k)
    else:
        ref = empirical_measure(reference, k)
    if ref.order != k:
        raise InvalidInputError("reference measure has another order")
    dists = []
    for c in checkpoints:
        if not k <= c <= omega.length():
            raise InvalidInputError(f"checkpoint {c} outside [k, |omega|]")
        dists.append(tv_distance(omega.prefix_measure(c, k), ref))
    running, cur = [], None
    for d in dists:
        cur = d if cur is None else min(cur, d)
        running.append(cur)
    tol = Fraction(tolerance)
    tail = dists[len(dists) // 2 :]
    return {
        "k": k,
        "checkpoints": list(checkpoints),
        "distances": dists,
        "running_min": running,
        "tolerance": tol,
        "quasi_generic": bool(running) and running[-1] <= tol,
        "generic_on_tail": bool(tail) and max(tail) <= tol,
    }


# -- rank one ------------------------------------------------------------------------


def _matches(x: np.ndarray, start: int, block: np.ndarray, times: int) -> bool:
    l = len(block)
    end = start + l * times
    if end > len(x):
        return False
    return bool(np.array_equal(x[start:end].reshape(times, l), np.broadcast_to(block, (times, l))))


def rank_one_parse(omega, max_depth: int) -> dict:
    """Read omega as B_{n+1} = B_n X_n B_n^m with m >= l^2 and (m+1) l > l^2 |X_n|.

    B_0 is the first symbol.  At each level the shortest admissible writing is
    taken: for a given |X| the least m is max(l^2, l|X|), and the total length
    grows with |X|, so the first |X| that works wins.
    """
    omega = _as_sequence(omega)
    word = omega.word if omega.word is not None else omega.prefix(omega.length())
    x = np.asarray(word.symbols)
    block = x[:1]
    levels = [[BlockType([Literal((int(block[0]),))])]]
    parts = []
    failure = None
    for depth in range(1, max_depth + 1):
        l = len(block)
        found = None
        xl = 0
        while True:
            m = max(l * l, l * xl)
            total = l + xl + m * l
            if total > len(x):
                failure = {"depth": depth, "reason": "prefix exhausted"}
                break
            if _matches(x, l + xl, block, m):
                found = (xl, m)
                break
            xl += 1
        if found is None:
            break
        xl, m = found
        X = tuple(int(s) for s in x[l : l + xl])
        items = [Ref(0)] + ([Literal(X)] if X else []) + [Ref(0, m)]
        levels.append([BlockType(items)])
        parts.append({"level": depth, "X": X, "m": m})
        block = x[: l + xl + m * l]
    h = BlockHierarchy(word.alphabet, 0, levels)
    return {"hierarchy": h, "depth": len(parts), "levels": parts, "failure": failure}


def build_rank_one(b0: int, xs: Sequence[tuple], alphabet: Alphabet, ms: Optional[Sequence[int]] = None) -> tuple:
    """Sequence B_depth from B_0 = b0 and words X_n, with the least admissible m by default."""
    block = [b0]
    used = []
    for n, X in enumerate(xs):
        l = len(block)
        m = max(l * l, l * len(X)) if ms is None else ms[n]
        used.append(m)
        block = block + list(X) + block * m
    return FiniteWord(block, alphabet), used


def _rank_one_length(xs, depth: int) -> int:
    """Length of B_depth when the levels past len(xs) get an empty X."""
    l = 1
    for n in range(depth):
        x = len(xs[n]) if n < len(xs) else 0
        l = l + x + max(l * l, l * x) * l
    return l


def random_rank_one(depth: int, seed: int, alphabet: Optional[Alphabet] = None, max_x: int = 3,
                    max_length: int = 3 * 10**6) -> tuple:
    """A random admissible sequence whose shortest parse is the one it was built from.

    Draws of X_n that would push the final word past ``max_length`` are redrawn.
    """
    alphabet = alphabet or Alphabet(2)
    rng = np.random.default_rng(seed)
    b0 = int(rng.integers(alphabet.size))
    xs = []
    for _ in range(depth):
        for _attempt in range(200):
            cand = xs + [tuple(int(s) for s in rng.integers(alphabet.size, size=int(rng.integers(0, max_x + 1))))]
            if _rank_one_length(cand, depth) > max_length:
                continue
            word, _ = build_rank_one(b0, cand, alphabet)
            parsed = rank_one_parse(ShadowSequence(word), len(cand))
            if parsed["depth"] == len(cand) and [p["X"] for p in parsed["levels"]] == cand:
                xs = cand
                break
        else:
            raise InvalidInputError("could not draw an admissible level")
    word, ms = build_rank_one(b0, xs, alphabet)
    return word, b0, xs, ms


# -- co-shadowing ---------------------------------------------------------------------


def _find(hay: np.ndarray, needle: np.ndarray) -> int:
    if hay.max(initial=0) < 256 and needle.max(initial=0) < 256 and needle.min(initial=0) >= 0:
        return bytes(hay.astype(np.uint8)).find(bytes(needle.astype(np.uint8)))
    h, nd = hay.tolist(), needle.tolist()
    k = len(nd)
    for i in range(len(h) - k + 1):
        if h[i : i + k] == nd:
            return i
    return -1


def co_shadow(omega1, omega2, rounds: int, initial: int = 1, growth: int = 2) -> dict:
    """Alternately extend a word inside omega1 and omega2, relocating it in the other.

    Returns the final word, the trace of (round, extended in, start, length,
    found in other at) and a failure entry when a word cannot be located.
    """
    s1, s2 = _as_sequence(omega1), _as_sequence(omega2)
    seqs = [np.asarray(s1.prefix(s1.length()).symbols), np.asarray(s2.prefix(s2.length()).symbols)]
    alpha = seqs[0][:initial]
    pos = [0, None]
    trace = []
    failure = None
    found = _find(seqs[1], alpha)
    if found < 0:
        failure = {"round": 0, "word": alpha.tolist(), "reason": "not a factor of the second sequence"}
    else:
        pos[1] = found
        trace.append({"round": 0, "extended_in": 1, "start": 0, "length": len(alpha), "found_at": found})
        src = 1
        for r in range(1, rounds + 1):
            seq = seqs[src]
            start = pos[src]
            new_len = min(len(alpha) * growth, len(seq) - start)
            if new_len <= len(alpha):
                failure = {"round": r, "word": alpha.tolist(), "reason": "prefix exhausted"}
                break
            alpha = seq[start : start + new_len]
            other = 1 - src
            found = _find(seqs[other], alpha)
            trace.append({"round": r, "extended_in": src + 1, "start": start, "length": new_len, "found_at": found})
            if found < 0:
                failure = {"round": r, "word": alpha.tolist(), "reason": "occurrence not found"}
                break
            pos[other] = found
            src = other
    alphabet = s1.prefix(1).alphabet
    return {"alpha": FiniteWord(alpha, alphabet) if len(alpha) else None, "trace": trace, "failure": failure}


def entropy_upper(words, n_list: Sequence[int]) -> list:
    """(n, log(number of distinct n-factors) / n) over a collection of words."""
    if isinstance(words, FiniteWord):
        words = [words]
    out = []
    for n in n_list:
        factors = set()
        for w in words:
            t = w.as_tuple()
            factors.update(t[i : i + n] for i in range(len(t) - n + 1))
        if not factors:
            raise InvalidInputError(f"no factors of length {n}")
        out.append((n, math.log(len(factors)) / n))
    return out
