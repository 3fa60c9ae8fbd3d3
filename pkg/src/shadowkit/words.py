"""Finite words over indexed alphabets and the Hamming and Feldman distances."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CapExceededError, InvalidInputError

# Above this many DP cells fbar refuses to build a witness table.
WITNESS_CELL_CAP = 40_000_000


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: Optional[tuple] = None

    def __post_init__(self):
        if self.size < 1:
            raise InvalidInputError("alphabet size must be positive")
        if self.labels is not None:
            labels = tuple(self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.size or len(set(labels)) != self.size:
                raise InvalidInputError("alphabet labels must be distinct, one per symbol")

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "Alphabet":
        labels = tuple(labels)
        return cls(len(labels), labels)

    @classmethod
    def digits(cls) -> "Alphabet":
        return cls(10, tuple("0123456789"))

    def index(self, label: str) -> int:
        if self.labels is None:
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidInputError(f"symbol {label!r} not in alphabet") from None

    def label(self, index: int) -> str:
        return str(index) if self.labels is None else self.labels[index]


class FiniteWord:
    """An immutable sequence of symbol indices over an :class:`Alphabet`."""

    __slots__ = ("alphabet", "_symbols", "_tuple")

    def __init__(self, symbols, alphabet: Alphabet):
        arr = np.array(symbols, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= alphabet.size):
            raise InvalidInputError("symbol index outside the alphabet")
        arr.flags.writeable = False
        self.alphabet = alphabet
        self._symbols = arr
        self._tuple = None

    @classmethod
    def from_string(cls, text: str, alphabet: Optional[Alphabet] = None) -> "FiniteWord":
        if alphabet is None:
            if not all(ch.isdigit() for ch in text):
                raise InvalidInputError("non-digit word needs an explicit alphabet")
            alphabet = Alphabet.digits()
        return cls([alphabet.index(ch) for ch in text], alphabet)

    @property
    def symbols(self) -> np.ndarray:
        return self._symbols

    def as_tuple(self) -> tuple:
        if self._tuple is None:
            self._tuple = tuple(int(s) for s in self._symbols)
        return self._tuple

    def __len__(self):
        return int(self._symbols.size)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return FiniteWord(self._symbols[key], self.alphabet)
        return int(self._symbols[key])

    def __iter__(self):
        return iter(self.as_tuple())

    def __eq__(self, other):
        return (
            isinstance(other, FiniteWord)
            and self.alphabet == other.alphabet
            and np.array_equal(self._symbols, other._symbols)
        )

    def __hash__(self):
        return hash((self.alphabet, self.as_tuple()))

    def __add__(self, other: "FiniteWord") -> "FiniteWord":
        _same_alphabet(self, other)
        return FiniteWord(np.concatenate([self._symbols, other._symbols]), self.alphabet)

    def __repr__(self):
        text = self.to_string()
        if len(text) > 40:
            text = text[:37] + "..."
        return f"FiniteWord({text!r})"

    def to_string(self, sep: str = "") -> str:
        if self.alphabet.labels is None:
            sep = sep or " "
        return sep.join(self.alphabet.label(int(s)) for s in self._symbols)


@dataclass(frozen=True)
class Coupling:
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    def __len__(self):
        return len(self.pairs)

    def is_valid_for(self, a: FiniteWord, b: FiniteWord) -> bool:
        prev_i = prev_j = -1
        for i, j in self.pairs:
            if i <= prev_i or j <= prev_j or i >= len(a) or j >= len(b):
                return False
            if a[i] != b[j]:
                return False
            prev_i, prev_j = i, j
        return True


@dataclass(frozen=True)
class EmpiricalMeasure:
    order: int
    freq: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise InvalidInputError("measure order must be positive")
        if any(v < 0 for v in self.freq.values()) or sum(self.freq.values()) != 1:
            raise InvalidInputError("frequencies must be nonnegative and sum to 1")

    @classmethod
    def from_counts(cls, order: int, counts) -> "EmpiricalMeasure":
        total = sum(counts.values())
        if total <= 0:
            raise InvalidInputError("no factors to count")
        return cls(order, {u: Fraction(c, total) for u, c in counts.items() if c})

    def support(self) -> set:
        return set(self.freq)


def _same_alphabet(a: FiniteWord, b: FiniteWord):
    if a.alphabet != b.alphabet:
        raise InvalidInputError("words are over different alphabets")


def dbar(a: FiniteWord, b: FiniteWord) -> Fraction:
    """Normalized Hamming distance of two equal-length words."""
    _same_alphabet(a, b)
    if len(a) != len(b) or len(a) == 0:
        raise InvalidInputError("dbar needs two nonempty words of equal length")
    return Fraction(int(np.count_nonzero(a.symbols != b.symbols)), len(a))


def lcs_length(a: FiniteWord, b: FiniteWord) -> int:
    """Length of a maximal coupling, by the bit-parallel LCS recurrence."""
    _same_alphabet(a, b)
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 0:
        return 0
    # One bit per position of a; V keeps a 1 where the LCS row has not yet grown.
    masks = {}
    for i, c in enumerate(a.as_tuple()):
        masks[c] = masks.get(c, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for c in b.as_tuple():
        u = v & masks.get(c, 0)
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def lcs_table(a: FiniteWord, b: FiniteWord) -> np.ndarray:
    """Full (|a|+1) x (|b|+1) table of prefix LCS lengths."""
    n, m = len(a), len(b)
    if (n + 1) * (m + 1) > WITNESS_CELL_CAP:
        raise CapExceededError("LCS table too large for a witness; use fbar_value")
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    bs = b.symbols
    for i in range(1, n + 1):
        prev = table[i - 1]
        eq = bs == a.symbols[i - 1]
        row = np.maximum(prev[1:], prev[:-1] + eq)
        table[i, 1:] = np.maximum.accumulate(row)
    return table


def _small_lcs_table(a: tuple, b: tuple):
    m = len(b)
    table = [[0] * (m + 1)]
    for x in a:
        prev = table[-1]
        row = [0] * (m + 1)
        for j in range(1, m + 1):
            if x == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = prev[j] if prev[j] >= row[j - 1] else row[j - 1]
        table.append(row)
    return table


def maximal_coupling(a: FiniteWord, b: FiniteWord) -> Coupling:
    _same_alphabet(a, b)
    ta, tb = a.as_tuple(), b.as_tuple()
    table = _small_lcs_table(ta, tb) if len(ta) * len(tb) <= 4096 else lcs_table(a, b)
    i, j = len(ta), len(tb)
    pairs = []
    while i > 0 and j > 0:
        if ta[i - 1] == tb[j - 1] and table[i][j] == table[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif table[i - 1][j] == table[i][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return Coupling(pairs)


def _fbar_from_r(na: int, nb: int, r: int) -> Fraction:
    return Fraction(na + nb - 2 * r, na + nb)


def fbar(a: FiniteWord, b: FiniteWord):
    """Feldman distance with a maximal coupling as witness."""
    _same_alphabet(a, b)
    if len(a) == 0 or len(b) == 0:
        raise InvalidInputError("fbar needs nonempty words")
    coupling = maximal_coupling(a, b)
    return _fbar_from_r(len(a), len(b), len(coupling)), coupling


def fbar_value(a: FiniteWord, b: FiniteWord) -> Fraction:
    """Feldman distance without a witness; works on long words."""
    if len(a) == 0 or len(b) == 0:
        raise InvalidInputError("fbar needs nonempty words")
    return _fbar_from_r(len(a), len(b), lcs_length(a, b))


def lcs_banded(a: FiniteWord, b: FiniteWord, band: int) -> int:
    """LCS restricted to a diagonal band; a lower bound on the true length."""
    _same_alphabet(a, b)
    if band < 0:
        raise InvalidInputError("band must be nonnegative")
    ta, tb = a.as_tuple(), b.as_tuple()
    n, m = len(ta), len(tb)
    if n == 0 or m == 0:
        return 0
    prev = {}
    for i in range(1, n + 1):
        center = (i * m) // n
        row = {}
        for j in range(max(1, center - band), min(m, center + band) + 1):
            if ta[i - 1] == tb[j - 1]:
                v = prev.get(j - 1, 0) + 1
            else:
                v = max(prev.get(j, 0), row.get(j - 1, 0))
            row[j] = v
        prev = row
    return max(prev.values(), default=0)


def fbar_banded(a: FiniteWord, b: FiniteWord, band: int) -> dict:
    """Upper bound on fbar from the banded LCS, tagged approximate."""
    r = lcs_banded(a, b, band)
    return {"value": _fbar_from_r(len(a), len(b), r), "lcs_lower_bound": r, "approximate": True}


def _distinct_subsequences(word: tuple) -> list:
    """Distinct subsequences of word grouped by length."""
    by_len = [set() for _ in range(len(word) + 1)]
    by_len[0].add(())
    for pos, c in enumerate(word):
        for k in range(pos, -1, -1):
            by_len[k + 1].update(s + (c,) for s in by_len[k])
    return by_len


def fbar_oracle(a: FiniteWord, b: FiniteWord) -> Fraction:
    """Brute-force fbar over deletion subsets; for tests on short words."""
    _same_alphabet(a, b)
    if len(a) + len(b) > 16:
        raise InvalidInputError("fbar_oracle is limited to |a|+|b| <= 16")
    if len(a) == 0 or len(b) == 0:
        raise InvalidInputError("fbar needs nonempty words")
    sa = _distinct_subsequences(a.as_tuple())
    sb = _distinct_subsequences(b.as_tuple())
    for r in range(min(len(a), len(b)), -1, -1):
        if not sa[r].isdisjoint(sb[r]):
            return _fbar_from_r(len(a), len(b), r)
    raise AssertionError("the empty word is always common")


def fbar_oracle_subsets(a: FiniteWord, b: FiniteWord) -> Fraction:
    """Literal deletion-set enumeration, slower than fbar_oracle."""
    ta, tb = a.as_tuple(), b.as_tuple()
    best = 0
    for r in range(min(len(ta), len(tb)), 0, -1):
        subs_a = {tuple(ta[i] for i in idx) for idx in combinations(range(len(ta)), r)}
        if any(tuple(tb[j] for j in idx) in subs_a for idx in combinations(range(len(tb)), r)):
            best = r
            break
    return _fbar_from_r(len(ta), len(tb), best)


def _factors(w: FiniteWord, k: int):
    if k < 1 or k > len(w):
        raise InvalidInputError("factor length must be in 1..|w|")
    t = w.as_tuple()
    return (t[i : i + k] for i in range(len(t) - k + 1))


def empirical_measure(w: FiniteWord, k: int) -> EmpiricalMeasure:
    return EmpiricalMeasure.from_counts(k, Counter(_factors(w, k)))


def tv_distance(m1: EmpiricalMeasure, m2: EmpiricalMeasure) -> Fraction:
    if m1.order != m2.order:
        raise InvalidInputError("measures of different orders")
    keys = m1.support() | m2.support()
    zero = Fraction(0)
    return sum((abs(m1.freq.get(u, zero) - m2.freq.get(u, zero)) for u in keys), zero) / 2


def word_complexity(w: FiniteWord, k: int) -> int:
    return len(set(_factors(w, k)))


def concat(words: Sequence[FiniteWord]) -> FiniteWord:
    if not words:
        raise InvalidInputError("nothing to concatenate")
    for w in words[1:]:
        _same_alphabet(words[0], w)
    return FiniteWord(np.concatenate([w.symbols for w in words]), words[0].alphabet)
