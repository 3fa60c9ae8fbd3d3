"""Lazy cutting-and-stacking block hierarchies.

A hierarchy has levels ``n0 .. n_max``.  Each level is a list of block types;
a type is a sequence of items (a reference to a type one level down, a run of
the spacer symbol 0, or a literal run of alphabet symbols) optionally repeated
as a whole.  Lengths and positions are Python integers of any size, and nothing
is developed into symbols unless :meth:`BlockHierarchy.expand` is asked to.

Type indices are 0-based: type 0 of a level is ``B_n^1`` in one-based notation.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import CapExceededError, InvalidInputError
from .words import Alphabet, EmpiricalMeasure, FiniteWord

DEFAULT_EXPAND_CAP = 10**6
SPACER = 0


@dataclass(frozen=True)
class Ref:
    index: int
    count: int = 1


@dataclass(frozen=True)
class Spacer:
    length: int


@dataclass(frozen=True)
class Literal:
    symbols: tuple


Item = Union[Ref, Spacer, Literal]


@dataclass(frozen=True)
class BlockType:
    items: tuple
    repeat: int = 1

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


class BlockHierarchy:
    """Immutable leveled block description with cached lengths and counts."""

    def __init__(self, alphabet: Alphabet, n0: int, levels, expand_cap: int = DEFAULT_EXPAND_CAP):
        self.alphabet = alphabet
        self.n0 = n0
        self.levels = tuple(tuple(level) for level in levels)
        self.expand_cap = expand_cap
        if not self.levels:
            raise InvalidInputError("hierarchy needs at least one level")
        self._period = {}
        self._starts = {}
        self._check_and_measure()
        self._counts = {}

    # -- structure ---------------------------------------------------------

    @property
    def n_max(self) -> int:
        return self.n0 + len(self.levels) - 1

    def types(self, n: int):
        self._check_level(n)
        return self.levels[n - self.n0]

    def num_types(self, n: int) -> int:
        return len(self.types(n))

    def _check_level(self, n: int):
        if not self.n0 <= n <= self.n_max:
            raise InvalidInputError(f"level {n} outside {self.n0}..{self.n_max}")

    def _check_type(self, n: int, i: int):
        if not 0 <= i < self.num_types(n):
            raise InvalidInputError(f"no type {i} at level {n}")

    def _item_length(self, n: int, item: Item) -> int:
        if isinstance(item, Ref):
            return item.count * self.length(n - 1, item.index)
        if isinstance(item, Spacer):
            return item.length
        return len(item.symbols)

    def _check_and_measure(self):
        for li, level in enumerate(self.levels):
            n = self.n0 + li
            if not level:
                raise InvalidInputError(f"level {n} has no types")
            for i, bt in enumerate(level):
                if bt.repeat < 1 or not bt.items:
                    raise InvalidInputError(f"type {i} at level {n} is empty")
                starts = [0]
                for item in bt.items:
                    if isinstance(item, Ref):
                        if li == 0:
                            raise InvalidInputError("base-level types cannot hold references")
                        if not 0 <= item.index < len(self.levels[li - 1]) or item.count < 1:
                            raise InvalidInputError(f"dangling reference at level {n}, type {i}")
                    elif isinstance(item, Spacer):
                        if item.length < 1:
                            raise InvalidInputError("spacer runs must be positive")
                    elif isinstance(item, Literal):
                        if not item.symbols or any(not 0 <= s < self.alphabet.size for s in item.symbols):
                            raise InvalidInputError("literal symbols outside the alphabet")
                    else:
                        raise InvalidInputError(f"unknown item {item!r}")
                    starts.append(starts[-1] + self._item_length(n, item))
                self._starts[(n, i)] = starts
                self._period[(n, i)] = starts[-1]

    def length(self, n: int, i: int) -> int:
        self._check_type(n, i)
        return self._period[(n, i)] * self.levels[n - self.n0][i].repeat

    def lengths(self, n: int) -> list:
        return [self.length(n, i) for i in range(self.num_types(n))]

    # -- lazy indexing -------------------------------------------------------

    def symbol_at(self, n: int, i: int, pos: int) -> int:
        self._check_type(n, i)
        if not 0 <= pos < self.length(n, i):
            raise InvalidInputError("position outside the block")
        while True:
            bt = self.levels[n - self.n0][i]
            starts = self._starts[(n, i)]
            pos %= starts[-1]
            k = bisect_right(starts, pos) - 1
            item = bt.items[k]
            off = pos - starts[k]
            if isinstance(item, Spacer):
                return SPACER
            if isinstance(item, Literal):
                return item.symbols[off]
            n, i = n - 1, item.index
            pos = off % self.length(n, i)

    def expand(self, n: int, i: int, a: int = 0, b: Optional[int] = None, cap: Optional[int] = None) -> FiniteWord:
        """Develop positions ``[a, b)`` of ``b_n^i`` into a :class:`FiniteWord`."""
        self._check_type(n, i)
        total = self.length(n, i)
        if b is None:
            b = total
        if not 0 <= a < b <= total:
            raise InvalidInputError("expansion range outside the block")
        cap = self.expand_cap if cap is None else cap
        if b - a > cap:
            raise CapExceededError(f"expansion of {b - a} symbols exceeds cap {cap}")
        out = np.empty(b - a, dtype=np.int64)
        self._emit(n, i, a, b, out, 0)
        return FiniteWord(out, self.alphabet)

    def _emit(self, n, i, a, b, out, at):
        """Write symbols [a, b) of b_n^i into out[at:]."""
        small = self._small_development(n, i)
        if small is not None:
            out[at : at + b - a] = small[a:b]
            return
        bt = self.levels[n - self.n0][i]
        starts = self._starts[(n, i)]
        period = starts[-1]
        pos = a
        while pos < b:
            rep_base = pos - pos % period
            local = pos - rep_base
            k = bisect_right(starts, local) - 1
            while k < len(bt.items) and pos < b:
                item = bt.items[k]
                istart = rep_base + starts[k]
                iend = rep_base + starts[k + 1]
                lo, hi = max(pos, istart), min(b, iend)
                if isinstance(item, Spacer):
                    out[at + lo - a : at + hi - a] = SPACER
                elif isinstance(item, Literal):
                    out[at + lo - a : at + hi - a] = item.symbols[lo - istart : hi - istart]
                else:
                    clen = self.length(n - 1, item.index)
                    p = lo
                    while p < hi:
                        cstart = istart + ((p - istart) // clen) * clen
                        q = min(hi, cstart + clen)
                        self._emit(n - 1, item.index, p - cstart, q - cstart, out, at + p - a)
                        p = q
                pos = hi
                k += 1

    def _small_development(self, n, i):
        if self.length(n, i) > 1 << 14:
            return None
        return _cached_development(self, n, i)

    # -- exact counts ----------------------------------------------------------

    def direct_counts(self, m: int, j: int) -> list:
        """Occurrences of each level-(m-1) type among the items of B_m^j."""
        self._check_type(m, j)
        counts = [0] * (self.num_types(m - 1) if m > self.n0 else 0)
        bt = self.levels[m - self.n0][j]
        for item in bt.items:
            if isinstance(item, Ref):
                counts[item.index] += item.count * bt.repeat
        return counts

    def direct_spacer(self, m: int, j: int) -> int:
        bt = self.levels[m - self.n0][j]
        return bt.repeat * sum(it.length for it in bt.items if isinstance(it, Spacer))

    def direct_literal(self, m: int, j: int) -> int:
        bt = self.levels[m - self.n0][j]
        return bt.repeat * sum(len(it.symbols) for it in bt.items if isinstance(it, Literal))

    def counts(self, n: int, m: int, j: int) -> list:
        """Occurrences of each level-n type in the (n)-development of B_m^j."""
        if n > m:
            raise InvalidInputError("inner level above outer level")
        self._check_type(m, j)
        self._check_level(n)
        key = (n, m, j)
        if key not in self._counts:
            if n == m:
                vec = [0] * self.num_types(n)
                vec[j] = 1
            else:
                vec = [0] * self.num_types(n)
                for k, c in enumerate(self.direct_counts(m, j)):
                    if c:
                        for t, d in enumerate(self.counts(n, m - 1, k)):
                            vec[t] += c * d
            self._counts[key] = vec
        return self._counts[key]

    def spacer_total(self, m: int, j: int, above: Optional[int] = None) -> int:
        """Spacer symbols in b_m^j inserted at levels greater than ``above``."""
        above = self.n0 - 1 if above is None else above
        if m <= above:
            return 0
        total = self.direct_spacer(m, j)
        for k, c in enumerate(self.direct_counts(m, j)):
            if c:
                total += c * self.spacer_total(m - 1, k, above)
        return total

    def literal_total(self, m: int, j: int, above: int) -> int:
        """Literal symbols in b_m^j held at levels in (above, m]."""
        if m <= above:
            return 0
        total = self.direct_literal(m, j)
        for k, c in enumerate(self.direct_counts(m, j)):
            if c:
                total += c * self.literal_total(m - 1, k, above)
        return total

    def occupancy(self, inner, outer) -> Fraction:
        """p(B_n^i | B_m^j): fraction of b_m^j covered by copies of b_n^i."""
        (n, i), (m, j) = inner, outer
        self._check_type(n, i)
        self._check_type(m, j)
        if n > m:
            raise InvalidInputError("inner level above outer level")
        return Fraction(self.counts(n, m, j)[i] * self.length(n, i), self.length(m, j))

    def spacer_fraction(self, m: int, j: int, above: Optional[int] = None) -> Fraction:
        return Fraction(self.spacer_total(m, j, above), self.length(m, j))

    # -- reports -------------------------------------------------------------

    def validate(self) -> dict:
        occurrence = []
        levels = []
        for n in range(self.n0, self.n_max + 1):
            direct = [self.spacer_fraction(n, k, above=n - 1) for k in range(self.num_types(n))]
            entry = {"level": n, "types": self.num_types(n), "sup_direct_spacer": max(direct)}
            if n > self.n0:
                for j in range(self.num_types(n)):
                    missing = [i for i, c in enumerate(self.direct_counts(n, j)) if c == 0]
                    if missing:
                        occurrence.append({"level": n, "type": j, "missing": missing})
                # sup over i, k, l of p(B_{n-1}^i | B_n^k) / p(B_{n-1}^i | B_n^l); None if unbounded
                ratio = Fraction(1)
                for i in range(self.num_types(n - 1)):
                    occ = [self.occupancy((n - 1, i), (n, j)) for j in range(self.num_types(n))]
                    if min(occ) == 0:
                        ratio = None
                        break
                    ratio = max(ratio, max(occ) / min(occ))
                entry["ratio_sup"] = ratio
            levels.append(entry)
        return {
            "occurrence_ok": not occurrence,
            "occurrence_violations": occurrence,
            "spacer_series": sum((e["sup_direct_spacer"] for e in levels), Fraction(0)),
            "levels": levels,
            "ok": not occurrence,
        }

    def tower_measures(self, n: int, top: Optional[int] = None) -> dict:
        """Values p(B_n^i | B_top^1) with their spread over top-level types."""
        top = self.n_max if top is None else top
        self._check_level(top)
        if n >= top:
            raise InvalidInputError("tower measures need a level below the top")
        values = [self.occupancy((n, i), (top, 0)) for i in range(self.num_types(n))]
        spread = Fraction(0)
        for i in range(self.num_types(n)):
            occ = [self.occupancy((n, i), (top, j)) for j in range(self.num_types(top))]
            spread = max(spread, max(occ) - min(occ))
        return {"level": n, "top": top, "values": values, "spread": spread}

    # -- exact factor statistics -------------------------------------------

    def factor_summary(self, n: int, i: int, k: int) -> "FactorSummary":
        return _type_summary(self, n, i, k)

    def prefix_summary(self, n: int, i: int, length: int, k: int) -> "FactorSummary":
        """Summary of the first ``length`` symbols of b_n^i."""
        self._check_type(n, i)
        if not 0 < length <= self.length(n, i):
            raise InvalidInputError("prefix length outside the block")
        acc = FactorSummary.empty(k)
        while length > 0:
            full = self.length(n, i)
            if length == full:
                return acc.combine(_type_summary(self, n, i, k))
            bt = self.levels[n - self.n0][i]
            period = self._period[(n, i)]
            reps, length = divmod(length, period)
            if reps:
                acc = acc.combine(_period_summary(self, n, i, k).power(reps))
            if length == 0:
                break
            starts = self._starts[(n, i)]
            idx = bisect_right(starts, length) - 1
            for item in bt.items[:idx]:
                acc = acc.combine(_item_summary(self, n, item, k))
            length -= starts[idx]
            if length == 0:
                break
            item = bt.items[idx]
            if isinstance(item, Spacer):
                return acc.combine(FactorSummary.run(k, SPACER, length))
            if isinstance(item, Literal):
                return acc.combine(FactorSummary.of_symbols(k, item.symbols[:length]))
            clen = self.length(n - 1, item.index)
            whole, length = divmod(length, clen)
            if whole:
                acc = acc.combine(_type_summary(self, n - 1, item.index, k).power(whole))
            if length == 0:
                break
            n, i = n - 1, item.index
        return acc

    def prefix_measure(self, n: int, i: int, length: int, k: int) -> EmpiricalMeasure:
        return self.prefix_summary(n, i, length, k).measure()

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        levels = []
        for li, level in enumerate(self.levels):
            n = self.n0 + li
            types = []
            for i, bt in enumerate(level):
                items = []
                for item in bt.items:
                    if isinstance(item, Ref):
                        d = {"ref": item.index}
                        if item.count != 1:
                            d["count"] = _encode_int(item.count)
                    elif isinstance(item, Spacer):
                        d = {"spacer": _encode_int(item.length)}
                    else:
                        d = {"word": list(item.symbols)}
                    items.append(d)
                entry = {"items": items, "length": _encode_int(self.length(n, i))}
                if bt.repeat != 1:
                    entry["repeat"] = _encode_int(bt.repeat)
                types.append(entry)
            levels.append(types)
        alphabet = {"size": self.alphabet.size}
        if self.alphabet.labels is not None:
            alphabet["labels"] = list(self.alphabet.labels)
        return {"format": "shadowkit-hierarchy/1", "alphabet": alphabet, "n0": self.n0, "levels": levels}

    @classmethod
    def from_dict(cls, doc: dict) -> "BlockHierarchy":
        try:
            alpha = doc["alphabet"]
            alphabet = Alphabet(int(alpha["size"]), alpha.get("labels"))
            levels = []
            stored = []
            for types in doc["levels"]:
                level = []
                for entry in types:
                    items = []
                    for d in entry["items"]:
                        if "ref" in d:
                            items.append(Ref(int(d["ref"]), _decode_int(d.get("count", 1))))
                        elif "spacer" in d:
                            items.append(Spacer(_decode_int(d["spacer"])))
                        elif "word" in d:
                            items.append(Literal(tuple(int(s) for s in d["word"])))
                        else:
                            raise InvalidInputError(f"unknown item {d!r}")
                    level.append(BlockType(items, _decode_int(entry.get("repeat", 1))))
                    stored.append(entry.get("length"))
                levels.append(level)
            h = cls(alphabet, int(doc["n0"]), levels)
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed hierarchy document: {exc}") from None
        flat = [(n, i) for n in range(h.n0, h.n_max + 1) for i in range(h.num_types(n))]
        for (n, i), s in zip(flat, stored):
            if s is not None and _decode_int(s) != h.length(n, i):
                raise InvalidInputError(f"stored length of type {i} at level {n} does not match")
        return h

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "BlockHierarchy":
        return cls.from_dict(json.loads(text))


def _encode_int(x: int):
    # JSON readers often parse numbers as doubles; keep big values exact as strings.
    return x if abs(x) < 2**53 else str(x)


def _decode_int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InvalidInputError(f"expected an integer, got {x!r}")
    return int(x)


@lru_cache(maxsize=4096)
def _cached_development(h: BlockHierarchy, n: int, i: int) -> np.ndarray:
    bt = h.levels[n - h.n0][i]
    parts = []
    for item in bt.items:
        if isinstance(item, Spacer):
            parts.append(np.zeros(item.length, dtype=np.int64))
        elif isinstance(item, Literal):
            parts.append(np.array(item.symbols, dtype=np.int64))
        else:
            parts.append(np.tile(_cached_development(h, n - 1, item.index), item.count))
    period = np.concatenate(parts)
    out = np.tile(period, bt.repeat)
    out.flags.writeable = False
    return out


class FactorSummary:
    """Counts of length-k factors of a word plus its (k-1)-symbol ends.

    Summaries form a monoid under concatenation, so the factor statistics of a
    developed block follow from its items without materializing it.
    """

    __slots__ = ("k", "length", "counts", "head", "tail")

    def __init__(self, k, length, counts, head, tail):
        self.k = k
        self.length = length
        self.counts = counts
        self.head = head
        self.tail = tail

    @classmethod
    def empty(cls, k):
        return cls(k, 0, Counter(), (), ())

    @classmethod
    def of_symbols(cls, k, symbols):
        symbols = tuple(int(s) for s in symbols)
        counts = Counter(symbols[p : p + k] for p in range(len(symbols) - k + 1))
        return cls(k, len(symbols), counts, symbols[: k - 1], symbols[max(0, len(symbols) - k + 1) :])

    @classmethod
    def run(cls, k, symbol, length):
        counts = Counter({(symbol,) * k: length - k + 1}) if length >= k else Counter()
        ends = (symbol,) * min(length, k - 1)
        return cls(k, length, counts, ends, ends)

    def combine(self, other: "FactorSummary") -> "FactorSummary":
        if self.length == 0:
            return other
        if other.length == 0:
            return self
        k = self.k
        counts = self.counts + other.counts
        bridge = self.tail + other.head
        cut = len(self.tail)
        # Factors that start in the left part and end in the right part.
        for p in range(max(0, cut - k + 1), cut):
            if p + k <= len(bridge):
                counts[bridge[p : p + k]] += 1
        head = self.head if len(self.head) == k - 1 else (self.head + other.head)[: k - 1]
        tail = other.tail if len(other.tail) == k - 1 else (self.tail + other.tail)[-(k - 1) :] if k > 1 else ()
        return FactorSummary(k, self.length + other.length, counts, head, tail)

    def power(self, e: int) -> "FactorSummary":
        result = FactorSummary.empty(self.k)
        base = self
        while e:
            if e & 1:
                result = result.combine(base)
            e >>= 1
            if e:
                base = base.combine(base)
        return result

    def measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure.from_counts(self.k, self.counts)


@lru_cache(maxsize=None)
def _type_summary(h, n, i, k):
    return _period_summary(h, n, i, k).power(h.levels[n - h.n0][i].repeat)


@lru_cache(maxsize=None)
def _period_summary(h, n, i, k):
    acc = FactorSummary.empty(k)
    for item in h.levels[n - h.n0][i].items:
        acc = acc.combine(_item_summary(h, n, item, k))
    return acc


def _item_summary(h, n, item, k):
    if isinstance(item, Spacer):
        return FactorSummary.run(k, SPACER, item.length)
    if isinstance(item, Literal):
        return FactorSummary.of_symbols(k, item.symbols)
    return _type_summary(h, n - 1, item.index, k).power(item.count)


def single_symbol_hierarchy(symbol: int, alphabet: Alphabet, levels: int = 1) -> BlockHierarchy:
    """Each level doubles the previous one; handy for tests."""
    lv = [[BlockType([Literal((symbol,))])]]
    for _ in range(levels - 1):
        lv.append([BlockType([Ref(0, 2)])])
    return BlockHierarchy(alphabet, 1, lv)
