"""The shadowed, non loosely Bernoulli block system built from the N(n+1) = n!+1 recurrence."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, factorial
from typing import Optional

from ..blocks import BlockHierarchy, BlockType, Literal, Ref
from ..errors import InvalidInputError
from ..words import Alphabet, fbar_value


@dataclass(frozen=True)
class FeldmanVariantParams:
    n0: int = 3
    N0: int = 3
    n_max: int = 4
    base_length: int = 1
    base_blocks: Optional[tuple] = None
    repetition_cap: Optional[int] = None

    def resolved_base_blocks(self) -> tuple:
        if self.base_blocks is not None:
            blocks = tuple(tuple(int(s) for s in b) for b in self.base_blocks)
            if len(blocks) != self.N0:
                raise InvalidInputError("need exactly N0 base blocks")
            return blocks
        L = self.base_length
        return tuple(tuple(range(i * L + 1, (i + 1) * L + 1)) for i in range(self.N0))


def feldman_numbers(n0: int, N0: int, n_max: int) -> list:
    """Per level n in n0..n_max-1: N(n), nu_n, beta_n and N(n+1)."""
    if n0 < 2 or n_max <= n0:
        raise InvalidInputError("need 2 <= n0 < n_max")
    rows = []
    N = N0
    for n in range(n0, n_max):
        if (N - 1) % (n - 1):
            raise InvalidInputError(f"nu_{n} = ({N}-1)/({n}-1) is not an integer")
        nu = (N - 1) // (n - 1)
        if nu < 1:
            raise InvalidInputError(f"nu_{n} must be positive")
        beta = nu + N - 1
        N_next = factorial(n) + 1
        rows.append({"n": n, "N": N, "nu": nu, "beta": beta, "N_next": N_next})
        N = N_next
    return rows


def feldman_variant(p: FeldmanVariantParams):
    """Return ``(hierarchy, metadata)``.

    B_{n+1}^i repeats C_{n+1}^i, a run of beta^(i-1)*nu copies of B_n^1 followed
    by beta^(i-1) copies of each other n-block, beta^(N(n+1)-i+1) times.  With a
    repetition cap only that outer exponent is capped; inner runs stay exact.
    """
    base = p.resolved_base_blocks()
    size = max(max(b) for b in base) + 1
    levels = [[BlockType([Literal(b)]) for b in base]]
    rows = feldman_numbers(p.n0, p.N0, p.n_max)
    capped = False
    for row in rows:
        N, nu, beta, N_next = row["N"], row["nu"], row["beta"], row["N_next"]
        level = []
        for i in range(1, N_next + 1):
            run = beta ** (i - 1)
            items = [Ref(0, run * nu)] + [Ref(k, run) for k in range(1, N)]
            reps = beta ** (N_next - i + 1)
            if p.repetition_cap is not None and reps > p.repetition_cap:
                reps = p.repetition_cap
                capped = True
            level.append(BlockType(items, reps))
        levels.append(level)
    h = BlockHierarchy(Alphabet(size), p.n0, levels)
    meta = {
        "construction": "feldman-variant",
        "surrogate": capped,
        "repetition_cap": p.repetition_cap,
        "levels": rows,
    }
    return h, meta


def omega_prefix(h: BlockHierarchy, length: int):
    """First ``length`` symbols of the sequence whose prefixes are the b_n^1."""
    for n in range(h.n0, h.n_max + 1):
        if h.length(n, 0) >= length:
            return h.expand(n, 0, 0, length)
    raise InvalidInputError("prefix longer than the top block")


def fbar_separation_table(h: BlockHierarchy, n: int, length_budget: int = 20000, offsets_per_block: int = 4) -> dict:
    """Pairwise fbar of level-n developments and a segment-grid infimum.

    Segments have length ceil(min |b_n^i| / n^2) and start on an evenly spaced
    grid of ``offsets_per_block`` offsets inside each block.
    """
    count = h.num_types(n)
    lengths = h.lengths(n)
    matrix = [[None] * count for _ in range(count)]
    skipped = []
    words = {}
    for i in range(count):
        if lengths[i] <= length_budget:
            words[i] = h.expand(n, i)
    for i in range(count):
        matrix[i][i] = Fraction(0)
        for j in range(i + 1, count):
            if i in words and j in words:
                matrix[i][j] = matrix[j][i] = fbar_value(words[i], words[j])
            else:
                skipped.append((i, j))
    seg = ceil(Fraction(min(lengths), n * n))
    sampled = []
    best = None
    if seg <= length_budget:
        segs = {}
        for i in range(count):
            span = lengths[i] - seg
            starts = sorted({(span * t) // max(1, offsets_per_block - 1) for t in range(offsets_per_block)})
            segs[i] = [(s, h.expand(n, i, s, s + seg)) for s in starts]
        for i in range(count):
            for j in range(i + 1, count):
                for si, u in segs[i]:
                    for sj, v in segs[j]:
                        val = fbar_value(u, v)
                        sampled.append({"pair": [i, j], "offsets": [si, sj], "fbar": val})
                        if best is None or val < best:
                            best = val
    off = [matrix[i][j] for i in range(count) for j in range(count) if i != j and matrix[i][j] is not None]
    return {
        "level": n,
        "matrix": matrix,
        "min_offdiagonal": min(off) if off else None,
        "segment_length": seg,
        "segment_infimum": best,
        "sampled": sampled,
        "complete": not skipped,
        "skipped_pairs": skipped,
    }
