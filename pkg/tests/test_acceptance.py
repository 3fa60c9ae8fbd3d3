"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section at
the end of the run lists every criterion.
"""

import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from shadowkit.cli import main
from shadowkit.constructions.feldman import FeldmanVariantParams, fbar_separation_table, feldman_variant
from shadowkit.constructions.iet import IETSpec, golden_convergent, iet_itinerary, iet_shadow_check, silver_convergent
from shadowkit.constructions.lbsystem import (
    LBSystemParams,
    ceil_power,
    coincidences,
    corrupt,
    decode_window,
    exclusion_bound,
    lb_system,
)
from shadowkit.constructions.torus import torus_atom_series
from shadowkit.errors import InvalidInputError
from shadowkit.shadowing import (
    NameSampler,
    ShadowSequence,
    cover_c2,
    generated_name,
    max_ball_estimate,
    necessary_series,
    quasi_generic_check,
    random_rank_one,
    rank_one_parse,
)
from shadowkit.words import Alphabet, FiniteWord, dbar, fbar, fbar_oracle, fbar_value

from oracles import cover_oracle

F = Fraction
BIN = Alphabet(2)


@pytest.fixture(scope="module")
def lb():
    return lb_system(LBSystemParams(gamma=2, beta=F(1, 8), l0=64, n0=3, n_max=5))


def _canonical(a, b):
    """Representative of (a, b) under swap, reversal and complement; fbar is invariant under all three."""
    best = None
    for x, y in ((a, b), (b, a)):
        for rev in (False, True):
            for comp in (False, True):
                xx, yy = (x[::-1], y[::-1]) if rev else (x, y)
                if comp:
                    xx, yy = tuple(1 - s for s in xx), tuple(1 - s for s in yy)
                key = (len(xx), len(yy), xx, yy)
                if best is None or key < best:
                    best = key
    return best


def test_criterion_01_metric_oracle(record):
    t0 = time.time()
    words = {n: list(product((0, 1), repeat=n)) for n in range(1, 14)}
    reps = set()
    for total in range(2, 15):
        for n in range(1, total // 2 + 1):
            for a in words[n]:
                for b in words[total - n]:
                    reps.add(_canonical(a, b))
    bad = 0
    for _, _, a, b in sorted(reps):
        wa, wb = FiniteWord(a, BIN), FiniteWord(b, BIN)
        if fbar_value(wa, wb) != fbar_oracle(wa, wb):
            bad += 1
    elapsed = time.time() - t0
    ok = bad == 0 and elapsed < 30
    record(1, ok, f"{len(reps)} pair classes, {bad} mismatches, {elapsed:.1f}s")
    assert ok


def test_criterion_02_metric_axioms(record):
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(10**4):
        n = int(rng.integers(1, 25))
        x, y, z = (FiniteWord(rng.integers(0, 3, n), Alphabet(3)) for _ in range(3))
        dxy, dyz, dxz = dbar(x, y), dbar(y, z), dbar(x, z)
        failures += not (dbar(x, x) == 0 and (dxy == 0) == (x == y) and dxy == dbar(y, x) and dxz <= dxy + dyz)
    for _ in range(10**4):
        a = FiniteWord(rng.integers(0, 3, int(rng.integers(1, 30))), Alphabet(3))
        if rng.random() < 0.3:
            b = FiniteWord(rng.integers(0, 3, len(a)), Alphabet(3))
        else:
            b = FiniteWord(rng.integers(0, 3, int(rng.integers(1, 30))), Alphabet(3))
        v, coupling = fbar(a, b)
        good = v == fbar_value(b, a) and (v == 0) == (a == b) and coupling.is_valid_for(a, b)
        good = good and v >= F(abs(len(a) - len(b)), len(a) + len(b))
        if len(a) == len(b):
            good = good and v <= dbar(a, b)
        failures += not good
    record(2, failures == 0, f"{failures} violations over 2 x 10^4 random cases")
    assert failures == 0


def test_criterion_03_feldman_structure(record):
    t0 = time.time()
    h, meta = feldman_variant(FeldmanVariantParams(n0=3, N0=3, n_max=6))
    problems = []
    for row in meta["levels"]:
        n = row["n"]
        lengths = h.lengths(n + 1)
        if len(set(lengths)) != 1 or lengths[0] != h.length(n, 0) * row["beta"] ** (row["N_next"] + 1):
            problems.append(f"lengths at level {n + 1}")
        if any(h.occupancy((n, 0), (n + 1, i)) != F(1, n) for i in range(len(lengths))):
            problems.append(f"frequency at level {n + 1}")
        L = min(h.length(n, 0), 10**5)
        if any(h.symbol_at(n + 1, 0, p) != h.symbol_at(n, 0, p) for p in range(L)):
            problems.append(f"prefix chain at level {n}")
    elapsed = time.time() - t0
    ok = not problems and elapsed < 60
    record(3, ok, f"levels 3..6, problems={problems}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_fbar_separation(record):
    h, meta = feldman_variant(FeldmanVariantParams(n0=3, N0=3, n_max=4, repetition_cap=8))
    tables = [fbar_separation_table(h, n, length_budget=10**5) for n in (3, 4)]
    mins = [t["min_offdiagonal"] for t in tables]
    ok = meta["surrogate"] and all(t["complete"] for t in tables) and min(mins) >= F(1, 10)
    record(4, ok, f"surrogate cap 8, min off-diagonal fbar per level {[round(float(m), 4) for m in mins]} (threshold 0.1)")
    assert ok


def test_criterion_05_lb_gates(record, lb):
    h = lb.hierarchy
    problems = []
    for n in (4, 5):
        entry = lb.level_log(n)
        low = entry["from_level"]
        for j in range(h.num_types(n)):
            if h.spacer_fraction(n, j, above=low) > F(1, low * low):
                problems.append(f"spacer at level {n}")
        fam = lb.families[n]
        delta = entry["delta"]
        for x in range(len(fam)):
            for y in range(x + 1, len(fam)):
                if coincidences(fam[x], fam[y]) >= delta:
                    problems.append(f"separation at level {n}")
        gate = exclusion_bound(entry["values"], entry["b"], delta, entry["N"])
        if not (entry["N"] - 1) * gate["E"] < gate["b_pow_p"]:
            problems.append(f"exclusion gate at level {n}")
    record(5, not problems, f"levels 4..5, problems={problems}")
    assert not problems


def test_criterion_06_decoder(record, lb):
    h = lb.hierarchy
    rng = np.random.default_rng(6)
    counts = {}
    for n in (4, 5):
        L = lb.min_window(n)
        frac = lb.epsilon(n) / 2 * F(99, 100)
        for mode in ("clean", "corrupt"):
            good = 0
            for _ in range(200):
                j = int(rng.integers(h.num_types(n)))
                off = int(rng.integers(h.length(n, j) - L + 1))
                win = h.expand(n, j, off, off + L)
                if mode == "corrupt":
                    win = corrupt(win, frac, rng)
                good += decode_window(lb, win, n) == (n, j, off)
            counts[(n, mode)] = good
        try:
            decode_window(lb, h.expand(n, 0, 0, L - 1), n)
            counts[(n, "short")] = "accepted"
        except InvalidInputError:
            counts[(n, "short")] = "rejected"
    ok = all(v == 200 for k, v in counts.items() if k[1] != "short") and all(
        v == "rejected" for k, v in counts.items() if k[1] == "short")
    record(6, ok, "; ".join(f"level {k[0]} {k[1]}: {v}" for k, v in sorted(counts.items())))
    assert ok


def test_criterion_07_ball_decay(record, lb):
    t0 = time.time()
    h = lb.hierarchy
    name = generated_name(h, 5, 60, seed=1, cap=10**8)
    sampler = NameSampler(name)
    l1, l2 = h.length(4, 0), h.length(5, 0)
    ns = [l1, ceil_power(l1, F(9, 8)), l2]
    terms = []
    for n in ns:
        best = max_ball_estimate(sampler, n, F(1, 20), 10**5, candidates=8, seed=0)["best"]
        terms.append((n, best.estimate))
    series = necessary_series(terms)
    values = [v for _, v in terms]
    decreasing = all(a > b for a, b in zip(values, values[1:]))
    exponent = series["fitted_exponent"]
    elapsed = time.time() - t0
    ok = decreasing and exponent is not None and exponent <= -1 and elapsed < 300
    detail = ", ".join(f"n={n}: {v}" for n, v in terms)
    record(7, ok, f"{detail}; exponent {exponent}; {elapsed:.0f}s")
    assert ok


def test_criterion_08_cover_optimality(record):
    rng = np.random.default_rng(8)
    eps_choices = [F(1, 2), F(1, 3), F(1, 4), F(2, 5), F(3, 10), F(1, 5), F(1, 8)]
    mismatches = 0
    for _ in range(500):
        N = int(rng.integers(2, 9))
        allowed = [e for e in eps_choices if math.ceil(1 / e) <= N]
        eps = allowed[int(rng.integers(len(allowed)))]
        omega = FiniteWord(rng.integers(0, 2, N), BIN)
        parts = []
        length = int(rng.integers(N, 41))
        while sum(map(len, parts)) < length:
            if rng.random() < 0.5:
                piece = np.array(omega.symbols[: int(rng.integers(1, N + 1))])
                flip = rng.random(len(piece)) < 0.1
                piece[flip] = 1 - piece[flip]
            else:
                piece = rng.integers(0, 2, int(rng.integers(1, 4)))
            parts.append(piece)
        name = FiniteWord(np.concatenate(parts)[:length], BIN)
        if cover_c2(name, omega, eps, N).covered != cover_oracle(name, omega, eps, N):
            mismatches += 1
    record(8, mismatches == 0, f"500 instances, {mismatches} disagreements with the exhaustive oracle")
    assert mismatches == 0


def test_criterion_09_feldman_cover(record):
    h, meta = feldman_variant(FeldmanVariantParams(n0=3, N0=3, n_max=4, base_length=10, repetition_cap=8))
    omega = ShadowSequence.from_block(h, 4, 0)
    n = 3
    worst = F(0)
    for i in range(h.num_types(4)):
        name = h.expand(4, i, 0, min(h.length(4, i), 20000))
        worst = max(worst, cover_c2(name, omega, F(1, 10), 100).uncovered_fraction)
    ok = meta["surrogate"] and worst <= F(2, n)
    record(9, ok, f"max uncovered fraction over level-4 names {float(worst):.4f} (bound 2/3)")
    assert ok


def test_criterion_10_iet_shadowing(record):
    t0 = time.time()
    alpha = golden_convergent(10**6)
    spec = IETSpec.rotation(alpha)
    x = F(3141592, 10**7)
    rep = iet_shadow_check(spec, x, 10**4)
    _, audit = iet_itinerary(spec, x, 10**4)
    elapsed = time.time() - t0
    lengths = [m["length"] for m in rep["matches"] if m["exact"]]
    ok = (alpha.denominator > 10**6 and rep["ok"] and rep["increasing"] and len(lengths) >= 5
          and audit["min_distance_to_D"] > 0 and elapsed < 60)
    record(10, ok, f"q={alpha.denominator}, exact match lengths {lengths}, {elapsed:.1f}s")
    assert ok


def test_criterion_11_torus_contrast(record):
    ns = [8, 16, 32, 64, 128, 256]
    series = torus_atom_series(golden_convergent(10**6), silver_convergent(10**6), ns)
    torus = necessary_series(series)
    harmonic = necessary_series([(n, F(1, n)) for n in ns])
    ok = torus["fitted_exponent"] <= -1.8 and torus["summable"] and not harmonic["summable"]
    record(11, ok, f"torus exponent {torus['fitted_exponent']:.3f}, harmonic summable={harmonic['summable']}")
    assert ok


def test_criterion_12_rank_one_round_trip(record):
    bad = 0
    for seed in range(100):
        word, b0, xs, ms = random_rank_one(3, seed)
        r = rank_one_parse(ShadowSequence(word), 3)
        got = [(p["X"], p["m"]) for p in r["levels"]]
        if got != list(zip(xs, ms)) or r["hierarchy"].expand(0, 0).as_tuple() != (b0,):
            bad += 1
    record(12, bad == 0, f"100 random depth-3 sequences, {bad} parse mismatches")
    assert bad == 0


def test_criterion_13_quasi_generic(record):
    h, _ = feldman_variant(FeldmanVariantParams(n0=3, N0=3, n_max=6))
    omega = ShadowSequence.from_block(h, 6, 0)
    reference = ShadowSequence.from_block(h, 6, h.num_types(6) - 1)
    checkpoints = [h.length(n, 0) for n in (4, 5, 6)]
    rep = quasi_generic_check(omega, reference, 2, checkpoints, F(1, 20))
    d = rep["distances"]
    ok = d[2] < F(1, 20) and d[0] > d[2] and rep["quasi_generic"]
    record(13, ok, f"TV distances {[float(x) for x in d]}")
    assert ok


def test_criterion_14_determinism(record, tmp_path):
    (tmp_path / "a.txt").write_text("0110100110010110" * 4)
    (tmp_path / "b.txt").write_text("0110100110" * 5)
    spec = tmp_path / "golden.json"
    spec.write_text(json.dumps({"rotation": {"quotients": [1], "min_denominator": 10**6}}))
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    commands = [
        ["metric", "--fbar", "--dbar", a, a],
        ["build", "--lb", "seed=5", "n_max=4"],
        ["build", "--feldman", "n_max=4", "cap=8"],
        ["analyze", "cover", "--name", b, "--omega", a, "--eps", "1/10", "--N", "40"],
        ["analyze", "balls", "--name", a, "--lengths", "4,8", "--samples", "300", "--seed", "3"],
        ["analyze", "decode", "--lb", "n_max=4", "--trials", "10", "--corruption", "1/3", "--seed", "2"],
        ["analyze", "iet-shadow", "--spec", str(spec), "--horizon", "2000", "--min-matches", "3"],
    ]
    differing = []
    for k, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            path = tmp_path / f"out{k}.json"
            assert main([*cmd, "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(cmd[0] + " " + cmd[1])
    record(14, not differing, f"{len(commands)} commands run twice, differing={differing}")
    assert not differing
