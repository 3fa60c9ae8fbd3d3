"""Command line front-end: ``shadowkit metric|build|analyze``.

Every report embeds the resolved configuration.  Exit codes: 0 success,
2 invalid input, 3 infeasible construction, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .blocks import BlockHierarchy
from .constructions.feldman import FeldmanVariantParams, fbar_separation_table, feldman_variant
from .constructions.iet import IETSpec, continued_fraction_convergent, iet_shadow_check
from .constructions.lbsystem import LBSystemParams, UNKNOWN, corrupt, decode_window, lb_system
from .constructions.torus import torus_atom_series
from .errors import CapExceededError, InvalidInputError, ShadowkitError
from .reports import dump_csv, dump_json, rational
from .shadowing import (
    NameSampler,
    ShadowSequence,
    cover_c2,
    entropy_upper,
    generated_name,
    max_ball_estimate,
    necessary_series,
    quasi_generic_check,
    rank_one_parse,
)
from .words import Alphabet, FiniteWord, dbar, fbar

DEFAULT_MATERIALIZE_CAP = 10**7


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output: Optional[str] = None
    format: str = "json"
    caps: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(v is not None and v <= 0 for v in self.caps.values()):
            raise InvalidInputError("caps must be positive")

    def as_dict(self) -> dict:
        return {"version": __version__, **asdict(self)}


# -- input helpers -------------------------------------------------------------------


def read_symbols(path: str) -> list:
    """A word file: a JSON list of integers, or text of digits / separated integers."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    text = text.strip()
    if text.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: {exc}") from None
        syms = data
    else:
        tokens = [t for t in re.split(r"[\s,]+", text) if t]
        if len(tokens) == 1:
            tokens = list(tokens[0])
        syms = tokens
    try:
        out = [int(s) for s in syms]
    except (TypeError, ValueError):
        raise InvalidInputError(f"{path}: symbols must be nonnegative integers") from None
    if not out or min(out) < 0:
        raise InvalidInputError(f"{path}: empty word or negative symbol")
    return out


def load_words(paths, size: Optional[int] = None) -> list:
    raw = [read_symbols(p) for p in paths]
    top = max(max(r) for r in raw) + 1
    if size is None:
        size = max(2, top)
    elif size < top:
        raise InvalidInputError(f"alphabet size {size} too small for symbol {top - 1}")
    alphabet = Alphabet(size)
    return [FiniteWord(r, alphabet) for r in raw]


def load_hierarchy(path: str) -> BlockHierarchy:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if "hierarchy" in doc:
        doc = doc["hierarchy"]
    return BlockHierarchy.from_dict(doc)


def parse_overrides(pairs, cls) -> dict:
    """``k=v`` strings into keyword arguments of a parameter dataclass."""
    names = {f.name: f for f in fields(cls)}
    aliases = {"nmax": "n_max", "cap": "repetition_cap", "repetitionCap": "repetition_cap", "nMax": "n_max"}
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InvalidInputError(f"expected key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        k = aliases.get(k, k)
        if k not in names:
            raise InvalidInputError(f"unknown parameter {k!r}; known: {', '.join(sorted(names))}")
        out[k] = _parse_value(k, v)
    return out


def _parse_value(k, v):
    if k in ("Gamma", "gamma", "beta"):
        try:
            return Fraction(v)
        except ValueError:
            raise InvalidInputError(f"{k} must be a rational") from None
    if k == "base_blocks":
        return tuple(tuple(int(c) for c in b) for b in v.split(":"))
    if v.lower() == "none":
        return None
    try:
        return int(v)
    except ValueError:
        raise InvalidInputError(f"{k} must be an integer") from None


def load_params(path: Optional[str], overrides, cls):
    base = {}
    if path:
        try:
            base = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot load parameters from {path}: {exc}") from None
        base = {k: _parse_value(k, str(v)) if not isinstance(v, list) else tuple(tuple(b) for b in v) for k, v in base.items()}
    base.update(overrides)
    try:
        return cls(**base)
    except TypeError as exc:
        raise InvalidInputError(str(exc)) from None


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"not a rational: {text!r}") from None


def parse_int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"not a list of integers: {text!r}") from None


def load_iet(path: str) -> IETSpec:
    """IET from JSON: {"lengths", "permutation"} or {"rotation": "p/q" | {"quotients", "min_denominator"}}."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot load {path}: {exc}") from None
    if "rotation" in doc:
        rot = doc["rotation"]
        if isinstance(rot, dict):
            alpha = continued_fraction_convergent(rot.get("quotients", [1]), int(rot["min_denominator"]))
        else:
            alpha = parse_rational(str(rot))
        return IETSpec.rotation(alpha)
    return IETSpec(tuple(parse_rational(str(x)) for x in doc["lengths"]), tuple(doc["permutation"]))


# -- output ----------------------------------------------------------------------------


def emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def report(config: RunConfig, body: dict) -> str:
    return dump_json({"config": config.as_dict(), "report": body})


# -- commands ---------------------------------------------------------------------------


def cmd_metric(args) -> int:
    config = RunConfig("metric", [args.a, args.b], {"dbar": args.dbar, "fbar": args.fbar, "witness": args.witness},
                       output=args.out, format=args.format)
    a, b = load_words([args.a, args.b], args.alphabet_size)
    body = {"lengths": [len(a), len(b)]}
    if args.dbar:
        body["dbar"] = dbar(a, b)
    if args.fbar or not args.dbar:
        value, coupling = fbar(a, b)
        body["fbar"] = value
        body["coupling_size"] = len(coupling)
        if args.witness:
            rows = [(i, j, int(a[i])) for i, j in coupling.pairs]
            Path(args.witness).write_text(dump_csv(["index_a", "index_b", "symbol"], rows, "coupling"))
    if args.format == "text":
        lines = [f"{k} = {rational(v)}" if isinstance(v, Fraction) else f"{k} = {v}" for k, v in body.items()]
        emit("\n".join(lines) + "\n", args.out)
    else:
        emit(report(config, body), args.out)
    return 0


def cmd_build(args) -> int:
    chosen = [x for x in (args.feldman is not None, args.lb is not None, args.rank1_from is not None) if x]
    if len(chosen) != 1:
        raise InvalidInputError("choose exactly one of --feldman, --lb, --rank1-from")
    if args.feldman is not None:
        p = load_params(args.params, parse_overrides(args.feldman, FeldmanVariantParams), FeldmanVariantParams)
        config = RunConfig("build", [], {"construction": "feldman", **asdict(p)}, output=args.out)
        h, meta = feldman_variant(p)
        body = {"construction": meta, "levels": [{"n": n, "lengths": h.lengths(n)} for n in range(h.n0, h.n_max + 1)]}
    elif args.lb is not None:
        p = load_params(args.params, parse_overrides(args.lb, LBSystemParams), LBSystemParams)
        config = RunConfig("build", [], {"construction": "lb", **asdict(p)}, seed=p.seed, output=args.out)
        system = lb_system(p)
        h = system.hierarchy
        body = {"construction": "lb-system", "log": system.log, "families": system.families,
                "separation_verified": True}
    else:
        config = RunConfig("build", [args.rank1_from], {"construction": "rank1", "depth": args.depth}, output=args.out)
        (word,) = load_words([args.rank1_from], args.alphabet_size)
        parsed = rank_one_parse(ShadowSequence(word), args.depth)
        h = parsed["hierarchy"]
        body = {"construction": "rank-one-parse", "depth": parsed["depth"], "levels": parsed["levels"],
                "failure": parsed["failure"]}
    if args.hierarchy_out:
        Path(args.hierarchy_out).write_text(h.to_json() + "\n")
        body["hierarchy_file"] = args.hierarchy_out
    else:
        body["hierarchy"] = h
    emit(report(config, body), args.out)
    return 0


def _name_from_args(args) -> FiniteWord:
    if args.name:
        (w,) = load_words([args.name], args.alphabet_size)
        return w
    if not args.hierarchy:
        raise InvalidInputError("give --name or --hierarchy")
    h = load_hierarchy(args.hierarchy)
    level = h.n_max if args.level is None else args.level
    if args.blocks:
        return generated_name(h, level, args.blocks, seed=args.seed or 0, cap=args.cap)
    return h.expand(level, args.type, cap=args.cap)


def _omega_from_args(args) -> ShadowSequence:
    if args.omega:
        (w,) = load_words([args.omega], args.alphabet_size)
        return ShadowSequence(w, "file " + args.omega)
    if not args.hierarchy:
        raise InvalidInputError("give --omega or --hierarchy")
    h = load_hierarchy(args.hierarchy)
    return ShadowSequence.from_block(h, h.n_max, 0)


def analyze_cover(args, config):
    name = _name_from_args(args)
    omega = _omega_from_args(args)
    rep = cover_c2(name, omega, parse_rational(args.eps), args.N, args.grid)
    return {"cover": rep, "covered": rep.covered}


def analyze_balls(args, config):
    name = _name_from_args(args)
    sampler = NameSampler(name)
    eps = parse_rational(args.eps)
    rows = []
    for n in parse_int_list(args.lengths):
        res = max_ball_estimate(sampler, n, eps, args.samples, args.candidates, seed=args.seed or 0)
        best = res["best"]
        rows.append({"n": n, "max_estimate": best.estimate, "hits": best.hits, "stderr": best.standard_error,
                     "center": res["center"]})
    if args.format == "csv":
        return dump_csv(["n", "max_estimate", "stderr"], [(r["n"], r["max_estimate"], r["stderr"]) for r in rows], "balls")
    series = necessary_series([(r["n"], r["max_estimate"]) for r in rows], eps) if len(rows) >= 2 else None
    return {"rows": rows, "series": series}


def analyze_necessary(args, config):
    if args.torus:
        a1, a2 = (parse_rational(x) for x in args.torus.split(","))
        terms = torus_atom_series(a1, a2, parse_int_list(args.n_list))
    elif args.input:
        terms = []
        for line in Path(args.input).read_text().splitlines():
            if not line.strip() or line.startswith("#") or line.startswith("n,"):
                continue
            n, v = line.split(",")[:2]
            terms.append((int(n), parse_rational(v)))
    else:
        raise InvalidInputError("give --torus or --input")
    return {"terms": terms, "series": necessary_series(terms, margin=args.margin)}


def analyze_quasi_generic(args, config):
    h = load_hierarchy(args.hierarchy)
    omega = ShadowSequence.from_block(h, h.n_max, 0)
    ref_level = h.n_max if args.reference_level is None else args.reference_level
    ref_type = h.num_types(ref_level) - 1 if args.reference_type is None else args.reference_type
    ref = ShadowSequence.from_block(h, ref_level, ref_type)
    return quasi_generic_check(omega, ref, args.k, parse_int_list(args.checkpoints), parse_rational(args.tolerance))


def analyze_iet(args, config):
    spec = load_iet(args.spec)
    return iet_shadow_check(spec, parse_rational(args.x), args.horizon, args.min_matches)


def analyze_fbar_table(args, config):
    h = load_hierarchy(args.hierarchy)
    return fbar_separation_table(h, args.level, args.budget, args.offsets)


def analyze_entropy(args, config):
    name = _name_from_args(args)
    return {"bounds": entropy_upper(name, parse_int_list(args.n_list))}


def analyze_decode(args, config):
    p = load_params(args.params, parse_overrides(args.lb, LBSystemParams), LBSystemParams)
    system = lb_system(p)
    h = system.hierarchy
    level = h.n_max if args.level is None else args.level
    rng = np.random.default_rng(args.seed or 0)
    eps = system.epsilon(level)
    frac = parse_rational(args.corruption) * eps
    L = system.min_window(level)
    ok = 0
    failures = []
    for t in range(args.trials):
        j = int(rng.integers(h.num_types(level)))
        off = int(rng.integers(h.length(level, j) - L + 1))
        w = h.expand(level, j, off, off + L)
        if frac:
            w = corrupt(w, frac, rng)
        got = decode_window(system, w, level)
        if got == (level, j, off):
            ok += 1
        elif len(failures) < 10:
            failures.append({"trial": t, "expected": [level, j, off], "got": got if got == UNKNOWN else list(got)})
    return {"level": level, "window": L, "epsilon": eps, "corruption_fraction": frac, "trials": args.trials,
            "correct": ok, "failures": failures}


ANALYSES = {
    "cover": analyze_cover,
    "balls": analyze_balls,
    "necessary-series": analyze_necessary,
    "quasi-generic": analyze_quasi_generic,
    "iet-shadow": analyze_iet,
    "fbar-table": analyze_fbar_table,
    "entropy": analyze_entropy,
    "decode": analyze_decode,
}


def cmd_analyze(args) -> int:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "out", "format", "seed")}
    config = RunConfig("analyze " + args.analysis, [], params, seed=args.seed, output=args.out, format=args.format,
                       caps={"materialize": args.cap})
    body = ANALYSES[args.analysis](args, config)
    emit(body if isinstance(body, str) else report(config, body), args.out)
    return 0


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shadowkit", description="Shadowing and block-system toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("metric", help="dbar / fbar between two word files")
    m.add_argument("a")
    m.add_argument("b")
    m.add_argument("--dbar", action="store_true")
    m.add_argument("--fbar", action="store_true")
    m.add_argument("--witness", help="write the maximal coupling as CSV here")
    m.add_argument("--alphabet-size", type=int)
    m.add_argument("--format", choices=["json", "text"], default="json")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metric)

    b = sub.add_parser("build", help="generate a block hierarchy")
    b.add_argument("--feldman", nargs="*", metavar="K=V")
    b.add_argument("--lb", nargs="*", metavar="K=V")
    b.add_argument("--rank1-from", metavar="WORD_FILE")
    b.add_argument("--depth", type=int, default=3)
    b.add_argument("--params", help="JSON parameter file, overridden by K=V pairs")
    b.add_argument("--alphabet-size", type=int)
    b.add_argument("--hierarchy-out", help="write the hierarchy JSON here instead of embedding it")
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    a = sub.add_parser("analyze", help="run an analysis and print a report")
    a.add_argument("analysis", choices=sorted(ANALYSES))
    a.add_argument("--name", help="word file holding the name")
    a.add_argument("--omega", help="word file holding the shadowing sequence")
    a.add_argument("--hierarchy", help="hierarchy JSON (from build)")
    a.add_argument("--level", type=int)
    a.add_argument("--type", type=int, default=0)
    a.add_argument("--blocks", type=int, help="name = this many random top blocks")
    a.add_argument("--alphabet-size", type=int)
    a.add_argument("--eps", default="1/10")
    a.add_argument("--N", type=int, default=500)
    a.add_argument("--grid", type=float, help="geometric length grid ratio (lower-bound mode)")
    a.add_argument("--lengths", default="32,64,128")
    a.add_argument("--samples", type=int, default=10000)
    a.add_argument("--candidates", type=int, default=8)
    a.add_argument("--torus", help="alpha1,alpha2 as rationals")
    a.add_argument("--n-list", default="8,16,32,64,128,256")
    a.add_argument("--input", help="CSV of n,value")
    a.add_argument("--margin", type=float, default=0.1)
    a.add_argument("--k", type=int, default=2)
    a.add_argument("--checkpoints", default="")
    a.add_argument("--reference-level", type=int)
    a.add_argument("--reference-type", type=int)
    a.add_argument("--tolerance", default="1/20")
    a.add_argument("--spec", help="IET JSON")
    a.add_argument("--x", default="3141592/10000000")
    a.add_argument("--horizon", type=int, default=10000)
    a.add_argument("--min-matches", type=int, default=5)
    a.add_argument("--budget", type=int, default=20000)
    a.add_argument("--offsets", type=int, default=4)
    a.add_argument("--lb", nargs="*", metavar="K=V")
    a.add_argument("--params")
    a.add_argument("--trials", type=int, default=200)
    a.add_argument("--corruption", default="0", help="fraction of the level epsilon to corrupt")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--cap", type=int, default=DEFAULT_MATERIALIZE_CAP)
    a.add_argument("--format", choices=["json", "csv"], default="json")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ShadowkitError as exc:
        print(f"shadowkit: error: {exc}", file=sys.stderr)
        diagnosis = getattr(exc, "diagnosis", None)
        if diagnosis:
            print(dump_json(diagnosis), file=sys.stderr, end="")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"shadowkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
