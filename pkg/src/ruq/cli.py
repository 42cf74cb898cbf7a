"""Command-line interface: ``ruq <subcommand> ...``.

Every subcommand first prints a ``# config:`` line holding its fully
resolved arguments (seeds included) so runs can be replayed exactly.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import bounds as bd
from . import hashing as hs
from . import measures as ms
from . import multipath as mp
from . import oneshot as osl
from . import slepianwolf as sw
from .errors import InputError, ParameterError, ResourceError, RuqError, UsageError
from .gf2m import Gf2mField
from .parallel import ordered_map
from .probability import JointSource, Pmf, ProductSource, load_source, example_source, random_source
from .report import VerificationReport

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

VARIANT_LABELS = {
    "shannon": "H(A|E)",
    "plain": "H_{{1+s}}(A|E)",
    "gallager": "H^up_{{1+s}}(A|E)",
    "two_param": "H_{{1+s|1+t}}(A|E)",
    "min": "H_min(A|E)",
    "min_gallager": "H^up_min(A|E)",
}

UPPER_S = (0.0, 0.25, 0.5, 0.75, 1.0)
LOWER_S = (0.0, 0.5, 1.0, 2.0, 4.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_source_file(path: str) -> JointSource:
    """Load a source file; ``example`` names the built-in example source."""
    if path == "example":
        return example_source()
    p = Path(path)
    if not p.is_file():
        raise InputError(f"source file not found: {path}")
    with p.open(encoding="utf-8") as fh:
        return load_source(fh)


def _fmt(v: float, precision: int) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    out = f"{float(v):.{precision}g}"
    return "0" if out in ("-0", "0") else out


def _config_line(name: str, args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "verify_command")}
    return f"# config: {name} " + json.dumps(cfg, sort_keys=True, separators=(",", ":"))


# --------------------------------------------------------------------------
# subcommands


def cmd_measure(args, out: TextIO) -> int:
    src = parse_source_file(args.source)
    spec = ms.RenyiOrderSpec(args.variant, args.s, args.t)
    value = ms.conditional_entropy(src, spec)
    label = VARIANT_LABELS[args.variant].format()
    suffix = ""
    if args.variant in ("plain", "gallager"):
        suffix = f" (s={_fmt(args.s, args.precision)})"
    elif args.variant == "two_param":
        suffix = f" (s={_fmt(args.s, args.precision)}, t={_fmt(args.t, args.precision)})"
    out.write(f"{label} = {_fmt(value, args.precision)} nats{suffix}\n")
    return EXIT_OK


def write_curve(src: JointSource, kind: str, s: float, r_min: float, r_max: float, steps: int,
                dest: TextIO, precision: int = 6) -> None:
    """CSV with header ``R,value`` and one row per grid point."""
    curve = bd.sample_curve(src, kind, s, r_min, r_max, steps)
    dest.write("R,value\n")
    for r, v in curve.rows:
        dest.write(f"{_fmt(r, precision)},{_fmt(v, precision)}\n")


def _curve_common(args, out: TextIO, exponent: bool) -> int:
    kind = bd.BoundKind(args.kind)
    if kind.is_exponent != exponent:
        which = "exponent-curve" if kind.is_exponent else "curve"
        raise UsageError(f"kind {kind.value} belongs to the '{which}' subcommand")
    if not args.r_min < args.r_max:
        raise UsageError("--r-min must be smaller than --r-max")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    src = parse_source_file(args.source)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                write_curve(src, kind, args.s, args.r_min, args.r_max, args.steps, fh, args.precision)
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
        out.write(f"# wrote {args.steps} rows to {args.out}\n")
    else:
        write_curve(src, kind, args.s, args.r_min, args.r_max, args.steps, out, args.precision)
    return EXIT_OK


def cmd_s0(args, out: TextIO) -> int:
    p = args.precision
    if args.pmf:
        try:
            probs = [float(x) for x in args.pmf.split(",")]
        except ValueError:
            raise InputError(f"cannot parse --pmf {args.pmf!r}") from None
        value = bd.s0_single(Pmf(np.array(probs)))
    elif args.p0 is not None:
        if not 0 <= args.p0 <= 1:
            raise UsageError("--p0 must lie in [0, 1]")
        value = bd.s0_single(Pmf(np.array([args.p0, 1.0 - args.p0])))
    else:
        value = bd.s0_joint(parse_source_file(args.source))
    out.write(f"s0 = {_fmt(value, p)}\n")
    return EXIT_OK


def cmd_thresholds(args, out: TextIO) -> int:
    th = bd.thresholds(parse_source_file(args.source), args.s)
    p = args.precision
    rows = [
        ("T_minus_upper", th.t_minus_upper),
        ("T_minus_strong_lower", th.t_minus_strong_lower),
        ("T_plus", th.t_plus),
        ("T_up_minus", th.t_up_minus),
        ("T_up_plus", th.t_up_plus),
    ]
    for name, v in rows:
        out.write(f"{name} = {_fmt(v, p)}\n")
    out.write(f"strong_converse_valid = {str(th.strong_converse_valid).lower()}\n")
    out.write(f"T_up_minus_valid = {str(th.t_up_minus_valid).lower()}\n")
    return EXIT_OK


def _family_from_args(args, a_size: int | None = None) -> hs.HashFamily:
    name = args.family
    if name == "binning":
        return hs.make_binning_family(a_size or args.a_size, args.M)
    if name == "gf2m":
        return hs.make_gf2m_family(Gf2mField.standard(args.m), args.l, args.j)
    if name == "affine":
        return hs.make_affine_prime_family(a_size or args.a_size, args.M)
    if name == "custom":
        if not args.family_file:
            raise UsageError("--family custom needs --family-file")
        path = Path(args.family_file)
        if not path.is_file():
            raise InputError(f"family file not found: {path}")
        with path.open(encoding="utf-8") as fh:
            return hs.load_custom_family(fh)
    raise UsageError(f"unknown family {name}")


def _emit(rep: VerificationReport, out: TextIO) -> int:
    out.write(rep.to_text())
    fails = len(rep.failures)
    out.write(f"# summary: checks={len(rep)} failures={fails}\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_oneshot(args, out: TextIO) -> int:
    fam = _family_from_args(args)
    rng = np.random.default_rng(args.seed)
    if args.source == "random":
        sources = [random_source(rng, fam.domain_size, int(rng.integers(1, args.e_size + 1)),
                                 sparsity=0.25 * (k % 2)) for k in range(args.trials)]
    else:
        sources = [parse_source_file(args.source)]
        if sources[0].a_size != fam.domain_size:
            raise InputError(f"source has |A|={sources[0].a_size}, family expects {fam.domain_size}")

    def run(item):
        k, src = item
        rep = VerificationReport()
        name = f"trial{k}"
        for s in UPPER_S:
            rep.extend(osl.verify_oneshot_upper(osl.OneShotInstance(src, fam, s, name)))
        for s in LOWER_S:
            rep.extend(osl.verify_oneshot_lower(osl.OneShotInstance(src, fam, s, name)))
        return rep

    total = VerificationReport()
    for rep in ordered_map(run, list(enumerate(sources))):
        total.extend(rep)
    return _emit(total, out)


def cmd_verify_sw(args, out: TextIO) -> int:
    rng = np.random.default_rng(args.seed)
    s_values = [float(x) for x in args.s_values.split(",")]
    items = []
    for k in range(args.trials):
        if args.source == "random":
            base = random_source(rng, args.a_size, args.e_size, sparsity=0.2)
        else:
            base = parse_source_file(args.source)
        prod = ProductSource(base, args.n)
        enc = rng.integers(0, args.M, size=prod.a_blocks)
        items.append(sw.SwSystem(prod, enc, args.M, f"trial{k},n={args.n},M={args.M}"))

    def run(system):
        rep = sw.verify_strong_converse_identity(system)
        for s in s_values:
            rep.extend(sw.verify_converse_chain(system, s))
        return rep

    total = VerificationReport()
    for rep in ordered_map(run, items):
        total.extend(rep)
    return _emit(total, out)


def cmd_verify_hash(args, out: TextIO) -> int:
    fam = _family_from_args(args)
    rep = hs.verify_universality(fam, args.level, args.epsilon)
    if args.level != hs.Level.STRONGLY_UNIVERSAL.value:
        worst, pair = hs.max_collision(fam)
        out.write(f"# max collision {worst} at pair {pair[0]},{pair[1]}\n")
    return _emit(rep, out)


def cmd_multipath(args, out: TextIO) -> int:
    cfg = mp.MultipathConfig(args.m, args.l, args.j)
    if args.A is not None and args.X is not None:
        try:
            pairs = [(int(args.A, 16), int(args.X, 16))]
        except ValueError:
            raise UsageError("--A and --X take hexadecimal values") from None
    else:
        rng = np.random.default_rng(args.seed)
        order = cfg.field.order
        pairs = [(int(rng.integers(0, order)), int(rng.integers(1, order))) for _ in range(args.count)]
    bad = 0
    for a, x in pairs:
        line = mp.demo_line(cfg, a, x)
        bad += mp.decode(cfg, mp.encode(cfg, a, x), x) != a
        out.write(line + "\n")
    return EXIT_FAIL if bad else EXIT_OK


# --------------------------------------------------------------------------
# parser


def _precision(value: str) -> int:
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("precision must be an integer") from None
    if not 1 <= k <= 15:
        raise argparse.ArgumentTypeError("precision must lie in 1..15")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ruq", description="Remaining-uncertainty calculator and verifier.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--precision", type=_precision, default=6, help="significant digits (1..15)")
        return p

    p = common(sub.add_parser("measure", help="conditional entropy of a source"))
    p.add_argument("--source", required=True, help="source file or 'example'")
    p.add_argument("--variant", choices=list(VARIANT_LABELS), default="shannon")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=None)
    p.set_defaults(func=cmd_measure)

    for name, kinds, exponent in (("curve", bd.G_KINDS, False), ("exponent-curve", bd.E_KINDS, True)):
        what = "an exponent" if exponent else "a bound"
        p = common(sub.add_parser(name, help=f"sample {what} curve as CSV"))
        p.add_argument("--kind", required=True, choices=[k.value for k in kinds])
        p.add_argument("--s", type=float, required=True)
        p.add_argument("--r-min", type=float, default=0.0)
        p.add_argument("--r-max", type=float, default=1.0)
        p.add_argument("--steps", type=int, default=161)
        p.add_argument("--source", required=True)
        p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
        p.set_defaults(func=lambda a, o, e=exponent: _curve_common(a, o, e))

    p = common(sub.add_parser("s0", help="largest s of the strongly universal converse"))
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p0", type=float, help="binary source with P(0)=p0")
    g.add_argument("--pmf", help="comma-separated distribution")
    g.add_argument("--source", help="joint source: minimum over side information")
    p.set_defaults(func=cmd_s0)

    p = common(sub.add_parser("thresholds", help="optimal-rate thresholds at order s"))
    p.add_argument("--source", required=True)
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_thresholds)

    verify = sub.add_parser("verify", help="run a verification suite")
    vsub = verify.add_subparsers(dest="verify_command", required=True, parser_class=_Parser)

    def family_args(p):
        p.add_argument("--family", choices=["binning", "gf2m", "affine", "custom"], default="binning")
        p.add_argument("--a-size", type=int, default=3)
        p.add_argument("--M", type=int, default=2)
        p.add_argument("--m", type=int, default=4)
        p.add_argument("--l", type=int, default=2)
        p.add_argument("--j", type=int, default=1)
        p.add_argument("--family-file", default=None)

    p = common(vsub.add_parser("oneshot", help="one-shot hashing lemmas"))
    family_args(p)
    p.add_argument("--source", default="random")
    p.add_argument("--e-size", type=int, default=3, help="largest |E| of random sources")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_oneshot)

    p = common(vsub.add_parser("sw", help="Slepian-Wolf identities"))
    p.add_argument("--source", default="random")
    p.add_argument("--a-size", type=int, default=2)
    p.add_argument("--e-size", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--s-values", default="1,2")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_sw)

    p = common(vsub.add_parser("hash", help="universality certification"))
    family_args(p)
    p.add_argument("--level", choices=[lv.value for lv in hs.Level], default="universal2")
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_verify_hash)

    p = common(sub.add_parser("multipath", help="GF(2^m) multipath demo"))
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--A", default=None, help="message in hex")
    p.add_argument("--X", default=None, help="mask in hex")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_multipath)
    return parser


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    """Execute one command line and return its exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        name = args.command + (f" {args.verify_command}" if args.command == "verify" else "")
        out.write(_config_line(name, args) + "\n")
        return args.func(args, out)
    except (UsageError, ParameterError) as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (InputError, ResourceError) as exc:
        err.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except RuqError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
