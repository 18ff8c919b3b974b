"""Command-line front end.

Every subcommand reads system files in the JSON format of :mod:`qstokes.io`,
prints a short human-readable report and, with ``--json-report``, writes the
same numbers as deterministic JSON.  Exit codes: 0 success, 1 domain error,
2 parse error, 3 check-suite failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import QStokesError, SpecParseError
from .io import (
    dumps,
    encode_complex,
    encode_matrix,
    read_config,
    read_system,
    read_targets,
    targets_to_dict,
    write_system,
)

log = logging.getLogger("qstokes")

EXIT_OK, EXIT_DOMAIN, EXIT_PARSE, EXIT_CHECK = 0, 1, 2, 3


def parse_complex(text: str) -> complex:
    """``"1.5"``, ``"1+2j"`` or ``"re,im"``."""
    try:
        if "," in text:
            re_, im = text.split(",")
            return complex(float(re_), float(im))
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _series_dict(S) -> dict:
    return {str(n): encode_matrix(c) for n, c in S.to_dict().items()}


class Context:
    """Parsed global options shared by the subcommands."""

    def __init__(self, args):
        self.args = args
        cfg = read_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.with_(seed=args.seed)
        if args.tol is not None:
            cfg = cfg.with_(tolerances=replace(cfg.tolerances, quadrature=args.tol))
        self.config = cfg
        self.report: dict = {"command": args.command}

    def emit(self, text: str):
        print(text)

    def finish(self):
        if self.args.json_report:
            self.report["config"] = self.config.to_dict()
            Path(self.args.json_report).write_text(dumps(self.report))

    def write(self, payload: dict):
        out = self.args.out
        if out:
            Path(out).write_text(dumps(payload))
            self.emit(f"wrote {out}")
        else:
            sys.stdout.write(dumps(payload))


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(ctx: Context) -> int:
    from .system import validate

    A = read_system(ctx.args.system)
    rep = validate(A)
    flags = ["valid" if rep["valid"] else "invalid"]
    flags += [name for name in ("pure", "polynomial", "normalized") if rep[name]]
    ctx.emit(", ".join(flags))
    for issue in rep["issues"]:
        ctx.emit(f"  issue: {issue}")
    ctx.emit(f"  slopes {rep['slopes']} ranks {rep['ranks']}")
    ctx.report.update(rep)
    return EXIT_OK if rep["valid"] else EXIT_DOMAIN


def cmd_normalize(ctx: Context) -> int:
    from .system import normalize

    A = read_system(ctx.args.system)
    An, gauge = normalize(A)
    shifts = [list(ms) for ms in gauge.shifts]
    ctx.report.update({"shifts": shifts, "normalized": An.is_normalized})
    ctx.emit(f"eigenvalue shifts per block: {shifts}")
    if ctx.args.out:
        write_system(An, ctx.args.out, {"name": An.name, "gauge_shifts": shifts})
        ctx.emit(f"wrote {ctx.args.out}")
    else:
        from .io import dumps_system
        sys.stdout.write(dumps_system(An, {"gauge_shifts": shifts}))
    return EXIT_OK


def cmd_formal_gauge(ctx: Context) -> int:
    from .summation import formal_gauge

    A = read_system(ctx.args.system)
    fg = formal_gauge(A, ctx.args.N)
    payload = {
        "N": fg.formal_window,
        "blocks": {f"{i},{j}": _series_dict(B) for (i, j), B in sorted(fg.blocks.items())},
        "residuals": {f"{i},{j}": r for (i, j), r in sorted(fg.residuals.items())},
    }
    ctx.emit(f"formal gauge to degree {fg.formal_window}: max recursion residual {fg.max_residual:.3e}")
    ctx.report.update({"N": fg.formal_window, "max_residual": fg.max_residual, "residuals": payload["residuals"]})
    ctx.write(payload)
    return EXIT_OK


def cmd_sum(ctx: Context) -> int:
    from .summation import directional_sum, eval_sum

    A = read_system(ctx.args.system)
    S = directional_sum(A, ctx.args.direction)
    a = ctx.config.basepoint
    payload = {
        "direction": encode_complex(S.c),
        "levels": {f"{i},{j}": S.delta(i, j) for (i, j) in sorted(S.blocks)},
        "numerators": {f"{i},{j}": _series_dict(G) for (i, j), G in sorted(S.blocks.items())},
        "basepoint": encode_complex(a),
        "value_at_basepoint": encode_matrix(eval_sum(S, a)),
        "diagnostics": S.diagnostics,
    }
    ctx.emit(f"directional sum in direction {S.c:.6g}; value at a = {a:.6g} recorded")
    ctx.report.update({k: payload[k] for k in ("direction", "basepoint", "value_at_basepoint", "diagnostics")})
    ctx.write(payload)
    return EXIT_OK


def cmd_stokes(ctx: Context) -> int:
    from .summation import stokes_matrix

    A = read_system(ctx.args.system)
    a = ctx.args.a if ctx.args.a is not None else ctx.config.basepoint
    S = stokes_matrix(A, ctx.args.c, ctx.args.d, a)
    dev = float(A.structure.unipotent_deviation(S.value))
    payload = S.to_dict() | {"unipotent_deviation": dev}
    ctx.emit(f"Stokes matrix between {S.c:.6g} and {S.d:.6g} at a = {S.basepoint:.6g}")
    ctx.emit(np.array2string(S.value, precision=8))
    ctx.report.update(payload)
    ctx.write(payload)
    return EXIT_OK


def _alien_entry(r, tol) -> dict:
    d = r.to_dict()
    d["quadrature_tolerance"] = tol
    return d


def cmd_alien(ctx: Context) -> int:
    from .galois import alien_derivation, all_alien_derivations

    A = read_system(ctx.args.system)
    tol = ctx.config.tolerances.quadrature
    if ctx.args.all_resonant:
        results = all_alien_derivations(A, config=ctx.config)
    elif ctx.args.direction is not None:
        results = [alien_derivation(A, ctx.args.direction, config=ctx.config)]
    else:
        raise SpecParseError("give --direction or --all-resonant")
    for r in results:
        ctx.emit(f"class {r.c:.6g}: |Delta| = {r.value.norm():.6e}, "
                 f"relative quadrature change {r.diagnostics.get('relative_error', 0.0):.2e} (tol {tol:g})")
    payload = {"derivations": [_alien_entry(r, tol) for r in results]}
    ctx.report.update(payload)
    ctx.write(payload)
    return EXIT_OK


def cmd_targets(ctx: Context) -> int:
    from .reconstruction import alien_targets

    A = read_system(ctx.args.system)
    T = alien_targets(A, ctx.config)
    payload = targets_to_dict(T)
    ctx.emit(f"{len(T.entries)} projected alien derivations over levels {T.levels()}")
    ctx.report["count"] = len(T.entries)
    ctx.write(payload)
    return EXIT_OK


def cmd_residue_scan(ctx: Context) -> int:
    from .elliptic import log_distance
    from .galois import alien_derivation

    A = read_system(ctx.args.system)
    q = A.q
    a = ctx.config.basepoint
    rows = []
    nr, nt = ctx.args.radial, ctx.args.angular
    for k in range(nr):
        r = abs(q) ** ((k + 0.5) / nr)
        for m in range(nt):
            c = r * np.exp(2j * math.pi * m / nt)
            entry = {"direction": encode_complex(c)}
            if log_distance(-a, c, q) < 1e-3:
                entry.update(norm=None, status="BasepointIncompatible")
            else:
                try:
                    res = alien_derivation(A, c, config=ctx.config)
                    entry.update(norm=res.value.norm(), status="ok")
                except QStokesError as exc:
                    entry.update(norm=None, status=type(exc).__name__)
            rows.append(entry)
    ctx.emit("re\tim\tnorm\tstatus")
    for e in rows:
        n = "nan" if e["norm"] is None else f"{e['norm']:.6e}"
        ctx.emit(f"{e['direction'][0]:.6f}\t{e['direction'][1]:.6f}\t{n}\t{e['status']}")
    payload = {"grid": {"radial": nr, "angular": nt}, "rows": rows}
    ctx.report.update(payload)
    if ctx.args.out:
        Path(ctx.args.out).write_text(dumps(payload))
    return EXIT_OK


def cmd_reconstruct(ctx: Context) -> int:
    from .reconstruction import reconstruct_full

    A0 = read_system(ctx.args.graded)
    T = read_targets(ctx.args.targets, A0.structure)
    R, reports = reconstruct_full(A0, T, ctx.config)
    levels = []
    for rep in reports:
        levels.append({
            "level": rep["level"], "irr": rep["irr"], "condition": rep["condition"],
            "residual": rep["residual"], "predicted_residual": rep["predicted_residual"],
            "coefficients": [encode_complex(u) for u in rep["coefficients"]],
        })
        ctx.emit(f"level {rep['level']}: {rep['irr']} coefficients, condition {rep['condition']:.3e}, "
                 f"target residual {rep['residual']:.3e}")
    ctx.report["levels"] = levels
    if ctx.args.out:
        write_system(R, ctx.args.out, {"name": R.name or "reconstructed"})
        ctx.emit(f"wrote {ctx.args.out}")
    else:
        from .io import dumps_system
        sys.stdout.write(dumps_system(R))
    return EXIT_OK


def cmd_check(ctx: Context) -> int:
    from .checks import run_suite

    try:
        results = run_suite(ctx.args.suite, ctx.config)
    except KeyError as exc:
        raise SpecParseError(str(exc.args[0])) from None
    for r in results:
        ctx.emit(r.line())
    failed = [r.name for r in results if not r.passed]
    ctx.emit(f"{len(results) - len(failed)}/{len(results)} passed")
    ctx.report.update({"suite": ctx.args.suite, "results": [r.to_dict() for r in results], "failed": failed})
    return EXIT_CHECK if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (JSON)")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--tol", type=float, help="quadrature convergence tolerance")
    common.add_argument("--seed", type=int, help="random seed for sampled checks")
    common.add_argument("--json-report", help="write a machine-readable report here")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")

    p = argparse.ArgumentParser(prog="qstokes", description="Stokes invariants of linear q-difference systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "check shape, polynomial and normalized flags").add_argument("system")
    add("normalize", cmd_normalize, "shear eigenvalues into the fundamental band").add_argument("system")
    sp = add("formal-gauge", cmd_formal_gauge, "formal gauge transformation to degree N")
    sp.add_argument("system")
    sp.add_argument("-N", type=int, default=20, help="highest degree (default 20)")
    sp = add("sum", cmd_sum, "directional summation")
    sp.add_argument("system")
    sp.add_argument("--direction", type=parse_complex, required=True)
    sp = add("stokes", cmd_stokes, "Stokes matrix between two directions")
    sp.add_argument("system")
    sp.add_argument("--c", type=parse_complex, required=True)
    sp.add_argument("--d", type=parse_complex, required=True)
    sp.add_argument("--a", type=parse_complex, help="basepoint (default from config)")
    sp = add("alien", cmd_alien, "alien derivations")
    sp.add_argument("system")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--direction", type=parse_complex)
    g.add_argument("--all-resonant", action="store_true")
    sp = add("targets", cmd_targets, "projected alien derivations as a target file")
    sp.add_argument("system")
    sp = add("residue-scan", cmd_residue_scan, "table of |Delta| over a grid of directions")
    sp.add_argument("system")
    sp.add_argument("--radial", type=int, default=4)
    sp.add_argument("--angular", type=int, default=16)
    sp = add("reconstruct", cmd_reconstruct, "rebuild a system from its graded part and targets")
    sp.add_argument("graded")
    sp.add_argument("targets")
    sp = add("check", cmd_check, "run property suites")
    sp.add_argument("suite", nargs="?", default="all", help="all, acceptance or invariants")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ctx = Context(args)
        code = args.func(ctx)
        ctx.finish()
        return code
    except SpecParseError as exc:
        print(f"SpecParseError: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"SpecParseError: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except QStokesError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"InvalidConfiguration: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
