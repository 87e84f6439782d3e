"""Command-line surface: parse inputs, run the engine, emit reports.

Exit codes: 0 success, 1 internal error, 2 parse/input error, 3 resource
bound exceeded.  Every command is deterministic for a fixed configuration;
reports are JSON with timing fields that are excluded from that contract.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

from .config import Config
from .errors import ParseError, ResourceLimitError, StructureDomainError
from . import lang, modpoly, qimath, special

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_RESOURCE = 3


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:16]


def _report(command: str, inputs, payload, started: float, trace=None, counters=None) -> dict:
    rep = {
        "command": command,
        "inputs": _digest(*inputs),
        "payload": payload,
        "timing_ms": round((time.monotonic() - started) * 1000, 3),
        "counters": counters or {},
    }
    if trace is not None:
        rep["trace"] = trace
    return rep


def _emit(rep: dict, cfg: Config, text_line: str) -> None:
    if cfg.output_format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        print(text_line)
        if "trace" in rep:
            print(json.dumps(rep["trace"], sort_keys=True))


def _formula_inputs(args) -> list[str]:
    if args.file:
        with open(args.file, "r", encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    if args.formula is None:
        raise ParseError("no formula given (pass one as an argument or use --file)", 0, 0)
    return [args.formula]


def _cmd_decide(args, cfg: Config) -> int:
    kind = lang.StructureKind.from_text(args.structure)
    status = EXIT_OK
    for text in _formula_inputs(args):
        started = time.monotonic()
        f = lang.parse(text)
        if lang.free_vars(f):
            raise ParseError(f"not a sentence: free variables {sorted(lang.free_vars(f))}", 1, 1)
        if args.trace:
            verdict, steps = lang.decide(f, kind, cfg, trace=True)
        else:
            verdict, steps = lang.decide(f, kind, cfg), None
        rep = _report("decide", [text, args.structure], verdict, started, trace=steps,
                      counters={"sentences": 1})
        _emit(rep, cfg, "true" if verdict else "false")
    return status


def _cmd_qe(args, cfg: Config) -> int:
    kind = lang.StructureKind.from_text(args.structure)
    for text in _formula_inputs(args):
        started = time.monotonic()
        out = lang.qe(lang.parse(text), kind, cfg)
        rendered = lang.render(out)
        rep = _report("qe", [text, args.structure], rendered, started)
        _emit(rep, cfg, rendered)
    return EXIT_OK


def _cmd_modpoly(args, cfg: Config) -> int:
    started = time.monotonic()
    phi = modpoly.modular_polynomial(args.level, lmax=cfg.lmax if cfg.lmax > modpoly.DEFAULT_PHI_LMAX else modpoly.DEFAULT_PHI_LMAX, cache_dir=cfg.cache_dir)
    payload = phi.to_json()
    rep = _report("modpoly", [str(args.level)], payload, started)
    if cfg.output_format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_cm_list(args, cfg: Config) -> int:
    started = time.monotonic()
    if args.dmax > cfg.dmax:
        raise ResourceLimitError(f"requested dmax {args.dmax} exceeds the configured bound {cfg.dmax}")
    pts = qimath.enumerate_cm_points(args.dmax)
    payload = [p.to_json() for p in pts]
    rep = _report("cm-list", [str(args.dmax)], payload, started, counters={"points": len(pts)})
    if cfg.output_format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        for p in pts:
            print(json.dumps(p.to_json()))
    return EXIT_OK


def _cmd_components(args, cfg: Config) -> int:
    started = time.monotonic()
    with open(args.system, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    phis = [special.PhiEq.make(l, i, j) for l, i, j in obj.get("phi", [])]
    consts = [special.ConstEq(int(i), qimath.ConstantValue.from_json(v))
              for i, v in obj.get("const", {}).items()]
    sysm = special.EquationSystem.build(obj["n"], phis, consts)
    comps = special.components_of(sysm, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax)
    payload = special.component_set_to_json(comps)
    rep = _report("components", [json.dumps(obj, sort_keys=True)], payload, started,
                  counters={"components": len(comps)})
    if cfg.output_format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_project(args, cfg: Config) -> int:
    started = time.monotonic()
    with open(args.datum, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    d = special.datum_from_json(obj)
    out = special.project(d, args.drop)
    payload = special.datum_to_json(out)
    rep = _report("project", [json.dumps(obj, sort_keys=True), str(args.drop)], payload, started)
    if cfg.output_format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_hom_rank(args, cfg: Config) -> int:
    started = time.monotonic()
    c1 = _parse_constant(args.c1)
    c2 = _parse_constant(args.c2)
    rank = qimath.hom_rank(c1, c2)
    rep = _report("hom-rank", [args.c1, args.c2], rank, started)
    _emit(rep, cfg, str(rank))
    return EXIT_OK


def _parse_constant(text: str) -> qimath.ConstantValue:
    parser = lang._Parser(text)
    value = parser.parse_constant()
    kind, tok, line, col = parser.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing input {tok!r}", line, col)
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cmmod",
                                 description="exact decision procedures for modular-polynomial structures")
    ap.add_argument("--structure", choices=["cmod", "cmmod", "isog-a"], default="cmod")
    ap.add_argument("--trace", action="store_true", help="emit QE trace JSON (decide only)")
    ap.add_argument("--format", choices=["text", "json"], default="text")
    ap.add_argument("--cache", metavar="DIR", default=None, help="modular polynomial cache directory")
    ap.add_argument("--lmax", type=int, default=7)
    ap.add_argument("--nmax", type=int, default=4)
    ap.add_argument("--dmax", type=int, default=20000)
    ap.add_argument("--precision", type=int, default=512, metavar="BITS")
    ap.add_argument("--file", default=None, help="read newline-separated formulas from a file")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide a sentence")
    p.add_argument("formula", nargs="?")
    p.set_defaults(fn=_cmd_decide)

    p = sub.add_parser("qe", help="print a quantifier-free equivalent")
    p.add_argument("formula", nargs="?")
    p.set_defaults(fn=_cmd_qe)

    p = sub.add_parser("modpoly", help="print modular polynomial coefficients")
    p.add_argument("level", type=int)
    p.set_defaults(fn=_cmd_modpoly)

    p = sub.add_parser("cm-list", help="enumerate CM point names")
    p.add_argument("--dmax", dest="dmax", type=int, required=True)
    p.set_defaults(fn=_cmd_cm_list)

    p = sub.add_parser("components", help="decompose an equation system file")
    p.add_argument("system", help="JSON file {n, phi: [[l,i,j],...], const: {idx: constant}}")
    p.set_defaults(fn=_cmd_components)

    p = sub.add_parser("project", help="project a datum file along one coordinate")
    p.add_argument("datum", help="JSON datum file")
    p.add_argument("drop", type=int)
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("hom-rank", help="rank of the map group between two named curves")
    p.add_argument("c1")
    p.add_argument("c2")
    p.set_defaults(fn=_cmd_hom_rank)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = Config(
            lmax=args.lmax,
            nmax=args.nmax,
            dmax=args.dmax,
            precision_bits=args.precision,
            cache_dir=args.cache,
            output_format=args.format,
        )
        return args.fn(args, cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StructureDomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
