"""Command-line front end.

Exit codes: 0 success, 1 no global sections, 2 the two computations
disagree, 3 saturation round cap exceeded, 64 usage or parse error,
65 invalid input file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .algebra import FdAlgebra
from .contexts import SpatialDiagram, generate_context
from .errors import (
    InvalidMorphism,
    IsoFailure,
    NaturalityFailure,
    ParseError,
    SaturationCapExceeded,
)
from .foundations import global_sections, ks_diagram, load_ks
from .ideals import saturate_ideals
from .ktheory import core_diagram, eta_check, ktilde_f_kernel

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_MISMATCH = 2
EXIT_CAP = 3
EXIT_USAGE = 64
EXIT_DATA = 65


@dataclass(frozen=True)
class RunConfig:
    tolerance: float = 1e-9
    seed: int = 0
    max_saturation_rounds: int = 16
    output_format: str = "text"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_saturation_rounds < 1:
            raise ValueError("rounds must be at least 1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _emit(config: RunConfig, doc, text: str):
    if config.output_format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_k0(spec: str, config: RunConfig) -> int:
    A = FdAlgebra.parse(spec, config.tolerance)
    try:
        report = eta_check(A)
        kernel_group = ktilde_f_kernel(A)
        iso = report.iso and kernel_group.isomorphic(report.ktilde)
    except (IsoFailure, NaturalityFailure) as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    doc = report.to_json()
    doc["ktilde_f_kernel"] = str(kernel_group)
    doc["iso"] = iso
    lines = [f"K0 = {report.k0}, Ktilde_f = {report.ktilde}, iso = {_flag(iso)}"]
    for row in report.generator_table:
        lines.append(f"  ranks {tuple(row['ranks'])}: K0 {tuple(row['k0'])}, "
                     f"Ktilde_f {tuple(row['ktilde_f'])}")
    _emit(config, doc, "\n".join(lines))
    return EXIT_OK if iso else EXIT_MISMATCH


def cmd_ideals(spec: str, config: RunConfig) -> int:
    A = FdAlgebra.parse(spec, config.tolerance)
    try:
        report = saturate_ideals(A, max_rounds=config.max_saturation_rounds)
    except SaturationCapExceeded as exc:
        print(f"round cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    doc = report.to_json()
    text = "\n".join([
        f"algebra: {A.spec}",
        f"central projections: {len(report.central)}",
        f"invariant families: {len(report.families)}",
        f"bijection: {_flag(report.bijection)}",
        f"rounds: {report.rounds}",
        f"contexts: {len(report.diagram.contexts)}",
    ])
    _emit(config, doc, text)
    return EXIT_OK if report.bijection else EXIT_MISMATCH


def cmd_ks(path: str | None, config: RunConfig) -> int:
    try:
        dim, bases = load_ks(path)
        D = ks_diagram(dim, bases, config.tolerance)
    except (OSError, ValueError) as exc:
        print(f"invalid KS file: {exc}", file=sys.stderr)
        return EXIT_DATA
    sections = global_sections(D)
    doc = {"dim": dim, "bases": len(bases), "contexts": len(D.contexts),
           "sections": len(sections), "section_list": [s.to_json() for s in sections]}
    _emit(config, doc, f"sections: {len(sections)}")
    return EXIT_OK if sections else EXIT_EMPTY


def cmd_dot(path: str, config: RunConfig) -> int:
    try:
        with open(path) as fh:
            D = SpatialDiagram.from_json(json.load(fh), config.tolerance)
    except (OSError, ValueError, KeyError, TypeError, InvalidMorphism) as exc:
        print(f"invalid diagram file: {exc}", file=sys.stderr)
        return EXIT_DATA
    sys.stdout.write(D.to_dot())
    return EXIT_OK


def cmd_diagram(spec: str, enrich: int, config: RunConfig) -> int:
    """Core diagram of an algebra, optionally with contexts of random projections added."""
    A = FdAlgebra.parse(spec, config.tolerance)
    rng = np.random.default_rng(config.seed)
    extra = [generate_context(A, [A.random_projection(rng)]) for _ in range(enrich)]
    D = core_diagram(A, extra_contexts=extra)
    if config.output_format == "dot":
        sys.stdout.write(D.to_dot())
    else:
        print(json.dumps(D.to_json()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="numerical tolerance")
    common.add_argument("--seed", type=int, default=None, help="random seed (default $NCSPEC_SEED or 0)")
    common.add_argument("--rounds", type=int, default=16, help="saturation round cap")
    common.add_argument("--format", choices=("text", "json", "dot"), default="text")
    parser = _Parser(prog="ncspec", description="Contexts, K-theory and ideals of multi-matrix algebras.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("k0", parents=[common], help="compare K0 with the colimit K-group")
    p.add_argument("spec", help="algebra, e.g. M2+M3")
    p = sub.add_parser("ideals", parents=[common], help="invariant families vs central projections")
    p.add_argument("spec")
    p = sub.add_parser("ks", parents=[common], help="count global sections of a KS file")
    p.add_argument("file", nargs="?", default=None, help="KS JSON file (default: shipped 18-vector set)")
    p = sub.add_parser("dot", parents=[common], help="render a diagram file as DOT")
    p.add_argument("file")
    p = sub.add_parser("diagram", parents=[common], help="emit the core diagram of an algebra")
    p.add_argument("spec")
    p.add_argument("--enrich", type=int, default=0, help="number of random contexts to add")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = args.seed if args.seed is not None else int(os.environ.get("NCSPEC_SEED", "0"))
    try:
        config = RunConfig(args.tol, seed, args.rounds, args.format)
        if args.command == "k0":
            return cmd_k0(args.spec, config)
        if args.command == "ideals":
            return cmd_ideals(args.spec, config)
        if args.command == "ks":
            return cmd_ks(args.file, config)
        if args.command == "dot":
            return cmd_dot(args.file, config)
        return cmd_diagram(args.spec, args.enrich, config)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
