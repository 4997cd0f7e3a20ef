"""Command-line front end.

Exit codes: 0 success, 1 input/usage error, 2 not a derivation,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .decomposition import (DecompositionError, NotADerivationError, class_dimensions, decompose,
                            derivation_space_structural, psi_lemma_candidates, synthesize)
from .endomorphisms import (Endo, basis_name, check_support_lemmas, derivation_space_bruteforce,
                            is_derivation)
from .exactfield import FieldError, FieldSpec
from .matrixcore import Partition, ShapeError, compositions
from .nilalgebra import NilAlgebra, vector_bracket

EXIT_OK, EXIT_INPUT, EXIT_NOT_DERIVATION, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("blockder")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def _field(text: str) -> FieldSpec:
    try:
        return FieldSpec(int(text))
    except (ValueError, FieldError) as exc:
        raise UsageError(f"invalid field {text!r}: {exc}") from exc


def _partition(text: str) -> Partition:
    try:
        return Partition.parse(text)
    except ShapeError as exc:
        raise UsageError(str(exc)) from exc


# --- dim -----------------------------------------------------------------------

def cmd_dim(F: FieldSpec, P: Partition, out=None) -> int:
    out = out or sys.stdout
    L = NilAlgebra(F, P)
    oracle = derivation_space_bruteforce(L)
    structural = derivation_space_structural(L)
    ok = oracle == structural
    print(f"field\t{F}", file=out)
    print(f"partition\t{P}", file=out)
    print(f"dim N\t{L.dim}", file=out)
    print(f"dim Der(N) oracle\t{oracle.dimension}", file=out)
    print(f"dim Der(N) structural\t{structural.dimension}", file=out)
    print(f"span equality\t{'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_VERIFY


# --- decompose --------------------------------------------------------------------

def cmd_decompose(input_path: str, output_path: str | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        with open(input_path) as fh:
            f = Endo.from_json(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read endomorphism from {input_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        dec = decompose(f)
    except NotADerivationError as exc:
        a, b = exc.pair
        L = f.algebra
        defect = " + ".join(f"{L.field.format(x)}*{basis_name(L, k)}"
                            for k, x in enumerate(exc.defect) if x)
        print(f"not a derivation: pair ({basis_name(L, a)}, {basis_name(L, b)}), "
              f"[f(E),E'] + [E,f(E')] - f([E,E']) = {defect}", file=sys.stderr)
        return EXIT_NOT_DERIVATION
    except DecompositionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    text = json.dumps(dec.to_json(), indent=2)
    if output_path:
        with open(output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=out)
    residual_ok = synthesize(dec) == f
    print(f"residual\t{'zero' if residual_ok else 'NONZERO'}", file=sys.stderr)
    return EXIT_OK if residual_ok else EXIT_VERIFY


# --- characteristic-2 example ---------------------------------------------------------

def example41_map(F: FieldSpec) -> Endo:
    """On strictly upper triangular 4x4 matrices: E12 -> -E34, E13 -> E24, rest -> 0."""
    L = NilAlgebra(F, Partition((1, 1, 1, 1)))
    i = L.index
    return Endo.from_images(L, {i[(1, 2, 1, 1)]: {i[(3, 4, 1, 1)]: -1},
                                i[(1, 3, 1, 1)]: {i[(2, 4, 1, 1)]: 1}})


def cmd_example41(F: FieldSpec, out=None) -> int:
    out = out or sys.stdout
    f = example41_map(F)
    L = f.algebra
    i = L.index
    print(f"field\t{F}", file=out)
    print("map\t" + "; ".join(f.describe()), file=out)

    def unit(k):
        return tuple(F.one if c == k else F.zero for c in range(L.dim))

    def show(v):
        terms = [f"{F.format(x)}*{basis_name(L, k)}" for k, x in enumerate(v) if x]
        return " + ".join(terms) or "0"

    for label, (a, b) in (("E12,E23", ((1, 2), (2, 3))), ("E12,E13", ((1, 2), (1, 3)))):
        ka, kb = i[a + (1, 1)], i[b + (1, 1)]
        ea, eb = unit(ka), unit(kb)
        lhs = f.apply(vector_bracket(L, ea, eb))
        r1 = vector_bracket(L, f.apply(ea), eb)
        r2 = vector_bracket(L, ea, f.apply(eb))
        rhs = tuple(F.add(x, y) for x, y in zip(r1, r2))
        verdict = "equal" if tuple(lhs) == rhs else "DIFFER"
        print(f"case {label}\tf([E,E']) = {show(lhs)}\t[f(E),E'] + [E,f(E')] = {show(rhs)}\t{verdict}",
              file=out)
    if not is_derivation(f):
        print("derivation\tNO", file=out)
        return EXIT_NOT_DERIVATION
    print("derivation\tYES", file=out)
    dec = decompose(f)
    print(f"X\t{'0' if dec.X.is_zero() else dec.X}", file=out)
    for name, g in dec.maps():
        print(f"{name}\t{'0' if g.is_zero() else '; '.join(g.describe())}", file=out)
    ok = synthesize(dec) == f
    print(f"roundtrip\t{'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_VERIFY


# --- verify -----------------------------------------------------------------------------

@dataclass
class VerifyConfig:
    max_n: int = 4
    fields: list[int] = field(default_factory=lambda: [2, 3, 0])
    partitions: list[tuple[int, ...]] | None = None
    report_path: str | None = None

    def __post_init__(self):
        if self.max_n < 1:
            raise UsageError("max_n must be at least 1")
        for c in self.fields:
            _field(str(c))

    def cases(self) -> list[tuple[tuple[int, ...], int]]:
        parts = self.partitions
        if parts is None:
            parts = [c for n in range(1, self.max_n + 1) for c in compositions(n)]
        return [(p, c) for p in parts for c in self.fields]


def run_case(sizes: tuple[int, ...], characteristic: int) -> dict:
    """Every check for one (partition, field) pair."""
    started = time.perf_counter()
    F = FieldSpec(characteristic)
    P = Partition(tuple(sizes))
    L = NilAlgebra(F, P)
    t = P.t
    oracle = derivation_space_bruteforce(L)
    structural = derivation_space_structural(L)
    span_equal = (oracle.dimension == structural.dimension
                  and all(structural.contains(g) for g in oracle)
                  and all(oracle.contains(g) for g in structural))
    failures = []
    if not span_equal:
        failures.append("span equality")
    roundtrip_fail = []
    for k, g in enumerate(oracle):
        try:
            dec = decompose(g)
            if synthesize(dec) != g or not all(is_derivation(c) for _, c in dec.maps()):
                roundtrip_fail.append(k)
        except (DecompositionError, NotADerivationError) as exc:
            roundtrip_fail.append(k)
            failures.append(f"generator {k}: {exc}")
    if roundtrip_fail:
        failures.append(f"roundtrip failed for generators {roundtrip_fail}")
    support = check_support_lemmas(oracle)
    for v in support.violations:
        failures.append(f"support generator {v.generator}: {v.lemma}: {v.detail}")
    dims = class_dimensions(L)
    expected_phi = None
    if t >= 3:
        expected_phi = sum(P.sizes[i] * P.sizes[i + 1] for i in range(t - 1)) * P.sizes[0] * P.sizes[-1]
        if dims["varphi_1t_generators"] != expected_phi:
            failures.append("varphi_1t class dimension")
    cands = psi_lemma_candidates(L)
    return {
        "partition": list(sizes),
        "field": characteristic,
        "dim_N": L.dim,
        "dim_der_oracle": oracle.dimension,
        "dim_der_structural": structural.dimension,
        "span_equal": span_equal,
        "roundtrip_generators": oracle.dimension,
        "roundtrip_failures": len(roundtrip_fail),
        "support_violations": len(support.violations),
        "class_dimensions": dims,
        "varphi_1t_expected": expected_phi,
        "psi_lemma_candidates": {k: len(v) for k, v in cands.items()},
        "psi_class_dim": dims["psi_12_13_excess"] + dims["psi_t1_t2_excess"],
        "status": "PASS" if not failures else "FAIL",
        "failures": failures,
        "seconds": round(time.perf_counter() - started, 4),
    }


def cmd_verify(config: VerifyConfig, jobs: int = 1, out=None) -> int:
    out = out or sys.stdout
    cases = config.cases()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_case, *zip(*cases)))
    else:
        results = [run_case(p, c) for p, c in cases]
    print("partition\tfield\tdim_N\tdim_der_oracle\tdim_der_structural\tpsi_class_dim\tstatus", file=out)
    for r in results:
        print("\t".join(str(x) for x in (",".join(map(str, r["partition"])), r["field"], r["dim_N"],
                                         r["dim_der_oracle"], r["dim_der_structural"],
                                         r["psi_class_dim"], r["status"])), file=out)
    n_fail = sum(r["status"] != "PASS" for r in results)
    report = {"config": {"max_n": config.max_n, "fields": config.fields,
                         "partitions": "all compositions" if config.partitions is None
                         else [list(p) for p in config.partitions]},
              "cases": results, "total": len(results), "failed": n_fail, "all_pass": n_fail == 0}
    if config.report_path:
        with open(config.report_path, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(f"summary\t{len(results) - n_fail}/{len(results)} cases PASS", file=out)
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


# --- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dim", help="dimensions of N and Der(N) by both routes")
    p.add_argument("--field", required=True)
    p.add_argument("--partition", required=True)

    p = sub.add_parser("decompose", help="decompose a derivation read from JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--output")

    p = sub.add_parser("example41", help="walk through the characteristic-2 example")
    p.add_argument("--field", default="2")

    p = sub.add_parser("verify", help="sweep partitions and fields")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--fields", default="2,3,0")
    p.add_argument("--partition", action="append",
                   help="restrict to this partition (repeatable); default all compositions")
    p.add_argument("--report")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "dim":
            return cmd_dim(_field(args.field), _partition(args.partition))
        if args.command == "decompose":
            return cmd_decompose(args.input, args.output)
        if args.command == "example41":
            return cmd_example41(_field(args.field))
        if args.command == "verify":
            fields = [_field(s).characteristic for s in args.fields.split(",") if s.strip()]
            parts = None
            if args.partition:
                parts = [_partition(s).sizes for s in args.partition]
            config = VerifyConfig(args.max_n, fields, parts, args.report)
            return cmd_verify(config, jobs=max(1, args.jobs))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
