"""Command-line entry point: solve, fuzz, ddmin, gen-diamond."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .ddmin import OracleFlaky, ddmin_script
from .diamond import gen_eq_diamond
from .fuzz import FuzzSpec, fuzz
from .models import (build_model, emit_validation_script, model_satisfies,
                     print_model, validate_script_text)
from .proofs import build_certificate, emit_proof_script, replay_check
from .smtlib import CommandKind, FrontendError, parse_warnings, print_term
from .solver import Outcome, SolveOptions, solve_script
from .fuzz import run_reference


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        preprocessing=not args.no_prepro,
        theory_propagation=not args.no_th_prop,
        conflict_budget=args.conflict_budget,
        timeout=args.timeout,
        seed=args.seed,
    )


def _dump_lemmas(outcome: Outcome, path: str) -> None:
    lines = []
    if outcome.prepro.conflict_lemma is not None:
        from .proofs import clause_term
        lines.append(print_term(
            clause_term(outcome.script.bank, outcome.prepro.conflict_lemma.clause)
        ))
    term_of = outcome.cnf.atoms.term_of if outcome.cnf else {}
    for entry in outcome.proof_log():
        if entry[0] != "theory":
            continue
        lemma = entry[1]
        lits = []
        for lit in lemma.lits:
            term = term_of[abs(lit)]
            text = print_term(term)
            lits.append(text if lit > 0 else f"(not {text})")
        lines.append(lits[0] if len(lits) == 1 else "(or " + " ".join(lits) + ")")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def cmd_solve(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        script, warnings = parse_warnings(text)
    except FrontendError as exc:
        print(f"error: {args.file}:{exc}", file=sys.stderr)
        return 1
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)

    options = _solve_options(args)
    outcome: Outcome | None = None
    model = None
    status = 0
    for cmd in script.commands:
        if cmd.kind is CommandKind.CHECK_SAT:
            outcome = solve_script(script, options)
            print(outcome.verdict)
            sys.stdout.flush()
        elif cmd.kind is CommandKind.GET_MODEL:
            if outcome is None or outcome.verdict != "sat":
                print('(error "get-model requires a preceding sat answer")',
                      file=sys.stderr)
                status = 1
                continue
            if model is None:
                model = build_model(outcome.theory, outcome.cnf,
                                    outcome.result.model, script)
            print(print_model(model))
        elif cmd.kind is CommandKind.EXIT:
            break
    if outcome is None:
        return status

    if args.dump_cnf and outcome.cnf is not None:
        Path(args.dump_cnf).write_text(outcome.cnf.dimacs())
    if args.dump_lemmas:
        _dump_lemmas(outcome, args.dump_lemmas)

    if outcome.verdict == "sat" and args.validate:
        if model is None:
            model = build_model(outcome.theory, outcome.cnf,
                                outcome.result.model, script)
        if not model_satisfies(model, outcome.assertions):
            print("model validation failed: assertion evaluates to false",
                  file=sys.stderr)
            return 3
        validation = emit_validation_script(script, model)
        if not validate_script_text(validation, model):
            print("model validation failed: validation script rejected",
                  file=sys.stderr)
            return 3
        if args.reference:
            verdict = run_reference(args.reference, validation, args.timeout)
            if verdict not in (None, "sat"):
                print(f"model validation failed: reference solver says {verdict}",
                      file=sys.stderr)
                return 3
        print("model validation: ok", file=sys.stderr)

    if outcome.verdict == "unsat" and (args.proof or args.proof_replay):
        cert = build_certificate(script, outcome.prepro, outcome.cnf,
                                 outcome.proof_log())
        if args.proof:
            Path(args.proof).write_text(emit_proof_script(cert))
        if args.proof_replay:
            report = replay_check(cert)
            print(str(report))
            if not report.valid:
                return 3
    return status


def cmd_fuzz(args) -> int:
    spec = FuzzSpec(
        num_sorts=args.num_sorts,
        num_consts=args.num_consts,
        num_funs=args.num_funs,
        bool_vars=args.bool_vars,
        max_depth=args.max_depth,
        num_asserts=args.num_asserts,
    )
    report = fuzz(spec, trials=args.trials, seed=args.seed,
                  failures_dir=args.failures_dir, reference=args.reference,
                  timeout=args.timeout, csv_path=args.csv)
    print(f"trials:       {report.trials}")
    print(f"sat/unsat:    {report.sat}/{report.unsat}")
    print(f"bridge cover: {report.bridge_trials}")
    print(f"disagreements:{report.disagreements}")
    print(f"model fails:  {report.model_failures}")
    print(f"cert fails:   {report.certificate_failures}")
    print(f"ref mismatch: {report.reference_mismatches}")
    for path in report.saved:
        print(f"saved failure: {path}")
    return 0 if report.ok() else 3


def _make_oracle(mode: str, timeout: float):
    from .smtlib import parse_script

    def solve_verdict(text: str, **kw) -> str:
        try:
            script = parse_script(text)
            return solve_script(script, SolveOptions(timeout=timeout, **kw)).verdict
        except Exception:  # noqa: BLE001 - oracle treats crashes as outcomes
            return "crash"

    if mode == "prepro-diff":
        def oracle(text: str) -> bool:
            a = solve_verdict(text)
            b = solve_verdict(text, preprocessing=False)
            return a != b
        return oracle
    if mode in ("sat", "unsat", "unknown", "crash"):
        return lambda text: solve_verdict(text) == mode
    if mode == "cert-invalid":
        def oracle(text: str) -> bool:
            try:
                script = parse_script(text)
                outcome = solve_script(script, SolveOptions(timeout=timeout))
                if outcome.verdict != "unsat":
                    return False
                cert = build_certificate(script, outcome.prepro, outcome.cnf,
                                         outcome.proof_log())
                return not replay_check(cert).valid
            except Exception:  # noqa: BLE001
                return True
        return oracle
    if mode == "model-invalid":
        def oracle(text: str) -> bool:
            try:
                script = parse_script(text)
                outcome = solve_script(script, SolveOptions(timeout=timeout))
                if outcome.verdict != "sat":
                    return False
                model = build_model(outcome.theory, outcome.cnf,
                                    outcome.result.model, script)
                return not model_satisfies(model, outcome.assertions)
            except Exception:  # noqa: BLE001
                return True
        return oracle
    raise ValueError(f"unknown oracle mode {mode!r}")


def cmd_ddmin(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    oracle = _make_oracle(args.oracle, args.timeout)
    try:
        reduced = ddmin_script(text, oracle)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OracleFlaky as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(reduced)
    else:
        sys.stdout.write(reduced)
    return 0


def cmd_gen_diamond(args) -> int:
    sys.stdout.write(gen_eq_diamond(args.n))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfuf",
        description="Lazy DPLL(T) SMT solver for QF_UF",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve an SMT-LIB 2 script")
    solve.add_argument("file")
    solve.add_argument("--no-prepro", action="store_true",
                       help="disable preprocessing")
    solve.add_argument("--no-th-prop", action="store_true",
                       help="disable theory propagation")
    solve.add_argument("--proof", metavar="PATH",
                       help="write the unsat certificate script")
    solve.add_argument("--proof-replay", action="store_true",
                       help="replay-check the certificate and report Valid/Invalid")
    solve.add_argument("--validate", action="store_true",
                       help="validate the model on sat")
    solve.add_argument("--reference", metavar="BIN",
                       help="external reference solver binary")
    solve.add_argument("--timeout", type=float, default=300.0, metavar="S")
    solve.add_argument("--seed", type=int, default=None, metavar="N")
    solve.add_argument("--conflict-budget", type=int, default=None, metavar="N")
    solve.add_argument("--dump-cnf", metavar="PATH")
    solve.add_argument("--dump-lemmas", metavar="PATH")
    solve.set_defaults(func=cmd_solve)

    fz = sub.add_parser("fuzz", help="differential fuzzing")
    fz.add_argument("--trials", type=int, default=100)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--num-sorts", type=int, default=2)
    fz.add_argument("--num-consts", type=int, default=5)
    fz.add_argument("--num-funs", type=int, default=3)
    fz.add_argument("--bool-vars", type=int, default=2)
    fz.add_argument("--max-depth", type=int, default=3)
    fz.add_argument("--num-asserts", type=int, default=4)
    fz.add_argument("--failures-dir", default="fuzz-failures")
    fz.add_argument("--reference", metavar="BIN")
    fz.add_argument("--timeout", type=float, default=30.0, metavar="S")
    fz.add_argument("--csv", metavar="PATH", help="write per-trial times as CSV")
    fz.set_defaults(func=cmd_fuzz)

    dd = sub.add_parser("ddmin", help="reduce a failing script")
    dd.add_argument("file")
    dd.add_argument("--oracle", required=True,
                    choices=["prepro-diff", "sat", "unsat", "unknown", "crash",
                             "model-invalid", "cert-invalid"])
    dd.add_argument("--timeout", type=float, default=30.0, metavar="S")
    dd.add_argument("--out", metavar="PATH")
    dd.set_defaults(func=cmd_ddmin)

    gd = sub.add_parser("gen-diamond", help="emit an equality diamond instance")
    gd.add_argument("n", type=int)
    gd.set_defaults(func=cmd_gen_diamond)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
