"""Random well-sorted script generation and the differential fuzz loop.

The generator builds scripts that parse and sort-check by construction;
mutational byte-level fuzzing is out of scope (the printer/parser
round-trip property is checked separately).  Each trial solves the same
script under the three solver configurations (default, preprocessing
off, theory propagation off), validates models on sat, replays
certificates on unsat, and optionally diffs against an external
reference solver.
"""
from __future__ import annotations

import random
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .models import build_model, emit_validation_script, model_satisfies, \
    validate_script_text
from .proofs import build_certificate, replay_check
from .smtlib import parse_script
from .solver import Outcome, SolveOptions, solve_script
from .terms import Kind


@dataclass
class FuzzSpec:
    num_sorts: int = 2
    num_consts: int = 5
    num_funs: int = 3
    bool_vars: int = 2
    max_depth: int = 3
    num_asserts: int = 4
    # probability weights
    p_bool_arg: float = 0.25   # a function argument position gets sort Bool
    p_bool_ret: float = 0.25   # a function returns Bool
    p_leaf: float = 0.4        # stop recursion early
    p_const_leaf: float = 0.15  # Bool leaf is true/false


class ScriptGen:
    def __init__(self, spec: FuzzSpec, rng: random.Random):
        self.spec = spec
        self.rng = rng
        self.sorts = [f"S{i}" for i in range(max(1, spec.num_sorts))]
        self.consts: dict[str, list[str]] = {s: [] for s in self.sorts}
        for i in range(max(len(self.sorts), spec.num_consts)):
            sort = self.sorts[i % len(self.sorts)]
            self.consts[sort].append(f"c{i}")
        self.bools = [f"p{i}" for i in range(spec.bool_vars)]
        self.funs: list[tuple[str, list[str], str]] = []
        for i in range(spec.num_funs):
            arity = rng.randint(1, 3)
            args = [
                "Bool" if rng.random() < spec.p_bool_arg else rng.choice(self.sorts)
                for _ in range(arity)
            ]
            ret = "Bool" if rng.random() < spec.p_bool_ret else rng.choice(self.sorts)
            self.funs.append((f"f{i}", args, ret))

    def term(self, sort: str, depth: int) -> str:
        rng = self.rng
        if sort == "Bool":
            return self.formula(depth)
        funs = [f for f in self.funs if f[2] == sort]
        if depth <= 0 or not funs or rng.random() < self.spec.p_leaf:
            return rng.choice(self.consts[sort])
        if rng.random() < 0.15:
            return (f"(ite {self.formula(depth - 1)} "
                    f"{self.term(sort, depth - 1)} {self.term(sort, depth - 1)})")
        name, args, _ = rng.choice(funs)
        parts = " ".join(self.term(a, depth - 1) for a in args)
        return f"({name} {parts})"

    def atom(self, depth: int) -> str:
        rng = self.rng
        choices = ["eq"]
        if self.bools:
            choices.append("var")
        if any(f[2] == "Bool" for f in self.funs):
            choices.append("app")
        kind = rng.choice(choices)
        if kind == "var":
            return rng.choice(self.bools)
        if kind == "app":
            name, args, _ = rng.choice([f for f in self.funs if f[2] == "Bool"])
            parts = " ".join(self.term(a, depth - 1) for a in args)
            return f"({name} {parts})"
        sort = rng.choice(self.sorts)
        return f"(= {self.term(sort, depth - 1)} {self.term(sort, depth - 1)})"

    def formula(self, depth: int) -> str:
        rng = self.rng
        if depth <= 0 or rng.random() < self.spec.p_leaf:
            if rng.random() < self.spec.p_const_leaf:
                return rng.choice(["true", "false"])
            return self.atom(max(depth, 1))
        op = rng.choice(["not", "and", "or", "xor", "=>", "ite", "=", "distinct",
                         "and", "or", "xor"])
        if op == "not":
            return f"(not {self.formula(depth - 1)})"
        if op == "ite":
            return (f"(ite {self.formula(depth - 1)} {self.formula(depth - 1)} "
                    f"{self.formula(depth - 1)})")
        if op == "=":
            return f"(= {self.formula(depth - 1)} {self.formula(depth - 1)})"
        if op == "distinct":
            sort = rng.choice(self.sorts)
            n = rng.randint(2, 3)
            parts = " ".join(self.term(sort, depth - 1) for _ in range(n))
            return f"(distinct {parts})"
        n = rng.randint(2, 3 if op != "xor" else 4)
        parts = " ".join(self.formula(depth - 1) for _ in range(n))
        return f"({op} {parts})"

    def script(self) -> str:
        lines = ["(set-logic QF_UF)"]
        for s in self.sorts:
            lines.append(f"(declare-sort {s} 0)")
        for s in self.sorts:
            for c in self.consts[s]:
                lines.append(f"(declare-fun {c} () {s})")
        for p in self.bools:
            lines.append(f"(declare-fun {p} () Bool)")
        for name, args, ret in self.funs:
            lines.append(f"(declare-fun {name} ({' '.join(args)}) {ret})")
        for _ in range(self.spec.num_asserts):
            lines.append(f"(assert {self.formula(self.spec.max_depth)})")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"


def generate_script(spec: FuzzSpec, seed: int) -> str:
    return ScriptGen(spec, random.Random(seed)).script()


def uses_bool_uf_argument(text: str) -> bool:
    script = parse_script(text)
    seen = set()
    stack = list(script.assertions())
    while stack:
        t = stack.pop()
        if t.id in seen:
            continue
        seen.add(t.id)
        if t.kind is Kind.APP:
            if any(a.is_bool for a in t.args):
                return True
        stack.extend(t.args)
    return False


@dataclass
class TrialResult:
    index: int
    seed: int
    verdicts: dict[str, str] = field(default_factory=dict)
    times: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    bridge_coverage: bool = False


@dataclass
class FuzzReport:
    trials: int = 0
    sat: int = 0
    unsat: int = 0
    disagreements: int = 0
    model_failures: int = 0
    certificate_failures: int = 0
    reference_mismatches: int = 0
    bridge_trials: int = 0
    saved: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not (self.disagreements or self.model_failures
                    or self.certificate_failures or self.reference_mismatches)


CONFIGS = {
    "default": SolveOptions(),
    "no-prepro": SolveOptions(preprocessing=False),
    "no-th-prop": SolveOptions(theory_propagation=False),
}


def run_reference(binary: str, text: str, timeout: float) -> str | None:
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as f:
        f.write(text)
        path = f.name
    try:
        proc = subprocess.run(
            [binary, path], capture_output=True, text=True, timeout=timeout
        )
    except subprocess.TimeoutExpired:
        return None
    finally:
        Path(path).unlink(missing_ok=True)
    for line in proc.stdout.splitlines():
        token = line.strip()
        if token in ("sat", "unsat", "unknown"):
            return token
    return None


def run_trial(index: int, text: str, seed: int, timeout: float = 30.0,
              reference: str | None = None) -> TrialResult:
    result = TrialResult(index=index, seed=seed)
    result.bridge_coverage = uses_bool_uf_argument(text)
    outcomes: dict[str, Outcome] = {}
    for name, base in CONFIGS.items():
        options = SolveOptions(
            preprocessing=base.preprocessing,
            theory_propagation=base.theory_propagation,
            timeout=timeout,
        )
        script = parse_script(text)
        start = time.monotonic()
        outcome = solve_script(script, options)
        result.times[name] = time.monotonic() - start
        result.verdicts[name] = outcome.verdict
        outcomes[name] = outcome
    verdicts = set(result.verdicts.values())
    if len(verdicts) > 1:
        result.failures.append(f"verdict disagreement: {result.verdicts}")
    outcome = outcomes["default"]
    if outcome.verdict == "sat":
        try:
            model = build_model(outcome.theory, outcome.cnf,
                                outcome.result.model, outcome.script)
            if not model_satisfies(model, outcome.assertions):
                result.failures.append("model fails an original assertion")
            else:
                validation = emit_validation_script(outcome.script, model)
                if not validate_script_text(validation, model):
                    result.failures.append("validation script rejected by evaluator")
                elif reference is not None:
                    ref = run_reference(reference, validation, timeout)
                    if ref is not None and ref != "sat":
                        result.failures.append(
                            f"reference solver says {ref} on validation script"
                        )
        except Exception as exc:  # noqa: BLE001 - harness records all faults
            result.failures.append(f"model construction error: {exc!r}")
    elif outcome.verdict == "unsat":
        try:
            cert = build_certificate(outcome.script, outcome.prepro,
                                     outcome.cnf, outcome.proof_log())
            report = replay_check(cert)
            if not report.valid:
                result.failures.append(f"certificate replay failed: {report}")
        except Exception as exc:  # noqa: BLE001
            result.failures.append(f"certificate construction error: {exc!r}")
    if reference is not None and outcome.verdict in ("sat", "unsat"):
        ref = run_reference(reference, text, timeout)
        if ref is not None and ref in ("sat", "unsat") and ref != outcome.verdict:
            result.failures.append(
                f"reference solver disagrees: {ref} vs {outcome.verdict}"
            )
    return result


def fuzz(spec: FuzzSpec, trials: int, seed: int,
         failures_dir: str | Path = "fuzz-failures",
         reference: str | None = None, timeout: float = 30.0,
         csv_path: str | Path | None = None) -> FuzzReport:
    report = FuzzReport()
    failures_dir = Path(failures_dir)
    csv_lines = ["trial,seed,verdict,t_default,t_no_prepro,t_no_th_prop"]
    for i in range(trials):
        trial_seed = seed * 1000003 + i
        text = generate_script(spec, trial_seed)
        trial = run_trial(i, text, trial_seed, timeout=timeout,
                          reference=reference)
        report.trials += 1
        verdict = trial.verdicts.get("default")
        if verdict == "sat":
            report.sat += 1
        elif verdict == "unsat":
            report.unsat += 1
        if trial.bridge_coverage:
            report.bridge_trials += 1
        for failure in trial.failures:
            if "disagreement" in failure:
                report.disagreements += 1
            elif "model" in failure or "validation" in failure:
                report.model_failures += 1
            elif "certificate" in failure:
                report.certificate_failures += 1
            elif "reference" in failure:
                report.reference_mismatches += 1
        if trial.failures:
            failures_dir.mkdir(parents=True, exist_ok=True)
            path = failures_dir / f"trial-{seed}-{i}.smt2"
            notes = "".join(f"; failure: {f}\n" for f in trial.failures)
            path.write_text(notes + text)
            report.saved.append(str(path))
        csv_lines.append(
            f"{i},{trial_seed},{verdict},"
            f"{trial.times['default']:.6f},{trial.times['no-prepro']:.6f},"
            f"{trial.times['no-th-prop']:.6f}"
        )
    if csv_path is not None:
        Path(csv_path).write_text("\n".join(csv_lines) + "\n")
    return report
