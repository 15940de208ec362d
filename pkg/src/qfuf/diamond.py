"""Generator for the equality-diamond benchmark family.

Each index i contributes the disjunction
  (x_i = z_i and z_i = x_{i+1}) or (x_i = v_i and v_i = x_{i+1})
and the script closes with x_1 != x_{n+1}; the instance is unsatisfiable.
"""
from __future__ import annotations


def gen_eq_diamond(n: int) -> str:
    if n < 1:
        raise ValueError("diamond size must be at least 1")
    lines = ["(set-logic QF_UF)", "(declare-sort S 0)"]
    for i in range(1, n + 2):
        lines.append(f"(declare-fun x{i} () S)")
    for i in range(1, n + 1):
        lines.append(f"(declare-fun z{i} () S)")
        lines.append(f"(declare-fun v{i} () S)")
    for i in range(1, n + 1):
        lines.append(
            f"(assert (or (and (= x{i} z{i}) (= z{i} x{i + 1})) "
            f"(and (= x{i} v{i}) (= v{i} x{i + 1}))))"
        )
    lines.append(f"(assert (not (= x1 x{n + 1})))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
