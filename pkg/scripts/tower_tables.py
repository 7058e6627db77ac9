#!/usr/bin/env python3
"""Print the exact norm/violation tables for both tower constructions.

Builds the slow-decay tower family in each regime, prints the per-level
exact norms next to their closed-form bounds, the decay ratio of the
norm sequence, and the exact violation probability of the scaled-maximum
event (computed by residue counting, no sampling).
"""

import argparse

from coblim.counterexamples import (
    build_tower_counterexample,
    exact_norms,
    norm_decay_ratios,
)


def print_table(kind: str, p: float, r: float, q, window_exp, i0, i_max, bits) -> None:
    cex = build_tower_counterexample(kind, p, r, q=q, window_exp=window_exp,
                                     i0=i0, i_max=i_max, bits=bits)
    rows = exact_norms(cex)
    ratios = norm_decay_ratios(rows)
    e = cex.g_exponent
    print(f"\n== {kind}: p={p} r={r}" + (f" q={q}" if q else "")
          + f" window_exp={cex.window_exp:.4f} bits={bits} ==")
    print(f"{'i':>3} {'n_i':>9} {'k_i':>6} {'amplitude':>12} "
          f"{'norm':>12} {'bound':>12} {'viol_prob':>10} {'ratio':>8}")
    for j, row in enumerate(rows):
        ratio = f"{ratios[j - 1]:8.4f}" if j else "       -"
        print(f"{row.i:>3} {row.n:>9} {row.k:>6} {row.amplitude:>12.5g} "
              f"{row.norm_p_exact:>12.5g} {row.bound_355:>12.5g} "
              f"{float(row.violation_prob):>10.6f} {ratio}")
    partial = sum(row.norm_p_exact for row in rows)
    print(f"norm exponent {e:g}; partial sum of norms = {partial:.6f}")
    ok = all(row.norm_p_exact <= row.bound_355 for row in rows)
    print(f"[{'OK' if ok else 'VIOLATION'}] closed-form bound "
          f"{'holds' if ok else 'fails'} at every level")
    floor = min(float(row.violation_prob) for row in rows if row.i >= i0 + 4)
    print(f"[{'OK' if floor > 0.25 else 'WARN'}] violation probability floor "
          f"{floor:.4f} on the deep levels (no decay to zero)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--i-max", type=int, default=20, help="deepest tower level")
    ap.add_argument("--bits", type=int, default=24, help="odometer precision")
    args = ap.parse_args()

    print_table("ip_lil", 1.2, 4.0, None, 0.3667, 4, args.i_max, args.bits)
    print_table("slln", 1.8, 3.0, 1.1, 0.3611, 4, min(args.i_max, args.bits - 2),
                min(args.bits, 22))
    print("\nBoth families keep the scaled-maximum events at positive measure "
          "while the norm series converges:")
    print("the transfer function is integrable at its own exponent, yet no "
          "better, which is exactly the gap the limit theorems leave open.")


if __name__ == "__main__":
    main()
