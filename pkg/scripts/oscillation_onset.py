#!/usr/bin/env python3
"""Trace the onset of oscillations in the two cycle-bearing corpus models.

For the activator-depletion oscillator and the predator-prey model with a
saturating functional response, scan the bifurcation parameter, print the
equilibrium branch with its trace/determinant, and confirm the limit cycle
on the oscillatory side by direct detection.
"""

from phaseport.corpus import builtin_model
from phaseport.cycles import detect_limit_cycle, hopf_scan
from phaseport.phase2d import find_equilibria_2d


def interior_equilibrium(m):
    eqs = find_equilibria_2d(m)
    return max(eqs, key=lambda e: min(e[0] - m.x_lo, m.x_hi - e[0],
                                      e[1] - m.y_lo, m.y_hi - e[1]))


def study(name: str, param: str, lo: float, hi: float, steps: int, probe_offsets):
    model = builtin_model(name).model
    print(f"== {name}: scanning {param} in [{lo}, {hi}] ==")
    res = hopf_scan(model, param, (lo, hi), steps)
    for p, eq, tr, det in res.path[:: max(1, len(res.path) // 12)]:
        print(f"  {param}={p:8.4f}  eq=({eq[0]:7.4f}, {eq[1]:7.4f})  tr={tr:+.5f}  det={det:.5f}")
    print(f"  critical {param}* = {res.critical!r} (det there = {res.det_at_critical:.5f})")

    for offset in probe_offsets:
        m = model.with_param(param, res.critical + offset)
        rep = detect_limit_cycle(m, interior_equilibrium(m))
        side = f"{param} = {param}* {'+' if offset >= 0 else '-'} {abs(offset)}"
        if rep.found:
            print(f"  {side}: cycle ({rep.stability}), period {rep.period:.3f},"
                  f" amplitude {rep.amplitude:.4f}")
        else:
            print(f"  {side}: no cycle ({rep.reason})")
    print()


if __name__ == "__main__":
    study("brusselator", "b", 1.5, 2.5, 100, (-0.5, 0.5))
    study("holling_tanner", "K", 0.7, 1.6, 40, (-0.08, 0.15))
