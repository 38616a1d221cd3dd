#!/usr/bin/env python3
"""Run every built-in model against its reference expectations.

Usage: python scripts/run_corpus.py [name ...]
"""

import sys
import time

from phaseport.corpus import builtin_model, builtin_names, run_expectations


def main(argv: list[str]) -> int:
    names = argv or builtin_names()
    n_checks = n_failed = 0
    for name in names:
        record = builtin_model(name)
        if not record.available:
            print(f"-- {name}: skipped ({record.note})")
            continue
        t0 = time.perf_counter()
        results = run_expectations(record)
        dt = time.perf_counter() - t0
        for exp, ok, detail in results:
            n_checks += 1
            mark = "ok  " if ok else "FAIL"
            if not ok:
                n_failed += 1
            print(f"{mark} {name:18s} {exp.check:14s} [{exp.provenance:7s}] {detail}")
        print(f"     {name}: {len(results)} checks in {dt:.2f}s")
    print(f"\n{n_checks} checks, {n_failed} failures")
    return 1 if n_failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
