#!/usr/bin/env python3
"""Run the three reference convergence studies and write reports to results/.

  pentagon wheel + u = x^2 sin(y), 9 levels
  re-entrant corner (alpha = 8 pi/5) + u = r^(5/8) sin(5 theta/8), 9 levels
  unit cube + u = x^2 sin(y) + cos(z), 5 levels

Each study emits a CSV, an aligned text table, and a log-log SVG.
"""
import pathlib
import sys
import time

from declab.generators import FamilySpec
from declab.study import emit, run_convergence_study

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"

RUNS = [
    ("pentagon_trig2d", FamilySpec("pentagon_wheel"), "trig2d", 9),
    ("corner_mu_5_8", FamilySpec("corner"), "corner", 9),
    ("cube_trig3d", FamilySpec("cube_kuhn"), "trig3d", 5),
]


def main() -> int:
    OUT.mkdir(exist_ok=True)
    for name, spec, problem, levels in RUNS:
        t0 = time.time()
        report = run_convergence_study(spec, problem, levels)
        print(f"{name}: {levels} levels in {time.time() - t0:.1f}s")
        for fmt, ext in (("csv", "csv"), ("text_table", "txt"), ("svg_loglog", "svg")):
            emit(report, fmt, OUT / f"{name}.{ext}")
        last = report.rows[-1]
        print(f"  final rates: max {last['rate_max']:.4f}  "
              f"h1 {last['rate_h1']:.4f}  l2 {last['rate_l2']:.4f}")
    print(f"reports in {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
