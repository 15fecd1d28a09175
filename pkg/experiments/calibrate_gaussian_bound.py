"""
Калибровка порога для гауссова приближения.

Для каждого alpha прогоняем набор начальных состояний по сетке tau и
пишем худшее отклонение промежуточных сумм и гауссовой формы от точных
сумм. Порог GAUSSIAN_BOUND_ALPHA10 в tests/test_jc_asymptotics.py взят
из прогона с настройками по умолчанию.

  py experiments/calibrate_gaussian_bound.py --alpha 10 --tau-max 20
"""

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]

if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

try:
    from dotenv import load_dotenv

    load_dotenv(ROOT / ".env")
except Exception:
    pass

from info_gain import fibonacci_sphere  # noqa: E402
from jc_asymptotics import staged_deviation_table  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description="Worst-case deviation of the Gaussian approximation")
    ap.add_argument("--alpha", default="4,6,8,10", help="comma separated list")
    ap.add_argument("--tau-max", type=float, default=20.0)
    ap.add_argument("--tau-count", type=int, default=201)
    ap.add_argument("--states", type=int, default=24)
    ap.add_argument("--margin", type=float, default=1.2, help="bound = margin * worst")
    args = ap.parse_args()

    alphas = [float(a) for a in args.alpha.split(",") if a.strip()]
    taus = np.linspace(0.0, args.tau_max, args.tau_count)
    states = [p.to_qubit() for p in fibonacci_sphere(args.states)]

    out_dir = Path(__file__).resolve().parent / "output"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "gaussian_bound.csv"

    summary = []
    with out_path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["alpha", "tau", "intermediate_max", "gaussian_max"])
        for alpha in alphas:
            mid = np.zeros(taus.size)
            gauss = np.zeros(taus.size)
            for q in states:
                rows = staged_deviation_table(q, alpha, taus)
                mid = np.maximum(mid, [r.intermediate_deviation for r in rows])
                gauss = np.maximum(gauss, [r.gaussian_deviation for r in rows])
            for tau, m, g in zip(taus, mid, gauss):
                w.writerow([alpha, float(tau), float(m), float(g)])
            worst = float(gauss.max())
            summary.append((alpha, float(mid.max()), worst, float(taus[int(gauss.argmax())])))
            print(
                f"alpha={alpha:g}: intermediate max={mid.max():.4f}, "
                f"gaussian max={worst:.4f} at tau={taus[int(gauss.argmax())]:.2f}"
            )

    print("")
    for alpha, _, worst, _ in summary:
        bound = math.ceil(args.margin * worst * 1000) / 1000
        print(f"alpha={alpha:g}: suggested bound {bound:.3f}")
    print(f"Saved: {out_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
