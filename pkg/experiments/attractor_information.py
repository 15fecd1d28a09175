"""
I_avg и близость к аттрактору вдоль tau = (2k - 1) pi alpha.

Для каждого alpha считаем I_avg (осевая формула, без квадратуры), долю от
прямого измерения I_max и максимальное расстояние образа сферы Блоха до
предельного состояния (0, (-1)^k, 0).

  py experiments/attractor_information.py --k 1,2 --alpha 1,2,4,8,12
"""

import argparse
import csv
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

try:
    from dotenv import load_dotenv

    load_dotenv(ROOT / ".env")
except Exception:
    pass

from info_gain import (  # noqa: E402
    DIRECT_MEASUREMENT_AIG,
    average_information_gain_axial,
    fibonacci_sphere,
)
from jc_asymptotics import attractor_bloch, attractor_time  # noqa: E402
from jc_dynamics import bloch_evolve  # noqa: E402
from qubit_states import CoherentField, EvolutionParams  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description="Information gain at the attractor times")
    ap.add_argument("--k", default="1,2")
    ap.add_argument("--alpha", default="1,2,4,8,12")
    ap.add_argument("--states", type=int, default=50)
    args = ap.parse_args()

    ks = [int(v) for v in args.k.split(",") if v.strip()]
    alphas = [float(v) for v in args.alpha.split(",") if v.strip()]
    states = [p.to_qubit() for p in fibonacci_sphere(args.states)]

    out_dir = Path(__file__).resolve().parent / "output"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "attractor_information.csv"

    with out_path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["k", "alpha", "tau", "i_avg", "fraction_of_direct", "max_distance"])
        for k in ks:
            limit = attractor_bloch(k)
            for alpha in alphas:
                tau = attractor_time(k, alpha)
                field = CoherentField.from_modulus(alpha)
                params = EvolutionParams(tau)
                i_avg = average_information_gain_axial(field, params)
                dist = max(bloch_evolve(q, field, params).distance(limit) for q in states)
                w.writerow([k, alpha, tau, i_avg, i_avg / DIRECT_MEASUREMENT_AIG, dist])
                print(
                    f"k={k} alpha={alpha:g} tau={tau:.3f}: I_avg={i_avg:.6f} "
                    f"({100 * i_avg / DIRECT_MEASUREMENT_AIG:.1f}% of I_max), "
                    f"max |r - r_k|={dist:.4f}"
                )

    print(f"Saved: {out_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
