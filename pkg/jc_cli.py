"""
JC Readout: командная строка для симуляции передачи информации кубит → поле.

Атом (кубит) резонансно взаимодействует с когерентным полем |alpha>,
после чего число фотонов измеряется. Команды:
  evolve       траектория вектора Блоха (замкнутая форма или оракул)
  aig-map      поверхность средней информации I_avg(tau, alpha)
  fig2-map     I_avg, <r>^2 и разность I_avg - I_max <r>^2
  ball-image   образ сферы Блоха после N итераций (облака точек)
  init-search  подбор (alpha, фаза) для инициализации в заданное состояние
  validate     сверка замкнутых формул с оракулом, JSON в stdout

Запуск:
  py jc_cli.py aig-map --tau-range 0,20,60 --alpha-range 0.05,10,60 --out fig1.csv
  py jc_cli.py ball-image --tau-k 4 --alpha 0.2,0.4,0.6,0.8,1.0 --iters 1

Коды выхода: 0 успех, 2 ошибка аргументов, 3 численная ошибка
(в stderr печатается одна JSON-строка с полем "error").
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from dotenv import dotenv_values, load_dotenv

load_dotenv()

try:
    # py jc_cli.py из корня репозитория
    from info_gain import (
        aig_minus_rsq_surface,
        aig_surface,
        fibonacci_sphere,
        sphere_grid,
    )
    from jc_dynamics import (
        bloch_evolve,
        evolve_joint,
        initial_joint_state,
        kraus_set,
        oracle_evolve,
    )
    from qubit_init import IterationPlan, ball_image, find_initialization_params
    from qubit_states import (
        CoherentField,
        EvolutionParams,
        JCReadoutError,
        PureQubit,
        SpherePoint,
        density_from_bloch,
        purity,
    )
except ModuleNotFoundError:
    # py -m jc_readout.jc_cli
    from jc_readout.info_gain import (  # type: ignore
        aig_minus_rsq_surface,
        aig_surface,
        fibonacci_sphere,
        sphere_grid,
    )
    from jc_readout.jc_dynamics import (  # type: ignore
        bloch_evolve,
        evolve_joint,
        initial_joint_state,
        kraus_set,
        oracle_evolve,
    )
    from jc_readout.qubit_init import (  # type: ignore
        IterationPlan,
        ball_image,
        find_initialization_params,
    )
    from jc_readout.qubit_states import (  # type: ignore
        CoherentField,
        EvolutionParams,
        JCReadoutError,
        PureQubit,
        SpherePoint,
        density_from_bloch,
        purity,
    )


# ─── Конфигурация ─────────────────────────────────────────────────────────────


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except Exception:
        return default


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, repr(default)))
    except Exception:
        return default


def _env_str(name: str, default: str) -> str:
    v = os.getenv(name)
    if v is None or not v.strip():
        return default
    return v.strip()


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in {"1", "true", "yes", "y", "on"}


def _env_defaults() -> dict:
    return {
        "workers": _env_int("JCR_WORKERS", os.cpu_count() or 1),
        "tail_tol": _env_float("JCR_TAIL_TOL", 1e-12),
        "theta_nodes": _env_int("JCR_THETA_NODES", 64),
        "phi_nodes": _env_int("JCR_PHI_NODES", 64),
    }


# Пороги команды validate
ORACLE_TOL = 1e-8
COMPLETENESS_TOL = 1e-10
REVERSIBILITY_TOL = 1e-10
VALIDATE_ALPHAS = (0.3, 1.0, 2.0, 4.0)
VALIDATE_TAUS = (0.5, 2.0, 5.0, 11.0)
VALIDATE_STATES = 20

BOOL_KEYS = {"oracle"}
# Не попадают в строку "# config:" (вывод не должен зависеть от них)
UNRECORDED_KEYS = {"workers", "config", "out", "format"}


# ─── Логгирование ─────────────────────────────────────────────────────────────

logging.basicConfig(
    level=getattr(logging, _env_str("JCR_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format="%(asctime)s [%(levelname)s] %(message)s",
    datefmt="%H:%M:%S",
)
log = logging.getLogger("jc_readout")


# ─── Разбор аргументов ────────────────────────────────────────────────────────


def _range(text: str) -> np.ndarray:
    """"start,stop,count" -> linspace."""
    try:
        start, stop, count = text.split(",")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидается start,stop,count, получено {text!r}")
    if count < 1:
        raise argparse.ArgumentTypeError(f"count должен быть >= 1: {text!r}")
    if count > 1 and not stop > start:
        raise argparse.ArgumentTypeError(f"stop должен быть больше start: {text!r}")
    return np.linspace(start, stop, count)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидается список чисел, получено {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("пустой список")
    return values


def _pair(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"ожидается lo,hi, получено {text!r}")
    return values[0], values[1]


def _nonnegative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"не число: {text!r}")
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"должно быть >= 0: {text!r}")
    return v


def _tail_tol(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"не число: {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"tail-tol должен быть в (0, 1): {text!r}")
    return v


def _nonnegative_list(text: str) -> list[float]:
    values = _float_list(text)
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise argparse.ArgumentTypeError(f"alpha должны быть >= 0: {text!r}")
    return values


def _alpha_interval(text: str) -> tuple[float, float]:
    lo, hi = _pair(text)
    if not 0.0 < lo < hi:
        raise argparse.ArgumentTypeError(f"ожидается 0 < lo < hi, получено {text!r}")
    return lo, hi


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"не комплексное число: {text!r}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"не целое: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"должно быть >= 1: {text!r}")
    return v


def _nonnegative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"не целое: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"должно быть >= 0: {text!r}")
    return v


def build_parser(overrides: dict | None = None) -> argparse.ArgumentParser:
    env = _env_defaults()

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key=value файл (синтаксис .env)")
    common.add_argument("--out", default=None, help="файл вывода (по умолчанию stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--workers", type=_positive_int, default=env["workers"])
    common.add_argument("--tail-tol", type=_tail_tol, default=env["tail_tol"])
    common.add_argument("--theta-nodes", type=_positive_int, default=env["theta_nodes"])
    common.add_argument("--phi-nodes", type=_positive_int, default=env["phi_nodes"])

    ap = argparse.ArgumentParser(
        prog="jc_cli",
        description="Qubit -> field information transfer in the Jaynes-Cummings model",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common], help="Bloch vector after time tau")
    p.add_argument("--alpha", type=_nonnegative_float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--tau", type=_nonnegative_float, default=None)
    p.add_argument("--tau-range", type=_range, default=None)
    p.add_argument("--cg", type=_complex, default=1 + 0j)
    p.add_argument("--ce", type=_complex, default=0j)
    p.add_argument("--oracle", action="store_true", help="truncated unitary oracle")

    for name, helptext in (
        ("aig-map", "I_avg(tau, alpha) surface"),
        ("fig2-map", "I_avg - I_max <r>^2 surface"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--tau-range", type=_range, default="0,20,60")
        p.add_argument("--alpha-range", type=_range, default="0.05,10,60")

    p = sub.add_parser("ball-image", parents=[common], help="Bloch sphere image clouds")
    when = p.add_mutually_exclusive_group()
    when.add_argument("--tau", type=_nonnegative_float, default=None)
    when.add_argument("--tau-k", type=_positive_int, default=None, help="tau = (k - 1/2) pi")
    p.add_argument("--alpha", type=_nonnegative_list, default="0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--iters", type=_nonnegative_int, default=1)
    p.add_argument("--points", type=_positive_int, default=500)

    p = sub.add_parser("init-search", parents=[common], help="(alpha, phase) for a target state")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--iters", type=_nonnegative_int, default=3)
    p.add_argument("--alpha-range", type=_alpha_interval, default="0.01,1.0")
    p.add_argument("--scan", type=_positive_int, default=12)
    p.add_argument("--points", type=_positive_int, default=200)

    sub.add_parser("validate", parents=[common], help="oracle equivalence checks")

    if overrides:
        for subparser in sub.choices.values():
            known = {a.dest for a in subparser._actions}
            subparser.set_defaults(**{k: v for k, v in overrides.items() if k in known})
    return ap


def _config_overrides(path: str) -> dict:
    if not Path(path).is_file():
        raise argparse.ArgumentTypeError(f"config не найден: {path}")
    out = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            continue
        dest = key.strip().lower().replace("-", "_")
        if dest.startswith("jcr_"):
            dest = dest[4:]
        out[dest] = _truthy(value) if dest in BOOL_KEYS else value
    return out


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Flags > config file > environment > built-in defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    overrides = None
    if known.config:
        try:
            overrides = _config_overrides(known.config)
        except argparse.ArgumentTypeError as e:
            build_parser().error(str(e))
    return build_parser(overrides).parse_args(argv)


# ─── Вывод ────────────────────────────────────────────────────────────────────


def _plain(v):
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def resolved_config(args: argparse.Namespace) -> dict:
    return {
        k: _plain(v)
        for k, v in sorted(vars(args).items())
        if k not in UNRECORDED_KEYS and v is not None
    }


def _open_output(args: argparse.Namespace):
    out = args.out
    if out is None and _env_str("JCR_OUTPUT_DIR", ""):
        out = str(Path(_env_str("JCR_OUTPUT_DIR", "")) / f"{args.command}.{args.format}")
    if out is None or out == "-":
        return sys.stdout, False
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", encoding="utf-8", newline=""), True


def emit(args: argparse.Namespace, columns: list[str], rows: list[list]) -> None:
    config = resolved_config(args)
    handle, owned = _open_output(args)
    try:
        if args.format == "json":
            doc = {
                "config": config,
                "columns": columns,
                "rows": [dict(zip(columns, (_plain(v) for v in row))) for row in rows],
            }
            handle.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        else:
            handle.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_plain(v) for v in row])
    finally:
        if owned:
            handle.close()
        else:
            handle.flush()
    if owned:
        log.info(f"Записано {len(rows)} строк → {handle.name}")


def _error_line(reason: str, message: str, **extra) -> None:
    payload = {"error": reason, "message": message, **{k: _plain(v) for k, v in extra.items()}}
    print(json.dumps(payload), file=sys.stderr)


# ─── Команды ──────────────────────────────────────────────────────────────────


def cmd_evolve(args: argparse.Namespace) -> int:
    if args.tau_range is not None:
        taus = list(args.tau_range)
    elif args.tau is not None:
        taus = [args.tau]
    else:
        _error_line("usage", "нужен --tau или --tau-range")
        return 2

    q = PureQubit.normalized(args.cg, args.ce)
    field = CoherentField.from_modulus(args.alpha, args.phase, args.tail_tol)
    use_oracle = args.oracle or not field.is_real
    if use_oracle and not args.oracle:
        log.info("Фаза поля ≠ 0 → считаем через оракул")

    rows = []
    for tau in taus:
        params = EvolutionParams(float(tau))
        if use_oracle:
            rho = oracle_evolve(q, field, params).atom
            v = rho.bloch()
        else:
            v = bloch_evolve(q, field, params)
            rho = density_from_bloch(v)
        rows.append([float(tau), args.alpha, v.x, v.y, v.z, v.radius, purity(rho)])

    emit(args, ["tau", "alpha", "x", "y", "z", "r", "purity"], rows)
    return 0


def _surface_rows(surface, layer_names: list[str]) -> list[list]:
    failed = {(f.tau, f.alpha): f.reason for f in surface.failures}
    rows = []
    for i, j, tau, alpha in surface.rows():
        values = [float(surface.layers[name][i, j]) for name in layer_names]
        rows.append([tau, alpha, *values, failed.get((tau, alpha), "ok")])
    return rows


def _report_failures(surface) -> int:
    if surface.ok:
        return 0
    first = surface.failures[0]
    _error_line(
        first.reason,
        f"{len(surface.failures)} точек сетки не посчитаны",
        points=[[f.tau, f.alpha] for f in surface.failures],
    )
    return 3


def cmd_aig_map(args: argparse.Namespace) -> int:
    grid = sphere_grid(args.theta_nodes, args.phi_nodes)
    t0 = time.monotonic()
    surface = aig_surface(
        args.tau_range, args.alpha_range, grid, tail_tol=args.tail_tol, workers=args.workers
    )
    finite = surface.values[np.isfinite(surface.values)]
    peak = float(finite.max()) if finite.size else math.nan
    log.info(
        f"I_avg: {surface.values.size} точек за {time.monotonic() - t0:.1f} с, "
        f"max={peak:.6f} бит"
    )
    emit(args, ["tau", "alpha", "i_avg", "status"], _surface_rows(surface, ["i_avg"]))
    return _report_failures(surface)


def cmd_fig2_map(args: argparse.Namespace) -> int:
    grid = sphere_grid(args.theta_nodes, args.phi_nodes)
    surface = aig_minus_rsq_surface(
        args.tau_range, args.alpha_range, grid, tail_tol=args.tail_tol, workers=args.workers
    )
    layers = ["i_avg", "r_avg_sq", "diff"]
    emit(
        args,
        ["tau", "alpha", *layers, "status"],
        _surface_rows(surface, layers),
    )
    return _report_failures(surface)


def cmd_ball_image(args: argparse.Namespace) -> int:
    if args.tau_k is not None:
        tau = (args.tau_k - 0.5) * math.pi
    elif args.tau is not None:
        tau = args.tau
    else:
        _error_line("usage", "нужен --tau или --tau-k")
        return 2

    samples = fibonacci_sphere(args.points)
    first = 1 if args.iters > 0 else 0
    rows = []
    for alpha in args.alpha:
        plan = IterationPlan(tau, alpha, args.phase, args.iters)
        image = ball_image(plan, samples, workers=args.workers, tail_tol=args.tail_tol)
        log.info(
            f"alpha={alpha:g}: диаметр={image.diameter():.4f}, "
            f"центр θ={image.centroid().polar_angle:.4f}, "
            f"min purity={image.min_purity():.6f}"
        )
        for it in range(first, args.iters + 1):
            for idx, (p, trace) in enumerate(zip(image.initial_points, image.history)):
                v = trace[it]
                rows.append([alpha, idx, p.theta, p.phi, v.x, v.y, v.z, it])

    emit(args, ["alpha", "idx", "theta0", "phi0", "x", "y", "z", "iteration"], rows)
    return 0


def cmd_init_search(args: argparse.Namespace) -> int:
    if not 0.0 <= args.theta <= math.pi / 2:
        _error_line("usage", f"theta={args.theta} вне северной полусферы [0, pi/2]")
        return 2
    result = find_initialization_params(
        SpherePoint(args.theta, args.phi),
        args.k,
        args.iters,
        args.alpha_range,
        n_scan=args.scan,
        n_points=args.points,
        workers=args.workers,
        tail_tol=args.tail_tol,
    )
    if not result.ok:
        emit(args, ["alpha", "polar_angle"], [list(row) for row in result.scan])
        _error_line(result.reason, f"цель не достигнута, невязка {result.residual:.4f} рад")
        return 3

    a = result.achieved
    emit(
        args,
        ["target_theta", "target_phi", "alpha", "phase", "x", "y", "z", "residual"],
        [[args.theta, args.phi, result.alpha, result.phase, a.x, a.y, a.z, result.residual]],
    )
    return 0


def run_validation(tail_tol: float = 1e-12) -> dict:
    """Max deviations of the closed forms from the oracle over a fixed grid."""
    states = [p.to_qubit() for p in fibonacci_sphere(VALIDATE_STATES)]
    oracle_dev = completeness = reversibility = 0.0
    for alpha in VALIDATE_ALPHAS:
        field = CoherentField.from_modulus(alpha, tail_tol=tail_tol)
        for tau in VALIDATE_TAUS:
            params = EvolutionParams(tau)
            completeness = max(completeness, kraus_set(field, params).completeness_error())
            for q in states:
                closed = bloch_evolve(q, field, params).as_array()
                exact = oracle_evolve(q, field, params).atom.bloch().as_array()
                oracle_dev = max(oracle_dev, float(np.max(np.abs(closed - exact))))
            start = initial_joint_state(states[0], field)
            back = evolve_joint(evolve_joint(start, tau), -tau)
            reversibility = max(
                reversibility, float(np.max(np.abs(back.amplitudes - start.amplitudes)))
            )
    return {
        "oracle_max_dev": oracle_dev,
        "kraus_completeness_max": completeness,
        "reversibility_max": reversibility,
        "ok": (
            oracle_dev < ORACLE_TOL
            and completeness < COMPLETENESS_TOL
            and reversibility < REVERSIBILITY_TOL
        ),
    }


def cmd_validate(args: argparse.Namespace) -> int:
    report = run_validation(args.tail_tol)
    print(json.dumps(report, sort_keys=True))
    if not report["ok"]:
        _error_line("consistency_violation", "оракул и замкнутые формулы расходятся")
        return 3
    log.info("Проверка пройдена")
    return 0


COMMANDS = {
    "evolve": cmd_evolve,
    "aig-map": cmd_aig_map,
    "fig2-map": cmd_fig2_map,
    "ball-image": cmd_ball_image,
    "init-search": cmd_init_search,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    log.info(f"Команда: {args.command}")
    try:
        return COMMANDS[args.command](args)
    except JCReadoutError as e:
        log.error(f"{args.command}: {e}")
        _error_line(e.reason, str(e), **e.details)
        return 3
    except OSError as e:
        log.error(f"Ошибка записи: {e}")
        _error_line("io_error", str(e))
        return 3
    except ValueError as e:
        log.error(f"{args.command}: недопустимые параметры: {e}")
        _error_line("usage", str(e))
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
