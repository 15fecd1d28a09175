"""Qubit initialization by repeated coupling to fresh coherent fields.

Each iteration sends the atom through the same single-field channel
rho -> sum_n K_n rho K_n^dagger with a new field in |alpha>, so N iterations
are plain sequential composition. At tau = (k - 1/2) pi and alpha <= 1 the
image of the whole Bloch sphere shrinks onto a nearly pure state whose
polar angle is set by alpha and whose meridian is set by the field phase.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import pdist

try:
    from info_gain import SphereGrid, fibonacci_sphere
    from jc_dynamics import (
        KrausSet,
        apply_channel,
        channel_affine_map,
        field_channel,
    )
    from qubit_states import (
        BALL_TOL,
        DEFAULT_TAIL_TOL,
        BlochVector,
        CoherentField,
        ConsistencyError,
        EvolutionParams,
        QubitDensity,
        SpherePoint,
        density_from_bloch,
        rotate_z,
        rotation_z,
    )
except ModuleNotFoundError:
    from jc_readout.info_gain import SphereGrid, fibonacci_sphere  # type: ignore
    from jc_readout.jc_dynamics import (  # type: ignore
        KrausSet,
        apply_channel,
        channel_affine_map,
        field_channel,
    )
    from jc_readout.qubit_states import (  # type: ignore
        BALL_TOL,
        DEFAULT_TAIL_TOL,
        BlochVector,
        CoherentField,
        ConsistencyError,
        EvolutionParams,
        QubitDensity,
        SpherePoint,
        density_from_bloch,
        rotate_z,
        rotation_z,
    )

log = logging.getLogger("jc_readout")

BALL_SAMPLE_POINTS = 500
ESTIMATE_SAMPLE_POINTS = 200
ROTATION_TOL = 1e-7
SEARCH_RESIDUAL_LIMIT = 0.25  # rad


def initialization_time(k: int) -> float:
    """tau = (k - 1/2) pi."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (k - 0.5) * math.pi


@dataclass(frozen=True)
class IterationPlan:
    tau: float
    alpha_modulus: float
    field_phase: float = 0.0
    n_iterations: int = 1

    def __post_init__(self):
        for name in ("tau", "alpha_modulus", "field_phase"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.tau < 0 or self.alpha_modulus < 0:
            raise ValueError(
                f"tau and alpha must be >= 0, got {self.tau!r}, {self.alpha_modulus!r}"
            )
        if int(self.n_iterations) != self.n_iterations or self.n_iterations < 0:
            raise ValueError(f"n_iterations must be an integer >= 0, got {self.n_iterations!r}")

    @classmethod
    def at_attractor(
        cls, k: int, alpha: float, field_phase: float = 0.0, n_iterations: int = 1
    ) -> "IterationPlan":
        return cls(initialization_time(k), alpha, field_phase, n_iterations)

    def with_phase(self, phase: float) -> "IterationPlan":
        return IterationPlan(self.tau, self.alpha_modulus, phase, self.n_iterations)

    def with_iterations(self, n: int) -> "IterationPlan":
        return IterationPlan(self.tau, self.alpha_modulus, self.field_phase, n)

    def coherent_field(self, tail_tol: float = DEFAULT_TAIL_TOL) -> CoherentField:
        return CoherentField.from_modulus(self.alpha_modulus, self.field_phase, tail_tol)

    def channel(self, tail_tol: float = DEFAULT_TAIL_TOL) -> KrausSet:
        """Closed-form Kraus set at phase 0, oracle-built otherwise."""
        return field_channel(self.coherent_field(tail_tol), EvolutionParams(self.tau))


def iterate_channel(
    rho0: QubitDensity,
    plan: IterationPlan,
    *,
    channel: KrausSet | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> list[QubitDensity]:
    """States after 0..N iterations; element 0 is rho0 itself."""
    ks = channel if channel is not None else plan.channel(tail_tol)
    states = [rho0]
    for _ in range(plan.n_iterations):
        states.append(apply_channel(states[-1], ks))
    return states


# ─── Образ сферы Блоха ────────────────────────────────────────────────────────


@dataclass(eq=False)
class BallImage:
    initial_points: list[SpherePoint]
    final_blochs: list[BlochVector]
    params: IterationPlan
    history: list[list[BlochVector]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self.initial_points) != len(self.final_blochs):
            raise ValueError(
                f"{len(self.initial_points)} initial points vs {len(self.final_blochs)} images"
            )
        outside = [v.radius for v in self.final_blochs if not v.is_physical(BALL_TOL)]
        if outside:
            raise ConsistencyError(
                f"{len(outside)} images left the Bloch ball (max r={max(outside):.12g})",
                details={"max_radius": max(outside)},
            )

    def blochs_at(self, iteration: int | None = None) -> np.ndarray:
        """(points, 3) array after `iteration` steps (default: the last)."""
        if iteration is None or not self.history:
            return np.array([v.as_array() for v in self.final_blochs]).reshape(-1, 3)
        return np.array([h[iteration].as_array() for h in self.history]).reshape(-1, 3)

    def centroid(self, iteration: int | None = None) -> BlochVector:
        return BlochVector.from_array(self.blochs_at(iteration).mean(axis=0))

    def diameter(self, iteration: int | None = None) -> float:
        pts = self.blochs_at(iteration)
        if len(pts) < 2:
            return 0.0
        return float(pdist(pts).max())

    def min_purity(self, iteration: int | None = None) -> float:
        r2 = np.sum(self.blochs_at(iteration) ** 2, axis=1)
        return float(np.min((1.0 + r2) / 2.0))

    def projections(self, iteration: int | None = None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        pts = self.blochs_at(iteration)
        return {
            "x=0": (pts[:, 1], pts[:, 2]),
            "y=0": (pts[:, 0], pts[:, 2]),
            "z=0": (pts[:, 0], pts[:, 1]),
        }


def ball_projections(image: BallImage, iteration: int | None = None):
    return image.projections(iteration)


def _sample_points(sampling, n_points: int) -> list[SpherePoint]:
    if sampling is None:
        return fibonacci_sphere(n_points)
    if isinstance(sampling, SphereGrid):
        return sampling.nodes
    return list(sampling)


def ball_image(
    plan: IterationPlan,
    sampling=None,
    *,
    n_points: int = BALL_SAMPLE_POINTS,
    workers: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> BallImage:
    """Push every sampled pure state through N iterations of the plan's channel."""
    points = _sample_points(sampling, n_points)
    ks = plan.channel(tail_tol)

    def trace(p: SpherePoint) -> list[BlochVector]:
        rho0 = QubitDensity.from_pure(p.to_qubit())
        return [rho.bloch() for rho in iterate_channel(rho0, plan, channel=ks)]

    max_workers = workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        history = list(executor.map(trace, points))

    log.debug(
        f"ball image: tau={plan.tau:g} alpha={plan.alpha_modulus:g} "
        f"phase={plan.field_phase:g} N={plan.n_iterations} points={len(points)}"
    )
    return BallImage(points, [h[-1] for h in history], plan, history)


def fixed_state_estimate(
    plan: IterationPlan,
    sampling=None,
    *,
    n_points: int = ESTIMATE_SAMPLE_POINTS,
    workers: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> tuple[BlochVector, float, float]:
    """(centroid, dispersion, min purity) of the final cloud.

    Dispersion is the cloud diameter, so an untouched sphere reports ~2.
    """
    image = ball_image(plan, sampling, n_points=n_points, workers=workers, tail_tol=tail_tol)
    return image.centroid(), image.diameter(), image.min_purity()


def channel_fixed_point(
    plan: IterationPlan, *, tail_tol: float = DEFAULT_TAIL_TOL
) -> BlochVector:
    """Limit of infinitely many iterations: r* = (I - A)^-1 c, rotated by the phase."""
    a, c = channel_affine_map(plan.with_phase(0.0).channel(tail_tol))
    try:
        r_star = np.linalg.solve(np.eye(3) - a, c)
    except np.linalg.LinAlgError as e:
        raise ValueError(
            f"channel at tau={plan.tau:g}, alpha={plan.alpha_modulus:g} has no unique fixed point"
        ) from e
    return BlochVector.from_array(rotation_z(plan.field_phase) @ r_star)


# ─── Проверка поворота меридиана ──────────────────────────────────────────────


@dataclass(frozen=True)
class RotationReport:
    ok: bool
    reason: str
    phase: float
    max_deviation: float
    n_points: int


def meridian_rotation_check(
    plan: IterationPlan,
    sampling=None,
    *,
    n_points: int = 50,
    tol: float = ROTATION_TOL,
    strict: bool = False,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> RotationReport:
    """Phase-phi channel against R_z(phi) . F^N . R_z(-phi) built from the phase-0 channel.

    The phased side runs on oracle-built Kraus operators, the reference on the
    affine map of the phase-0 channel.
    """
    points = _sample_points(sampling, n_points)
    phase = plan.field_phase
    phased = plan.channel(tail_tol)
    a, c = channel_affine_map(plan.with_phase(0.0).channel(tail_tol))

    worst = 0.0
    for p in points:
        r0 = p.to_bloch()
        direct = iterate_channel(density_from_bloch(r0), plan, channel=phased)[-1].bloch()
        s = rotate_z(r0, -phase).as_array()
        for _ in range(plan.n_iterations):
            s = a @ s + c
        expected = rotate_z(BlochVector.from_array(s), phase)
        worst = max(worst, direct.distance(expected))

    ok = worst <= tol
    if not ok:
        log.warning(f"meridian rotation check failed: phase={phase:g} max_dev={worst:.3e}")
        if strict:
            raise ConsistencyError(
                f"phase-rotated channel deviates by {worst:.3e} (> {tol:g})",
                details={"phase": phase, "max_deviation": worst},
            )
    return RotationReport(ok, "ok" if ok else "consistency_violation", phase, worst, len(points))


# ─── Поиск параметров ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class InitSearchResult:
    ok: bool
    reason: str
    alpha: float
    phase: float
    achieved: BlochVector | None
    residual: float
    scan: list[tuple[float, float]] = field(default_factory=list)  # (alpha, polar angle)


def _angle_between(v: BlochVector, target: SpherePoint) -> float:
    r = v.radius
    if r == 0.0:
        return math.pi
    cos = float(np.dot(v.as_array() / r, target.to_bloch().as_array()))
    return math.acos(max(-1.0, min(1.0, cos)))


def find_initialization_params(
    target: SpherePoint,
    k: int = 3,
    n_iterations: int = 3,
    alpha_range: tuple[float, float] = (0.01, 1.0),
    *,
    n_scan: int = 12,
    n_points: int = ESTIMATE_SAMPLE_POINTS,
    workers: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> InitSearchResult:
    """Pick alpha so the fixed-state polar angle hits target.theta, then the
    field phase that moves it onto target.phi."""
    if target.theta > math.pi / 2 + 1e-12:
        raise ValueError(f"target must lie on the ground hemisphere, theta={target.theta:g}")
    lo, hi = alpha_range
    if not 0.0 < lo < hi:
        raise ValueError(f"bad alpha range {alpha_range!r}")

    samples = fibonacci_sphere(n_points)

    def centroid(alpha: float, phase: float = 0.0) -> BlochVector:
        plan = IterationPlan.at_attractor(k, alpha, phase, n_iterations)
        return ball_image(plan, samples, workers=workers, tail_tol=tail_tol).centroid()

    alphas = np.linspace(lo, hi, n_scan)
    polar = [centroid(float(a)).polar_angle for a in alphas]
    scan = [(float(a), float(t)) for a, t in zip(alphas, polar)]
    steps = np.diff(polar)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        log.warning(f"centroid polar angle not monotone in alpha over {alpha_range}")

    best = int(np.argmin([abs(t - target.theta) for t in polar]))
    bracket = (float(alphas[max(best - 1, 0)]), float(alphas[min(best + 1, n_scan - 1)]))
    if bracket[0] < bracket[1]:
        found = minimize_scalar(
            lambda a: abs(centroid(a).polar_angle - target.theta),
            bounds=bracket,
            method="bounded",
            options={"xatol": 1e-4},
        )
        alpha = float(found.x)
    else:
        alpha = float(alphas[best])
    log.debug(f"init search: target theta={target.theta:g} -> alpha={alpha:.6g}")

    phase = (target.phi - centroid(alpha).azimuth) % (2 * math.pi)
    achieved = centroid(alpha, phase)
    residual = _angle_between(achieved, target)
    if residual > SEARCH_RESIDUAL_LIMIT:
        log.warning(
            f"init search: target (theta={target.theta:g}, phi={target.phi:g}) "
            f"not reached, residual={residual:.3f} rad"
        )
        return InitSearchResult(False, "bracket_failed", alpha, phase, achieved, residual, scan)
    return InitSearchResult(True, "ok", alpha, phase, achieved, residual, scan)
