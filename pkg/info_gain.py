"""Bayesian retrodiction of the initial qubit from a photon count.

The initial state is |psi(theta, phi)> = cos(theta/2)|g> + exp(i phi) sin(theta/2)|e>
with a uniform prior of 1/(4 pi) per steradian. Likelihoods come straight
from the Kraus effects, P(n|theta, phi) = <psi|K_n^dagger K_n|psi>; in terms
of the f-weights that is

    P_n [cos^2(theta/2) f1 + sin^2(theta/2) f2 - sin(theta) sin(phi) f3].

Entropies are differential entropies over solid angle in bits.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

try:
    from jc_dynamics import (
        KrausSet,
        bloch_affine_map,
        field_channel,
        kraus_set,
        oracle_kraus_set,
    )
    from qubit_states import (
        CoherentField,
        DegenerateAmplitudeError,
        EvolutionParams,
        JCReadoutError,
        OutcomeImpossibleError,
        PhaseNotSupportedError,
        QuadratureError,
        SpherePoint,
        fock_sum,
    )
except ModuleNotFoundError:
    from jc_readout.jc_dynamics import (  # type: ignore
        KrausSet,
        bloch_affine_map,
        field_channel,
        kraus_set,
        oracle_kraus_set,
    )
    from jc_readout.qubit_states import (  # type: ignore
        CoherentField,
        DegenerateAmplitudeError,
        EvolutionParams,
        JCReadoutError,
        OutcomeImpossibleError,
        PhaseNotSupportedError,
        QuadratureError,
        SpherePoint,
        fock_sum,
    )

log = logging.getLogger("jc_readout")

FOUR_PI = 4.0 * math.pi
# Mutual information of a projective qubit measurement under the uniform prior.
DIRECT_MEASUREMENT_AIG = 1.0 - 1.0 / (2.0 * math.log(2.0))
OUTCOME_GUARD_LEVELS = 2
CONVERGENCE_TOL = 1e-6


# ─── Квадратура на сфере ──────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class SphereGrid:
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # steradians
    degree: int
    shape: tuple[int, int] = (0, 0)

    @property
    def nodes(self) -> list[SpherePoint]:
        return [SpherePoint(t, p) for t, p in zip(self.theta, self.phi)]

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def doubled(self) -> "SphereGrid":
        n_theta, n_phi = self.shape
        return sphere_grid(2 * n_theta, 2 * n_phi)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integral over the sphere along the last axis."""
        return np.asarray(values) @ self.weights


def sphere_grid(n_theta: int = 64, n_phi: int = 64) -> SphereGrid:
    """Gauss-Legendre in cos(theta) times the periodic rectangle rule in phi."""
    if n_theta < 1 or n_phi < 1:
        raise ValueError(f"grid sizes must be >= 1, got {n_theta}x{n_phi}")
    u, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(u)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    weights = np.outer(w, np.full(n_phi, 2.0 * math.pi / n_phi))
    return SphereGrid(
        tt.reshape(-1),
        pp.reshape(-1),
        weights.reshape(-1),
        min(2 * n_theta - 1, n_phi - 1),
        (n_theta, n_phi),
    )


def fibonacci_sphere(n: int) -> list[SpherePoint]:
    """Deterministic near-uniform sample of n points."""
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    golden = math.pi * (3.0 - math.sqrt(5.0))
    points = []
    for i in range(n):
        z = 1.0 - (2 * i + 1) / n
        points.append(SpherePoint(math.acos(z), (i * golden) % (2 * math.pi)))
    return points


def _qubit_columns(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    psi = np.empty((theta.size, 2), dtype=complex)
    psi[:, 0] = np.cos(theta / 2)
    psi[:, 1] = np.exp(1j * phi) * np.sin(theta / 2)
    return psi


# ─── Правдоподобия ────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class ConditionalWeights:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def conditional_weights(
    n, field: CoherentField, params: EvolutionParams
) -> ConditionalWeights:
    """f1, f2, f3 for outcome(s) n; n=None gives every n up to the cutoff."""
    alpha = field.modulus
    if alpha <= 0.0:
        raise DegenerateAmplitudeError("conditional weights need alpha > 0")
    if n is None:
        n = np.arange(field.n_max + 1)
    n = np.asarray(n, dtype=float)
    tau = params.tau
    rn, rn1 = np.sqrt(n), np.sqrt(n + 1)
    f1 = np.cos(tau * rn) ** 2 + alpha**2 / (n + 1) * np.sin(tau * rn1) ** 2
    f2 = np.cos(tau * rn1) ** 2 + n / alpha**2 * np.sin(tau * rn) ** 2
    f3 = 0.5 * (alpha / rn1 * np.sin(2 * tau * rn1) - rn / alpha * np.sin(2 * tau * rn))
    return ConditionalWeights(f1, f2, f3)


def outcome_channel(field: CoherentField, params: EvolutionParams) -> KrausSet:
    """Kraus set over the certified cutoff plus the outcome guard levels."""
    if field.is_real and field.modulus > 0.0:
        return kraus_set(field.with_guard(OUTCOME_GUARD_LEVELS), params)
    # the oracle already carries the same two guard levels
    return oracle_kraus_set(field, params)


def likelihoods(ks: KrausSet, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """P(n | theta, phi) as an (outcomes, points) array."""
    psi = _qubit_columns(np.asarray(theta, float), np.asarray(phi, float))
    vals = np.einsum("gi,nij,gj->ng", psi.conj(), ks.effects(), psi).real
    return np.clip(vals, 0.0, None)


def conditional_prob(
    n: int, field: CoherentField, params: EvolutionParams, p: SpherePoint
) -> float:
    if not field.is_real:
        raise PhaseNotSupportedError("conditional_prob assumes real alpha")
    ks = field_channel(field, params)
    if not 0 <= n <= ks.n_max:
        raise IndexError(f"outcome {n} outside 0..{ks.n_max}")
    k = ks.operators[n]
    psi = p.to_qubit().amplitudes
    return float(np.clip(np.real(np.vdot(k @ psi, k @ psi)), 0.0, 1.0))


def outcome_prob(n, field: CoherentField, params: EvolutionParams):
    """P(n) under the uniform prior: P_n (f1 + f2)/2 (the f3 term averages out)."""
    w = conditional_weights(n, field, params)
    if n is None:
        weights = field.weights[: field.n_max + 1]
    else:
        weights = field.with_guard(OUTCOME_GUARD_LEVELS).weights[np.asarray(n)]
    out = weights * 0.5 * (w.f1 + w.f2)
    return float(out) if np.ndim(out) == 0 else out


def outcome_prob_quadrature(
    n: int, field: CoherentField, params: EvolutionParams, grid: SphereGrid
) -> float:
    ks = outcome_channel(field, params)
    lik = likelihoods(ks, grid.theta, grid.phi)[n]
    return float(grid.integrate(lik)) / FOUR_PI


def posterior(
    n: int, field: CoherentField, params: EvolutionParams, grid: SphereGrid
) -> np.ndarray:
    """Posterior density per steradian at each grid node."""
    ks = outcome_channel(field, params)
    if not 0 <= n <= ks.n_max:
        raise IndexError(f"outcome {n} outside 0..{ks.n_max}")
    lik = likelihoods(ks, grid.theta, grid.phi)[n]
    p_n = float(grid.integrate(lik)) / FOUR_PI
    if p_n < 1e-300:
        raise OutcomeImpossibleError(
            f"outcome n={n} has probability {p_n:.3e}", details={"n": n, "p": p_n}
        )
    return lik / (FOUR_PI * p_n)


# ─── Информация ───────────────────────────────────────────────────────────────


def _entropy_terms(lik: np.ndarray, grid: SphereGrid):
    p_n = grid.integrate(lik) / FOUR_PI
    prior = 1.0 / FOUR_PI
    prior_term = -float(grid.integrate(np.full(grid.size, xlogy(prior, prior))))
    post = np.zeros_like(lik)
    live = p_n > 0.0
    post[live] = lik[live] / (FOUR_PI * p_n[live, None])
    neg_entropy = grid.integrate(xlogy(post, post))
    return p_n, prior_term, neg_entropy


def average_information_gain(
    field: CoherentField,
    params: EvolutionParams,
    grid: SphereGrid,
    *,
    check_convergence: bool = False,
    convergence_tol: float = CONVERGENCE_TOL,
) -> float:
    """Prior entropy minus the expected posterior entropy, in bits."""
    ks = outcome_channel(field, params)
    lik = likelihoods(ks, grid.theta, grid.phi)
    p_n, prior_term, neg_entropy = _entropy_terms(lik, grid)
    value = (prior_term + fock_sum(p_n * neg_entropy)) / math.log(2.0)

    if check_convergence:
        fine = average_information_gain(field, params, grid.doubled())
        shift = abs(fine - value)
        log.debug(
            f"I_avg convergence: alpha={field.modulus:g} tau={params.tau:g} "
            f"shift={shift:.3e}"
        )
        if shift > convergence_tol:
            raise QuadratureError(
                f"doubling the grid moved I_avg by {shift:.3e} (> {convergence_tol:g})",
                details={"coarse": value, "fine": fine, "shift": shift},
            )
    return value


def mutual_information(
    field: CoherentField, params: EvolutionParams, grid: SphereGrid
) -> float:
    """sum_n int P(n|.)/(4 pi) log2[P(n|.)/P(n)]."""
    ks = outcome_channel(field, params)
    lik = likelihoods(ks, grid.theta, grid.phi)
    p_n = grid.integrate(lik) / FOUR_PI
    live = p_n > 0.0
    ratio = np.ones_like(lik)
    ratio[live] = lik[live] / p_n[live, None]
    per_outcome = grid.integrate(xlogy(lik, ratio)) / FOUR_PI
    return fock_sum(per_outcome) / math.log(2.0)


def _axial_term(a: float, b: float) -> float:
    # (1/2) int_{-1}^{1} (a + b u) ln((a + b u)/a) du, in nats
    if a <= 0.0:
        return 0.0
    k = min(b / a, 1.0)
    if k < 1e-3:
        # even terms of (1+v) ln(1+v) integrated over [-k, k]
        return a * sum(k**j / ((j + 1) * j * (j - 1)) for j in (2, 4, 6, 8))

    def antiderivative(t: float) -> float:
        return 0.5 * t * xlogy(t, t) - 0.25 * t * t

    return a / (2.0 * k) * (antiderivative(1.0 + k) - antiderivative(1.0 - k))


def average_information_gain_axial(
    field: CoherentField, params: EvolutionParams
) -> float:
    """Quadrature-free I_avg.

    P(n | r) = a_n + b_n . r is affine in the initial Bloch direction r, so
    every sphere integral collapses to 2 pi int_{-1}^{1} F(a_n + |b_n| u) du.
    """
    effects = outcome_channel(field, params).effects()
    a = 0.5 * np.trace(effects, axis1=1, axis2=2).real
    b = 0.5 * np.stack(
        [
            2.0 * effects[:, 0, 1].real,
            -2.0 * effects[:, 0, 1].imag,
            (effects[:, 0, 0] - effects[:, 1, 1]).real,
        ],
        axis=1,
    )
    lengths = np.linalg.norm(b, axis=1)
    terms = [_axial_term(float(ai), float(bi)) for ai, bi in zip(a, lengths)]
    return fock_sum(terms) / math.log(2.0)


def average_bloch_vector(
    field: CoherentField, params: EvolutionParams, grid: SphereGrid | None = None
) -> np.ndarray:
    """<r(tau)> over the uniform sphere of initial states.

    Without a grid the symmetry shortcut is used: the linear part of the
    channel averages to zero and only the offset survives.
    """
    if not field.is_real:
        raise PhaseNotSupportedError("average state radius assumes real alpha")
    a, c = bloch_affine_map(field, params)
    if grid is None:
        return c
    st = np.sin(grid.theta)
    r0 = np.stack([st * np.cos(grid.phi), st * np.sin(grid.phi), np.cos(grid.theta)])
    images = a @ r0 + c[:, None]
    return grid.integrate(images) / FOUR_PI


def average_state_radius(
    field: CoherentField, params: EvolutionParams, grid: SphereGrid | None = None
) -> float:
    return float(np.linalg.norm(average_bloch_vector(field, params, grid)))


# ─── Поверхности ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class PointFailure:
    tau: float
    alpha: float
    reason: str
    message: str


@dataclass(eq=False)
class AIGMap:
    tau_axis: np.ndarray
    alpha_axis: np.ndarray
    values: np.ndarray  # (len(tau_axis), len(alpha_axis))
    layers: dict[str, np.ndarray] = field(default_factory=dict)
    failures: list[PointFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def rows(self):
        for i, tau in enumerate(self.tau_axis):
            for j, alpha in enumerate(self.alpha_axis):
                yield i, j, float(tau), float(alpha)


def _check_axis(axis, name: str) -> np.ndarray:
    arr = np.asarray(axis, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


def _surface(point_fn, tau_axis, alpha_axis, n_layers: int, workers: int | None):
    taus = _check_axis(tau_axis, "tau_axis")
    alphas = _check_axis(alpha_axis, "alpha_axis")
    points = [(float(t), float(a)) for t in taus for a in alphas]

    def job(point):
        tau, alpha = point
        try:
            return point_fn(tau, alpha), None
        except (JCReadoutError, ValueError, FloatingPointError) as e:
            reason = getattr(e, "reason", "numeric_failure")
            return (math.nan,) * n_layers, PointFailure(tau, alpha, reason, str(e))

    max_workers = workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        results = list(executor.map(job, points))

    stacked = np.array([r[0] for r in results], dtype=float).reshape(
        taus.size, alphas.size, n_layers
    )
    failures = [r[1] for r in results if r[1] is not None]
    for f in failures:
        log.warning(f"point (tau={f.tau:g}, alpha={f.alpha:g}) failed: {f.reason}")
    return taus, alphas, stacked, failures


def aig_surface(
    tau_axis,
    alpha_axis,
    grid: SphereGrid,
    *,
    tail_tol: float = 1e-12,
    workers: int | None = None,
) -> AIGMap:
    def point(tau: float, alpha: float):
        f = CoherentField.from_modulus(alpha, tail_tol=tail_tol)
        return (average_information_gain(f, EvolutionParams(tau), grid),)

    taus, alphas, stacked, failures = _surface(point, tau_axis, alpha_axis, 1, workers)
    values = stacked[..., 0]
    return AIGMap(taus, alphas, values, {"i_avg": values}, failures)


def aig_minus_rsq_surface(
    tau_axis,
    alpha_axis,
    grid: SphereGrid,
    *,
    tail_tol: float = 1e-12,
    workers: int | None = None,
) -> AIGMap:
    """I_avg - I_max <r>^2 with I_max the direct-measurement value."""

    def point(tau: float, alpha: float):
        f = CoherentField.from_modulus(alpha, tail_tol=tail_tol)
        params = EvolutionParams(tau)
        i_avg = average_information_gain(f, params, grid)
        r_sq = average_state_radius(f, params) ** 2
        return i_avg, r_sq, i_avg - DIRECT_MEASUREMENT_AIG * r_sq

    taus, alphas, stacked, failures = _surface(point, tau_axis, alpha_axis, 3, workers)
    layers = {
        "i_avg": stacked[..., 0],
        "r_avg_sq": stacked[..., 1],
        "diff": stacked[..., 2],
    }
    return AIGMap(taus, alphas, stacked[..., 2], layers, failures)
