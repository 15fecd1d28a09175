"""Analytic limits of the reduced atomic dynamics.

alpha -> 0: vacuum Rabi oscillations of the atom against an empty cavity.
alpha >> 1: each Fock sum sum_n P_n cos(omega(n) tau) is replaced by a
Gaussian envelope after linearising omega(n) around the mean photon number.
The envelopes are only meaningful for tau << 1/|beta|; nothing here gates on
that, callers probe validity themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from jc_dynamics import bloch_evolve
    from qubit_states import (
        BlochVector,
        CoherentField,
        EvolutionParams,
        PhaseNotSupportedError,
        PureQubit,
        QubitDensity,
        bloch_from_pure,
        fock_sum,
    )
except ModuleNotFoundError:
    from jc_readout.jc_dynamics import bloch_evolve  # type: ignore
    from jc_readout.qubit_states import (  # type: ignore
        BlochVector,
        CoherentField,
        EvolutionParams,
        PhaseNotSupportedError,
        PureQubit,
        QubitDensity,
        bloch_from_pure,
        fock_sum,
    )


def vacuum_limit_density(q: PureQubit, tau: float) -> QubitDensity:
    s2, c = math.sin(tau) ** 2, math.cos(tau)
    m = np.array(
        [
            [q.p_e * s2 + q.p_g, q.coherence * c],
            [q.coherence.conjugate() * c, q.p_e * c * c],
        ],
        dtype=complex,
    )
    return QubitDensity(m)


# ─── Линеаризация частот ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class FrequencyExpansion:
    """omega(n) ~ omega0 + beta (n - alpha^2)."""

    omega0: float
    beta: float
    family: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and math.isfinite(self.beta)):
            raise ValueError(f"non-finite expansion {self.omega0!r}, {self.beta!r}")

    @classmethod
    def rabi(cls, alpha: float) -> "FrequencyExpansion":
        """omega_n = 2 sqrt(n)."""
        return cls(2.0 * alpha, 1.0 / alpha, "rabi")

    @classmethod
    def fast(cls, alpha: float) -> "FrequencyExpansion":
        """omega_+ = sqrt(n+1) + sqrt(n), large-alpha values."""
        return cls(2.0 * alpha, 1.0 / alpha, "fast")

    @classmethod
    def slow(cls, alpha: float) -> "FrequencyExpansion":
        """omega_- = sqrt(n+1) - sqrt(n), large-alpha values."""
        return cls(1.0 / (2.0 * alpha), -1.0 / (4.0 * alpha**3), "slow")

    @classmethod
    def linearized(cls, omega, d_omega, alpha: float) -> "FrequencyExpansion":
        """First-order expansion of an arbitrary omega(n) at n = alpha^2."""
        mean = alpha * alpha
        return cls(float(omega(mean)), float(d_omega(mean)), "linearized")

    def frequency(self, n, alpha: float):
        return self.omega0 + self.beta * (np.asarray(n, dtype=float) - alpha * alpha)


def damped_cosine_sum(
    field: CoherentField, fx: FrequencyExpansion, tau: float
) -> float:
    """Gaussian-envelope estimate of sum_n P_n cos(omega(n) tau)."""
    alpha = field.modulus
    return math.cos(fx.omega0 * tau) * math.exp(
        -0.5 * fx.beta**2 * alpha**2 * tau**2
    )


def direct_cosine_sum(field: CoherentField, omega, tau: float) -> float:
    """sum_n P_n cos(omega(n) tau), the reference the envelope approximates."""
    n = np.arange(field.n_max + 1, dtype=float)
    return fock_sum(field.weights[: field.n_max + 1] * np.cos(omega(n) * tau))


# ─── Гауссово приближение ─────────────────────────────────────────────────────


def gaussian_bloch(q: PureQubit, alpha: float, tau: float) -> BlochVector:
    r0 = bloch_from_pure(q)
    omega = 2.0 * tau * alpha
    y_inf = math.cos(omega) * r0.y - math.sin(omega) * r0.z
    z_inf = math.sin(omega) * r0.y + math.cos(omega) * r0.z
    slow_env = math.exp(-(tau**2) / (32.0 * alpha**4))
    fast_env = math.exp(-(tau**2) / 2.0)
    half = tau / (2.0 * alpha)
    return BlochVector(
        r0.x * math.cos(half) * slow_env,
        y_inf * fast_env - math.sin(half) * slow_env,
        z_inf * fast_env,
    )


def intermediate_bloch_sums(
    q: PureQubit, field: CoherentField, tau: float
) -> BlochVector:
    """Exact Poisson sums of the summands left after sqrt(P_{n+-1}) ~ sqrt(P_n)."""
    if not field.is_real:
        raise PhaseNotSupportedError("intermediate sums assume real alpha")
    r0 = bloch_from_pure(q)
    p = field.weights[: field.n_max + 1]
    n = np.arange(field.n_max + 1, dtype=float)
    rn, rn1 = np.sqrt(n), np.sqrt(n + 1)
    w_n, w_plus, w_minus = 2.0 * rn, rn1 + rn, rn1 - rn
    x = fock_sum(p * r0.x * np.cos(tau * w_minus))
    y = fock_sum(
        p
        * (
            r0.y * np.cos(tau * w_plus)
            - r0.z * np.sin(tau * w_plus)
            - np.sin(tau * w_minus)
        )
    )
    z = fock_sum(p * (r0.y * np.sin(tau * w_n) + r0.z * np.cos(tau * w_n)))
    return BlochVector(x, y, z)


@dataclass(frozen=True)
class StagedRow:
    tau: float
    intermediate_deviation: float
    gaussian_deviation: float


def staged_deviation_table(
    q: PureQubit, alpha: float, tau_axis, *, tail_tol: float = 1e-12
) -> list[StagedRow]:
    """Max componentwise deviation of each approximation stage from the exact sums."""
    field = CoherentField.from_modulus(alpha, tail_tol=tail_tol)
    rows = []
    for tau in tau_axis:
        exact = bloch_evolve(q, field, EvolutionParams(float(tau))).as_array()
        mid = intermediate_bloch_sums(q, field, float(tau)).as_array()
        gauss = gaussian_bloch(q, alpha, float(tau)).as_array()
        rows.append(
            StagedRow(
                float(tau),
                float(np.max(np.abs(mid - exact))),
                float(np.max(np.abs(gauss - exact))),
            )
        )
    return rows


# ─── Аттракторы ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class AttractorSpec:
    k: int
    alpha: float
    big_omega: float

    @classmethod
    def at(cls, k: int, alpha: float) -> "AttractorSpec":
        tau = attractor_time(k, alpha)
        return cls(k, alpha, 2.0 * tau * alpha)

    @property
    def tau(self) -> float:
        return attractor_time(self.k, self.alpha)


def attractor_time(k: int, alpha: float) -> float:
    if k < 1:
        raise ValueError(f"attractor index must be >= 1, got {k}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return (2 * k - 1) * math.pi * alpha


def attractor_bloch(k: int) -> BlochVector:
    """alpha -> infinity limit at the k-th attractor time.

    The sign follows the exact dynamics (y -> -sin(tau/2alpha)), i.e. (-1)^k.
    """
    if k < 1:
        raise ValueError(f"attractor index must be >= 1, got {k}")
    return BlochVector(0.0, float((-1) ** k), 0.0)
