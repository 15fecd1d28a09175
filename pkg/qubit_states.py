"""Qubit and coherent-field state containers shared by every simulation module.

Conventions used across the project:
  - basis order is (|g>, |e>); |g> is the +1 eigenstate of sigma_z, so the
    ground state sits at Bloch (0, 0, 1)
  - hbar = 1, the coupling g defaults to 1 and every time is the scaled tau = g*t
  - Fock sums are reduced in ascending n with exactly rounded summation
    (math.fsum), so results do not depend on scheduling or worker count
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
BALL_TOL = 1e-9
DEFAULT_TAIL_TOL = 1e-12


# ─── Ошибки ───────────────────────────────────────────────────────────────────


class JCReadoutError(Exception):
    """Base error; `reason` is a stable machine-readable code."""

    reason = "error"

    def __init__(self, message: str, *, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class TruncationError(JCReadoutError, RuntimeError):
    reason = "truncation_failure"


class NonPhysicalStateError(JCReadoutError, ValueError):
    reason = "non_physical_state"


class DegenerateAmplitudeError(JCReadoutError, ValueError):
    reason = "degenerate_amplitude"


class PhaseNotSupportedError(JCReadoutError, ValueError):
    reason = "use_oracle_path"


class OutcomeImpossibleError(JCReadoutError, ValueError):
    reason = "outcome_impossible"


class QuadratureError(JCReadoutError, RuntimeError):
    reason = "quadrature_non_convergence"


class ConsistencyError(JCReadoutError, RuntimeError):
    reason = "consistency_violation"


# ─── Суммирование по Фоку ─────────────────────────────────────────────────────


def fock_sum(terms, axis: int = 0):
    """Exactly rounded sum of `terms` along `axis` (ascending index order).

    Complex input is reduced per real/imaginary part. A 1-D input gives a
    Python scalar, anything else an ndarray with `axis` removed.
    """
    arr = np.asarray(terms)
    if np.iscomplexobj(arr):
        return fock_sum(arr.real, axis) + 1j * fock_sum(arr.imag, axis)
    moved = np.moveaxis(arr.astype(float, copy=False), axis, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    out = np.array([math.fsum(row) for row in flat]).reshape(moved.shape[:-1])
    if out.ndim == 0:
        return float(out)
    return out


# ─── Состояния кубита ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class PureQubit:
    c_g: complex
    c_e: complex

    def __post_init__(self):
        c_g, c_e = complex(self.c_g), complex(self.c_e)
        norm = abs(c_g) ** 2 + abs(c_e) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOL:
            raise NonPhysicalStateError(
                f"qubit not normalized: |c_g|^2+|c_e|^2 = {norm!r}",
                details={"norm": norm},
            )
        object.__setattr__(self, "c_g", c_g)
        object.__setattr__(self, "c_e", c_e)

    @classmethod
    def normalized(cls, c_g: complex, c_e: complex) -> "PureQubit":
        norm = math.sqrt(abs(c_g) ** 2 + abs(c_e) ** 2)
        if norm == 0.0:
            raise NonPhysicalStateError("zero vector cannot be normalized")
        return cls(complex(c_g) / norm, complex(c_e) / norm)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "PureQubit":
        return cls(math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.c_g, self.c_e], dtype=complex)

    @property
    def p_g(self) -> float:
        return abs(self.c_g) ** 2

    @property
    def p_e(self) -> float:
        return abs(self.c_e) ** 2

    @property
    def coherence(self) -> complex:
        """C_g * conj(C_e)."""
        return self.c_g * self.c_e.conjugate()


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, v) -> "BlochVector":
        x, y, z = (float(c) for c in np.asarray(v, dtype=float).reshape(3))
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def radius(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def polar_angle(self) -> float:
        r = self.radius
        if r == 0.0:
            return 0.0
        return math.acos(max(-1.0, min(1.0, self.z / r)))

    @property
    def azimuth(self) -> float:
        return math.atan2(self.y, self.x) % (2 * math.pi)

    def is_physical(self, tol: float = BALL_TOL) -> bool:
        return self.radius <= 1.0 + tol

    def distance(self, other: "BlochVector") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


@dataclass(frozen=True, eq=False)
class QubitDensity:
    """2x2 density matrix in the (|g>, |e>) basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex).reshape(2, 2)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, q: PureQubit) -> "QubitDensity":
        psi = q.amplitudes
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls) -> "QubitDensity":
        return cls(np.eye(2) / 2)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, tol: float = NORM_TOL) -> "QubitDensity":
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > tol:
            raise NonPhysicalStateError(f"matrix not Hermitian (dev={herm:.3e})")
        if abs(np.trace(m) - 1.0) > tol:
            raise NonPhysicalStateError(f"trace {np.trace(m)!r} != 1")
        low = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        if low < -tol:
            raise NonPhysicalStateError(f"negative eigenvalue {low:.3e}")
        return self

    def bloch(self) -> BlochVector:
        return bloch_from_density(self)


@dataclass(frozen=True)
class SpherePoint:
    """Bloch polar angle theta in [0, pi] and azimuth phi in [0, 2pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta)
        if not (0.0 <= theta <= math.pi) and not (
            math.isclose(theta, 0.0, abs_tol=1e-12) or math.isclose(theta, math.pi, abs_tol=1e-12)
        ):
            raise ValueError(f"theta out of [0, pi]: {theta!r}")
        object.__setattr__(self, "theta", min(max(theta, 0.0), math.pi))
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    def to_qubit(self) -> PureQubit:
        return PureQubit.from_angles(self.theta, self.phi)

    def to_bloch(self) -> BlochVector:
        st = math.sin(self.theta)
        return BlochVector(
            st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)
        )


def sphere_point_to_qubit(p: SpherePoint) -> PureQubit:
    """|psi> = cos(theta/2)|g> + exp(i phi) sin(theta/2)|e>."""
    return p.to_qubit()


# ─── Поле ─────────────────────────────────────────────────────────────────────


def hard_cap(modulus: float) -> int:
    return math.ceil(modulus * modulus + 12.0 * modulus + 40.0)


def poisson_weights(
    modulus: float, tail_tol: float = DEFAULT_TAIL_TOL, *, extra_levels: int = 0
) -> tuple[np.ndarray, int]:
    """Poisson weights P_n(modulus) up to the smallest certified cutoff.

    The recurrence P_{n+1} = P_n * a^2/(n+1) runs in log space so large
    amplitudes do not underflow P_0. The tail past n is bounded by
    P_{n+1} / (1 - a^2/(n+2)), valid once n+2 > a^2. `extra_levels` appends
    that many guard weights past the certified n_max.
    """
    if not math.isfinite(modulus) or modulus < 0:
        raise ValueError(f"modulus must be finite and >= 0, got {modulus!r}")
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must be in (0, 1), got {tail_tol!r}")

    if modulus == 0.0:
        weights = [1.0] + [0.0] * extra_levels
        return np.array(weights), 0

    mean = modulus * modulus
    log_mean = math.log(mean)
    cap = hard_cap(modulus)

    logs = [-mean]
    n = 0
    while True:
        log_next = logs[-1] + log_mean - math.log(n + 1)
        ratio = mean / (n + 2)
        if ratio < 1.0 and math.exp(log_next) / (1.0 - ratio) < tail_tol:
            break
        if n >= cap:
            raise TruncationError(
                f"Poisson tail above {tail_tol:g} at hard cap n={cap} (alpha={modulus:g})",
                details={"modulus": modulus, "cap": cap, "tail_tol": tail_tol},
            )
        logs.append(log_next)
        n += 1
    n_max = n
    for _ in range(extra_levels):
        logs.append(logs[-1] + log_mean - math.log(len(logs)))
    return np.exp(np.array(logs)), n_max


@dataclass(frozen=True, eq=False)
class CoherentField:
    modulus: float
    phase: float
    n_max: int
    tail_tol: float
    weights: np.ndarray = field(repr=False)

    @classmethod
    def from_modulus(
        cls, modulus: float, phase: float = 0.0, tail_tol: float = DEFAULT_TAIL_TOL
    ) -> "CoherentField":
        weights, n_max = poisson_weights(modulus, tail_tol)
        weights.setflags(write=False)
        return cls(float(modulus), float(phase) % (2 * math.pi), n_max, tail_tol, weights)

    @property
    def alpha(self) -> complex:
        return self.modulus * complex(math.cos(self.phase), math.sin(self.phase))

    @property
    def is_real(self) -> bool:
        return self.phase == 0.0

    def with_guard(self, levels: int) -> "CoherentField":
        """Same field with `levels` extra weights past the certified cutoff."""
        if levels <= 0:
            return self
        weights, n_max = poisson_weights(
            self.modulus, self.tail_tol, extra_levels=levels
        )
        weights.setflags(write=False)
        return CoherentField(
            self.modulus, self.phase, n_max + levels, self.tail_tol, weights
        )

    def amplitudes(self) -> np.ndarray:
        """<n|alpha> for n = 0..n_max."""
        n = np.arange(self.n_max + 1)
        return np.sqrt(self.weights) * np.exp(1j * self.phase * n)


@dataclass(frozen=True)
class EvolutionParams:
    tau: float
    g: float = 1.0

    def __post_init__(self):
        tau = float(self.tau)
        if not math.isfinite(tau) or tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau!r}")
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError(f"g must be > 0, got {self.g!r}")
        object.__setattr__(self, "tau", tau)

    @property
    def time(self) -> float:
        """Physical interaction time t = tau / g."""
        return self.tau / self.g


# ─── Преобразования ───────────────────────────────────────────────────────────


def bloch_from_pure(q: PureQubit) -> BlochVector:
    cross = q.coherence
    return BlochVector(2 * cross.real, -2 * cross.imag, q.p_g - q.p_e)


def density_from_bloch(v: BlochVector) -> QubitDensity:
    if not v.is_physical():
        raise NonPhysicalStateError(
            f"Bloch radius {v.radius:.12g} exceeds 1", details={"radius": v.radius}
        )
    m = 0.5 * np.array(
        [[1 + v.z, v.x - 1j * v.y], [v.x + 1j * v.y, 1 - v.z]], dtype=complex
    )
    return QubitDensity(m)


def bloch_from_density(rho: QubitDensity) -> BlochVector:
    m = rho.matrix
    return BlochVector(
        2 * m[1, 0].real, 2 * m[1, 0].imag, float((m[0, 0] - m[1, 1]).real)
    )


def purity(rho: QubitDensity) -> float:
    m = rho.matrix
    return float(np.trace(m @ m).real)


def rotate_z(v: BlochVector, angle: float) -> BlochVector:
    c, s = math.cos(angle), math.sin(angle)
    return BlochVector(c * v.x - s * v.y, s * v.x + c * v.y, v.z)


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
