"""Exact resonant Jaynes-Cummings dynamics of a qubit coupled to |alpha>.

Two independent paths:
  - closed form: the Bloch sums of the reduced atom and the photon-number
    Kraus operators K_n = <n|U|alpha> (real alpha > 0 only)
  - oracle: the truncated joint state |psi>|alpha> evolved under
    H = sigma_+ a + sigma_- a^dagger, either by the exact 2x2 rotations of
    each excitation sector {|g,m>, |e,m-1>} or, behind `dense=True`, by a full
    eigendecomposition of the truncated Hamiltonian.

The oracle is ground truth for everything else in the package.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

try:
    from qubit_states import (
        BlochVector,
        CoherentField,
        ConsistencyError,
        DegenerateAmplitudeError,
        EvolutionParams,
        OutcomeImpossibleError,
        PhaseNotSupportedError,
        PureQubit,
        QubitDensity,
        TruncationError,
        bloch_from_pure,
        fock_sum,
    )
except ModuleNotFoundError:
    from jc_readout.qubit_states import (  # type: ignore
        BlochVector,
        CoherentField,
        ConsistencyError,
        DegenerateAmplitudeError,
        EvolutionParams,
        OutcomeImpossibleError,
        PhaseNotSupportedError,
        PureQubit,
        QubitDensity,
        TruncationError,
        bloch_from_pure,
        fock_sum,
    )

log = logging.getLogger("jc_readout")

JOINT_GUARD_LEVELS = 2
JOINT_NORM_TOL = 1e-10
MIN_OUTCOME_PROB = 1e-300

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _require_real_alpha(field: CoherentField, what: str) -> None:
    if not field.is_real:
        raise PhaseNotSupportedError(
            f"{what} assumes real alpha; phase={field.phase:.6g} needs the oracle path",
            details={"phase": field.phase},
        )


def _safe_ratio(num: np.ndarray, den: float) -> np.ndarray:
    # n = 0 entries of sqrt(n)-weighted terms are exactly zero
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=num != 0)
    return out


# ─── Замкнутая форма ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class BlochSums:
    """The Fock sums the reduced Bloch vector is assembled from."""

    sx: float  # sum P [c c + sqrt(n/(n+1)) s s]
    sy: float  # sum P [c c - sqrt(n/(n+1)) s s]
    yg: float  # sum P alpha/sqrt(n+1) cos(tau sqrt n) sin(tau sqrt(n+1))
    ye: float  # sum P sqrt(n)/alpha cos(tau sqrt(n+1)) sin(tau sqrt n)
    zg: float  # sum P cos(2 tau sqrt n)
    ze: float  # sum P cos(2 tau sqrt(n+1))
    zy: float  # sum P sqrt(n)/alpha sin(2 tau sqrt n)


def bloch_sums(field: CoherentField, tau: float) -> BlochSums:
    _require_real_alpha(field, "closed-form Bloch sums")
    alpha = field.modulus
    p = np.asarray(field.weights[: field.n_max + 1])
    n = np.arange(field.n_max + 1, dtype=float)
    rn, rn1 = np.sqrt(n), np.sqrt(n + 1)
    ca, sa = np.cos(tau * rn), np.sin(tau * rn)
    cb, sb = np.cos(tau * rn1), np.sin(tau * rn1)
    ratio = rn / rn1
    g_amp = alpha / rn1
    e_amp = _safe_ratio(rn, alpha)
    return BlochSums(
        sx=fock_sum(p * (ca * cb + ratio * sa * sb)),
        sy=fock_sum(p * (ca * cb - ratio * sa * sb)),
        yg=fock_sum(p * g_amp * ca * sb),
        ye=fock_sum(p * e_amp * cb * sa),
        zg=fock_sum(p * np.cos(2 * tau * rn)),
        ze=fock_sum(p * np.cos(2 * tau * rn1)),
        zy=fock_sum(p * e_amp * np.sin(2 * tau * rn)),
    )


def bloch_evolve(
    q: PureQubit, field: CoherentField, params: EvolutionParams
) -> BlochVector:
    """Reduced atomic Bloch vector after time tau (real alpha)."""
    s = bloch_sums(field, params.tau)
    r0 = bloch_from_pure(q)
    x = r0.x * s.sx
    y = r0.y * s.sy - 2.0 * (q.p_g * s.yg - q.p_e * s.ye)
    z = q.p_g * s.zg - q.p_e * s.ze + r0.y * s.zy
    return BlochVector(x, y, z)


def bloch_trajectory(
    q: PureQubit, field: CoherentField, tau_axis
) -> list[BlochVector]:
    return [bloch_evolve(q, field, EvolutionParams(t)) for t in tau_axis]


def bloch_affine_map(
    field: CoherentField, params: EvolutionParams
) -> tuple[np.ndarray, np.ndarray]:
    """The real-alpha channel as r -> A r + c on Bloch vectors."""
    s = bloch_sums(field, params.tau)
    a = np.array(
        [
            [s.sx, 0.0, 0.0],
            [0.0, s.sy, -(s.yg + s.ye)],
            [0.0, s.zy, 0.5 * (s.zg + s.ze)],
        ]
    )
    c = np.array([0.0, -(s.yg - s.ye), 0.5 * (s.zg - s.ze)])
    return a, c


# ─── Операторы Крауса ─────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class KrausSet:
    alpha_modulus: float
    tau: float
    operators: np.ndarray  # (n_max + 1, 2, 2)
    n_max: int
    tail_tol: float
    phase: float = 0.0

    def __len__(self) -> int:
        return self.n_max + 1

    def __getitem__(self, n: int) -> np.ndarray:
        return self.operators[n]

    def effects(self) -> np.ndarray:
        """K_n^dagger K_n for every n."""
        k = self.operators
        return np.einsum("nji,njk->nik", k.conj(), k)

    def completeness_error(self) -> float:
        total = fock_sum(self.effects(), axis=0)
        return float(np.max(np.abs(total - np.eye(2))))


def kraus_set(field: CoherentField, params: EvolutionParams) -> KrausSet:
    _require_real_alpha(field, "kraus_set")
    alpha = field.modulus
    if alpha == 0.0:
        raise DegenerateAmplitudeError(
            "kraus_set needs alpha > 0 (sqrt(n)/alpha is singular); use oracle_kraus_set"
        )
    tau = params.tau
    n = np.arange(field.n_max + 1, dtype=float)
    rn, rn1 = np.sqrt(n), np.sqrt(n + 1)
    amp = np.sqrt(field.weights[: field.n_max + 1])

    ops = np.empty((field.n_max + 1, 2, 2), dtype=complex)
    ops[:, 0, 0] = np.cos(tau * rn)
    ops[:, 0, 1] = -1j * (rn / alpha) * np.sin(tau * rn)
    ops[:, 1, 0] = -1j * (alpha / rn1) * np.sin(tau * rn1)
    ops[:, 1, 1] = np.cos(tau * rn1)
    ops *= amp[:, None, None]
    ops.setflags(write=False)
    return KrausSet(alpha, tau, ops, field.n_max, field.tail_tol)


def apply_channel(rho: QubitDensity, ks: KrausSet) -> QubitDensity:
    k = ks.operators
    terms = np.einsum("nij,jk,nlk->nil", k, rho.matrix, k.conj())
    return QubitDensity(fock_sum(terms, axis=0))


def conditional_outcome_state(
    rho: QubitDensity, ks: KrausSet, n: int
) -> tuple[QubitDensity, float]:
    if not 0 <= n <= ks.n_max:
        raise IndexError(f"outcome {n} outside 0..{ks.n_max}")
    k = ks.operators[n]
    unnorm = k @ rho.matrix @ k.conj().T
    prob = float(np.trace(unnorm).real)
    if prob < MIN_OUTCOME_PROB:
        raise OutcomeImpossibleError(
            f"outcome n={n} has probability {prob:.3e}", details={"n": n, "p": prob}
        )
    return QubitDensity(unnorm / prob), prob


def channel_affine_map(ks: KrausSet) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch form of any Kraus channel: A_ij = Tr(s_i Phi(s_j))/2."""

    def phi(m: np.ndarray) -> np.ndarray:
        k = ks.operators
        return fock_sum(np.einsum("nij,jk,nlk->nil", k, m, k.conj()), axis=0)

    a = np.empty((3, 3))
    for j in range(3):
        out = phi(PAULI[j])
        for i in range(3):
            a[i, j] = 0.5 * float(np.trace(PAULI[i] @ out).real)
    out = phi(np.eye(2, dtype=complex))
    c = np.array([0.5 * float(np.trace(PAULI[i] @ out).real) for i in range(3)])
    return a, c


# ─── Оракул: усечённое совместное состояние ──────────────────────────────────


@dataclass(frozen=True, eq=False)
class JointState:
    """Amplitudes over [|g,0..N>, |e,0..N>] (atom-major Kronecker order)."""

    amplitudes: np.ndarray
    n_max_joint: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 * (self.n_max_joint + 1):
            raise ValueError(
                f"expected {2 * (self.n_max_joint + 1)} amplitudes, got {amps.size}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > JOINT_NORM_TOL:
            raise ConsistencyError(
                f"joint state norm {norm!r} deviates from 1", details={"norm": norm}
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def table(self) -> np.ndarray:
        """Amplitudes reshaped to (atom, photon number)."""
        return self.amplitudes.reshape(2, self.n_max_joint + 1)

    def reduced_atom(self) -> QubitDensity:
        t = self.table
        return QubitDensity(t @ t.conj().T)

    def photon_distribution(self) -> np.ndarray:
        return np.sum(np.abs(self.table) ** 2, axis=0)

    def norm(self) -> float:
        return math.sqrt(float(np.vdot(self.amplitudes, self.amplitudes).real))


class OracleRun(NamedTuple):
    joint: JointState
    atom: QubitDensity
    field_photon_distribution: np.ndarray


def initial_joint_state(q: PureQubit, field: CoherentField) -> JointState:
    n_joint = field.n_max + JOINT_GUARD_LEVELS
    fock = np.zeros(n_joint + 1, dtype=complex)
    fock[: field.n_max + 1] = field.amplitudes()
    return JointState(np.kron(q.amplitudes, fock), n_joint)


def _sector_propagate(table: np.ndarray, tau: float) -> np.ndarray:
    # |g,m> <-> |e,m-1> rotate at frequency sqrt(m); |g,0> and |e,N> are fixed
    g, e = table[0], table[1]
    m = np.arange(1, g.size, dtype=float)
    c, s = np.cos(tau * np.sqrt(m)), np.sin(tau * np.sqrt(m))
    new_g, new_e = g.copy(), e.copy()
    new_g[1:] = c * g[1:] - 1j * s * e[:-1]
    new_e[:-1] = -1j * s * g[1:] + c * e[:-1]
    return np.vstack([new_g, new_e])


def jc_hamiltonian(n_max_joint: int) -> np.ndarray:
    """Truncated sigma_+ a + sigma_- a^dagger over the atom-major basis."""
    a = np.diag(np.sqrt(np.arange(1, n_max_joint + 1, dtype=float)), k=1)
    sigma_plus = np.array([[0, 0], [1, 0]], dtype=complex)
    return np.kron(sigma_plus, a) + np.kron(sigma_plus.T, a.T)


def _dense_propagate(table: np.ndarray, tau: float) -> np.ndarray:
    n_joint = table.shape[1] - 1
    energies, vectors = np.linalg.eigh(jc_hamiltonian(n_joint))
    u = (vectors * np.exp(-1j * energies * tau)) @ vectors.conj().T
    return (u @ table.reshape(-1)).reshape(2, n_joint + 1)


def evolve_joint(state: JointState, tau: float, *, dense: bool = False) -> JointState:
    """Evolve by U(tau) = exp(-i H tau); negative tau runs the dynamics backwards."""
    if dense:
        table = _dense_propagate(state.table, tau)
    else:
        table = _sector_propagate(state.table, tau)
    return JointState(table.reshape(-1), state.n_max_joint)


def excitation_number(state: JointState) -> float:
    """<a^dagger a> + <|e><e|>, conserved by the resonant coupling."""
    dist = state.photon_distribution()
    n = np.arange(dist.size, dtype=float)
    p_e = float(np.sum(np.abs(state.table[1]) ** 2))
    return fock_sum(n * dist) + p_e


def oracle_evolve(
    q: PureQubit,
    field: CoherentField,
    params: EvolutionParams,
    *,
    dense: bool = False,
) -> OracleRun:
    joint = evolve_joint(initial_joint_state(q, field), params.tau, dense=dense)
    dist = joint.photon_distribution()
    # guard levels can only hold what rose from the edge weight plus the tail
    guard = fock_sum(dist[-JOINT_GUARD_LEVELS:])
    budget = field.tail_tol + float(field.weights[field.n_max])
    if guard > budget:
        raise TruncationError(
            f"population {guard:.3e} in the top {JOINT_GUARD_LEVELS} levels "
            f"(cap n={joint.n_max_joint}) exceeds {budget:.3e}",
            details={"population": guard, "budget": budget, "n_max_joint": joint.n_max_joint},
        )
    return OracleRun(joint, joint.reduced_atom(), dist)


def oracle_kraus_set(
    field: CoherentField, params: EvolutionParams, *, dense: bool = False
) -> KrausSet:
    """K_n = <n|U|alpha> read off the oracle for |g> and |e> inputs (any phase)."""
    run_g = oracle_evolve(PureQubit(1, 0), field, params, dense=dense)
    run_e = oracle_evolve(PureQubit(0, 1), field, params, dense=dense)
    ops = np.stack([run_g.joint.table.T, run_e.joint.table.T], axis=-1)
    ops.setflags(write=False)
    n_joint = run_g.joint.n_max_joint
    log.debug(
        f"oracle Kraus set: alpha={field.modulus:g} phase={field.phase:g} "
        f"tau={params.tau:g} n_max={n_joint}"
    )
    return KrausSet(field.modulus, params.tau, ops, n_joint, field.tail_tol, field.phase)


def phase_rotated_channel(
    rho: QubitDensity, field: CoherentField, params: EvolutionParams
) -> QubitDensity:
    """Channel for complex alpha = |alpha| exp(i phi), computed through the oracle."""
    return apply_channel(rho, oracle_kraus_set(field, params))


def field_channel(field: CoherentField, params: EvolutionParams) -> KrausSet:
    """Closed-form Kraus set when it exists, oracle-built otherwise."""
    if field.is_real and field.modulus > 0.0:
        return kraus_set(field, params)
    return oracle_kraus_set(field, params)
