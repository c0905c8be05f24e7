"""Fock-basis time evolution under the k-quantum Hamiltonian.

Everything runs in the dimensionless scaled time ``tau = sqrt(2) eta^k |kappa| t``.
The scaled couplings are

    exact:       g(n) = i^k e^{i phi} sqrt((n+k)!/n!) f_k(n; eta) / sqrt(2)
    Lamb-Dicke:  g(n) = i^k e^{i phi} sqrt((n+k)!/n!) / (k! sqrt(2))

and the amplitudes obey ``dpsi_n/dtau = -i [g(n) psi_{n+k} + g*(n-k) psi_{n-k}]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from ._kernels import rk4_run

__all__ = [
    "Mode",
    "ModelConfig",
    "CouplingTables",
    "MotionalState",
    "Trajectory",
    "TruncationBreach",
    "StepSizeInvalid",
    "MAX_STEP_PRODUCT",
    "DENSE_MAX_NMAX",
    "fock_state",
    "coherent_state",
    "apply_hamiltonian",
    "hamiltonian_matrix",
    "step_rk4",
    "evolve",
    "evolve_to",
    "mean_n",
    "mean_n_accel",
    "energy",
    "tail_population",
    "spectral_oracle",
]

#: Largest allowed ``dtau * max|g|`` for a single RK4 step.
MAX_STEP_PRODUCT = 0.1
#: Largest basis handled by the dense eigendecomposition cross-check.
DENSE_MAX_NMAX = 512


class TruncationBreach(RuntimeError):
    """Population reached the top of the truncated Fock basis.

    Attributes
    ----------
    tau : float
        Scaled time at which the tail threshold was exceeded.
    trajectory : Trajectory
        Samples recorded up to and including the breach.
    state : MotionalState
        State at the breach.
    """

    def __init__(self, tau, trajectory=None, state=None, tail_pop=float("nan")):
        super().__init__(f"tail population {tail_pop:.3g} exceeded threshold at tau={tau:.6g}")
        self.tau = tau
        self.trajectory = trajectory
        self.state = state
        self.tail_pop = tail_pop


class StepSizeInvalid(ValueError):
    """Step size non-positive, non-finite, or above the stability bound."""


class Mode(str, enum.Enum):
    EXACT = "exact"
    LAMB_DICKE = "lamb-dicke"


@dataclass(frozen=True)
class ModelConfig:
    """Hamiltonian instance: order ``k``, ``eta``, coupling mode, phase of kappa."""

    k: int
    eta: float
    mode: Mode = Mode.EXACT
    kappa_phase: float = 0.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "mode", Mode(self.mode))
        eta = float(self.eta)
        if not math.isfinite(eta) or eta < 0:
            raise ValueError(f"eta must be finite and >= 0, got {self.eta!r}")
        if self.mode is Mode.EXACT and eta == 0:
            raise ValueError("exact mode requires eta > 0")
        object.__setattr__(self, "eta", eta)
        phase = float(self.kappa_phase)
        if not math.isfinite(phase):
            raise ValueError("kappa_phase must be finite")
        object.__setattr__(self, "kappa_phase", phase % (2 * math.pi))

    @property
    def lamb_dicke(self):
        return self.mode is Mode.LAMB_DICKE


@dataclass(frozen=True)
class CouplingTables:
    """Precomputed scaled couplings and acceleration coefficients for one basis.

    ``coupling[n]`` is the complex ``g(n)`` linking ``|n>`` and ``|n+k>``
    (``n < nmax - k``); ``accel[n]`` is ``F_k(n)`` for ``n < nmax``.
    """

    k: int
    nmax: int
    coupling: np.ndarray = field(repr=False)
    accel: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, cfg, nmax):
        if nmax < cfg.k + 1:
            raise ValueError(f"nmax must be >= k+1 = {cfg.k + 1}, got {nmax}")
        real = specfun.coupling_table(nmax, cfg.k, cfg.eta, lamb_dicke=cfg.lamb_dicke)
        prefactor = (1j) ** cfg.k * np.exp(1j * cfg.kappa_phase) / math.sqrt(2.0)
        coupling = prefactor * real
        accel = specfun.accel_table(nmax, cfg.k, cfg.eta, lamb_dicke=cfg.lamb_dicke)
        coupling.setflags(write=False)
        accel.setflags(write=False)
        return cls(k=cfg.k, nmax=int(nmax), coupling=coupling, accel=accel)

    @property
    def max_coupling(self):
        return float(np.max(np.abs(self.coupling))) if self.coupling.size else 0.0

    @property
    def max_step(self):
        """Largest ``dtau`` allowed by the RK4 step bound."""
        g = self.max_coupling
        return math.inf if g == 0 else MAX_STEP_PRODUCT / g


@dataclass
class MotionalState:
    """Complex Fock amplitudes ``psi_0 .. psi_{nmax-1}`` at scaled time ``tau``."""

    amps: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.ndim != 1:
            raise ValueError("amplitudes must be a 1-d array")

    @property
    def nmax(self):
        return self.amps.shape[0]

    @property
    def populations(self):
        return np.abs(self.amps) ** 2

    @property
    def norm(self):
        return float(np.sum(self.populations))

    def copy(self):
        return MotionalState(self.amps.copy(), self.tau)


@dataclass
class Trajectory:
    """Sampled observables of one evolution (column arrays, ``tau`` increasing)."""

    tau: np.ndarray
    mean_n: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    tail_pop: np.ndarray
    final_state: MotionalState | None = None
    breached: bool = False

    COLUMNS = ("tau", "mean_n", "norm", "energy", "tail_pop")

    def __len__(self):
        return len(self.tau)

    def rows(self):
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])


def fock_state(n, nmax):
    if not 0 <= n < nmax:
        raise ValueError(f"Fock level {n} outside basis of size {nmax}")
    amps = np.zeros(nmax, dtype=np.complex128)
    amps[n] = 1.0
    return MotionalState(amps)


def coherent_state(alpha, nmax):
    """Coherent state truncated to ``nmax`` levels and renormalized."""
    alpha = complex(alpha)
    amps = np.empty(nmax, dtype=np.complex128)
    c = complex(math.exp(-0.5 * abs(alpha) ** 2))
    for n in range(nmax):
        amps[n] = c
        c = c * alpha / math.sqrt(n + 1)
    amps /= np.linalg.norm(amps)
    return MotionalState(amps)


def _check_tables(state, tables):
    if state.nmax != tables.nmax:
        raise ValueError(f"state has {state.nmax} levels but tables were built for {tables.nmax}")


def _tables_for(state, cfg, tables):
    if tables is None:
        return CouplingTables.build(cfg, state.nmax)
    if tables.k != cfg.k:
        raise ValueError("tables were built for a different process order")
    _check_tables(state, tables)
    return tables


def _derivative(psi, coupling, k):
    out = np.zeros_like(psi)
    m = coupling.shape[0]
    out[:m] += coupling * psi[k : k + m]
    out[k : k + m] += np.conj(coupling) * psi[:m]
    return -1j * out


def apply_hamiltonian(state, cfg, tables=None):
    """Time derivative ``dpsi/dtau`` of the amplitudes."""
    tables = _tables_for(state, cfg, tables)
    return _derivative(state.amps, tables.coupling, cfg.k)


def hamiltonian_matrix(tables):
    """Dense Hermitian scaled Hamiltonian with ``H[n, n+k] = g(n)``."""
    h = np.zeros((tables.nmax, tables.nmax), dtype=np.complex128)
    idx = np.arange(tables.coupling.shape[0])
    h[idx, idx + tables.k] = tables.coupling
    h[idx + tables.k, idx] = np.conj(tables.coupling)
    return h


def _validate_dtau(dtau, tables):
    if not math.isfinite(dtau) or dtau < 0:
        raise StepSizeInvalid(f"dtau must be finite and >= 0, got {dtau!r}")
    if dtau * tables.max_coupling > MAX_STEP_PRODUCT * (1 + 1e-12):
        raise StepSizeInvalid(
            f"dtau={dtau:.3g} exceeds the step bound {tables.max_step:.3g} (max|g|={tables.max_coupling:.3g})"
        )


def step_rk4(state, cfg, tables, dtau):
    """One classical fourth-order Runge-Kutta step of size ``dtau``.

    Raises
    ------
    StepSizeInvalid
        If ``dtau * max|g| > MAX_STEP_PRODUCT`` or ``dtau`` is negative.
    """
    tables = _tables_for(state, cfg, tables)
    _validate_dtau(dtau, tables)
    psi, g, k = state.amps, tables.coupling, cfg.k
    k1 = _derivative(psi, g, k)
    k2 = _derivative(psi + 0.5 * dtau * k1, g, k)
    k3 = _derivative(psi + 0.5 * dtau * k2, g, k)
    k4 = _derivative(psi + dtau * k3, g, k)
    return MotionalState(psi + (dtau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), state.tau + dtau)


def mean_n(state):
    """``<n> = sum_n n |psi_n|^2``."""
    return float(np.dot(np.arange(state.nmax), state.populations))


def mean_n_accel(state, cfg, tables=None):
    """``d^2<n>/dtau^2 = sum_n F_k(n) P_n`` (``F_k(n; 0)`` in Lamb-Dicke mode)."""
    tables = _tables_for(state, cfg, tables)
    return float(np.dot(tables.accel, state.populations))


def energy(state, cfg, tables=None):
    """Expectation of the scaled Hamiltonian, ``2 Re sum_n g(n) psi_n* psi_{n+k}``.

    With ``kappa_phase = 0`` the coupling carries the phase ``i^k``, so e.g.
    ``(|0> + |2>)/sqrt(2)`` at ``k = 2`` gives ``-|g(0)|``.
    """
    tables = _tables_for(state, cfg, tables)
    m = tables.coupling.shape[0]
    psi = state.amps
    return float(2.0 * np.real(np.sum(tables.coupling * np.conj(psi[:m]) * psi[cfg.k : cfg.k + m])))


def tail_population(state, k):
    """Total population of the top ``2k`` levels of the basis."""
    return float(np.sum(state.populations[-2 * k :]))


def _observe(psi, tau, cfg, tables):
    s = MotionalState(psi, tau)
    return (tau, mean_n(s), s.norm, energy(s, cfg, tables), tail_population(s, cfg.k))


def _substeps(dtau, tables):
    if not math.isfinite(dtau) or dtau <= 0:
        raise StepSizeInvalid(f"dtau must be finite and > 0, got {dtau!r}")
    return max(1, math.ceil(dtau * tables.max_coupling / MAX_STEP_PRODUCT - 1e-9))


def _segments(span, dtau):
    """Full steps of size ``dtau`` plus an optional shorter final step."""
    nfull = int(math.floor(span / dtau + 1e-9))
    rem = span - nfull * dtau
    if rem <= 1e-12 * max(dtau, 1.0):
        rem = 0.0
    return nfull, rem


def evolve(initial, cfg, tau_end, dtau=1e-3, sample_every=100, *, tables=None, tail_threshold=1e-8):
    """Integrate from ``initial.tau`` to ``tau_end`` and sample observables.

    ``dtau`` is the output grid step. When it exceeds the RK4 step bound each
    grid step is split into the smallest number of equal substeps that
    satisfies it, so the sample times do not depend on the coupling scale.

    Parameters
    ----------
    initial : MotionalState
    cfg : ModelConfig
    tau_end : float
        Final scaled time (absolute, >= ``initial.tau``).
    dtau : float
        Grid step.
    sample_every : int
        Record one sample every this many grid steps; the first and last
        points are always recorded.
    tail_threshold : float
        Abort once the top ``2k`` levels hold more population than this.

    Returns
    -------
    Trajectory

    Raises
    ------
    TruncationBreach
        Carries the breach time and the samples recorded so far.
    StepSizeInvalid
    """
    tables = _tables_for(initial, cfg, tables)
    if not math.isfinite(tau_end) or tau_end < initial.tau:
        raise ValueError(f"tau_end must be finite and >= initial tau, got {tau_end!r}")
    if int(sample_every) != sample_every or sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    nsub = _substeps(dtau, tables)
    nfull, rem = _segments(tau_end - initial.tau, dtau)

    k = cfg.k
    tail_start = max(tables.nmax - 2 * k, 0)
    psi = initial.amps.copy()
    tau0 = initial.tau
    samples = [_observe(psi, tau0, cfg, tables)]
    done = 0

    def breach(steps_taken, h, start_tau, tail):
        tau_b = start_tau + steps_taken * h
        samples.append(_observe(psi, tau_b, cfg, tables))
        traj = _trajectory(samples, MotionalState(psi.copy(), tau_b), breached=True)
        raise TruncationBreach(tau_b, traj, traj.final_state, tail)

    if samples[0][4] > tail_threshold:
        breach(0, 0.0, tau0, samples[0][4])

    h = dtau / nsub
    while done < nfull:
        chunk = min(int(sample_every), nfull - done)
        start_tau = tau0 + done * dtau
        taken, tail = rk4_run(psi, tables.coupling, k, h, chunk * nsub, tail_start, tail_threshold)
        if taken < chunk * nsub:
            breach(taken, h, start_tau, tail)
        done += chunk
        samples.append(_observe(psi, tau0 + done * dtau, cfg, tables))
    if rem > 0:
        nsub_rem = _substeps(rem, tables)
        h_rem = rem / nsub_rem
        start_tau = tau0 + nfull * dtau
        taken, tail = rk4_run(psi, tables.coupling, k, h_rem, nsub_rem, tail_start, tail_threshold)
        if taken < nsub_rem:
            breach(taken, h_rem, start_tau, tail)
        samples.append(_observe(psi, tau_end, cfg, tables))
    return _trajectory(samples, MotionalState(psi, samples[-1][0]))


def _trajectory(samples, final_state, breached=False):
    cols = np.array(samples, dtype=float).reshape(-1, 5).T
    return Trajectory(*cols, final_state=final_state, breached=breached)


def evolve_to(initial, cfg, tau, dtau=1e-3, *, tables=None, tail_threshold=1e-8):
    """State at scaled time ``tau`` (same stepping as :func:`evolve`)."""
    traj = evolve(initial, cfg, tau, dtau, sample_every=10**9, tables=tables, tail_threshold=tail_threshold)
    return traj.final_state


def spectral_oracle(initial, cfg, tau, tables=None):
    """Evolve by ``tau`` through a dense eigendecomposition of the Hamiltonian.

    Independent of the RK4 path; limited to ``nmax <= DENSE_MAX_NMAX``.
    """
    if initial.nmax > DENSE_MAX_NMAX:
        raise ValueError(f"dense path limited to nmax <= {DENSE_MAX_NMAX}, got {initial.nmax}")
    tables = _tables_for(initial, cfg, tables)
    w, v = np.linalg.eigh(hamiltonian_matrix(tables))
    coeffs = v.conj().T @ initial.amps
    return MotionalState(v @ (np.exp(-1j * w * tau) * coeffs), initial.tau + tau)
