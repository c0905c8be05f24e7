"""Analytic lower and upper bounds on the mean excitation.

The lower bound ``N_lb`` solves ``N'' = sum_l a_l N^l`` with the Lamb-Dicke
polynomial coefficients; for ``k >= 3`` it reaches infinity after a finite
interval. The upper bound ``N_ub`` is the quadratic obtained from the
constant acceleration ``C_k(eta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .specfun import PolyCoeffs, bound_constant, ld_poly_coeffs

__all__ = [
    "BoundProblem",
    "LowerBoundTrajectory",
    "DivergenceEstimate",
    "QuadraticBound",
    "solve_lower_bound",
    "first_integral_check",
    "divergence_upper_bound",
    "divergence_quadrature",
    "divergence_time",
    "solve_upper_bound",
    "BLOWUP_LEVEL",
    "TAU1_LEVEL",
    "MAX_GROWTH",
]

BLOWUP_LEVEL = 1e12
#: default tau1 is the first sample at which N_lb reaches this level
TAU1_LEVEL = 0.1
_TAIL_START = 1e6
MAX_GROWTH = 0.05


@dataclass(frozen=True)
class BoundProblem:
    """Lower-bound ODE with its initial excitation ``n0`` and velocity ``n0p``."""

    coeffs: PolyCoeffs
    n0: float = 0.0
    n0p: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.n0) and self.n0 >= 0):
            raise ValueError(f"n0 must be finite and >= 0, got {self.n0!r}")
        if not math.isfinite(self.n0p):
            raise ValueError("n0p must be finite")

    @classmethod
    def ground_state(cls, k):
        return cls(ld_poly_coeffs(k))

    @property
    def k(self):
        return self.coeffs.k

    def velocity_squared(self, n):
        """``N'^2`` as a function of ``N`` from the first integral."""
        b = self.coeffs.b_float
        total = self.n0p**2
        for l, bl in enumerate(b, start=1):
            total = total + bl * (n**l - self.n0**l)
        return total


@dataclass
class LowerBoundTrajectory:
    tau: np.ndarray
    n: np.ndarray
    dn: np.ndarray
    blowup_tau: float | None = None

    @property
    def blew_up(self):
        return self.blowup_tau is not None


def solve_lower_bound(problem, tau_end, dtau=1e-3, blowup=BLOWUP_LEVEL, until=None, max_growth=MAX_GROWTH):
    """Integrate the lower-bound ODE with RK4 until ``tau_end`` or blow-up.

    The step is halved (and kept halved) whenever ``N`` would grow by more
    than ``max_growth`` (5%) of ``max(N, 1)`` in one step. Crossing ``blowup``
    ends the run and records the crossing time in ``blowup_tau``; reaching
    ``until`` (if given) just ends the run.
    """
    if not (math.isfinite(tau_end) and tau_end >= 0):
        raise ValueError("tau_end must be finite and >= 0")
    if not (math.isfinite(dtau) and dtau > 0):
        raise ValueError("dtau must be finite and > 0")
    a = problem.coeffs.a_float

    def accel(n):
        acc = 0.0
        for coeff in a[::-1]:
            acc = acc * n + coeff
        return acc

    def rhs(y):
        return np.array([y[1], accel(y[0])])

    y = np.array([problem.n0, problem.n0p], dtype=float)
    tau = 0.0
    taus, ns, dns = [tau], [y[0]], [y[1]]
    h = dtau
    blowup_tau = None
    while tau < tau_end - 1e-12:
        step = min(h, tau_end - tau)
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * step * k1)
        k3 = rhs(y + 0.5 * step * k2)
        k4 = rhs(y + step * k3)
        y_new = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new)) or y_new[0] - y[0] > max_growth * max(abs(y[0]), 1.0):
            h = 0.5 * h
            if h < 1e-300:
                raise FloatingPointError("lower-bound step underflow before reaching the blow-up level")
            continue
        y, tau = y_new, tau + step
        taus.append(tau)
        ns.append(y[0])
        dns.append(y[1])
        if y[0] > blowup:
            blowup_tau = tau
            break
        if until is not None and y[0] >= until:
            break
    return LowerBoundTrajectory(np.array(taus), np.array(ns), np.array(dns), blowup_tau)


def first_integral_check(problem, trajectory):
    """Maximum relative residual of ``N'^2 = n0p^2 + sum_l b_l (N^l - n0^l)``.

    Each point's residual is divided by the largest single term at that
    point.
    """
    n = np.asarray(trajectory.n, dtype=float)
    v2 = np.asarray(trajectory.dn, dtype=float) ** 2
    b = problem.coeffs.b_float
    terms = [np.full_like(n, problem.n0p**2)] + [bl * (n**l - problem.n0**l) for l, bl in enumerate(b, start=1)]
    rhs = np.sum(terms, axis=0)
    scale = np.maximum.reduce([v2] + [np.abs(t) for t in terms])
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(v2 - rhs) / scale))


def divergence_upper_bound(coeffs, n1):
    """Closed-form bound on the divergence interval from the top ``b`` term.

    Infinite for ``k <= 2``; otherwise ``2/(k-2) / sqrt(b_kk n1^(k-2))``.
    """
    if not n1 > 0:
        raise ValueError("the excitation at tau1 must be positive")
    k = coeffs.k
    if k <= 2:
        return math.inf
    return 2.0 / (k - 2) / math.sqrt(float(coeffs.b[-1]) * n1 ** (k - 2))


def divergence_quadrature(problem, n1, tail_start=_TAIL_START):
    """``int_{n1}^inf dn / sqrt(N'^2(n))`` by adaptive quadrature.

    The range beyond ``max(tail_start, n1)`` uses only the ``b_kk`` term,
    which integrates in closed form. Infinite for ``k <= 2``.
    """
    if not n1 > 0:
        raise ValueError("the excitation at tau1 must be positive")
    k = problem.k
    if k <= 2:
        return math.inf
    m = max(float(tail_start), float(n1))
    bkk = float(problem.coeffs.b[-1])
    tail = 2.0 / (k - 2) / math.sqrt(bkk) * m ** (-(k - 2) / 2.0)
    if m == n1:
        return tail

    def integrand(u):
        n = math.exp(u)
        return n / math.sqrt(problem.velocity_squared(n))

    body, _ = integrate.quad(integrand, math.log(n1), math.log(m), limit=200, epsabs=0.0, epsrel=1e-11)
    return body + tail


@dataclass(frozen=True)
class DivergenceEstimate:
    tau1: float
    n_at_tau1: float
    dtau_inf_upper: float
    dtau_inf_quadrature: float

    @property
    def blowup_estimate(self):
        """``tau1 + dtau_inf_quadrature``: the divergence time of ``N_lb``."""
        return self.tau1 + self.dtau_inf_quadrature


def divergence_time(problem, tau1=None, dtau=1e-3):
    """Both estimates of the interval after ``tau1`` in which ``N_lb`` diverges.

    With ``tau1=None`` the first grid time where ``N_lb >= TAU1_LEVEL`` is used.
    """
    if tau1 is None:
        traj = solve_lower_bound(problem, tau_end=1e3, dtau=dtau, until=TAU1_LEVEL)
        hit = np.nonzero(traj.n >= TAU1_LEVEL)[0]
        if hit.size == 0:
            raise ValueError("N_lb never reached the default tau1 level")
        tau1, n1 = float(traj.tau[hit[0]]), float(traj.n[hit[0]])
    else:
        if not tau1 > 0:
            raise ValueError("tau1 must be > 0")
        traj = solve_lower_bound(problem, tau_end=tau1, dtau=dtau)
        if traj.blew_up:
            raise ValueError("N_lb already diverged before tau1")
        n1 = float(traj.n[-1])
    if not n1 > 0:
        raise ValueError("N_lb(tau1) = 0; the quadrature endpoint is singular")
    return DivergenceEstimate(
        tau1=tau1,
        n_at_tau1=n1,
        dtau_inf_upper=divergence_upper_bound(problem.coeffs, n1),
        dtau_inf_quadrature=divergence_quadrature(problem, n1),
    )


@dataclass(frozen=True)
class QuadraticBound:
    """``N_ub(tau) = n0 + n0p tau + curvature tau^2 / 2``."""

    n0: float
    n0p: float
    curvature: float

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = self.n0 + self.n0p * tau + 0.5 * self.curvature * tau**2
        return float(out) if out.ndim == 0 else out


def solve_upper_bound(n0, n0p, k, eta):
    """Quadratic upper-bound trajectory with acceleration ``C_k(eta)``."""
    return QuadraticBound(float(n0), float(n0p), bound_constant(k, eta))
