"""Recoil operator functions, coupling coefficients and their Lamb-Dicke limits.

Every function here takes the process order ``k`` (quanta exchanged per
elementary process) and the Lamb-Dicke parameter ``eta``. ``eta == 0``
dispatches to the analytic small-``eta`` limits instead of the general path.

Factorial ratios are never formed as a quotient of two factorials: they are
accumulated as short products (``n <= 64``) or as sums of logarithms, so the
tables stay finite far beyond ``n = 171``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "PolyCoeffs",
    "laguerre",
    "laguerre_table",
    "sqrt_factorial_ratio",
    "recoil_factor",
    "recoil_factor_guarded",
    "coupling_magnitude",
    "accel_coefficient",
    "accel_coefficient_ld",
    "ld_poly_coeffs",
    "asymptotic_bound",
    "bound_constant",
    "coupling_table",
    "accel_table",
]

_DIRECT_PRODUCT_MAX_N = 64


def _check_order(k):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"process order k must be an integer >= 1, got {k!r}")
    return int(k)


def _check_eta(eta):
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0:
        raise ValueError(f"Lamb-Dicke parameter must be finite and >= 0, got {eta!r}")
    return eta


def _check_level(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"Fock level must be an integer, got {n!r}")
    return int(n)


def laguerre(n, k, x):
    """Associated Laguerre polynomial ``L_n^(k)(x)`` by upward recurrence.

    Parameters
    ----------
    n, k : int
        Degree and order, both non-negative.
    x : float
        Non-negative, finite argument.

    Returns
    -------
    float
    """
    n = _check_level(n)
    k = _check_level(k)
    x = float(x)
    if n < 0 or k < 0:
        raise ValueError("laguerre requires n >= 0 and k >= 0")
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"laguerre requires finite x >= 0, got {x!r}")
    prev, cur = 1.0, 1.0 + k - x
    if n == 0:
        return prev
    for l in range(1, n):
        prev, cur = cur, ((2 * l + k + 1 - x) * cur - (l + k) * prev) / (l + 1)
    return cur


def laguerre_table(nmax, k, x):
    """``L_n^(k)(x)`` for ``n = 0 .. nmax-1`` as a float array."""
    out = np.empty(nmax)
    if nmax == 0:
        return out
    out[0] = 1.0
    if nmax > 1:
        out[1] = 1.0 + k - x
    for l in range(1, nmax - 1):
        out[l + 1] = ((2 * l + k + 1 - x) * out[l] - (l + k) * out[l - 1]) / (l + 1)
    return out


def sqrt_factorial_ratio(n, k):
    """``sqrt(n! / (n+k)!)`` for scalar or array ``n >= 0``.

    Small ``n`` uses the direct product ``(n+1)...(n+k)``; larger ``n`` sums
    logarithms of the same factors.
    """
    n_arr = np.asarray(n, dtype=float)
    direct = np.ones_like(n_arr)
    logsum = np.zeros_like(n_arr)
    for j in range(1, k + 1):
        direct = direct * (n_arr + j)
        logsum = logsum + np.log(n_arr + j)
    out = np.where(n_arr <= _DIRECT_PRODUCT_MAX_N, 1.0 / np.sqrt(direct), np.exp(-0.5 * logsum))
    return float(out) if np.ndim(n) == 0 else out


def recoil_factor(n, k, eta):
    """Diagonal element ``f_k(n; eta)`` of the recoil operator function.

    ``f_k(n; eta) = n!/(n+k)! * L_n^(k)(eta^2) * exp(-eta^2/2)``, which tends to
    ``1/k!`` as ``eta -> 0``.
    """
    n = _check_level(n)
    k = _check_order(k)
    eta = _check_eta(eta)
    if n < 0:
        raise ValueError("recoil_factor requires n >= 0; use recoil_factor_guarded for n < 0")
    if eta == 0.0:
        return 1.0 / math.factorial(k)
    x = eta * eta
    return sqrt_factorial_ratio(n, k) ** 2 * laguerre(n, k, x) * math.exp(-0.5 * x)


def recoil_factor_guarded(n, k, eta):
    """Like :func:`recoil_factor`, but returns exactly 0 for ``n < 0``."""
    if _check_level(n) < 0:
        return 0.0
    return recoil_factor(n, k, eta)


def coupling_magnitude(n, k, eta):
    """``|g_k(n; eta)| / |kappa|``, the coupling between ``|n>`` and ``|n+k>``.

    Evaluated as ``eta^k * sqrt(n!/(n+k)!) * |L_n^(k)(eta^2)| * exp(-eta^2/2)``.
    Returns 0 for ``n < 0`` and for ``eta == 0``.
    """
    n = _check_level(n)
    k = _check_order(k)
    eta = _check_eta(eta)
    if n < 0 or eta == 0.0:
        return 0.0
    x = eta * eta
    return eta**k * sqrt_factorial_ratio(n, k) * abs(laguerre(n, k, x)) * math.exp(-0.5 * x)


def _upward_rate(n, k, eta):
    # (n+k)!/n! * f_k(n)^2 without the exp(-eta^2) factor
    return sqrt_factorial_ratio(n, k) ** 2 * laguerre(n, k, eta * eta) ** 2


def accel_coefficient(n, k, eta):
    """Coefficient ``F_k(n; eta)`` multiplying ``P_n`` in ``d^2<n>/dtau^2``.

    ``F_k(n) = k * [(n+k)!/n! f_k(n)^2 - n!/(n-k)! f_k(n-k)^2]``, with terms of
    negative level dropped. Can be negative in exact mode.
    """
    n = _check_level(n)
    k = _check_order(k)
    eta = _check_eta(eta)
    if n < 0:
        return 0.0
    if eta == 0.0:
        return float(accel_coefficient_ld(n, k))
    up = _upward_rate(n, k, eta)
    down = _upward_rate(n - k, k, eta) if n >= k else 0.0
    return k * (up - down) * math.exp(-eta * eta)


def accel_coefficient_ld(n, k):
    """Exact Lamb-Dicke limit ``F_k(n; 0) = [C(n+k, k) - C(n, k)] / (k-1)!``."""
    k = _check_order(k)
    n = _check_level(n)
    if n < 0:
        return Fraction(0)
    return Fraction(math.comb(n + k, k) - math.comb(n, k), math.factorial(k - 1))


@dataclass(frozen=True)
class PolyCoeffs:
    """Exact polynomial form of ``F_k(n; 0)`` and its first-integral coefficients.

    ``a[l]`` multiplies ``n**l`` (``l = 0 .. k-1``); ``b[l-1] = 2 a[l-1] / l``
    multiplies ``N**l`` (``l = 1 .. k``) in the first integral of the
    lower-bound equation.
    """

    k: int
    a: tuple
    b: tuple

    def __call__(self, n):
        """Evaluate ``sum_l a_l n^l``; exact for int/Fraction ``n``."""
        acc = 0
        for coeff in reversed(self.a):
            acc = acc * n + coeff
        return acc

    def velocity_squared(self, n):
        """``sum_l b_l n^l`` (``l = 1 .. k``)."""
        acc = 0
        for coeff in reversed(self.b):
            acc = (acc + coeff) * n
        return acc

    @property
    def a_float(self):
        return np.array([float(c) for c in self.a])

    @property
    def b_float(self):
        return np.array([float(c) for c in self.b])


def _falling_poly(shift, k):
    """Integer coefficients (ascending) of ``prod_{j=0}^{k-1} (n + shift - j)``."""
    poly = [1]
    for j in range(k):
        c = shift - j
        nxt = [0] * (len(poly) + 1)
        for i, p in enumerate(poly):
            nxt[i] += p * c
            nxt[i + 1] += p
        poly = nxt
    return poly


def ld_poly_coeffs(k):
    """Exact rational coefficients of ``F_k(n; 0)`` as a polynomial in ``n``.

    Expands ``(n+k)...(n+1) - n(n-1)...(n-k+1)`` with Python integers (no
    overflow for any ``k``), then divides by ``k! (k-1)!``.
    """
    k = _check_order(k)
    up = _falling_poly(k, k)
    down = _falling_poly(0, k)
    denom = math.factorial(k) * math.factorial(k - 1)
    diff = [u - d for u, d in zip(up, down)]
    # the n**k terms cancel, leaving degree k-1
    assert diff[k] == 0
    a = tuple(Fraction(c, denom) for c in diff[:k])
    b = tuple(2 * a[l - 1] / l for l in range(1, k + 1))
    return PolyCoeffs(k=k, a=a, b=b)


def bound_constant(k, eta):
    """n-independent acceleration bound ``C_k(eta) = exp(eta^2/2) / (pi eta^(2k+1))``."""
    k = _check_order(k)
    eta = _check_eta(eta)
    if eta == 0.0:
        raise ValueError("bound_constant requires eta > 0")
    return math.exp(0.5 * eta * eta) / (math.pi * eta ** (2 * k + 1))


def asymptotic_bound(n, k, eta):
    """Large-``n`` envelope of ``F_k(n; eta)``: ``C_k(eta) / sqrt(n)``."""
    if np.any(np.asarray(n) < 1):
        raise ValueError("asymptotic_bound requires n >= 1")
    return bound_constant(k, eta) / np.sqrt(n)


def coupling_table(nmax, k, eta, lamb_dicke=False):
    """Real signed couplings ``c(n)`` for ``n = 0 .. nmax-k-1``.

    In exact mode ``c(n) = sqrt(n!/(n+k)!) L_n^(k)(eta^2) exp(-eta^2/2)``, i.e.
    ``g_k(n)/(kappa (i eta)^k)``. In Lamb-Dicke mode
    ``c(n) = sqrt((n+k)!/n!) / k!``.
    """
    k = _check_order(k)
    nlinks = max(nmax - k, 0)
    n = np.arange(nlinks)
    sr = sqrt_factorial_ratio(n, k)
    if lamb_dicke:
        return 1.0 / (math.factorial(k) * sr)
    eta = _check_eta(eta)
    if eta == 0.0:
        raise ValueError("exact coupling table requires eta > 0")
    x = eta * eta
    return sr * laguerre_table(nlinks, k, x) * math.exp(-0.5 * x)


def accel_table(nmax, k, eta, lamb_dicke=False):
    """``F_k(n; eta)`` (or ``F_k(n; 0)``) for ``n = 0 .. nmax-1``."""
    k = _check_order(k)
    if lamb_dicke or eta == 0.0:
        return np.array([float(accel_coefficient_ld(n, k)) for n in range(nmax)])
    eta = _check_eta(eta)
    x = eta * eta
    n = np.arange(nmax)
    rate = sqrt_factorial_ratio(n, k) ** 2 * laguerre_table(nmax, k, x) ** 2
    out = rate.copy()
    if nmax > k:
        out[k:] -= rate[: nmax - k]
    return k * out * math.exp(-x)
