"""Husimi Q function of a pure motional state."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QGrid",
    "husimi_q",
    "q_on_grid",
    "radial_profile",
    "DEFAULT_BOUNDS",
    "DEFAULT_RESOLUTION",
    "NORMALIZATION_TOLERANCE",
]

DEFAULT_BOUNDS = (-20.0, 20.0, -20.0, 20.0)
DEFAULT_RESOLUTION = (201, 201)
NORMALIZATION_TOLERANCE = 0.02


def _amplitudes(state):
    amps = np.asarray(getattr(state, "amps", state), dtype=np.complex128)
    nz = np.nonzero(amps)[0]
    # trailing exact zeros contribute nothing
    return amps[: nz[-1] + 1] if nz.size else amps[:1]


def husimi_q(state, alpha):
    """``Q(alpha) = |<alpha|psi>|^2 / pi``.

    The overlap is accumulated with the running coefficient
    ``exp(-|alpha|^2/2) conj(alpha)^n / sqrt(n!)`` so nothing overflows for
    ``|alpha| <= 30``.
    """
    amps = _amplitudes(state)
    alpha = complex(alpha)
    ac = alpha.conjugate()
    c = complex(math.exp(-0.5 * abs(alpha) ** 2))
    total = 0j
    for n, psi_n in enumerate(amps):
        total += c * psi_n
        c *= ac / math.sqrt(n + 1)
    return abs(total) ** 2 / math.pi


def _q_many(amps, alphas):
    alphas = np.asarray(alphas, dtype=np.complex128)
    ac = np.conj(alphas)
    c = np.exp(-0.5 * np.abs(alphas) ** 2).astype(np.complex128)
    total = np.zeros_like(alphas)
    for n, psi_n in enumerate(amps):
        if psi_n != 0:
            total += c * psi_n
        c *= ac / math.sqrt(n + 1)
    return np.abs(total) ** 2 / math.pi


@dataclass
class QGrid:
    """Q values on a rectangular grid; ``values[i, j]`` is at ``(re[j], im[i])``."""

    re: np.ndarray
    im: np.ndarray
    values: np.ndarray = field(repr=False)
    normalized_ok: bool = True

    @property
    def bounds(self):
        return (float(self.re[0]), float(self.re[-1]), float(self.im[0]), float(self.im[-1]))

    @property
    def cell_area(self):
        dre = (self.re[-1] - self.re[0]) / (len(self.re) - 1)
        dim = (self.im[-1] - self.im[0]) / (len(self.im) - 1)
        return float(dre * dim)

    def normalization(self):
        """Cell-area-weighted sum of the grid values (about 1 if the grid encloses the state)."""
        return float(self.cell_area * np.sum(self.values))

    def alphas(self):
        return self.re[None, :] + 1j * self.im[:, None]


def q_on_grid(state, bounds=DEFAULT_BOUNDS, resolution=DEFAULT_RESOLUTION):
    """Evaluate the Q function at every node of a rectangular grid.

    Rows are indexed by the imaginary part, columns by the real part. If the
    grid misses more than 2% of the normalization, ``normalized_ok`` is
    cleared and a warning is issued.
    """
    re_min, re_max, im_min, im_max = (float(b) for b in bounds)
    n_re, n_im = (int(r) for r in resolution)
    if n_re < 2 or n_im < 2 or not (re_max > re_min and im_max > im_min):
        raise ValueError("grid needs increasing bounds and at least 2 points per axis")
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    amps = _amplitudes(state)
    alphas = re[None, :] + 1j * im[:, None]
    values = np.empty(alphas.shape)
    for i in range(n_im):
        values[i] = _q_many(amps, alphas[i])
    grid = QGrid(re, im, values)
    if abs(grid.normalization() - 1.0) > NORMALIZATION_TOLERANCE:
        grid.normalized_ok = False
        warnings.warn(
            f"Q grid normalization {grid.normalization():.4f} is off by more than "
            f"{NORMALIZATION_TOLERANCE:.0%}; the grid may not enclose the state",
            RuntimeWarning,
            stacklevel=2,
        )
    return grid


def radial_profile(grid, nbins=None):
    """Angular average of ``Q`` in radial bins around the origin.

    Returns ``(bin_centres, mean_q)``; empty bins are dropped.
    """
    alphas = grid.alphas()
    r = np.abs(alphas).ravel()
    q = grid.values.ravel()
    step = math.sqrt(grid.cell_area)
    if nbins is None:
        nbins = max(int(r.max() / step), 1)
    edges = np.linspace(0.0, r.max(), nbins + 1)
    idx = np.clip(np.digitize(r, edges) - 1, 0, nbins - 1)
    sums = np.bincount(idx, weights=q, minlength=nbins)
    counts = np.bincount(idx, minlength=nbins)
    keep = counts > 0
    centres = 0.5 * (edges[:-1] + edges[1:])
    return centres[keep], sums[keep] / counts[keep]
