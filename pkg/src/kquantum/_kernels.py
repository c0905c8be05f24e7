"""Compiled inner loop for fixed-step RK4 on the banded k-quantum Hamiltonian."""

import numpy as np
from numba import njit


@njit(cache=True)
def _derivative(psi, coup, k, out):
    out[:] = 0.0
    for n in range(coup.shape[0]):
        g = coup[n]
        out[n] += -1j * g * psi[n + k]
        out[n + k] += -1j * np.conj(g) * psi[n]


@njit(cache=True)
def rk4_run(psi, coup, k, h, nsteps, tail_start, threshold):
    """Advance ``psi`` in place by ``nsteps`` RK4 steps of size ``h``.

    Stops early once the population at indices ``>= tail_start`` exceeds
    ``threshold``. Returns ``(steps_taken, tail_population)``.
    """
    size = psi.shape[0]
    k1 = np.empty(size, dtype=np.complex128)
    k2 = np.empty(size, dtype=np.complex128)
    k3 = np.empty(size, dtype=np.complex128)
    k4 = np.empty(size, dtype=np.complex128)
    tmp = np.empty(size, dtype=np.complex128)
    tail = 0.0
    for step in range(nsteps):
        _derivative(psi, coup, k, k1)
        for i in range(size):
            tmp[i] = psi[i] + 0.5 * h * k1[i]
        _derivative(tmp, coup, k, k2)
        for i in range(size):
            tmp[i] = psi[i] + 0.5 * h * k2[i]
        _derivative(tmp, coup, k, k3)
        for i in range(size):
            tmp[i] = psi[i] + h * k3[i]
        _derivative(tmp, coup, k, k4)
        for i in range(size):
            psi[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        tail = 0.0
        for i in range(tail_start, size):
            tail += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        if tail > threshold:
            return step + 1, tail
    return nsteps, tail
