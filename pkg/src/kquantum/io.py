"""Plain-text output formats: trajectory/bounds/Q-grid CSV and P2 PGM images.

Numbers are written with 17 significant digits so files round-trip exactly.
Every file starts with ``#``-prefixed ``key=value`` provenance lines.
"""

from __future__ import annotations

import math

import numpy as np

TRAJECTORY_HEADER = "tau,mean_n,norm,energy,tail_pop"
BOUNDS_HEADER = "tau,N_lb,N_ub"
QGRID_HEADER = "re_alpha,im_alpha,q"
PGM_MAXVAL = 65535


def fmt(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _comment_block(meta):
    return "".join(f"# {key}={value}\n" for key, value in meta.items())


def _write_table(path, meta, header, rows):
    lines = [_comment_block(meta), header, "\n"]
    lines.extend(",".join(fmt(v) for v in row) + "\n" for row in rows)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("".join(lines))


def read_table(path):
    """Return ``(meta, columns, data)`` from any of the CSV files written here."""
    meta = {}
    header = None
    rows = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return meta, header, data


def write_trajectory(path, trajectory, meta):
    _write_table(path, meta, TRAJECTORY_HEADER, trajectory.rows())


def write_bounds_report(path, tau, n_lb, n_ub, meta):
    _write_table(path, meta, BOUNDS_HEADER, zip(tau, n_lb, n_ub))


def write_qgrid(path, grid, meta):
    alphas = grid.alphas()
    rows = zip(alphas.real.ravel(), alphas.imag.ravel(), grid.values.ravel())
    _write_table(path, meta, QGRID_HEADER, rows)


def write_pgm(path, grid):
    """Grayscale P2 image of ``Q`` scaled from ``[0, 1/pi]`` to ``[0, 65535]``.

    The top image row is the largest imaginary part.
    """
    scaled = np.clip(np.rint(grid.values * math.pi * PGM_MAXVAL), 0, PGM_MAXVAL).astype(int)
    n_im, n_re = scaled.shape
    lines = [f"P2\n{n_re} {n_im}\n{PGM_MAXVAL}\n"]
    lines.extend(" ".join(str(v) for v in row) + "\n" for row in scaled[::-1])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("".join(lines))


def read_pgm(path):
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    width, height, maxval = (int(t) for t in tokens[1:4])
    pixels = np.array([int(t) for t in tokens[4:]], dtype=int).reshape(height, width)
    return pixels, maxval
