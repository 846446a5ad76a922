"""Deterministic terrain fixtures shared by CLI and acceptance tests."""

import numpy as np

from supercell.coverage import ElevationGrid, save_grid


def rolling_terrain(n=48, cell=100.0):
    """Smooth hills plus a ridge; formula-defined so the golden hash is platform-stable."""
    xs = (np.arange(n) + 0.5) * cell
    x, y = np.meshgrid(xs, xs[::-1])
    z = 40 * np.sin(x / 700.0) * np.cos(y / 900.0) + 60.0
    z += 120.0 * np.exp(-((y - 0.8 * n * cell) ** 2) / (2 * 150.0**2))
    z = np.round(z, 1)
    z[0, 0] = -9999.0
    return ElevationGrid(n, n, cell, 0.0, 0.0, -9999.0, z)


def write_terrain(path, grid=None):
    save_grid(grid or rolling_terrain(), path)
    return path
