"""Named initial data on the circle."""

import numpy as np

from .circle import CircleGrid, Mat3Field

PRESETS = ("cosine", "skewed", "offdiag", "constant")
DEFAULT_CONSTANT = (1.0, 2.0, 3.0)


def _constant_matrix(constant):
    c = np.asarray(DEFAULT_CONSTANT if constant is None else constant, dtype=float).ravel()
    if c.size == 3:
        return np.diag(c)
    if c.size == 9:
        return c.reshape(3, 3)
    raise ValueError("constant must have 3 (diagonal) or 9 (row-major) entries")


def preset_alpha(name, grid, amplitude=0.5, constant=None):
    """Coefficient field of a named preset.

    ``cosine``
        ``diag(1 + a cos x0, 1, 1)`` with ``a = amplitude``.
    ``skewed``
        ``diag(1 + 0.3 cos x0, 1, 1)`` plus the skew part of ``(0.2 sin x0, 0, 0)``.
    ``offdiag``
        ``diag(1 + 0.3 cos x0, 1, 1)`` with ``alpha_13 = alpha_31 = 0.2 sin x0``.
    ``constant``
        A constant matrix, ``diag(1, 2, 3)`` unless ``constant`` is given.
    """
    if isinstance(grid, int):
        grid = CircleGrid(grid)
    x = grid.x
    a = np.zeros((grid.n, 3, 3))
    if name == "constant":
        a[:] = _constant_matrix(constant)
        return Mat3Field(grid, a)
    a[:, 1, 1] = a[:, 2, 2] = 1.0
    if name == "cosine":
        a[:, 0, 0] = 1.0 + amplitude * np.cos(x)
    elif name == "skewed":
        a[:, 0, 0] = 1.0 + 0.3 * np.cos(x)
        # skew part of gamma_vec = (g, 0, 0): S[1, 2] = g, S[2, 1] = -g
        a[:, 1, 2] = 0.2 * np.sin(x)
        a[:, 2, 1] = -0.2 * np.sin(x)
    elif name == "offdiag":
        a[:, 0, 0] = 1.0 + 0.3 * np.cos(x)
        a[:, 0, 2] = a[:, 2, 0] = 0.2 * np.sin(x)
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return Mat3Field(grid, a)


def describe(name, amplitude=0.5, constant=None):
    """JSON-friendly descriptor of a preset, for manifests."""
    out = {"preset": name}
    if name == "cosine":
        out["amplitude"] = amplitude
    elif name == "constant":
        out["constant"] = _constant_matrix(constant).tolist()
    return out
