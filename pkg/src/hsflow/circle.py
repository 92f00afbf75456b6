"""Discrete calculus on the circle R / 2 pi Z.

Fields are sampled on a uniform grid ``x_k = k h``, ``h = 2 pi / N``.  The
array-level helpers (:func:`spectral_deriv`, :func:`fd4_deriv`) work along
axis 0 of any array, which is how the flow engine uses them; the field
wrappers add grid bookkeeping.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridMismatch

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CircleGrid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n}")

    @property
    def h(self):
        return TWO_PI / self.n

    @cached_property
    def x(self):
        return self.h * np.arange(self.n)

    @cached_property
    def wavenumbers(self):
        """Integer wavenumbers of the real FFT, ``0 .. N/2``."""
        return np.arange(self.n // 2 + 1, dtype=float)


@dataclass
class ScalarField:
    grid: CircleGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise GridMismatch(
                f"expected {self.grid.n} samples, got shape {self.values.shape}"
            )


@dataclass
class Mat3Field:
    grid: CircleGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n, 3, 3):
            raise GridMismatch(
                f"expected shape ({self.grid.n}, 3, 3), got {self.values.shape}"
            )


def same_grid(*fields):
    grids = {f.grid for f in fields}
    if len(grids) != 1:
        raise GridMismatch("fields are sampled on different grids")
    return grids.pop()


def _mode_factor(n, order, dealias):
    k = np.arange(n // 2 + 1, dtype=float)
    if order == 1:
        fac = 1j * k
        fac[-1] = 0.0  # Nyquist mode has no odd derivative
    elif order == 2:
        fac = -(k**2) + 0j
    else:
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    if dealias:
        fac[k > n / 3.0] = 0.0
    return fac


_FACTORS = {}


def spectral_deriv(values, order=1, dealias=False):
    """Fourier derivative along axis 0 of a periodic sample array."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    key = (n, order, dealias)
    fac = _FACTORS.get(key)
    if fac is None:
        fac = _FACTORS[key] = _mode_factor(n, order, dealias)
    coef = np.fft.rfft(values, axis=0)
    coef *= fac.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.fft.irfft(coef, n=n, axis=0)


_FILTERS = {}


def exp_filter(values, order=36, strength=36.0):
    """Damp the top of the spectrum by ``exp(-strength (k / k_max)^order)`` along axis 0.

    The removed part is subtracted from the input, so data without
    oscillating modes (constants in particular) come back unchanged.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    key = (n, order, strength)
    damp = _FILTERS.get(key)
    if damp is None:
        k = np.arange(n // 2 + 1, dtype=float)
        damp = _FILTERS[key] = -np.expm1(-strength * (k / (n // 2)) ** order)
    coef = np.fft.rfft(values, axis=0)
    coef *= damp.reshape((-1,) + (1,) * (values.ndim - 1))
    return values - np.fft.irfft(coef, n=n, axis=0)


def fd4_deriv(values, h, order=1):
    """Fourth-order centred finite differences along axis 0."""
    f = np.asarray(values, dtype=float)
    p1, m1 = np.roll(f, -1, axis=0), np.roll(f, 1, axis=0)
    p2, m2 = np.roll(f, -2, axis=0), np.roll(f, 2, axis=0)
    if order == 1:
        return (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
    if order == 2:
        return (-p2 + 16.0 * p1 - 30.0 * f + 16.0 * m1 - m2) / (12.0 * h * h)
    raise ValueError(f"derivative order must be 1 or 2, got {order}")


def deriv_array(values, grid, order=1, scheme="spectral", dealias=False):
    if values.shape[0] != grid.n:
        raise GridMismatch(f"expected {grid.n} samples, got {values.shape[0]}")
    if scheme == "spectral":
        return spectral_deriv(values, order, dealias)
    if scheme == "fd4":
        return fd4_deriv(values, grid.h, order)
    raise ValueError(f"unknown differentiation scheme {scheme!r}")


def deriv(f, order=1, scheme="spectral", dealias=False):
    """Derivative of a scalar or matrix field (entrywise for matrices)."""
    out = deriv_array(f.values, f.grid, order, scheme, dealias)
    return type(f)(f.grid, out)


def integrate(f):
    """Rectangle rule ``h * sum``; spectrally accurate for smooth periodic data."""
    values = f.values if hasattr(f, "values") else np.asarray(f, dtype=float)
    n = values.shape[0]
    return (TWO_PI / n) * values.sum(axis=0)


def _trig_eval(values, targets):
    n = values.shape[0]
    coef = np.fft.rfft(values, axis=0) / n
    coef[1:] *= 2.0
    coef[-1] *= 0.5  # Nyquist term appears once
    k = np.arange(n // 2 + 1)
    phase = np.exp(1j * np.outer(targets, k))
    out = np.tensordot(phase, coef, axes=(1, 0)).real
    return out


def interpolate(f, targets, method="trig"):
    """Evaluate a field at arbitrary points of the circle.

    ``method`` is ``"trig"`` (the band-limited interpolant) or ``"cubic"``
    (periodic cubic spline).  Returns an array of shape ``(len(targets),)``
    for scalar fields and ``(len(targets), 3, 3)`` for matrix fields.
    """
    values = f.values
    if values.shape[0] != f.grid.n:
        raise GridMismatch("field values do not match its grid")
    targets = np.mod(np.atleast_1d(np.asarray(targets, dtype=float)), TWO_PI)
    if method == "trig":
        return _trig_eval(values, targets)
    if method == "cubic":
        x = np.append(f.grid.x, TWO_PI)
        y = np.concatenate([values, values[:1]], axis=0)
        return CubicSpline(x, y, axis=0, bc_type="periodic")(targets)
    raise ValueError(f"unknown interpolation method {method!r}")
