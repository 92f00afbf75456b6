"""Reparametrization of the circle that makes the ``dy^2`` coefficient constant.

For fixed time, ``dy/dx0 = 2 pi V / v`` with ``v = int V dx0`` and ``y(0) = 0``.
In the ``y`` coordinate the metric reads ``(v / 2 pi)^2 dy^2 + Qhat``, where
``Qhat(y) = Q(x0(y))``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import mat3
from .circle import TWO_PI, CircleGrid, Mat3Field, ScalarField, deriv_array, integrate, interpolate
from .errors import ConstraintViolated, GridMismatch, NonMonotone, NotPositiveDefinite
from .geometry import is_hypersymplectic


@dataclass
class GaugeMap:
    y_of_x: ScalarField
    v: float
    v_field: ScalarField

    @property
    def grid(self):
        return self.v_field.grid

    @cached_property
    def _series(self):
        n = self.grid.n
        coef = np.fft.rfft(self.v_field.values) / n
        k = np.arange(1, n // 2)  # Nyquist mode integrates to zero at the nodes
        return coef[0].real, k, 2.0 * coef[1 : n // 2] / (1j * k)

    def y(self, x):
        """``y(x0)`` at arbitrary ``x0`` (not reduced mod 2 pi)."""
        x = np.asarray(x, dtype=float)
        mean, k, anti = self._series
        osc = (np.exp(1j * np.multiply.outer(x, k)) @ anti).real - anti.real.sum()
        return TWO_PI / self.v * (mean * x + osc)

    def inverse(self, y, newton_steps=4):
        """``x0 = G(y)``: monotone cubic guess polished by Newton on the exact map."""
        y = np.mod(np.asarray(y, dtype=float), TWO_PI)
        xs = np.append(self.grid.x, TWO_PI)
        ys = np.append(self.y_of_x.values, TWO_PI)
        x = PchipInterpolator(ys, xs)(y)
        for _ in range(newton_steps):
            slope = TWO_PI / self.v * interpolate(self.v_field, x)
            x = x - (self.y(x) - y) / slope
        return x


def build_gauge(v_field):
    """Gauge map from the volume factor ``V`` sampled on the circle."""
    if np.min(v_field.values) <= 0:
        raise NotPositiveDefinite("V must be positive to build the gauge")
    total = float(integrate(v_field))
    gauge = GaugeMap(None, total, v_field)
    y = gauge.y(v_field.grid.x)
    y[0] = 0.0
    if np.any(np.diff(np.append(y, TWO_PI)) <= 0):
        raise NonMonotone("reparametrization is not strictly increasing")
    gauge.y_of_x = ScalarField(v_field.grid, y)
    return gauge


def resample_hat(q, gauge, m=None):
    """``Qhat`` on the uniform ``m``-point ``y`` grid."""
    if q.grid != gauge.grid:
        raise GridMismatch("Q and the gauge are sampled on different grids")
    ygrid = CircleGrid(m or q.grid.n)
    x = gauge.inverse(ygrid.x)
    qhat = mat3.sym(interpolate(q, x))
    err = np.max(np.abs(mat3.det3(qhat) - 1.0))
    if err > 1e-10:
        raise ConstraintViolated(f"det Qhat deviates from 1 by {err:.3e}")
    return Mat3Field(ygrid, qhat)


@dataclass
class LimitPrediction:
    v_inf: float
    qhat_inf: np.ndarray


def limit_prediction(alpha0):
    """Limit ``(v_inf, Qhat_inf)`` fixed by the conserved integrals of ``alpha``.

    With ``Abar`` the mean of ``sym(alpha)``, ``Qhat_inf = Abar / det(Abar)^(1/3)``
    and ``v_inf = 2 pi det(Abar)^(1/3)``.
    """
    ok, _ = is_hypersymplectic(alpha0)
    if not ok:
        raise NotPositiveDefinite("initial data is not hypersymplectic")
    abar = mat3.sym(integrate(alpha0)) / TWO_PI
    mat3.require_positive_definite(abar, "mean of alpha")
    s = np.cbrt(mat3.det3(abar))
    return LimitPrediction(TWO_PI * float(s), abar / s)


def convergence_report(qhat, pred, v, scheme="spectral"):
    """``(dist_inf, qprime_inf, v_gap)`` of a resampled state against the limit."""
    dist = float(np.max(np.abs(qhat.values - pred.qhat_inf)))
    qp = deriv_array(qhat.values, qhat.grid, 1, scheme)
    return dist, float(np.max(np.abs(qp))), abs(float(v) - pred.v_inf)
