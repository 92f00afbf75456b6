"""Time integration of the reduced flow ``d_t alpha = (V^-1 (alpha / V)')'``.

Only the symmetric part ``beta`` of ``alpha`` moves: the right-hand side is
built from ``beta`` and is symmetric, so the skew part is carried along
untouched.  States keep ``beta`` and the skew vector separately, which makes
skew preservation exact rather than approximate.

The direction along ``alpha`` itself carries no diffusion, so with Fourier
derivatives round-off at the top wavenumbers is never damped and grows until
the run breaks down (around t = 0.4 for the cosine data at N = 128).  By
default spectral runs therefore apply a 36th-order exponential filter to the
state after every step; it leaves the mean, and hence the conserved
integrals, untouched.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import mat3
from .circle import CircleGrid, Mat3Field, ScalarField, deriv_array, exp_filter
from .errors import ConstraintViolated, NotPositiveDefinite, UnstableStep
from .geometry import is_hypersymplectic

# packed order of the six independent entries of a symmetric matrix
_IU = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_ROWS = np.array([i for i, _ in _IU])
_COLS = np.array([j for _, j in _IU])


def pack(s):
    return np.asarray(s, dtype=float)[..., _ROWS, _COLS]


def unpack(p):
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape[:-1] + (3, 3))
    out[..., _ROWS, _COLS] = p
    out[..., _COLS, _ROWS] = p
    return out


def _packed_det(p):
    a, b, c, d, e, f = (p[..., k] for k in range(6))
    return a * b * c + 2.0 * d * e * f - a * f * f - b * e * e - c * d * d


def _packed_pd(p):
    a, b, d = p[..., 0], p[..., 1], p[..., 3]
    return bool(np.all(a > 0) and np.all(a * b - d * d > 0) and np.all(_packed_det(p) > 0))


@dataclass
class FlowConfig:
    N: int = 128
    scheme: str = "spectral"
    cfl_safety: float = 0.25
    dt_max: float = math.inf
    t_end: float = 50.0
    stop_tol: float = 1e-10
    output_every: float = 0.1
    renormalize_q: bool = False
    dealias: bool = False
    spectral_filter: bool = True

    def __post_init__(self):
        if self.N < 8 or self.N % 2:
            raise ValueError("N must be an even integer >= 8")
        if self.scheme not in ("spectral", "fd4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dt_max > 0 or not self.output_every > 0:
            raise ValueError("dt_max and output_every must be positive")


@dataclass
class FlowState:
    t: float
    grid: CircleGrid
    beta: np.ndarray = field(repr=False)
    gamma_vec: np.ndarray = field(repr=False)

    @classmethod
    def from_alpha(cls, alpha, t=0.0, grid=None):
        if isinstance(alpha, Mat3Field):
            grid, alpha = alpha.grid, alpha.values
        alpha = Mat3Field(grid, alpha).values
        beta, gv = mat3.split(alpha)
        return cls(float(t), grid, beta, gv)

    @property
    def alpha(self):
        return mat3.join(self.beta, self.gamma_vec)

    @property
    def alpha_field(self):
        return Mat3Field(self.grid, self.alpha)


def _deriv(values, grid, scheme, dealias=False):
    return deriv_array(values, grid, 1, scheme, dealias)


def packed_rhs(p, grid, scheme="spectral", dealias=False):
    """``(V^-1 Q')'`` on packed symmetric samples of shape ``(N, 6)``."""
    if not _packed_pd(p):
        raise NotPositiveDefinite("beta lost positive definiteness")
    v = np.cbrt(_packed_det(p))[:, None]
    qp = _deriv(p / v, grid, scheme, dealias)
    return _deriv(qp / v, grid, scheme, dealias)


def rhs_conservative(state, scheme="spectral", dealias=False):
    """Right-hand side in divergence form; symmetric at every node."""
    out = packed_rhs(pack(state.beta), state.grid, scheme, dealias)
    return Mat3Field(state.grid, unpack(out))


def expanded_rhs_arrays(a, ap, app):
    """Expanded right-hand side from ``alpha, alpha', alpha''`` (pointwise)."""
    ai = mat3.inv3(a)
    v2 = np.cbrt(mat3.det3(a)) ** 2

    def ip(b, c):
        return np.einsum("...ij,...jk,...kl,...li->...", ai, b, ai, c)

    s = lambda x: x[..., None, None]  # noqa: E731
    a_app = ip(a, app)
    a_ap = ip(a, ap)
    ap_ap = ip(ap, ap)
    out = app - s(a_app / 3.0) * a - s(a_ap) * ap + s(ap_ap / 3.0) * a + s(2.0 * a_ap**2 / 9.0) * a
    return out / s(v2)


def rhs_expanded(state, scheme="spectral"):
    """Same right-hand side with all derivatives expanded (symmetric ``alpha`` only)."""
    if np.max(np.abs(state.gamma_vec), initial=0.0) > 1e-12:
        raise ConstraintViolated("expanded form requires a symmetric coefficient matrix")
    a = state.beta
    mat3.require_positive_definite(a, "beta")
    ap = deriv_array(a, state.grid, 1, scheme)
    app = deriv_array(a, state.grid, 2, scheme)
    return Mat3Field(state.grid, expanded_rhs_arrays(a, ap, app))


def _dt_from_min_v(min_v, grid, cfg):
    return min(cfg.dt_max, cfg.cfl_safety * grid.h**2 * min_v**2 / 2.0)


def stable_dt(state, cfg):
    """``min(dt_max, cfl_safety * h^2 * min(V)^2 / 2)``."""
    min_v = float(np.min(np.cbrt(mat3.det3(state.beta))))
    return _dt_from_min_v(min_v, state.grid, cfg)


def _rk4(p, dt, f):
    k1 = f(p)
    k2 = f(p + (0.5 * dt) * k1)
    k3 = f(p + (0.5 * dt) * k2)
    k4 = f(p + dt * k3)
    return p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _packed_step(p, dt, grid, scheme, dealias, t, filtered=False):
    new = _rk4(p, dt, lambda x: packed_rhs(x, grid, scheme, dealias))
    if not np.all(np.isfinite(new)):
        raise UnstableStep(f"non-finite values after step at t={t + dt}", t=t + dt)
    if filtered and scheme == "spectral":
        new = exp_filter(new)
    return new


def advance(state, dt, scheme="spectral", dealias=False, filtered=True):
    """One classical Runge-Kutta step of size ``dt``.

    ``filtered`` applies the high-wavenumber filter afterwards (spectral only).
    """
    try:
        p = _packed_step(pack(state.beta), dt, state.grid, scheme, dealias, state.t, filtered)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"{exc} during step from t={state.t}") from exc
    return FlowState(state.t + dt, state.grid, unpack(p), state.gamma_vec.copy())


def q_prime_sup(state, scheme="spectral"):
    """``max |Q'|`` over nodes and entries."""
    beta = state.beta
    v = np.cbrt(mat3.det3(beta))
    qp = deriv_array(beta / v[:, None, None], state.grid, 1, scheme)
    return float(np.max(np.abs(qp)))


def integrate_to(state, t_target, cfg, on_step=None):
    """Step with the stable step size until exactly ``t_target``.

    Raises :class:`UnstableStep` if ``min V`` falls below half its starting
    value, which the exact flow never does.

    ``on_step(t, dt)`` is called after every step, which lets a companion
    integrator reuse the same step sequence.
    """
    grid = state.grid
    p = pack(state.beta)
    t = state.t
    floor_v = 0.5 * float(np.min(np.cbrt(_packed_det(p))))
    while t < t_target:
        min_v = float(np.min(np.cbrt(_packed_det(p))))
        if min_v < floor_v:
            # V never decreases along the exact flow; a collapse is numerical
            raise UnstableStep(f"volume factor collapsed to {min_v:.3e} at t={t}", t=t)
        dt = _dt_from_min_v(min_v, grid, cfg)
        last = t + dt >= t_target
        if last:
            dt = t_target - t
        try:
            p = _packed_step(p, dt, grid, cfg.scheme, cfg.dealias, t, cfg.spectral_filter)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(f"{exc} at t={t}") from exc
        t = t_target if last else t + dt
        if on_step is not None:
            on_step(t, dt)
    return FlowState(t, grid, unpack(p), state.gamma_vec.copy())


@dataclass
class RunResult:
    trajectory: list
    records: list
    converged: bool
    t_final: float


def run(cfg, alpha0, progress=None):
    """Integrate from ``alpha0`` to ``cfg.t_end`` or until ``|Q'| < stop_tol``.

    Snapshots and diagnostics are emitted every ``cfg.output_every`` (and at
    the final time).  ``alpha0`` is a :class:`Mat3Field` on an ``N``-point grid.
    """
    from .audit import audit  # audit depends on this module

    if not isinstance(alpha0, Mat3Field):
        alpha0 = Mat3Field(CircleGrid(cfg.N), alpha0)
    if alpha0.grid.n != cfg.N:
        raise ValueError(f"initial data has {alpha0.grid.n} nodes, config says N={cfg.N}")
    ok, margin = is_hypersymplectic(alpha0)
    if not ok:
        raise NotPositiveDefinite(
            f"initial data is not hypersymplectic (min eigenvalue of beta {margin:.3e})"
        )
    state0 = FlowState.from_alpha(alpha0)
    state = state0
    trajectory, records = [], []

    def emit(s):
        trajectory.append(s)
        records.append(audit(s, state0, scheme=cfg.scheme))
        if progress is not None:
            progress(s, records[-1])
        return q_prime_sup(s, cfg.scheme) < cfg.stop_tol

    converged = emit(state)
    k = 0
    while not converged and state.t < cfg.t_end:
        k += 1
        target = min(k * cfg.output_every, cfg.t_end)
        state = integrate_to(state, target, cfg)
        converged = emit(state)
    return RunResult(trajectory, records, converged, state.t)


def qv_rhs(q, v, grid, scheme="spectral"):
    """Time derivatives ``(dQ/dt, dV/dt)`` of the co-evolved pair."""
    qp = deriv_array(q, grid, 1, scheme)
    m = mat3.inv3(q) @ qp
    torsion = np.einsum("nij,nji->n", m, m) / v**2
    lap = deriv_array(qp / v[:, None, None], grid, 1, scheme) / v[:, None, None]
    dq = lap - (torsion / 3.0)[:, None, None] * q
    dv = torsion * v / 3.0
    return dq, dv


def evolve_qv_step(q, v, dt, renormalize=False, scheme="spectral"):
    """One Runge-Kutta step of ``d_t V = T V / 3``, ``d_t Q = Lap Q - T Q / 3``.

    ``q`` is a :class:`Mat3Field`, ``v`` a :class:`ScalarField` on the same
    grid.  With ``renormalize`` the result is rescaled to ``det Q = 1``.
    """
    grid = q.grid
    qa, va = q.values, v.values
    if np.min(va) <= 0:
        raise NotPositiveDefinite("V must be positive")
    if np.max(np.abs(mat3.det3(qa) - 1.0)) > 1e-6:
        raise ConstraintViolated("det Q must equal 1 within 1e-6")

    def f(y):
        qq, vv = y
        mat3.require_positive_definite(qq, "Q")
        return qv_rhs(qq, vv, grid, scheme)

    k1 = f((qa, va))
    k2 = f((qa + 0.5 * dt * k1[0], va + 0.5 * dt * k1[1]))
    k3 = f((qa + 0.5 * dt * k2[0], va + 0.5 * dt * k2[1]))
    k4 = f((qa + dt * k3[0], va + dt * k3[1]))
    qn = qa + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    vn = va + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    if not (np.all(np.isfinite(qn)) and np.all(np.isfinite(vn))):
        raise UnstableStep("non-finite values in (Q, V) step")
    qn = mat3.sym(qn)
    if renormalize:
        qn = qn / np.cbrt(mat3.det3(qn))[:, None, None]
    return Mat3Field(grid, qn), ScalarField(grid, vn)
