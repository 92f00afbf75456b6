"""Numerical checks of the quantitative statements about the flow.

Everything here is a pure function of stored states; nothing mutates the
integrator.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import mat3
from .circle import Mat3Field, ScalarField, deriv_array, integrate
from .errors import GridMismatch
from .flow import FlowState, expanded_rhs_arrays
from .gauge import build_gauge, convergence_report, limit_prediction, resample_hat
from .geometry import laplacian_values, scalar_torsion, volume_and_q

ENVELOPE_RTOL = 1e-6
ENVELOPE_ATOL = 1e-8


@dataclass
class DiagnosticsRecord:
    t: float
    v: float
    torsion_max: float
    riccati_envelope: float
    detQ_err_max: float
    cohom_drift_max: float
    trQ_max: float
    skew_drift_max: float
    min_eig_beta: float
    qhat_dist: float
    qhat_prime_inf: float
    curv_max: float
    volume_bound: float
    v_inf: float
    eig_lo: float
    eig_hi: float
    cohom: np.ndarray

    def row(self):
        d = asdict(self)
        d.pop("cohom")
        return d


@dataclass
class TorsionTraces:
    trB2: np.ndarray
    trB3: np.ndarray
    trB4: np.ndarray
    trAB: np.ndarray
    trAB2: np.ndarray
    trA2: np.ndarray


def _state(x):
    if isinstance(x, FlowState):
        return x
    return FlowState.from_alpha(x)


def field_quantities(state, scheme="spectral"):
    """``V, Q, Q', Q''`` and the scalar torsion on the nodes of a state."""
    v, q = volume_and_q(state.beta)
    qp = deriv_array(q, state.grid, 1, scheme)
    qpp = deriv_array(q, state.grid, 2, scheme)
    return v, q, qp, qpp, scalar_torsion(q, qp, v)


def riccati_envelope(t, t0_max):
    return t0_max / (1.0 + t0_max * t / 3.0)


def audit(state, alpha0, scheme="spectral"):
    """Fill a :class:`DiagnosticsRecord` for ``state`` relative to the data at t=0."""
    s0 = _state(alpha0)
    grid = state.grid
    v, q, qp, _, torsion = field_quantities(state, scheme)
    v0, q0, qp0, _, torsion0 = field_quantities(s0, scheme)
    alpha = state.alpha
    cohom = integrate(alpha)
    cohom0 = integrate(s0.alpha)
    eigs = np.linalg.eigvalsh(q)
    tr_alpha0 = np.trace(s0.alpha, axis1=1, axis2=2)

    vfield = ScalarField(grid, v)
    gauge = build_gauge(vfield)
    qhat = resample_hat(Mat3Field(grid, q), gauge)
    pred = limit_prediction(s0.alpha_field)
    dist, qhat_prime, _ = convergence_report(qhat, pred, gauge.v, scheme)
    ryy, rijkl, _ = curvature_hat(qhat, gauge.v, scheme)
    curv = max(float(np.max(np.abs(ryy))), float(np.max(np.abs(rijkl))))

    return DiagnosticsRecord(
        t=state.t,
        v=gauge.v,
        torsion_max=float(np.max(torsion)),
        riccati_envelope=riccati_envelope(state.t, float(np.max(torsion0))),
        detQ_err_max=float(np.max(np.abs(mat3.det3(q) - 1.0))),
        cohom_drift_max=float(np.max(np.abs(cohom - cohom0))),
        trQ_max=float(np.max(np.trace(q, axis1=1, axis2=2))),
        skew_drift_max=float(np.max(np.abs(state.gamma_vec - s0.gamma_vec), initial=0.0)),
        min_eig_beta=float(np.min(np.linalg.eigvalsh(state.beta))),
        qhat_dist=dist,
        qhat_prime_inf=qhat_prime,
        curv_max=curv,
        volume_bound=float(integrate(tr_alpha0)) / 3.0,
        v_inf=pred.v_inf,
        eig_lo=float(eigs.min()),
        eig_hi=float(eigs.max()),
        cohom=cohom,
    )


def riccati_check(series):
    """Check ``Tmax(t) <= Tmax(0) / (1 + Tmax(0) t / 3)`` on sampled data.

    ``series`` is a sequence of ``(t, Tmax)`` pairs sorted in ``t``.  Returns
    ``(ok, worst_margin)`` where the margin is the smallest slack
    ``allowed - Tmax`` (negative on violation).
    """
    ts = np.array([s[0] for s in series], dtype=float)
    vals = np.array([s[1] for s in series], dtype=float)
    if ts.size == 0:
        return True, np.inf
    allowed = riccati_envelope(ts - ts[0], vals[0]) * (1 + ENVELOPE_RTOL) + ENVELOPE_ATOL
    worst = float(np.min(allowed - vals))
    return worst >= 0, worst


def ab_matrices(q, qp, qpp):
    """``A = Q^-1/2 Q'' Q^-1/2`` and ``B = Q^-1/2 Q' Q^-1/2``."""
    r = mat3.inv_sqrt_sym(q)
    return r @ qpp @ r, r @ qp @ r


def torsion_traces(q, qp, qpp):
    a, b = ab_matrices(q, qp, qpp)
    b2 = b @ b
    tr = lambda m: np.trace(m, axis1=-2, axis2=-1)  # noqa: E731
    return TorsionTraces(
        trB2=tr(b2),
        trB3=tr(b2 @ b),
        trB4=tr(b2 @ b2),
        trAB=tr(a @ b),
        trAB2=tr(a @ b2),
        trA2=tr(a @ a),
    )


def torsion_heat_rhs(v, vp, torsion, torsion_p, tt):
    """Right-hand side of the evolution equation of the scalar torsion."""
    r = vp / v
    return (
        -2.0 / 3.0 * torsion**2
        + 8.0 / v**2 * r**2 * torsion
        - 6.0 / v**4 * r * tt.trAB
        + 2.0 / v**4 * r * tt.trB3
        + 8.0 / v**4 * tt.trAB2
        + (5.0 * r * torsion_p - 2.0 / v**2 * tt.trA2 - 6.0 / v**2 * tt.trB4) / v**2
    )


def torsion_heat_residual(prev, cur, nxt, scheme="spectral"):
    """``(d_t - Lap) T - RHS`` at the middle state, time derivative by centred difference."""
    if not prev.grid == cur.grid == nxt.grid:
        raise GridMismatch("states live on different grids")
    dt = cur.t - prev.t
    if not np.isclose(nxt.t - cur.t, dt, rtol=1e-9, atol=0.0):
        raise ValueError("states must be equally spaced in time")
    grid = cur.grid
    t_prev = field_quantities(prev, scheme)[4]
    t_next = field_quantities(nxt, scheme)[4]
    v, q, qp, qpp, torsion = field_quantities(cur, scheme)
    vp = deriv_array(v, grid, 1, scheme)
    torsion_p = deriv_array(torsion, grid, 1, scheme)
    lap = laplacian_values(torsion, v, grid, scheme)
    dtdt = (t_next - t_prev) / (2.0 * dt)
    rhs = torsion_heat_rhs(v, vp, torsion, torsion_p, torsion_traces(q, qp, qpp))
    return ScalarField(grid, dtdt - lap - rhs)


def curvature_hat(qhat, v, scheme="spectral"):
    """Curvature components of ``(v / 2 pi)^2 dy^2 + Qhat``.

    Returns
    -------
    r_yiyj : ndarray (M, 3, 3)
        ``[i, j]`` is the ``d_j`` component of ``R(d_y, d_i) d_y``.
    r_ijkl : ndarray (M, 3, 3, 3, 3)
        ``[i, j, k, l]`` is the ``d_l`` component of ``R(d_i, d_j) d_k``.
    r_yijk : ndarray (M, 3, 3, 3)
        Mixed components; identically zero.
    """
    q = qhat.values
    mat3.require_positive_definite(q, "Qhat")
    qp = deriv_array(q, qhat.grid, 1, scheme)
    qpp = deriv_array(q, qhat.grid, 2, scheme)
    qi = mat3.inv3(q)
    m = qp @ qi
    r_yiyj = 0.5 * qpp @ qi - 0.25 * m @ m
    c2 = (2.0 * np.pi / v) ** 2
    r_ijkl = 0.25 * c2 * (
        np.einsum("nik,njl->nijkl", qp, m) - np.einsum("nil,njk->nijkl", m, qp)
    )
    r_yijk = np.zeros(q.shape[:1] + (3, 3, 3))
    return r_yiyj, r_ijkl, r_yijk


def linearize(alpha, beta, scheme="spectral", as_printed=False):
    """Derivative of the expanded right-hand side at ``alpha`` in direction ``beta``.

    With ``as_printed=True`` the three terms coming from the variation of
    ``alpha^-1`` inside ``<alpha, .>_alpha`` are left out; that variant does not
    match finite differences and is kept only for comparison.
    """
    grid = alpha.grid
    if beta.grid != grid:
        raise GridMismatch("alpha and beta live on different grids")
    a = alpha.values
    b = mat3.sym(beta.values)
    mat3.require_positive_definite(a, "alpha")
    ap = deriv_array(a, grid, 1, scheme)
    app = deriv_array(a, grid, 2, scheme)
    bp = deriv_array(b, grid, 1, scheme)
    bpp = deriv_array(b, grid, 2, scheme)
    ai = mat3.inv3(a)
    v2 = np.cbrt(mat3.det3(a)) ** 2

    def ip(x, y):
        return np.einsum("nij,njk,nkl,nli->n", ai, x, ai, y)

    s = lambda x: x[:, None, None]  # noqa: E731
    a_ap = ip(a, ap)
    a_bp = ip(a, bp)
    out = (
        bpp
        - s(ip(a, bpp) / 3.0) * a
        - s(ip(a, app) / 3.0) * b
        - s(a_bp) * ap
        - s(a_ap) * bp
        + s(2.0 / 3.0 * ip(ap, bp)) * a
        - s(2.0 / 3.0 * ip(ap @ ai @ ap, b)) * a
        + s(ip(ap, ap) / 3.0) * b
        + s(4.0 / 9.0 * a_ap * a_bp) * a
        + s(2.0 / 9.0 * a_ap**2) * b
    )
    if not as_printed:
        b_ap = ip(b, ap)
        out = out + s(ip(b, app) / 3.0) * a + s(b_ap) * ap - s(4.0 / 9.0 * a_ap * b_ap) * a
    drift = expanded_rhs_arrays(a, ap, app)
    return Mat3Field(grid, out / s(v2) - s(2.0 / 3.0 * ip(a, b)) * drift)


def principal_symbol(alpha, xi, beta):
    """``(xi^2 / V^2) (beta - <alpha, beta>_alpha alpha / 3)``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    mat3.require_positive_definite(alpha, "alpha")
    v2 = np.cbrt(mat3.det3(alpha)) ** 2
    ip = mat3.inner_alpha(alpha, alpha, beta, check=False)
    proj = beta - (np.asarray(ip) / 3.0)[..., None, None] * alpha
    return (xi**2 / v2)[..., None, None] * proj


def fd_linearization(alpha, beta, eps, scheme="spectral"):
    """Central difference of the expanded right-hand side along ``beta``."""
    grid = alpha.grid

    def rhs(a):
        ap = deriv_array(a, grid, 1, scheme)
        app = deriv_array(a, grid, 2, scheme)
        return expanded_rhs_arrays(a, ap, app)

    b = mat3.sym(beta.values)
    return (rhs(alpha.values + eps * b) - rhs(alpha.values - eps * b)) / (2.0 * eps)


# --- record-level checks ---------------------------------------------------


def check_records(records, tol=1e-10, band=1e-8):
    """Monotonicity, bounds and envelope checks over a run's records.

    Returns a dict ``name -> (ok, worst)`` where ``worst`` is the largest
    violation (non-positive when the check passes).
    """
    v = np.array([r.v for r in records])
    trq = np.array([r.trQ_max for r in records])
    out = {}
    dv = -np.diff(v) if v.size > 1 else np.zeros(1)
    out["v_monotone"] = float(np.max(dv)) - tol
    out["v_bound"] = float(np.max(v - np.array([r.volume_bound for r in records]))) - tol
    ok, margin = riccati_check([(r.t, r.torsion_max) for r in records])
    out["riccati"] = -margin
    dtr = np.diff(trq) if trq.size > 1 else np.zeros(1)
    out["trQ_monotone"] = float(np.max(dtr)) - tol
    m = trq[0]
    lo = np.array([r.eig_lo for r in records])
    hi = np.array([r.eig_hi for r in records])
    out["eig_sandwich"] = max(
        float(np.max(1.0 / m**2 * (1 - band) - lo)), float(np.max(hi - m * (1 + band)))
    )
    return {k: (w <= 0, w) for k, w in out.items()}


def pointwise_v_monotone(trajectory, tol=1e-10):
    """Largest decrease of ``V`` at any node between consecutive snapshots."""
    worst = -np.inf
    prev = None
    for s in trajectory:
        v = np.cbrt(mat3.det3(s.beta))
        if prev is not None:
            worst = max(worst, float(np.max(prev - v)))
        prev = v
    return worst <= tol, worst


def random_direction(grid, rng, modes=3):
    """Smooth random symmetric field with Fourier modes ``0 .. modes``."""
    x = grid.x
    out = np.zeros((grid.n, 3, 3))
    for k in range(modes + 1):
        c, s = rng.standard_normal((2, 3, 3)) / (1.0 + k) ** 2
        out += np.cos(k * x)[:, None, None] * c + np.sin(k * x)[:, None, None] * s
    return Mat3Field(grid, mat3.sym(out))


@dataclass
class LinearizationReport:
    err_coarse: float
    err_fine: float
    ratio: float
    symbol_null: float
    symbol_homogeneity: float


def linearization_report(alpha, beta, eps=(1e-3, 1e-4), scheme="spectral", xi=1.0):
    """Finite-difference check of :func:`linearize` plus the symbol identities.

    ``ratio`` is the coarse error over the fine one (100 for clean second
    order with a factor-10 step reduction).  The symbol entries are sup-norm
    residuals of ``sigma(xi)(alpha) = 0`` and ``sigma(2 xi) = 4 sigma(xi)``
    over all nodes.
    """
    lin = linearize(alpha, beta, scheme).values
    errs = [float(np.max(np.abs(fd_linearization(alpha, beta, e, scheme) - lin))) for e in eps]
    a = alpha.values
    b = mat3.sym(beta.values)
    null = float(np.max(np.abs(principal_symbol(a, xi, a))))
    homog = float(
        np.max(np.abs(principal_symbol(a, 2 * xi, b) - 4.0 * principal_symbol(a, xi, b)))
    )
    ratio = errs[0] / errs[1] if errs[1] > 0 else np.inf
    return LinearizationReport(errs[0], errs[1], ratio, null, homog)
