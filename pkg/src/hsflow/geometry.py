"""Geometry of a T^3-invariant triple in normal form.

A triple in normal form is

    omega_i = alpha_ij(x0) dx0 ^ dx_j + (1/2) eps_ipq dx_p ^ dx_q

and everything here is computed from the coefficient matrix ``alpha`` (and,
for torsion, its ``x0``-derivative).  Pointwise functions broadcast over
leading batch dimensions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import mat3
from .circle import Mat3Field, ScalarField, deriv_array, same_grid
from .errors import ConstraintViolated, NotAFrame, NotPositiveDefinite

EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


@dataclass
class GeometrySample:
    alpha: np.ndarray
    V: float
    Q: np.ndarray
    gamma_vec: np.ndarray
    g: np.ndarray
    tau: np.ndarray
    scalar_torsion: float
    # coefficient of the volume form mu = V dx0123
    mu: float = field(init=False)

    def __post_init__(self):
        self.mu = self.V


@dataclass
class InvariantTripleRaw:
    """An invariant triple before normalization.

    ``a`` has shape ``(N, 3, 3)`` with ``a[:, i, j]`` the coefficient of
    ``dx0 ^ dx_j`` in ``omega_i``; ``eta[i, p, q]`` is the constant skew matrix
    of ``omega_i`` on ``dx_p ^ dx_q`` (summed over all ``p, q``).
    """

    grid: object
    a: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.a = Mat3Field(self.grid, self.a).values
        self.eta = np.asarray(self.eta, dtype=float)
        if self.eta.shape != (3, 3, 3):
            raise ValueError("eta must have shape (3, 3, 3)")
        if np.any(self.eta != -np.swapaxes(self.eta, 1, 2)):
            raise ConstraintViolated("each eta_i must be exactly skew")


def volume_and_q(beta):
    """``V = (det beta)^(1/3)`` and ``Q = beta / V``."""
    d = mat3.det3(beta)
    if np.any(d <= 0):
        raise NotPositiveDefinite("det beta <= 0")
    v = np.cbrt(d)
    return v, beta / v[..., None, None]


def q_prime(beta, beta_prime):
    """``x0``-derivatives ``(V', Q')`` from ``beta`` and ``beta'``."""
    v, q = volume_and_q(beta)
    bi = mat3.inv3(beta)
    vp = v * np.einsum("...ij,...ji->...", bi, beta_prime) / 3.0
    qp = beta_prime / v[..., None, None] - (vp / v**2)[..., None, None] * beta
    return vp, qp


def scalar_torsion(q, qp, v):
    """``V^-2 tr((Q^-1 Q')^2)``."""
    m = mat3.inv3(q) @ qp
    return np.einsum("...ij,...ji->...", m, m) / v**2


def metric_coordinate(alpha):
    """4x4 metric in coordinates ``(x0, x1, x2, x3)`` from the coordinate formula."""
    alpha = np.asarray(alpha, dtype=float)
    beta, gv = mat3.split(alpha)
    v, _ = volume_and_q(beta)
    g = np.zeros(alpha.shape[:-2] + (4, 4))
    g[..., 0, 0] = mat3.det3(alpha)
    cross = -np.einsum("...ij,...j->...i", beta, gv)
    g[..., 0, 1:] = cross
    g[..., 1:, 0] = cross
    g[..., 1:, 1:] = beta
    return g / v[..., None, None]


def metric_coframe(alpha):
    """Same metric assembled as ``V^2 th0^2 + Q_ij th_i th_j``.

    The adapted coframe is ``th0 = dx0``, ``th_i = dx_i - gamma_vec_i dx0``.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta, gv = mat3.split(alpha)
    v, q = volume_and_q(beta)
    c = np.zeros(alpha.shape[:-2] + (4, 4))
    c[..., 0, 0] = 1.0
    c[..., 1:, 0] = -gv
    c[..., 1:, 1:] = np.eye(3)
    blk = np.zeros_like(c)
    blk[..., 0, 0] = v**2
    blk[..., 1:, 1:] = q
    return np.swapaxes(c, -1, -2) @ blk @ c


def torsion_via_metric(alpha, alpha_prime):
    """``Q^ij <tau_i, tau_j>_g`` with the inner product taken from ``g^-1``.

    Independent of :func:`scalar_torsion`; used as a cross-check.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta, gv = mat3.split(alpha)
    v, q = volume_and_q(beta)
    _, qp = q_prime(beta, mat3.sym(alpha_prime))
    coef = qp / v[..., None, None]
    # tau_i = coef_ij (dx_j - gv_j dx0) in coordinate components
    tau = np.zeros(alpha.shape[:-2] + (3, 4))
    tau[..., :, 0] = -np.einsum("...ij,...j->...i", coef, gv)
    tau[..., :, 1:] = coef
    ginv = np.linalg.inv(metric_coordinate(alpha))
    gram = np.einsum("...ia,...ab,...jb->...ij", tau, ginv, tau)
    return np.einsum("...ij,...ij->...", mat3.inv3(q), gram)


def geometry_at(alpha, alpha_prime):
    """Derived geometry at one point from ``alpha`` and ``d alpha / d x0``."""
    alpha = np.asarray(alpha, dtype=float)
    beta, gv = mat3.split(alpha)
    mat3.require_positive_definite(beta, "beta")
    v, q = volume_and_q(beta)
    _, qp = q_prime(beta, mat3.sym(alpha_prime))
    return GeometrySample(
        alpha=alpha,
        V=v,
        Q=q,
        gamma_vec=gv,
        g=metric_coordinate(alpha),
        tau=qp / v[..., None, None],
        scalar_torsion=scalar_torsion(q, qp, v),
    )


def is_hypersymplectic(alpha):
    """``(ok, margin)`` where margin is the smallest eigenvalue of ``beta``."""
    values = alpha.values if hasattr(alpha, "values") else np.asarray(alpha)
    margin = float(np.min(np.linalg.eigvalsh(mat3.sym(values))))
    return margin > 0, margin


def normalize_triple(raw):
    """Bring an invariant triple to normal form by a constant linear map.

    Returns ``(A, alpha)`` where ``omega~_i = A_ij omega_j`` has standard
    constant part and coefficient field ``alpha = A a`` (nodewise).
    """
    eta = raw.eta
    frame = np.stack([eta[:, 1, 2], eta[:, 2, 0], eta[:, 0, 1]], axis=-1)
    s = np.linalg.svd(frame, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise NotAFrame("the constant parts eta_i are linearly dependent")
    a_mat = 0.5 * np.linalg.inv(frame)
    alpha = np.einsum("ik,nkj->nij", a_mat, raw.a)
    return a_mat, Mat3Field(raw.grid, alpha)


def laplacian_values(f, v, grid, scheme="spectral"):
    """Array form of :func:`invariant_laplacian`; ``f`` may carry trailing axes."""
    w = v.reshape((-1,) + (1,) * (f.ndim - 1))
    inner = deriv_array(f, grid, 1, scheme) / w
    return deriv_array(inner, grid, 1, scheme) / w


def invariant_laplacian(f, v, scheme="spectral"):
    """``V^-1 (V^-1 f')'`` for an invariant function (or matrix field) ``f``."""
    grid = same_grid(f, v)
    if np.min(v.values) <= 0:
        raise NotPositiveDefinite("volume factor must be positive")
    return type(f)(grid, laplacian_values(f.values, v.values, grid, scheme))


def export_g2(sample):
    """Coefficients of the 7-dimensional 3-form and its metric.

    Coordinates are ``(t1, t2, t3, x0, x1, x2, x3)``.  The returned table maps
    increasing index triples (as label tuples) to coefficients; ``g7`` is
    ``blockdiag(Q, g)``.
    """
    alpha = sample.alpha
    phi = {("t1", "t2", "t3"): 1.0}
    for i in range(3):
        for j in range(3):
            if alpha[i, j] != 0.0:
                phi[(f"t{i + 1}", "x0", f"x{j + 1}")] = -float(alpha[i, j])
        for p in range(3):
            for q in range(p + 1, 3):
                if EPS[i, p, q] != 0.0:
                    phi[(f"t{i + 1}", f"x{p + 1}", f"x{q + 1}")] = -float(EPS[i, p, q])
    g7 = np.zeros((7, 7))
    g7[:3, :3] = sample.Q
    g7[3:, 3:] = sample.g
    return phi, g7
