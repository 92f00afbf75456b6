"""Pointwise 3x3 matrix algebra.

Every function accepts arrays with arbitrary leading batch dimensions, so a
single matrix has shape ``(3, 3)`` and a field sampled on ``N`` nodes has
shape ``(N, 3, 3)``.  Vectors have trailing shape ``(3,)``.

The skew <-> vector correspondence used throughout is

    vec(S) = (S[1, 2], S[2, 0], S[0, 1])      # (S_23, S_31, S_12)

which is the convention of the adapted coframe.
"""

import numpy as np

from .errors import ConstraintViolated, NotPositiveDefinite


def sym(m):
    """Symmetric part ``(M + M^T) / 2``."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def skew_to_vec(s):
    s = np.asarray(s, dtype=float)
    return np.stack([s[..., 1, 2], s[..., 2, 0], s[..., 0, 1]], axis=-1)


def vec_to_skew(v):
    v = np.asarray(v, dtype=float)
    z = np.zeros(v.shape[:-1])
    v1, v2, v3 = v[..., 0], v[..., 1], v[..., 2]
    rows = [
        np.stack([z, v3, -v2], axis=-1),
        np.stack([-v3, z, v1], axis=-1),
        np.stack([v2, -v1, z], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def split(m):
    """Split ``M`` into its symmetric part and the vector of its skew part.

    Returns
    -------
    beta : ndarray (..., 3, 3)
        ``(M + M^T) / 2``.
    gamma_vec : ndarray (..., 3)
        ``(g_23, g_31, g_12)`` where ``g = (M - M^T) / 2``.
    """
    m = np.asarray(m, dtype=float)
    beta = sym(m)
    gamma = 0.5 * (m - np.swapaxes(m, -1, -2))
    return beta, skew_to_vec(gamma)


def join(beta, gamma_vec):
    """Inverse of :func:`split`: ``beta + skew(gamma_vec)``."""
    return np.asarray(beta, dtype=float) + vec_to_skew(gamma_vec)


def det3(m):
    """Determinant by cofactor expansion along the first row."""
    m = np.asarray(m, dtype=float)
    a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
    d, e, f = m[..., 1, 0], m[..., 1, 1], m[..., 1, 2]
    g, h, i = m[..., 2, 0], m[..., 2, 1], m[..., 2, 2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def det_split(m):
    """Both sides of ``det M = det(beta) + gamma^T beta gamma``.

    Returns ``(lhs, rhs)``; the caller compares them.
    """
    beta, g = split(m)
    lhs = det3(m)
    rhs = det3(beta) + np.einsum("...i,...ij,...j->...", g, beta, g)
    return lhs, rhs


def ldl_pivots(m):
    """Pivots of the symmetric LDL^T factorization of ``sym(M)``.

    The matrix is positive definite iff all three pivots are positive.
    Non-finite pivots appear where an earlier pivot is zero.
    """
    s = sym(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = s[..., 0, 0]
        l21 = s[..., 1, 0] / d1
        l31 = s[..., 2, 0] / d1
        d2 = s[..., 1, 1] - l21 * s[..., 1, 0]
        l32 = (s[..., 2, 1] - l31 * s[..., 1, 0]) / d2
        d3 = s[..., 2, 2] - l31 * s[..., 2, 0] - l32 * l32 * d2
    return np.stack([d1, d2, d3], axis=-1)


def is_positive_definite(m):
    """Elementwise (over the batch) positive-definiteness flag."""
    p = ldl_pivots(m)
    with np.errstate(invalid="ignore"):
        return np.all(p > 0, axis=-1)


def require_positive_definite(m, what="matrix"):
    if not np.all(is_positive_definite(m)):
        raise NotPositiveDefinite(f"{what} is not positive definite")


def inv3(m):
    """Inverse via the adjugate; exact symmetry is kept for symmetric input."""
    m = np.asarray(m, dtype=float)
    a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
    d, e, f = m[..., 1, 0], m[..., 1, 1], m[..., 1, 2]
    g, h, i = m[..., 2, 0], m[..., 2, 1], m[..., 2, 2]
    adj = np.stack(
        [
            np.stack([e * i - f * h, c * h - b * i, b * f - c * e], axis=-1),
            np.stack([f * g - d * i, a * i - c * g, c * d - a * f], axis=-1),
            np.stack([d * h - e * g, b * g - a * h, a * e - b * d], axis=-1),
        ],
        axis=-2,
    )
    return adj / det3(m)[..., None, None]


def inner_alpha(alpha, b, c, check=True):
    """The symmetric-space metric ``tr(alpha^-1 b alpha^-1 c)``."""
    alpha = np.asarray(alpha, dtype=float)
    if check:
        require_positive_definite(alpha, "alpha")
    ai = inv3(alpha)
    return np.einsum("...ij,...jk,...kl,...li->...", ai, b, ai, c)


def inv_sqrt_sym(q):
    """``Q^{-1/2}`` for symmetric positive-definite ``Q`` (by eigendecomposition)."""
    w, u = np.linalg.eigh(np.asarray(q, dtype=float))
    if np.any(w <= 0):
        raise NotPositiveDefinite("Q is not positive definite")
    return np.einsum("...ij,...j,...kj->...ik", u, 1.0 / np.sqrt(w), u)


def _tr(m):
    return np.trace(m, axis1=-2, axis2=-1)


def _check_ab(a, b, rtol):
    nb = np.linalg.norm(b, axis=(-2, -1))
    na = np.linalg.norm(a, axis=(-2, -1))
    b2 = b @ b
    if np.any(np.abs(_tr(b)) > rtol * nb):
        raise ConstraintViolated("tr B must vanish")
    if np.any(np.abs(_tr(a) - _tr(b2)) > rtol * (na + nb**2)):
        raise ConstraintViolated("tr A must equal tr B^2")


def trace_gap(a, b, rtol=1e-12, check=True):
    """Right side minus left side of the trace inequality for ``(A, B)``.

    For symmetric ``A, B`` with ``tr B = 0`` and ``tr A = tr B^2`` the value
    is non-negative.  ``rtol`` scales the tolerance on both constraints.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if check:
        _check_ab(a, b, rtol)
    b2 = b @ b
    trb2 = _tr(b2)
    trb3 = _tr(b2 @ b)
    trb4 = _tr(b2 @ b2)
    trab = _tr(a @ b)
    trab2 = _tr(a @ b2)
    tra2 = _tr(a @ a)
    lhs = (
        trab**2
        - 4.0 * trab * trb3
        + 3.0 * trb3**2
        + 4.0 * trab2 * trb2
        - tra2 * trb2
        - 3.0 * trb4 * trb2
    )
    return trb2**3 / 6.0 - lhs


def reduced_trace_gap(a_tilde, b):
    """Same gap written in terms of ``A~ = A - B^2`` (trace-free ``A~``, ``B``)."""
    at = np.asarray(a_tilde, dtype=float)
    b = np.asarray(b, dtype=float)
    b2 = b @ b
    trb2 = _tr(b2)
    tatb = _tr(at @ b)
    lhs = tatb**2 - 2.0 * tatb * _tr(b2 @ b) + 2.0 * _tr(at @ b2) * trb2 - _tr(at @ at) * trb2
    return trb2**3 / 6.0 - lhs


def sos_certificate(x, y, atol=1e-12):
    """Diagonal gap evaluated directly and as a sum of two squares.

    ``x`` and ``y`` are the diagonals of trace-free ``A~_d`` and ``B``.

    Returns
    -------
    gap_direct, gap_sos : ndarray
        They agree identically; the second is manifestly non-negative.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = 1.0 + np.abs(x).sum(axis=-1) + np.abs(y).sum(axis=-1)
    if np.any(np.abs(x.sum(axis=-1)) > atol * scale) or np.any(
        np.abs(y.sum(axis=-1)) > atol * scale
    ):
        raise ConstraintViolated("diagonals must be trace-free")
    sx2 = (x * x).sum(axis=-1)
    sy2 = (y * y).sum(axis=-1)
    sxy = (x * y).sum(axis=-1)
    sy3 = (y**3).sum(axis=-1)
    sxy2 = (x * y * y).sum(axis=-1)
    direct = sx2 * sy2 + sy2**3 / 6.0 - sxy**2 + 2.0 * sxy * sy3 - 2.0 * sxy2 * sy2
    x1, x2 = x[..., 0], x[..., 1]
    y1, y2 = y[..., 0], y[..., 1]
    first = (x1 * y2 - x2 * y1) - (y1 + 2 * y2) * (2 * y1 + y2) * (y1 - y2) / 3.0
    sos = 3.0 * first**2 + 9.0 * y1**2 * y2**2 * (y1 + y2) ** 2
    return direct, sos
