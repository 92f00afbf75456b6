"""Randomized checks of the pointwise matrix identities and inequalities.

Each suite draws ``trials`` samples from a seeded generator, evaluates them
in one vectorized batch and reports ``(ok, worst)`` where ``worst`` is the
largest normalized error (or, for the inequality, the most negative gap).
"""

import numpy as np
from scipy.spatial.transform import Rotation

from . import mat3

DET_SPLIT_RTOL = 1e-12
GAP_FLOOR = -1e-10
SOS_TOL = 1e-10
EQUIVARIANCE_TOL = 1e-12


def _sym_tracefree(rng, n):
    m = mat3.sym(rng.standard_normal((n, 3, 3)))
    tr = np.trace(m, axis1=1, axis2=2)
    return m - (tr / 3.0)[:, None, None] * np.eye(3)


def fuzz_det_split(rng, trials):
    """``det M = det beta + gamma^T beta gamma`` for entries in ``[-1, 1]``."""
    m = rng.uniform(-1.0, 1.0, (trials, 3, 3))
    lhs, rhs = mat3.det_split(m)
    worst = float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))))
    return worst <= DET_SPLIT_RTOL, worst


def fuzz_trace_gap(rng, trials):
    """Gap on the constraint set ``tr B = 0``, ``tr A = tr B^2`` with ``|B|_F = 1``."""
    b = _sym_tracefree(rng, trials)
    b /= np.linalg.norm(b, axis=(1, 2))[:, None, None]
    scale = rng.uniform(0.0, 3.0, (trials, 1, 1))
    a = b @ b + scale * _sym_tracefree(rng, trials)
    gap = mat3.trace_gap(a, b, rtol=1e-10)
    worst = float(np.min(gap))
    return worst >= GAP_FLOOR, worst


def fuzz_sos(rng, trials):
    """Direct diagonal gap against its sum-of-squares form."""
    x = rng.standard_normal((trials, 3))
    y = rng.standard_normal((trials, 3))
    x -= x.mean(axis=1, keepdims=True)
    y -= y.mean(axis=1, keepdims=True)
    direct, sos = mat3.sos_certificate(x, y)
    worst = float(np.max(np.abs(direct - sos) / (1.0 + np.abs(direct))))
    return worst <= SOS_TOL, worst


def fuzz_equivariance(rng, trials):
    """``vec(P S P^T) = P vec(S)`` for rotations ``P`` and skew ``S``."""
    p = Rotation.random(trials, random_state=rng).as_matrix()
    v = rng.standard_normal((trials, 3))
    s = mat3.vec_to_skew(v)
    lhs = mat3.skew_to_vec(p @ s @ np.swapaxes(p, 1, 2))
    rhs = np.einsum("nij,nj->ni", p, v)
    worst = float(np.max(np.abs(lhs - rhs) / (1.0 + np.linalg.norm(v, axis=1))[:, None]))
    return worst <= EQUIVARIANCE_TOL, worst


SUITES = {
    "det_split": fuzz_det_split,
    "trace_gap": fuzz_trace_gap,
    "sos_certificate": fuzz_sos,
    "so3_equivariance": fuzz_equivariance,
}


def run_all(seed, trials):
    """Run every suite; each gets its own generator spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    return {
        name: fn(np.random.default_rng(ss), trials)
        for (name, fn), ss in zip(SUITES.items(), children)
    }
