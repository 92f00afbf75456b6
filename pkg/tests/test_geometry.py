import numpy as np
import pytest

from hsflow import mat3
from hsflow.circle import CircleGrid, Mat3Field, ScalarField
from hsflow.errors import GridMismatch, NotAFrame, NotPositiveDefinite
from hsflow.geometry import (
    EPS,
    InvariantTripleRaw,
    export_g2,
    geometry_at,
    invariant_laplacian,
    is_hypersymplectic,
    metric_coframe,
    metric_coordinate,
    normalize_triple,
    scalar_torsion,
    torsion_via_metric,
    volume_and_q,
)

from conftest import random_spd


def test_constant_sample():
    s = geometry_at(np.diag([1.0, 2.0, 3.0]), np.zeros((3, 3)))
    c = 6 ** (1 / 3)
    assert s.V == pytest.approx(c, rel=1e-15)
    assert np.allclose(s.Q, np.diag([1.0, 2.0, 3.0]) / c, rtol=1e-15)
    assert np.array_equal(s.tau, np.zeros((3, 3)))
    assert s.scalar_torsion == 0.0
    assert s.mu == s.V


def test_cosine_slice_torsion():
    s = geometry_at(np.eye(3), np.diag([-0.5, 0.0, 0.0]))
    assert s.scalar_torsion == pytest.approx(1 / 6, rel=1e-14)
    assert np.allclose(s.tau, np.diag([-1 / 3, 1 / 6, 1 / 6]), atol=1e-15)


def test_skew_metric_example():
    s = geometry_at(np.eye(3) + mat3.vec_to_skew([1.0, 0, 0]), np.zeros((3, 3)))
    assert s.g[0, 0] == pytest.approx(2.0)
    assert s.g[0, 1] == pytest.approx(-1.0)
    assert s.g[1, 1] == pytest.approx(1.0)


def test_block_diagonal_when_symmetric(rng):
    a = random_spd(rng)
    g = metric_coordinate(a)
    v = np.cbrt(np.linalg.det(a))
    assert np.allclose(g[0, 1:], 0.0)
    assert g[0, 0] == pytest.approx(v**2)


def test_metric_assemblies_agree(rng):
    a = random_spd(rng, 500) + mat3.vec_to_skew(rng.standard_normal((500, 3)))
    gc, gf = metric_coordinate(a), metric_coframe(a)
    assert np.max(np.abs(gc - gf)) <= 1e-12 * np.max(np.abs(gc))
    # positive definite whenever beta is
    assert np.all(np.linalg.eigvalsh(gc) > 0)


def test_det_q_is_one(rng):
    _, q = volume_and_q(random_spd(rng, 500))
    assert np.max(np.abs(np.linalg.det(q) - 1.0)) <= 1e-13


def test_torsion_metric_crosscheck(rng):
    a = random_spd(rng, 200) + mat3.vec_to_skew(rng.standard_normal((200, 3)))
    ap = rng.standard_normal((200, 3, 3))
    s = geometry_at(a, ap)
    other = torsion_via_metric(a, ap)
    assert np.allclose(s.scalar_torsion, other, rtol=1e-11, atol=1e-13)
    assert np.all(s.scalar_torsion >= 0)


def test_torsion_zero_iff_q_prime_zero(rng):
    a = random_spd(rng)
    # beta' proportional to beta changes V only
    s = geometry_at(a, 0.7 * a)
    assert abs(s.scalar_torsion) <= 1e-12
    assert np.max(np.abs(s.tau)) <= 1e-12
    s = geometry_at(a, np.diag([1.0, 0.0, 0.0]))
    assert s.scalar_torsion > 1e-6


def test_q_prime_matches_finite_difference(rng):
    a = random_spd(rng)
    ap = mat3.sym(rng.standard_normal((3, 3)))
    h = 1e-6
    qp = (volume_and_q(a + h * ap)[1] - volume_and_q(a - h * ap)[1]) / (2 * h)
    s = geometry_at(a, ap)
    assert np.allclose(s.tau * s.V, qp, atol=1e-8)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        geometry_at(np.diag([1.0, -1.0, 1.0]), np.zeros((3, 3)))


def test_is_hypersymplectic_examples():
    g = CircleGrid(64)
    eye = np.broadcast_to(np.eye(3), (64, 3, 3)).copy()
    assert is_hypersymplectic(Mat3Field(g, eye)) == (True, 1.0)
    a = eye.copy()
    a[:, 0, 0] = 1 + np.cos(g.x)
    ok, margin = is_hypersymplectic(Mat3Field(g, a))
    assert not ok and margin == pytest.approx(0.0, abs=1e-15)
    b = 0.1 * eye + mat3.vec_to_skew([5.0, 0, 0])
    ok, margin = is_hypersymplectic(Mat3Field(g, b))
    assert ok and margin == pytest.approx(0.1, rel=1e-12)


def _standard_eta():
    return 0.5 * EPS.copy()


def test_normalize_identity():
    g = CircleGrid(16)
    a = np.random.default_rng(0).standard_normal((16, 3, 3))
    amat, alpha = normalize_triple(InvariantTripleRaw(g, a, _standard_eta()))
    assert np.allclose(amat, np.eye(3))
    assert np.allclose(alpha.values, a)


def test_normalize_swapped():
    g = CircleGrid(16)
    eta = _standard_eta()[[1, 0, 2]]
    amat, alpha = normalize_triple(InvariantTripleRaw(g, np.zeros((16, 3, 3)), eta))
    perm = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 1]])
    assert np.allclose(amat, perm)
    # the transformed constant parts are standard
    assert np.allclose(np.einsum("ij,jpq->ipq", amat, eta), _standard_eta())


def test_normalize_general_frame(rng):
    g = CircleGrid(16)
    m = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    eta = np.einsum("ij,jpq->ipq", m, _standard_eta())
    a = rng.standard_normal((16, 3, 3))
    amat, alpha = normalize_triple(InvariantTripleRaw(g, a, eta))
    assert np.allclose(np.einsum("ij,jpq->ipq", amat, eta), _standard_eta(), atol=1e-12)
    assert np.allclose(alpha.values, np.einsum("ij,njk->nik", amat, a))


def test_normalize_dependent():
    eta = _standard_eta()
    eta[1] = eta[0]
    with pytest.raises(NotAFrame):
        normalize_triple(InvariantTripleRaw(CircleGrid(8), np.zeros((8, 3, 3)), eta))


def test_invariant_laplacian_examples():
    g = CircleGrid(64)
    f = ScalarField(g, np.cos(g.x))
    one = ScalarField(g, np.ones(64))
    assert np.allclose(invariant_laplacian(f, one).values, -np.cos(g.x), atol=1e-12)
    two = ScalarField(g, 2 * np.ones(64))
    assert np.allclose(invariant_laplacian(f, two).values, -np.cos(g.x) / 4, atol=1e-12)
    v = ScalarField(g, 1 + 0.5 * np.cos(g.x))
    lap = invariant_laplacian(ScalarField(g, np.sin(g.x)), v)
    assert abs(lap.values[0]) <= 1e-12
    # closed form V^-2 f'' - V^-3 V' f'
    vv, vp = v.values, -0.5 * np.sin(g.x)
    exact = -np.sin(g.x) / vv**2 - vp * np.cos(g.x) / vv**3
    assert np.allclose(lap.values, exact, atol=1e-10)


def test_invariant_laplacian_errors():
    g = CircleGrid(16)
    f = ScalarField(g, np.zeros(16))
    with pytest.raises(NotPositiveDefinite):
        invariant_laplacian(f, ScalarField(g, -np.ones(16)))
    with pytest.raises(GridMismatch):
        invariant_laplacian(f, ScalarField(CircleGrid(32), np.ones(32)))


def test_export_g2_identity():
    phi, g7 = export_g2(geometry_at(np.eye(3), np.zeros((3, 3))))
    assert np.allclose(g7, np.eye(7))
    assert phi[("t1", "t2", "t3")] == 1.0
    assert phi[("t1", "x0", "x1")] == -1.0
    assert phi[("t1", "x2", "x3")] == -1.0


def test_export_g2_diag():
    a = np.diag([1.0, 2.0, 3.0])
    s = geometry_at(a, np.zeros((3, 3)))
    phi, g7 = export_g2(s)
    assert np.allclose(g7[:3, :3], np.diag([1.0, 2.0, 3.0]) / 6 ** (1 / 3))
    assert np.allclose(g7[3:, 3:], s.g)
    assert phi[("t2", "x0", "x2")] == -2.0
    assert phi[("t1", "x0", "x1")] == -a[0, 0]


def test_scalar_torsion_scaling(rng):
    q = volume_and_q(random_spd(rng))[1]
    qp = mat3.sym(rng.standard_normal((3, 3)))
    assert scalar_torsion(q, qp, 2.0) == pytest.approx(scalar_torsion(q, qp, 1.0) / 4)
