import math

import numpy as np
import pytest

from hsflow import mat3
from hsflow.circle import CircleGrid, Mat3Field, ScalarField, integrate
from hsflow.errors import ConstraintViolated, NotPositiveDefinite, UnstableStep
from hsflow.flow import (
    FlowConfig,
    FlowState,
    advance,
    evolve_qv_step,
    expanded_rhs_arrays,
    integrate_to,
    pack,
    rhs_conservative,
    rhs_expanded,
    run,
    stable_dt,
    unpack,
)

from conftest import constant_field, cosine_alpha


def test_pack_roundtrip(rng):
    s = mat3.sym(rng.standard_normal((5, 3, 3)))
    assert np.array_equal(unpack(pack(s)), s)


def test_config_validation():
    for kw in ({"N": -3}, {"N": 63}, {"scheme": "weno"}, {"cfl_safety": 1.5}, {"t_end": 0}):
        with pytest.raises(ValueError):
            FlowConfig(**kw)


def test_rhs_constant_is_zero(rng):
    m = mat3.sym(rng.standard_normal((3, 3))) + 4 * np.eye(3) + mat3.vec_to_skew([0.3, 0.1, 0])
    state = FlowState.from_alpha(constant_field(32, m))
    assert np.array_equal(rhs_conservative(state).values, np.zeros((32, 3, 3)))


def test_rhs_cosine_value():
    state = FlowState.from_alpha(cosine_alpha(128))
    r = rhs_conservative(state).values[32]  # x0 = pi / 2
    assert np.allclose(r, np.diag([-1 / 9, 5 / 36, 5 / 36]), atol=1e-12)
    assert np.array_equal(r, r.T)


def test_rhs_matches_fine_finite_difference():
    # second-order differences on a fine grid as an independent oracle
    n = 4096
    state = FlowState.from_alpha(cosine_alpha(n))
    b = state.beta
    v = np.cbrt(mat3.det3(b))[:, None, None]
    h = 2 * np.pi / n
    q = b / v
    flux = (np.roll(q, -1, axis=0) - q) / h / (0.5 * (v + np.roll(v, -1, axis=0)))
    fd = (flux - np.roll(flux, 1, axis=0)) / h
    assert np.max(np.abs(fd - rhs_conservative(state).values)) <= 1e-5


def test_rhs_ignores_skew_part():
    base = cosine_alpha(64)
    skew = base.values + mat3.vec_to_skew(
        np.stack([0.2 * np.sin(base.grid.x), 0 * base.grid.x, 0.1 + 0 * base.grid.x], axis=1)
    )
    r1 = rhs_conservative(FlowState.from_alpha(base)).values
    r2 = rhs_conservative(FlowState.from_alpha(Mat3Field(base.grid, skew))).values
    assert np.array_equal(r1, r2)


def test_expanded_pointwise_example():
    a = np.eye(3)
    out = expanded_rhs_arrays(a, np.zeros((3, 3)), np.diag([-1.0, 0.0, 0.0]))
    assert np.allclose(out, np.diag([-2 / 3, 1 / 3, 1 / 3]), atol=1e-15)


def test_expanded_matches_conservative():
    errs = []
    for n in (64, 256):
        s = FlowState.from_alpha(cosine_alpha(n))
        errs.append(np.max(np.abs(rhs_expanded(s).values - rhs_conservative(s).values)))
    assert errs[1] <= 1e-8


def test_expanded_on_offdiagonal_data(rng):
    g = CircleGrid(256)
    a = np.zeros((256, 3, 3))
    a[:, 0, 0] = 1 + 0.3 * np.cos(g.x)
    a[:, 1, 1] = 1.5 + 0.2 * np.sin(2 * g.x)
    a[:, 2, 2] = 1.0
    a[:, 0, 2] = a[:, 2, 0] = 0.2 * np.sin(g.x)
    s = FlowState.from_alpha(Mat3Field(g, a))
    assert np.max(np.abs(rhs_expanded(s).values - rhs_conservative(s).values)) <= 1e-8


def test_expanded_rejects_skew():
    a = cosine_alpha(32).values + mat3.vec_to_skew([0.1, 0, 0])
    with pytest.raises(ConstraintViolated):
        rhs_expanded(FlowState.from_alpha(Mat3Field(CircleGrid(32), a)))


def test_discrete_conservation():
    s = FlowState.from_alpha(cosine_alpha(128))
    r = rhs_conservative(s)
    assert np.max(np.abs(integrate(r))) <= 1e-13 * np.max(np.abs(s.alpha))


def test_stable_dt_examples():
    s = FlowState.from_alpha(constant_field(64, np.eye(3)))
    expected = 0.25 * (2 * np.pi / 64) ** 2 / 2
    assert stable_dt(s, FlowConfig(N=64)) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1.204e-3, rel=1e-3)
    half = FlowState.from_alpha(constant_field(64, np.diag([0.125, 1.0, 1.0])))
    assert stable_dt(half, FlowConfig(N=64)) == pytest.approx(expected / 4, rel=1e-14)
    assert stable_dt(s, FlowConfig(N=64, dt_max=1e-5)) == 1e-5


def test_fixed_point_is_stationary():
    a0 = constant_field(64, np.diag([1.0, 2.0, 3.0]))
    s = FlowState.from_alpha(a0)
    dt = stable_dt(s, FlowConfig(N=64))
    for _ in range(1000):
        s = advance(s, dt)
    assert np.max(np.abs(s.alpha - a0.values)) <= 1e-12


def test_rk4_order():
    s = FlowState.from_alpha(cosine_alpha(32))
    diffs = []
    for dt in (4e-3, 2e-3):
        one = advance(s, dt, filtered=False).beta
        two = advance(advance(s, dt / 2, filtered=False), dt / 2, filtered=False).beta
        diffs.append(np.max(np.abs(one - two)))
    # local error of RK4 scales as dt^5
    assert 24 < diffs[0] / diffs[1] < 40


def test_determinism():
    s = FlowState.from_alpha(cosine_alpha(64))
    cfg = FlowConfig(N=64)
    a = integrate_to(s, 0.05, cfg)
    b = integrate_to(s, 0.05, cfg)
    assert np.array_equal(a.beta, b.beta)


def test_skew_preserved_bitwise():
    g = CircleGrid(64)
    a = cosine_alpha(64).values + mat3.vec_to_skew(
        np.stack([0.2 * np.sin(g.x), 0 * g.x, 0 * g.x], axis=1)
    )
    s0 = FlowState.from_alpha(Mat3Field(g, a))
    s = integrate_to(s0, 0.05, FlowConfig(N=64))
    assert np.array_equal(s.gamma_vec, s0.gamma_vec)


def test_integrate_to_hits_target():
    s = integrate_to(FlowState.from_alpha(cosine_alpha(32)), 0.0123, FlowConfig(N=32))
    assert s.t == 0.0123


def test_run_constant_converges_immediately():
    res = run(FlowConfig(N=64), constant_field(64, np.diag([1.0, 2.0, 3.0])))
    assert res.converged and res.t_final == 0.0
    assert len(res.records) == 1


def test_run_rejects_degenerate_data():
    g = CircleGrid(64)
    a = cosine_alpha(64).values
    a[:, 0, 0] = np.cos(g.x)
    with pytest.raises(NotPositiveDefinite):
        run(FlowConfig(N=64), Mat3Field(g, a))


def test_run_short_cosine():
    res = run(FlowConfig(N=64, t_end=0.3, output_every=0.1), cosine_alpha(64))
    assert [round(r.t, 12) for r in res.records] == [0.0, 0.1, 0.2, 0.3]
    assert not res.converged
    assert res.records[-1].cohom_drift_max <= 1e-12


def test_unstable_step_reported():
    s = FlowState.from_alpha(cosine_alpha(32))
    with pytest.raises((UnstableStep, NotPositiveDefinite)):
        for _ in range(50):
            s = advance(s, 1.0)


def test_filter_needed_for_long_spectral_runs():
    s0 = FlowState.from_alpha(cosine_alpha(128))
    filtered = integrate_to(s0, 0.5, FlowConfig(N=128))
    v0 = np.cbrt(mat3.det3(s0.beta))
    assert np.all(np.cbrt(mat3.det3(filtered.beta)) >= v0 - 1e-10)
    with pytest.raises((UnstableStep, NotPositiveDefinite)):
        cfg = FlowConfig(N=128, spectral_filter=False, dt_max=1e-4)
        # high modes grow from round-off until beta degenerates
        integrate_to(s0, 1.0, cfg)


def _qv(alpha):
    v = np.cbrt(mat3.det3(alpha.values))
    return Mat3Field(alpha.grid, alpha.values / v[:, None, None]), ScalarField(alpha.grid, v)


def test_qv_constant_unchanged():
    q, v = _qv(constant_field(32, np.diag([1.0, 2.0, 3.0])))
    q2, v2 = evolve_qv_step(q, v, 1e-3)
    assert np.allclose(q2.values, q.values, atol=1e-15)
    assert np.array_equal(v2.values, v.values)


def test_qv_matches_alpha_scheme_short():
    alpha = cosine_alpha(64)
    q, v = _qv(alpha)
    cfg = FlowConfig(N=64, spectral_filter=False)
    steps = []
    s = integrate_to(FlowState.from_alpha(alpha), 0.2, cfg, on_step=lambda t, dt: steps.append(dt))
    for dt in steps:
        q, v = evolve_qv_step(q, v, dt)
    qa = s.beta / np.cbrt(mat3.det3(s.beta))[:, None, None]
    assert np.max(np.abs(qa - q.values)) <= 1e-9
    assert np.max(np.abs(mat3.det3(q.values) - 1)) <= 1e-6


def test_qv_renormalize_and_checks():
    q, v = _qv(cosine_alpha(32))
    q2, _ = evolve_qv_step(q, v, 1e-3, renormalize=True)
    assert np.max(np.abs(mat3.det3(q2.values) - 1)) <= 1e-14
    with pytest.raises(ConstraintViolated):
        evolve_qv_step(Mat3Field(q.grid, 2 * q.values), v, 1e-3)
    with pytest.raises(NotPositiveDefinite):
        evolve_qv_step(q, ScalarField(v.grid, -v.values), 1e-3)


def test_default_config_values():
    cfg = FlowConfig()
    assert (cfg.N, cfg.scheme, cfg.cfl_safety, cfg.t_end, cfg.stop_tol, cfg.output_every) == (
        128,
        "spectral",
        0.25,
        50.0,
        1e-10,
        0.1,
    )
    assert math.isinf(cfg.dt_max)
