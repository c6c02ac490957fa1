import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gronwall_lab.analytic import GeometricLadder, ladder_moment
from gronwall_lab.simulate import (
    ExitBM,
    GronwallScenario,
    PathRecord,
    PiecewiseDrift,
    RngStream,
    SigmaIntegral,
    SignFeedbackDrift,
    StoppedBM,
    sample_ladder_rung_exact,
    sample_ladder_sup_exact,
    sample_stopped_sup_exact,
    simulate_extremes,
    simulate_model,
    simulate_scenario,
    simulate_scenario_batch,
)


# -- RngStream ---------------------------------------------------------------


def test_stream_replays():
    a = RngStream(42, 3).generator().random(5)
    b = RngStream(42, 3).generator().random(5)
    np.testing.assert_array_equal(a, b)


def test_streams_differ_and_are_uncorrelated():
    x = RngStream(42, 0).generator().standard_normal(200_000)
    y = RngStream(42, 1).generator().standard_normal(200_000)
    z = RngStream(42, 0).substream(0).generator().standard_normal(200_000)
    for u, v in [(x, y), (x, z), (y, z)]:
        assert abs(np.corrcoef(u, v)[0, 1]) < 5 / math.sqrt(200_000)


@pytest.mark.parametrize("seed, sid", [(-1, 0), (0, -1), (2**64, 0), (1.5, 0)])
def test_stream_rejects_bad_keys(seed, sid):
    with pytest.raises(ValueError):
        RngStream(seed, sid)


# -- exact samplers ----------------------------------------------------------


class _FixedU:
    """Generator stand-in returning a fixed uniform."""

    def __init__(self, u):
        self.u = u

    def random(self, size=None):
        return self.u if size is None else np.full(size, self.u)


def test_stopped_sup_median(monkeypatch):
    import gronwall_lab.simulate as sim

    monkeypatch.setattr(sim, "_gen", lambda rng: rng)
    assert sample_stopped_sup_exact(_FixedU(0.5), 2.0) == pytest.approx(2.0)


def test_stopped_sup_ks():
    n = 10**5
    x = sample_stopped_sup_exact(RngStream(11), 1.0, size=n)
    res = stats.kstest(x, lambda a: a / (a + 1.0))
    assert res.statistic <= 1.36 / math.sqrt(n)


def test_stopped_sup_moment():
    p, n = 0.25, 10**6
    x = sample_stopped_sup_exact(RngStream(12), 1.0, size=n) ** p
    se = x.std(ddof=1) / math.sqrt(n)
    truth = math.pi * 0.25 / math.sin(0.25 * math.pi)
    assert truth == pytest.approx(1.1107207345395915, rel=1e-15)
    assert abs(x.mean() - truth) <= 3 * se


def test_stopped_sup_scalar_draw():
    v = sample_stopped_sup_exact(RngStream(1), 1.0)
    assert isinstance(v, float) and v >= 0


def test_rung_without_atom_matches_stopped_sampler():
    a = sample_ladder_rung_exact(RngStream(5), 0.0, 2.0, size=1000)
    b = sample_stopped_sup_exact(RngStream(5), 2.0, size=1000)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_rung_atom_fraction():
    n = 10**5
    y = sample_ladder_rung_exact(RngStream(6), 1.0, 2.0, size=n)
    frac = np.mean(y == 0.0)
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_rung_moment():
    n = 10**6
    y = sample_ladder_rung_exact(RngStream(7), 1.0, 2.0, size=n) ** 0.5
    se = y.std(ddof=1) / math.sqrt(n)
    assert abs(y.mean() - ladder_moment(0.5, 1.0, 2.0)) <= 3 * se


def test_rung_tail_ks():
    # conditional on being positive, Y has P(Y >= y | Y > 0) = a_cur / (a_cur + y)
    y = sample_ladder_rung_exact(RngStream(8), 1.0, 3.0, size=10**5)
    pos = y[y > 0]
    res = stats.kstest(pos, lambda t: t / (3.0 + t))
    assert res.statistic <= 1.36 / math.sqrt(pos.size)


def test_rung_rejects_degenerate():
    with pytest.raises(ValueError):
        sample_ladder_rung_exact(RngStream(1), 1.0, 1.0)


def test_ladder_sup_has_stopped_law():
    a, n_idx = sample_ladder_sup_exact(RngStream(9), GeometricLadder(0.1, 2.0, 10), 1.0, 10**5)
    assert n_idx == 4  # levels 0.2, 0.4, 0.8, 1.6
    res = stats.kstest(a, lambda t: t / (t + 1.0))
    assert res.statistic <= 1.36 / math.sqrt(a.size)


def test_ladder_sup_depth_exhaustion():
    with pytest.raises(ValueError, match="exhausted"):
        sample_ladder_sup_exact(RngStream(9), GeometricLadder(0.1, 2.0, 2), 1.0, 10)


# -- grid models ---------------------------------------------------------------


def _check_record(rec: PathRecord):
    assert rec.running_sup == rec.values.max()
    assert rec.running_inf == rec.values.min()
    assert rec.running_inf <= rec.values[0] <= rec.running_sup


def test_zero_sigma_path():
    rec = simulate_model(SigmaIntegral(sigmas=(0.0,), horizon=1.0, dt=0.01), RngStream(1))
    assert rec.running_sup == rec.running_inf == 0.0
    assert rec.values.size == 101
    np.testing.assert_array_equal(rec.values, 0.0)


def test_sigma_schedule_scales_increments():
    model = SigmaIntegral(breaks=(0.0, 0.5), sigmas=(0.0, 2.0), horizon=1.0, dt=0.01)
    rec = simulate_model(model, RngStream(2))
    np.testing.assert_array_equal(rec.values[:51], 0.0)
    assert np.any(rec.values[51:] != 0.0)


def test_stopped_bm_hits_and_freezes():
    model = StoppedBM(barrier=1.0, horizon=1000.0, dt=1e-4)
    hits = 0
    for j in range(20):
        rec = simulate_model(model, RngStream(3, j))
        _check_record(rec)
        if rec.truncated:
            assert rec.hit_index is None
            continue
        hits += 1
        assert rec.values[rec.hit_index] <= -1.0
        assert rec.hit_index == rec.values.size - 1
        assert np.all(rec.values[:-1] > -1.0)
        # overshoot of order sqrt(dt)
        assert -rec.running_inf <= 1.0 + 6 * math.sqrt(1e-4)
    assert hits >= 15


def test_stopped_bm_truncation_and_overshoot():
    model = StoppedBM(barrier=1.0, horizon=100.0, dt=1e-3)
    batch = simulate_extremes(model, RngStream(4), 2000)
    # P(tau > 100) = 2 Phi(1/10) - 1 ~ 0.08
    expected = 2 * stats.norm.cdf(0.1) - 1
    assert abs(batch.truncated_fraction - expected) <= 4 * math.sqrt(expected / 2000)
    done = ~batch.truncated
    over = -batch.inf[done] - 1.0
    assert np.all(over >= 0)
    fine = simulate_extremes(StoppedBM(1.0, 100.0, 1e-4), RngStream(4), 500)
    assert np.mean(-fine.inf[~fine.truncated] - 1.0) < np.mean(over)


def test_exit_bm_symmetry():
    n = 20_000
    batch = simulate_extremes(ExitBM(1.0, 1.0, dt=1e-3, horizon=10.0), RngStream(5), n)
    up = np.mean(batch.final > 0)
    assert abs(up - 0.5) <= 3 * math.sqrt(0.25 / n)
    assert batch.truncated_fraction <= 1e-3


def test_model_reproducible():
    model = ExitBM(1.0, 2.0, dt=1e-3, horizon=20.0)
    assert simulate_model(model, RngStream(7, 1)) == simulate_model(model, RngStream(7, 1))
    assert simulate_model(model, RngStream(7, 1)) != simulate_model(model, RngStream(7, 2))


def test_extremes_reproducible():
    model = SigmaIntegral(horizon=0.5, dt=1e-2)
    a = simulate_extremes(model, RngStream(8), 40_000)
    b = simulate_extremes(model, RngStream(8), 40_000)
    np.testing.assert_array_equal(a.sup, b.sup)
    np.testing.assert_array_equal(a.inf, b.inf)


@given(st.integers(0, 2**32), st.sampled_from(["stopped", "exit", "sigma"]))
@settings(max_examples=25, deadline=None)
def test_record_consistency(seed, kind):
    model = {
        "stopped": StoppedBM(0.5, horizon=5.0, dt=1e-2),
        "exit": ExitBM(0.5, 0.7, dt=1e-2, horizon=5.0),
        "sigma": SigmaIntegral((0.0, 0.3), (1.0, 0.2), horizon=1.0, dt=1e-2),
    }[kind]
    rec = simulate_model(model, RngStream(seed))
    _check_record(rec)
    assert rec.values[0] == 0.0


def test_step_budget_enforced():
    with pytest.raises(ValueError, match="budget"):
        StoppedBM(1.0, horizon=1e6, dt=1e-6)


# -- scenarios ---------------------------------------------------------------


def test_scenario_identity_zero_drift():
    # Z = M + H + (sum dW^2 - t) exactly on the grid when a = 0
    scn = GronwallScenario(x0=1.0, drift=PiecewiseDrift((0.0,), (0.0,)), horizon=1.0, dt=1e-3)
    z, h, l, m, psi = simulate_scenario(scn, RngStream(1))
    np.testing.assert_array_equal(l, m)
    np.testing.assert_array_equal(psi, 0.0)
    assert z.values.size == h.size == scn.steps + 1
    gen = RngStream(1).generator()
    dw = gen.standard_normal((scn.steps, 1))[:, 0] * math.sqrt(scn.dt)
    residual = np.concatenate([[0.0], np.cumsum(dw**2)]) - np.arange(scn.steps + 1) * scn.dt
    np.testing.assert_allclose(z.values, m + h + residual, atol=1e-12)


def test_quadratic_variation_residual_shrinks():
    rms = []
    for dt in (1e-2, 1e-3, 1e-4):
        scn = GronwallScenario(drift=PiecewiseDrift(), dt=dt)
        batch = simulate_scenario_batch(scn, RngStream(2), 400)
        rms.append(math.sqrt(np.mean(batch.qv_residual**2)))
    # E (sum dW^2 - t)^2 = 2 t dt
    for r, dt in zip(rms, (1e-2, 1e-3, 1e-4)):
        assert r == pytest.approx(math.sqrt(2 * dt), rel=0.25)


def test_scenario_nonnegative_and_reproducible():
    scn = GronwallScenario(drift=SignFeedbackDrift(1.0), dt=1e-2, h_noise=0.3)
    a = simulate_scenario(scn, RngStream(3))
    b = simulate_scenario(scn, RngStream(3))
    assert np.all(a.z.values >= 0)
    assert a.z == b.z
    np.testing.assert_array_equal(a.l, b.l)
    assert np.all(np.diff(a.psi_integral) >= 0)


def test_constant_drift_mean():
    scn = GronwallScenario(x0=1.0, drift=PiecewiseDrift((0.0,), (0.5,)), dt=1e-3)
    batch = simulate_scenario_batch(scn, RngStream(4), 100_000)
    z = batch.z_final
    hw = 3.29 * z.std(ddof=1) / math.sqrt(z.size)
    assert abs(z.mean() - scn.mean_z()) <= hw
    assert scn.mean_z() == pytest.approx(math.e + (math.e - 1), rel=1e-14)


def test_sign_fact_violation_shrinks():
    viol = []
    for dt in (1e-2, 1e-3, 1e-4):
        scn = GronwallScenario(drift=PiecewiseDrift((0.0,), (0.5,)), dt=dt)
        viol.append(simulate_scenario_batch(scn, RngStream(5), 1000).sign_violation.max())
    assert viol[0] > viol[1] > viol[2]


def test_psi_integral_deterministic():
    scn = GronwallScenario(drift=PiecewiseDrift((0.0, 0.5), (0.0, 1.0)), horizon=1.0, dt=1e-3)
    assert scn.psi_integral() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        GronwallScenario(drift=SignFeedbackDrift(1.0)).psi_integral()
