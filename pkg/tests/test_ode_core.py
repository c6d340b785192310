"""Integration core: signals, steppers, trajectories, CSV."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabkit.ode_core import (
    DimensionError,
    DisturbanceSignal,
    IntegratorConfig,
    NonFiniteEvaluation,
    StepLimitExceeded,
    evaluate_signal,
    integrate,
    read_csv_table,
    sup_norm,
    write_trajectory_csv,
)
from stabkit.systems import (
    make_adaptive_scalar,
    make_oscillator_pair,
    make_scalar_adaptive_loop,
    oscillator_energy,
    _assemble,
)


def scalar_decay():
    return _assemble("decay", 1, 0, lambda x, d: np.array([-x[0]]), lambda x: x.copy())


def scalar_square():
    return _assemble("square", 1, 0, lambda x, d: np.array([x[0] ** 2]), lambda x: x.copy())


def scalar_driven():
    return _assemble("driven", 1, 1, lambda x, d: np.array([d[0]]), lambda x: x.copy())


# ---------------------------------------------------------------------------
# signals
# ---------------------------------------------------------------------------


def test_sinusoid_evaluation():
    d = DisturbanceSignal.sinusoid(2.0, math.pi)
    assert evaluate_signal(d, 0.5)[0] == pytest.approx(2.0, abs=1e-15)


def test_constant_evaluation():
    d = DisturbanceSignal.constant(3.5)
    for t in (0.0, 1.0, 17.3):
        assert evaluate_signal(d, t)[0] == 3.5


def test_piecewise_left_closed_convention():
    d = DisturbanceSignal.piecewise_constant([1.0], [5.0, 7.0])
    assert evaluate_signal(d, 1.0)[0] == 7.0
    assert evaluate_signal(d, 0.999999)[0] == 5.0


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        evaluate_signal(DisturbanceSignal.zero(1), -0.1)


def test_sup_norm_per_kind():
    assert sup_norm(DisturbanceSignal.sinusoid(2.0, math.pi), 10.0) == 2.0
    assert sup_norm(DisturbanceSignal.zero(1), 5.0) == 0.0
    pc = DisturbanceSignal.piecewise_constant([1.0], [-3.0, 1.0])
    assert sup_norm(pc, 10.0) == 3.0
    # before the second segment has positive measure, only the first counts
    assert sup_norm(pc, 1.0) == 3.0
    assert sup_norm(DisturbanceSignal.piecewise_constant([1.0], [1.0, -3.0]), 1.0) == 1.0


def test_sup_norm_sinusoid_before_first_peak():
    d = DisturbanceSignal.sinusoid(2.0, 1.0)  # first peak at t = pi/2
    assert sup_norm(d, 0.5) == pytest.approx(2.0 * math.sin(0.5), rel=1e-14)


def test_table_signal_interpolates_and_sups():
    d = DisturbanceSignal.table([0.0, 1.0, 2.0], [0.0, 2.0, -4.0])
    assert evaluate_signal(d, 0.5)[0] == pytest.approx(1.0)
    assert evaluate_signal(d, 5.0)[0] == -4.0  # holds the last value
    assert sup_norm(d, 1.5) == pytest.approx(2.0)
    assert sup_norm(d, 2.0) == pytest.approx(4.0)


def test_stacked_signal_dimension_and_channel_sup():
    d = DisturbanceSignal.stack(DisturbanceSignal.sinusoid(0.2, 1.0),
                                DisturbanceSignal.constant(3.0))
    assert d.dimension == 2
    assert d.channel_sup(0, 10.0) == 0.2
    assert d.channel_sup(1, 10.0) == 3.0
    assert sup_norm(d, 10.0) == pytest.approx(math.hypot(0.2, 3.0))


def test_signal_validation():
    with pytest.raises(ValueError):
        DisturbanceSignal.piecewise_constant([2.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        DisturbanceSignal.piecewise_constant([1.0], [0.0])
    with pytest.raises(ValueError):
        DisturbanceSignal.sinusoid(1.0, -2.0)
    with pytest.raises(ValueError):
        DisturbanceSignal.table([1.0, 0.5], [1.0, 2.0])


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6),
       st.floats(0.01, 9.99))
@settings(max_examples=50, deadline=None)
def test_piecewise_sup_dominates_samples(levels, t_probe):
    breaks = [float(i + 1) for i in range(len(levels) - 1)]
    d = DisturbanceSignal.piecewise_constant(breaks, levels)
    horizon = 10.0
    assert abs(evaluate_signal(d, t_probe)[0]) <= sup_norm(d, horizon) + 1e-12


@given(st.floats(0.1, 3.0), st.floats(0.1, 8.0), st.floats(-3.0, 3.0), st.floats(0.01, 20.0))
@settings(max_examples=60, deadline=None)
def test_sinusoid_sup_dominates_samples(amp, omega, phase, horizon):
    d = DisturbanceSignal.sinusoid(amp, omega, phase)
    s = sup_norm(d, horizon)
    ts = np.linspace(0.0, horizon, 197)
    assert max(abs(d.value(t)[0]) for t in ts) <= s + 1e-12


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def test_linear_decay_closed_form():
    traj = integrate(scalar_decay(), [1.0], None, 1.0)
    assert traj.final_state[0] == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_initial_condition_exact_and_time_zero():
    x0 = [0.1234567890123, -0.5]
    traj = integrate(make_adaptive_scalar(0.0, 1.0, 0.0), x0, None, 1.0)
    assert traj.times[0] == 0.0
    assert traj.states[0, 0] == x0[0] and traj.states[0, 1] == x0[1]


def test_energy_conserved_along_oscillator():
    system = make_oscillator_pair()
    energy = oscillator_energy()
    traj = integrate(system, [1.0, 0.0, 0.0, 0.0], None, 10.0)
    assert energy(traj.states[0]) == pytest.approx(0.5, abs=1e-15)
    drift = max(abs(energy(x) - 0.5) for x in traj.states)
    assert drift <= 1e-6
    assert abs(energy(traj.final_state) - 0.5) <= 1e-6


def test_equilibrium_set_is_invariant():
    loop = make_scalar_adaptive_loop(3.0, 1.0, 10.0, 0.5)
    traj = integrate(loop, [0.0, -1.7], DisturbanceSignal.zero(1), 5.0)
    assert np.all(traj.states[:, 0] == 0.0)
    assert np.all(traj.states[:, 1] == -1.7)


def test_rk4_fourth_order_convergence():
    system = scalar_decay()
    errors = []
    for step in (0.02, 0.01):
        cfg = IntegratorConfig(method="rk4-fixed", step=step)
        traj = integrate(system, [1.0], None, 5.0, cfg)
        errors.append(max(abs(x[0] - math.exp(-t)) for t, x in zip(traj.times, traj.states)))
    assert errors[0] / errors[1] >= 8.0


def test_determinism_bit_identical():
    system = make_adaptive_scalar(0.0, 1.0, 1.0, disturbed=True)
    d = DisturbanceSignal.sinusoid(1.0, 2.0)
    a = integrate(system, [1.0, 0.0], d, 7.0)
    b = integrate(system, [1.0, 0.0], d, 7.0)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_steps_split_at_breakpoints():
    d = DisturbanceSignal.piecewise_constant([1.0], [0.0, 1.0])
    traj = integrate(scalar_driven(), [0.0], d, 2.0)
    assert 1.0 in traj.times
    # piecewise-constant integrand is integrated exactly by RK stages
    assert traj.final_state[0] == pytest.approx(1.0, abs=1e-12)
    assert traj.state_at(1.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_blowup_sets_diverged_flag():
    traj = integrate(scalar_square(), [1.0], None, 2.0)
    assert traj.diverged
    assert traj.final_time < 2.0
    assert np.linalg.norm(traj.final_state) >= 1e12


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        integrate(scalar_decay(), [1.0, 2.0], None, 1.0)
    with pytest.raises(DimensionError):
        integrate(scalar_driven(), [1.0], DisturbanceSignal.zero(2), 1.0)


def test_non_finite_vector_field_reports_state():
    bad = _assemble("bad", 1, 0, lambda x, d: np.array([float("nan")]),
                    lambda x: x.copy(), check_origin=False)
    with pytest.raises(NonFiniteEvaluation) as err:
        integrate(bad, [0.5], None, 1.0)
    assert err.value.state[0] == 0.5


def test_step_budget_enforced():
    cfg = IntegratorConfig(max_steps=3)
    with pytest.raises(StepLimitExceeded):
        integrate(scalar_decay(), [1.0], None, 100.0, cfg)


def test_dense_grid_merged_into_samples():
    grid = np.linspace(0.0, 1.0, 11)
    traj = integrate(scalar_decay(), [1.0], None, 1.0, grid=grid)
    for g in grid:
        assert g in traj.times
    # interpolation stays within neighbouring node values
    idx = np.searchsorted(traj.times, 0.5)
    assert traj.states[idx, 0] == pytest.approx(math.exp(-0.5), abs=1e-4)


def test_horizon_validation():
    with pytest.raises(ValueError):
        integrate(scalar_decay(), [1.0], None, 0.0)
    with pytest.raises(ValueError):
        integrate(scalar_decay(), [float("nan")], None, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(min_step=1.0, max_step=0.5)


@given(st.floats(0.2, 2.0), st.floats(-1.0, 1.0))
@settings(max_examples=15, deadline=None)
def test_interp_matches_nodes(y0, z0):
    system = make_adaptive_scalar(0.0, 1.0, 0.0)
    traj = integrate(system, [y0, z0], None, 3.0)
    for i in (0, len(traj) // 2, len(traj) - 1):
        t = traj.times[i]
        assert np.array_equal(traj.state_at(t), traj.states[i])


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def test_trajectory_csv_roundtrip(tmp_path):
    system = make_adaptive_scalar(0.0, 1.0, 0.0)
    traj = integrate(system, [1.0, -0.3], None, 2.0)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path, controls=np.zeros(len(traj)))
    comments, header, data = read_csv_table(path)
    assert header == ["t", "x1", "x2", "y1", "u"]
    assert data.shape == (len(traj), 5)
    # 17 significant digits round-trip doubles exactly
    assert np.array_equal(data[:, 0], traj.times)
    assert np.array_equal(data[:, 1:3], traj.states)


def test_csv_missing_header_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError):
        read_csv_table(path)
