"""Time-domain integration: frame identities, stage switching, determinism."""

from __future__ import annotations

import io

import numpy as np
import pytest

import swingenergy as se
from swingenergy.simulator import accelerating_power, trajectory_to_csv

from conftest import assert_coi_consistent


def test_coi_sums_vanish_along_trajectories(run_case):
    for label in ("ts3-stable", "ts10-deep"):
        _, traj, _ = run_case(label)
        assert_coi_consistent(traj, tol=1e-9)


def test_frame_split_reassembles_absolute_angles(run_case):
    sc, traj, _ = run_case("ts3-stable")
    np.testing.assert_allclose(
        traj.delta_abs, traj.delta_coi + traj.delta_sys[:, None], atol=1e-12
    )


def test_sep_is_a_fixed_point_of_the_integrator(ts3, ts3_sep):
    sc = ts3.with_overrides(clearing_time=0.0, horizon=5.0)
    traj = se.integrate(sc, initial=(ts3_sep.delta_coi.copy(), np.zeros(3)))
    drift = np.abs(traj.delta_coi - ts3_sep.delta_coi[None, :]).max()
    assert drift <= 1e-6


def test_clearing_snaps_to_sample_grid(ts3):
    traj = se.integrate(ts3.with_overrides(clearing_time=0.104))
    assert traj.clearing_time == pytest.approx(0.10)
    assert traj.clearing_index == 10
    assert traj.t[traj.clearing_index] == pytest.approx(traj.clearing_time)


def test_stage_switch_is_applied_at_the_clearing_sample(run_case):
    sc, traj, _ = run_case("ts3-stable")
    ci = traj.clearing_index
    for k, stage in ((ci - 1, sc.stages.faulton), (ci, sc.stages.postfault)):
        want = accelerating_power(traj.delta_coi[k], sc.machines, stage)
        np.testing.assert_allclose(traj.f_coi[k], want, rtol=0, atol=1e-12)


def test_state_is_continuous_across_clearing(run_case):
    sc, traj, _ = run_case("ts3-stable")
    ci = traj.clearing_index
    # the switch changes the network, not the state: one RK4 step of motion
    step = np.abs(traj.delta_coi[ci] - traj.delta_coi[ci - 1]).max()
    assert step < 0.1  # bounded by max speed * dt, no teleport


def test_integration_is_byte_deterministic(ts10):
    a = se.integrate(ts10)
    b = se.integrate(ts10)
    assert np.array_equal(a.delta_coi, b.delta_coi)
    assert np.array_equal(a.omega_coi, b.omega_coi)
    assert np.array_equal(a.f_coi, b.f_coi)


def test_accelerating_power_shift_invariance(ts3):
    st = ts3.stages.postfault
    delta = np.array([0.3, -0.2, 0.7])
    f0 = accelerating_power(delta, ts3.machines, st)
    f1 = accelerating_power(delta + 2.5, ts3.machines, st)
    np.testing.assert_allclose(f0, f1, atol=1e-12)
    assert abs(float(f0.sum())) <= 1e-12


def test_horizon_and_dt_overrides_apply(ts3):
    traj = se.integrate(ts3, dt=0.005, horizon=1.0)
    assert traj.dt == 0.005
    assert traj.t.shape[0] == 201
    assert traj.t[-1] == pytest.approx(1.0)


def test_kimbark_trace_columns(run_case):
    sc, traj, _ = run_case("ts3-stable")
    k = se.kimbark_trace(traj, 2)
    i = sc.index_of(2)
    assert k.shape == (traj.t.size, 3)
    np.testing.assert_array_equal(k[:, 0], traj.delta_coi[:, i])
    np.testing.assert_array_equal(k[:, 1], traj.f_coi[:, i])
    ke = 0.5 * sc.machines[i].m * traj.omega_coi[:, i] ** 2
    np.testing.assert_array_equal(k[:, 2], ke)


def test_kimbark_trace_unknown_machine(run_case):
    _, traj, _ = run_case("ts3-stable")
    with pytest.raises(se.ScenarioError):
        se.kimbark_trace(traj, 42)


def test_trajectory_csv_layout(run_case):
    sc, traj, _ = run_case("ts3-stable")
    text = trajectory_to_csv(traj)
    lines = text.splitlines()
    assert lines[0].startswith("# schema: swingenergy.trajectory/1")
    assert lines[1].startswith("# settings:")
    header = lines[2].split(",")
    assert header[0] == "t" and header[1] == "delta_sys"
    # t, system angle, then three blocks of n columns
    assert len(header) == 2 + 3 * sc.n
    body = np.loadtxt(io.StringIO("\n".join(lines[3:])), delimiter=",")
    assert body.shape == (traj.t.size, len(header))
    np.testing.assert_allclose(body[:, 0], traj.t, atol=1e-9)


def test_write_trajectory_csv_roundtrip(tmp_path, run_case):
    _, traj, _ = run_case("ts3-stable")
    p = tmp_path / "run.csv"
    se.write_trajectory_csv(traj, p)
    again = tmp_path / "run2.csv"
    se.write_trajectory_csv(traj, again)
    assert p.read_bytes() == again.read_bytes()


def test_self_convergence_order(ts3):
    # smooth stable case; clearing 0.08 lands on the 0.01/0.005/0.0025 grids
    def final_state(dt):
        sc = ts3.with_overrides(clearing_time=0.08, dt=dt, horizon=2.0)
        tr = se.integrate(sc)
        return np.concatenate([tr.delta_coi[-1], tr.omega_coi[-1]])

    e1 = np.linalg.norm(final_state(0.01) - final_state(0.005))
    e2 = np.linalg.norm(final_state(0.005) - final_state(0.0025))
    order = np.log2(e1 / e2)
    assert order >= 3.5
