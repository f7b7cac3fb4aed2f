"""Model layer: network reduction, document parsing, derived operating point."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import swingenergy as se
from swingenergy.model import (
    Machine,
    NetworkStage,
    ReducedNetworkSet,
    FaultSpec,
    SimSettings,
    Scenario,
    kron_reduce,
    scenario_from_dict,
)


def _random_y(nn: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y = np.zeros((nn, nn), dtype=complex)
    for i in range(nn):
        for j in range(i + 1, nn):
            yij = complex(rng.uniform(0.1, 1.0), rng.uniform(-8.0, -1.0))
            y[i, j] = y[j, i] = -yij
            y[i, i] += yij
            y[j, j] += yij
    # shunt loading keeps every elimination block invertible
    y += np.diag(rng.uniform(0.05, 0.3, nn) + 1j * rng.uniform(-0.8, -0.1, nn))
    return y


def test_kron_reduce_one_node_matches_scalar_formula():
    y = _random_y(5, seed=3)
    keep = [0, 1, 2, 3]
    got = kron_reduce(y, keep)
    want = y[np.ix_(keep, keep)] - np.outer(y[keep, 4], y[4, keep]) / y[4, 4]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-13)


def test_kron_reduce_is_elimination_order_free():
    y = _random_y(7, seed=11)
    keep = [0, 2, 5]
    whole = kron_reduce(y, keep)
    # eliminate in two stages; the Schur complement composes
    stage1 = kron_reduce(y, [0, 1, 2, 4, 5])
    stage2 = kron_reduce(stage1, [0, 2, 4])  # positions of buses 0, 2, 5
    np.testing.assert_allclose(whole, stage2, rtol=0, atol=1e-12)


def test_kron_reduce_preserves_terminal_injections():
    # voltages at retained nodes, currents only there: I = Y V on the full
    # network with zero injection at eliminated nodes must match I = Yr Vr
    y = _random_y(6, seed=5)
    keep = [0, 1, 2]
    elim = [3, 4, 5]
    yr = kron_reduce(y, keep)
    vk = np.array([1.02, 0.98 - 0.03j, 1.00 + 0.05j])
    ve = -np.linalg.solve(y[np.ix_(elim, elim)], y[np.ix_(elim, keep)] @ vk)
    full = np.concatenate([vk, ve])
    order = keep + elim
    i_full = (y[np.ix_(order, order)] @ full)[: len(keep)]
    np.testing.assert_allclose(yr @ vk, i_full, rtol=0, atol=1e-12)


def test_kron_reduce_singular_block_names_a_bus():
    # nodes 2 and 3 form an island joined only to each other, so their
    # elimination block [[y, -y], [-y, y]] is exactly singular
    y = _random_y(2, seed=9)
    full = np.zeros((4, 4), dtype=complex)
    full[:2, :2] = y
    y23 = 0.4 - 2.0j
    full[2, 2] = full[3, 3] = y23
    full[2, 3] = full[3, 2] = -y23
    with pytest.raises(se.ReductionError) as err:
        kron_reduce(full, [0, 1])
    assert err.value.bus in (2, 3)


def test_kron_reduce_rejects_bad_inputs():
    y = _random_y(4, seed=1)
    with pytest.raises(se.ReductionError):
        kron_reduce(y[:3, :], [0])
    with pytest.raises(se.ReductionError):
        kron_reduce(y, [0, 0])
    with pytest.raises(se.ReductionError):
        kron_reduce(y, [0, 9])


@settings(max_examples=40, deadline=None)
@given(
    shift=st.floats(-20.0, 20.0, allow_nan=False),
    seed=st.integers(0, 2**16),
)
def test_electrical_power_is_shift_invariant(shift, seed):
    rng = np.random.default_rng(seed)
    n = 4
    delta = rng.uniform(-np.pi, np.pi, n)
    emf = rng.uniform(0.9, 1.2, n)
    g = rng.uniform(0.0, 0.5, (n, n))
    g = 0.5 * (g + g.T)
    b = rng.uniform(0.5, 3.0, (n, n))
    b = 0.5 * (b + b.T)
    p0 = se.kernels.electrical_power(delta, emf, g, b)
    p1 = se.kernels.electrical_power(delta + shift, emf, g, b)
    np.testing.assert_allclose(p1, p0, rtol=0, atol=1e-9)


# -- bundled documents --------------------------------------------------------


def test_bundled_scenarios_load(ts3, ts10):
    assert ts3.n == 3 and ts10.n == 10
    for sc in (ts3, ts10):
        for label in ("prefault", "faulton", "postfault"):
            st_ = sc.stages.by_label(label)
            assert st_.g.shape == (sc.n, sc.n)
            assert not st_.g.flags.writeable and not st_.b.flags.writeable
        assert sc.m_total == pytest.approx(float(sc.m_vec.sum()))


def test_derived_operating_point_is_exact_prefault_equilibrium(ts3, ts10):
    # mechanical power is assigned from the reduced-network injection at the
    # derived internal angles, so the residual is zero to the last bit
    for sc in (ts3, ts10):
        pe = se.kernels.electrical_power(
            sc.angle_guess, sc.emf_vec, sc.stages.prefault.g, sc.stages.prefault.b
        )
        np.testing.assert_array_equal(pe, sc.pm_vec)


def test_fault_stages_differ(ts3):
    assert not np.allclose(ts3.stages.prefault.b, ts3.stages.faulton.b)
    # ts3 trips a branch at clearing, so post-fault differs from pre-fault
    assert not np.allclose(ts3.stages.prefault.b, ts3.stages.postfault.b)


def test_self_clearing_fault_restores_prefault_network(ts10):
    np.testing.assert_array_equal(ts10.stages.prefault.g, ts10.stages.postfault.g)
    np.testing.assert_array_equal(ts10.stages.prefault.b, ts10.stages.postfault.b)


def test_with_overrides(ts3):
    sc = ts3.with_overrides(clearing_time=0.2, dt=0.005, horizon=4.0)
    assert sc.fault.clearing_time == 0.2
    assert sc.sim.dt == 0.005 and sc.sim.horizon == 4.0
    assert sc.fault.trip_branch == ts3.fault.trip_branch
    assert ts3.fault.clearing_time == 0.1  # original untouched


def test_index_of_unknown_machine(ts3):
    with pytest.raises(se.ScenarioError):
        ts3.index_of(99)


# -- document validation -------------------------------------------------------


def _reduced_doc(n: int = 2) -> dict:
    ident = [[[1.0, -3.0] if i == j else [0.1, 0.5] for j in range(n)] for i in range(n)]
    return {
        "version": 1,
        "name": "toy",
        "network": {"reduced": {"prefault": ident, "faulton": ident, "postfault": ident}},
        "machines": [
            {"id": k + 1, "m": 0.05, "pm": 0.0, "emf": 1.0} for k in range(n)
        ],
        "fault": {"bus": 1, "clearing_time": 0.1},
        "sim": {"dt": 0.01, "horizon": 1.0},
    }


def test_reduced_document_roundtrip():
    sc = scenario_from_dict(_reduced_doc())
    assert sc.n == 2 and sc.name == "toy"
    assert sc.stages.faulton.g[0, 0] == 1.0


def test_document_version_mismatch():
    doc = _reduced_doc()
    doc["version"] = 2
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(doc)


def test_document_requires_fault():
    doc = _reduced_doc()
    del doc["fault"]
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(doc)


def test_document_rejects_duplicate_machine_ids():
    doc = _reduced_doc()
    doc["machines"][1]["id"] = doc["machines"][0]["id"]
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(doc)


def test_document_rejects_nonnumeric_fields():
    doc = _reduced_doc()
    doc["machines"][0]["m"] = "heavy"
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(doc)


def test_document_rejects_clearing_past_horizon():
    doc = _reduced_doc()
    doc["fault"]["clearing_time"] = 2.0
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(doc)


def test_raw_document_rejects_unknown_fault_bus(ts3):
    raw = json.loads(Path(se.bundled_scenario_path("ts3_ninebus")).read_text())
    raw["fault"]["bus"] = 999
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(raw)


def test_raw_document_rejects_unknown_trip_branch():
    raw = json.loads(Path(se.bundled_scenario_path("ts3_ninebus")).read_text())
    raw["fault"]["trip_branch"] = [1, 999]
    with pytest.raises(se.ScenarioError):
        scenario_from_dict(raw)


def test_load_scenario_rejects_bad_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(se.ScenarioError):
        se.load_scenario(p)


def test_unknown_bundled_name():
    with pytest.raises(se.ScenarioError):
        se.bundled_scenario("no_such_system")


def test_scenario_validation():
    mk = lambda **kw: Machine(**{"id": 1, "m": 0.1, "pm": 0.0, "emf": 1.0, **kw})
    y = np.array([[1.0 - 3.0j, 0.1 + 0.5j], [0.1 + 0.5j, 1.0 - 3.0j]])
    stages = ReducedNetworkSet(
        prefault=NetworkStage.from_y("prefault", y),
        faulton=NetworkStage.from_y("faulton", y),
        postfault=NetworkStage.from_y("postfault", y),
    )
    fault = FaultSpec(bus=1, clearing_time=0.1)
    with pytest.raises(se.ScenarioError):
        Scenario(machines=(), stages=stages, fault=fault, sim=SimSettings())
    with pytest.raises(se.ScenarioError):
        Scenario(
            machines=(mk(), mk(id=2, m=-1.0)),
            stages=stages, fault=fault, sim=SimSettings(),
        )
    with pytest.raises(se.ScenarioError):
        Scenario(
            machines=(mk(),), stages=stages, fault=fault, sim=SimSettings(),
        )  # one machine, two-node stages
