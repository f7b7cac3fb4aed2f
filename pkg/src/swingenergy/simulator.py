"""Fixed-step simulation of the swing equations and the COI transform.

Integration runs in absolute machine coordinates with classical RK4 at a
fixed dt: one stage on the fault-on network up to the clearing sample (the
requested clearing time is rounded to the sample grid and recorded), then
one stage on the post-fault network to the horizon. Per-sample
center-of-inertia quantities are derived afterwards:

    delta_sys   = sum_i M_i delta_i / M_T
    delta_coi_i = delta_i - delta_sys
    omega_coi_i = omega_i - omega_sys
    f_coi_i     = Pm_i - Pe_i - (M_i / M_T) P_COI,  P_COI = sum_j (Pm_j - Pe_j)

Angles are never wrapped. A step that produces a non-finite state stops the
run at the last finite sample and flags the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ScenarioError
from .model import Machine, NetworkStage, Scenario

CSV_SCHEMA = "swingenergy.trajectory/1"


def _machine_vectors(machines) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(m, pm, emf) from a Scenario or a sequence of Machine."""
    if isinstance(machines, Scenario):
        return machines.m_vec, machines.pm_vec, machines.emf_vec
    m = np.array([mc.m for mc in machines], dtype=np.float64)
    pm = np.array([mc.pm for mc in machines], dtype=np.float64)
    emf = np.array([mc.emf for mc in machines], dtype=np.float64)
    return m, pm, emf


@dataclass(frozen=True)
class CoiState:
    """One sample in the center-of-inertia frame."""

    t: float
    delta_abs: np.ndarray
    delta_coi: np.ndarray
    omega_coi: np.ndarray
    f_coi: np.ndarray
    p_coi_total: float
    delta_sys: float


@dataclass
class Trajectory:
    """Uniformly sampled trajectory with COI quantities per sample.

    Sample `clearing_index` is shared by both stages: it is the last
    fault-on state and the first post-fault state; the stored f_coi there is
    the post-fault value (the post-clearing energy datum sits on it).
    """

    scenario: Scenario
    t: np.ndarray
    delta_abs: np.ndarray
    delta_sys: np.ndarray
    omega_sys: np.ndarray
    delta_coi: np.ndarray
    omega_coi: np.ndarray
    f_coi: np.ndarray
    p_coi: np.ndarray
    clearing_index: int
    clearing_time: float
    dt: float
    diverged_numerically: bool
    backend: str

    @property
    def n(self) -> int:
        return self.delta_abs.shape[1]

    @property
    def n_samples(self) -> int:
        return self.delta_abs.shape[0]

    @property
    def machine_ids(self) -> tuple[int, ...]:
        return self.scenario.ids

    def state_at(self, k: int) -> CoiState:
        return CoiState(
            t=float(self.t[k]),
            delta_abs=self.delta_abs[k],
            delta_coi=self.delta_coi[k],
            omega_coi=self.omega_coi[k],
            f_coi=self.f_coi[k],
            p_coi_total=float(self.p_coi[k]),
            delta_sys=float(self.delta_sys[k]),
        )

    def settings_meta(self) -> dict:
        return {
            "integrator": "rk4",
            "backend": self.backend,
            "dt": self.dt,
            "horizon": float(self.t[-1]),
            "clearing_time": self.clearing_time,
            "clearing_index": self.clearing_index,
            "diverged_numerically": self.diverged_numerically,
        }


def coi_transform(delta_abs, omega_abs, machines, stage: NetworkStage, t: float = 0.0) -> CoiState:
    """COI-frame view of one absolute-frame state."""
    m, pm, emf = _machine_vectors(machines)
    delta_abs = np.asarray(delta_abs, dtype=np.float64)
    omega_abs = np.asarray(omega_abs, dtype=np.float64)
    mt = m.sum()
    dsys = float(m @ delta_abs / mt)
    wsys = float(m @ omega_abs / mt)
    pe = kernels.electrical_power(delta_abs, emf, stage.g, stage.b)
    pa = pm - pe
    pcoi = float(pa.sum())
    return CoiState(
        t=t,
        delta_abs=delta_abs,
        delta_coi=delta_abs - dsys,
        omega_coi=omega_abs - wsys,
        f_coi=pa - m / mt * pcoi,
        p_coi_total=pcoi,
        delta_sys=dsys,
    )


def accelerating_power(state, machines, stage: NetworkStage) -> np.ndarray:
    """COI accelerating power f_i at a state (CoiState or angle vector).

    The inertia-weighted sum of the result is zero by construction, and the
    value is invariant under a common shift of all angles.
    """
    delta = state.delta_abs if isinstance(state, CoiState) else np.asarray(state)
    m, pm, emf = _machine_vectors(machines)
    return kernels.coi_accel(delta, m, pm, emf, stage.g, stage.b)


def integrate(
    scenario: Scenario,
    dt: float | None = None,
    horizon: float | None = None,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
) -> Trajectory:
    """Simulate the scenario; returns the sampled trajectory.

    The initial condition is the pre-fault stable equilibrium unless an
    (delta_abs, omega_abs) pair is supplied. Identical inputs produce
    bit-identical trajectories.
    """
    dt = float(dt) if dt is not None else scenario.sim.dt
    horizon = float(horizon) if horizon is not None else scenario.sim.horizon
    if dt <= 0:
        raise ScenarioError("dt must be positive")
    if horizon <= 0:
        raise ScenarioError("horizon must be positive")
    total_steps = int(round(horizon / dt))
    if total_steps < 1:
        raise ScenarioError("horizon shorter than one step")
    n1 = int(round(scenario.fault.clearing_time / dt))
    if n1 > total_steps:
        raise ScenarioError("clearing_time must not exceed horizon")
    clearing_time = n1 * dt

    if initial is None:
        from .equilibria import solve_sep  # deferred: equilibria imports model only

        sep = solve_sep(scenario, "prefault")
        delta0 = sep.delta_coi
        omega0 = np.zeros(scenario.n)
    else:
        delta0 = np.asarray(initial[0], dtype=np.float64)
        omega0 = np.asarray(initial[1], dtype=np.float64)
        if delta0.shape != (scenario.n,) or omega0.shape != (scenario.n,):
            raise ScenarioError("initial state has wrong shape")

    m = scenario.m_vec
    pm = scenario.pm_vec
    emf = scenario.emf_vec
    damping = scenario.damping_vec
    faulton = scenario.stages.faulton
    postfault = scenario.stages.postfault

    diverged = False
    if n1 > 0:
        d1, w1, done1 = kernels.rk4_swing(
            delta0, omega0, m, pm, damping, emf, faulton.g, faulton.b, dt, n1
        )
        if done1 < n1:
            diverged = True
            delta = d1[: done1 + 1]
            omega = w1[: done1 + 1]
            clearing_index = done1
        else:
            delta = d1
            omega = w1
            clearing_index = n1
    else:
        delta = delta0[None, :]
        omega = omega0[None, :]
        clearing_index = 0

    if not diverged:
        n2 = total_steps - n1
        if n2 > 0:
            d2, w2, done2 = kernels.rk4_swing(
                delta[-1], omega[-1], m, pm, damping, emf,
                postfault.g, postfault.b, dt, n2,
            )
            if done2 < n2:
                diverged = True
            delta = np.vstack([delta[:-1], d2[: done2 + 1]])
            omega = np.vstack([omega[:-1], w2[: done2 + 1]])

    samples = delta.shape[0]
    t = np.arange(samples) * dt
    mt = scenario.m_total
    dsys = delta @ m / mt
    wsys = omega @ m / mt
    delta_coi = delta - dsys[:, None]
    omega_coi = omega - wsys[:, None]

    f_coi = np.empty_like(delta)
    p_coi = np.empty(samples)
    for lo, hi, stage in (
        (0, clearing_index, faulton),
        (clearing_index, samples, postfault),
    ):
        if hi <= lo:
            continue
        pe = kernels.electrical_power_many(delta[lo:hi], emf, stage.g, stage.b)
        pa = pm - pe
        p_coi[lo:hi] = pa.sum(axis=1)
        f_coi[lo:hi] = pa - np.multiply.outer(p_coi[lo:hi], m / mt)

    return Trajectory(
        scenario=scenario,
        t=t,
        delta_abs=delta,
        delta_sys=dsys,
        omega_sys=wsys,
        delta_coi=delta_coi,
        omega_coi=omega_coi,
        f_coi=f_coi,
        p_coi=p_coi,
        clearing_index=clearing_index,
        clearing_time=clearing_time,
        dt=dt,
        diverged_numerically=diverged,
        backend=kernels.BACKEND,
    )


def kimbark_trace(trajectory: Trajectory, machine_id: int) -> np.ndarray:
    """(delta_coi, f_coi, kinetic energy) samples for one machine.

    The angle/accelerating-power pairs trace the machine's equal-area
    picture in the COI frame; column 2 is 0.5 M omega_coi^2.
    """
    i = trajectory.scenario.index_of(machine_id)
    mi = trajectory.scenario.machines[i].m
    ke = 0.5 * mi * trajectory.omega_coi[:, i] ** 2
    return np.column_stack(
        [trajectory.delta_coi[:, i], trajectory.f_coi[:, i], ke]
    )


# ---------------------------------------------------------------------------
# CSV export


def _meta_lines(schema: str, meta: dict) -> list[str]:
    parts = " ".join(f"{k}={v}" for k, v in meta.items())
    return [f"# schema: {schema}", f"# settings: {parts}"]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def trajectory_to_csv(trajectory: Trajectory) -> str:
    """Render the trajectory as CSV (degrees for angles, 9 significant digits)."""
    ids = trajectory.machine_ids
    header = (
        ["t", "delta_sys"]
        + [f"delta_coi_{i}" for i in ids]
        + [f"omega_coi_{i}" for i in ids]
        + [f"f_coi_{i}" for i in ids]
    )
    lines = _meta_lines(CSV_SCHEMA, trajectory.settings_meta())
    lines.append(",".join(header))
    deg = math.degrees(1.0)
    for k in range(trajectory.n_samples):
        row = [
            _fmt(trajectory.t[k]),
            _fmt(trajectory.delta_sys[k] * deg),
            *(_fmt(v * deg) for v in trajectory.delta_coi[k]),
            *(_fmt(v) for v in trajectory.omega_coi[k]),
            *(_fmt(v) for v in trajectory.f_coi[k]),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trajectory_to_csv(trajectory))
