"""Transient energy traces, events, and the potential-energy surface.

Per machine, in the COI frame:

    IMKE_i = 0.5 M_i omega_coi_i^2
    IMPE_i = -integral f_i d delta_coi_i      (trapezoid along the trajectory)

The potential integral is zeroed at the fault-clearing sample; kinetic
energy is absolute. Superimposed quantities are the plain sums over
machines (SMKE, SMPE, SMTE = SMKE + SMPE), so with zero damping SMTE is
conserved after clearing because every machine's total is.

Events on the superimposed and individual traces:

    SMPP  global post-clearing maximum of SMPE
    IDSP  first post-clearing zero crossing of a machine's COI speed
    IDLP  first post-clearing f crossing from negative to positive while
          the machine's COI speed is positive

At any of these the relevant potential energy has a local maximum within
one sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ScenarioError
from .model import Scenario
from .simulator import Trajectory

ENERGY_CSV_SCHEMA = "swingenergy.energy/1"
EVENTS_SCHEMA = "swingenergy.events/1"
PES_CSV_SCHEMA = "swingenergy.pes/1"
DIVERGENCE_THRESHOLD = 10.0  # p.u.


@dataclass(frozen=True)
class EnergyEvent:
    kind: str               # "SMPP", "IDSP", "IDLP"
    machine: int | None     # None for SMPP
    t: float
    value: float            # SMPE at an SMPP, IMPE at an IDSP/IDLP
    residual_ke: float      # SMKE at an SMPP, IMKE at an IDSP/IDLP
    censored: bool = False


@dataclass
class EnergyTrace:
    """Per-sample individual and superimposed energies for one trajectory."""

    machine_ids: tuple[int, ...]
    t: np.ndarray
    clearing_index: int
    clearing_time: float
    dt: float
    imke: np.ndarray
    impe: np.ndarray
    imte: np.ndarray
    smke: np.ndarray
    smpe: np.ndarray
    smte: np.ndarray
    truncated: bool
    backend: str

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]

    def settings_meta(self) -> dict:
        return {
            "quadrature": "trapezoid",
            "datum": "clearing_sample",
            "backend": self.backend,
            "dt": self.dt,
            "clearing_time": self.clearing_time,
            "clearing_index": self.clearing_index,
            "truncated": self.truncated,
        }


@dataclass(frozen=True)
class ConservationReport:
    """Post-clearing drift of the conserved totals."""

    reference: float            # SMTE at the clearing sample
    max_drift: float            # max |SMTE - reference| after clearing
    relative_drift: float       # max_drift / max(1, |reference|)
    per_machine: np.ndarray     # same measure on each machine's total
    window: tuple[float, float]


@dataclass(frozen=True)
class DivergenceReport:
    machine_status: dict        # id -> "bounded" | "unbounded_negative"
    system_unbounded: bool
    threshold: float
    censored: bool


@dataclass(frozen=True)
class GridSpec:
    """Rectangular window of angle offsets from an equilibrium (radians)."""

    a_min: float
    a_max: float
    a_steps: int
    b_min: float
    b_max: float
    b_steps: int

    @classmethod
    def from_degrees_string(cls, text: str) -> "GridSpec":
        """Parse 'a_min:a_max:steps,b_min:b_max:steps' given in degrees."""
        try:
            a_part, b_part = text.split(",")
            a_lo, a_hi, a_n = a_part.split(":")
            b_lo, b_hi, b_n = b_part.split(":")
            return cls(
                math.radians(float(a_lo)), math.radians(float(a_hi)), int(a_n),
                math.radians(float(b_lo)), math.radians(float(b_hi)), int(b_n),
            )
        except (ValueError, TypeError):
            raise ScenarioError(
                f"bad grid spec {text!r} (expected a_min:a_max:steps,b_min:b_max:steps)"
            ) from None

    def __post_init__(self):
        if self.a_steps < 1 or self.b_steps < 1:
            raise ScenarioError("grid steps must be positive")


@dataclass
class PesGrid:
    axis_ids: tuple[int, int]
    a_values: np.ndarray        # radians, COI frame
    b_values: np.ndarray
    smpe: np.ndarray            # (a_steps, b_steps)
    sep_delta_coi: np.ndarray
    substeps: int
    stage: str = "postfault"

    def settings_meta(self) -> dict:
        return {
            "quadrature": "trapezoid",
            "substeps": self.substeps,
            "stage": self.stage,
            "axes": f"{self.axis_ids[0]},{self.axis_ids[1]}",
            "datum": "postfault_sep",
        }


def machine_energy_trace(trajectory: Trajectory) -> EnergyTrace:
    """Accumulate the energy trace along a trajectory.

    The potential integral runs along the simulated path with trapezoid
    panels; its datum is the clearing sample, so values before clearing are
    the negated fault-on integral back from it. The fault-on accelerating
    power's left limit is used at the switch sample for pre-clearing panels.
    """
    scen = trajectory.scenario
    m = scen.m_vec
    ci = trajectory.clearing_index
    imke = 0.5 * m[None, :] * trajectory.omega_coi**2

    samples = trajectory.n_samples
    panels = np.zeros((max(samples - 1, 0), scen.n))
    ddelta = np.diff(trajectory.delta_coi, axis=0)
    f = trajectory.f_coi
    if ci > 0:
        f_pre = f[: ci + 1].copy()
        faulton = scen.stages.faulton
        f_pre[ci] = kernels.coi_accel(
            trajectory.delta_abs[ci], m, scen.pm_vec, scen.emf_vec, faulton.g, faulton.b
        )
        panels[:ci] = -0.5 * (f_pre[:-1] + f_pre[1:]) * ddelta[:ci]
    if samples - 1 > ci:
        panels[ci:] = -0.5 * (f[ci:-1] + f[ci + 1 :]) * ddelta[ci:]

    impe = np.zeros((samples, scen.n))
    np.cumsum(panels, axis=0, out=impe[1:])
    impe -= impe[ci].copy()

    imte = imke + impe
    smke = imke.sum(axis=1)
    smpe = impe.sum(axis=1)
    return EnergyTrace(
        machine_ids=scen.ids,
        t=trajectory.t,
        clearing_index=ci,
        clearing_time=trajectory.clearing_time,
        dt=trajectory.dt,
        imke=imke,
        impe=impe,
        imte=imte,
        smke=smke,
        smpe=smpe,
        smte=smke + smpe,
        truncated=trajectory.diverged_numerically,
        backend=trajectory.backend,
    )


def find_smpp(trace: EnergyTrace) -> EnergyEvent:
    """Global post-clearing maximum of SMPE.

    Censored when the maximum sits at the final sample with SMPE still
    rising into it (the peak lies beyond the horizon).
    """
    ci = trace.clearing_index
    post = trace.smpe[ci:]
    k = ci + int(np.argmax(post))
    last = trace.n_samples - 1
    censored = bool(
        k == last and trace.n_samples >= 2 and trace.smpe[last] > trace.smpe[last - 1]
    )
    return EnergyEvent(
        kind="SMPP",
        machine=None,
        t=float(trace.t[k]),
        value=float(trace.smpe[k]),
        residual_ke=float(trace.smke[k]),
        censored=censored,
    )


def omega_crossings(omega: np.ndarray, start: int) -> list[tuple[int, float]]:
    """Zero crossings of a speed series from sample `start` on.

    Returns (snapped_index, interpolated_fraction) per crossing; the snapped
    index is the nearer sample of the bracketing pair.
    """
    out = []
    for k in range(start, omega.shape[0] - 1):
        if omega[k] * omega[k + 1] < 0.0:
            theta = omega[k] / (omega[k] - omega[k + 1])
            out.append((k if theta < 0.5 else k + 1, theta))
    return out


def find_idsp_idlp(trajectory: Trajectory, trace: EnergyTrace) -> list[EnergyEvent]:
    """First IDSP and first IDLP per machine within the horizon.

    Crossings are located by linear interpolation and snapped to the nearest
    sample. A simultaneous IDSP/IDLP candidate (same snapped sample)
    resolves to the IDSP; the IDLP scan then continues.
    """
    ci = trace.clearing_index
    events: list[EnergyEvent] = []
    for i, mid in enumerate(trace.machine_ids):
        omega = trajectory.omega_coi[:, i]
        f = trajectory.f_coi[:, i]
        crossings = omega_crossings(omega, ci)
        idsp_idx = crossings[0][0] if crossings else None
        if idsp_idx is not None:
            events.append(
                EnergyEvent(
                    kind="IDSP",
                    machine=mid,
                    t=float(trace.t[idsp_idx]),
                    value=float(trace.impe[idsp_idx, i]),
                    residual_ke=float(trace.imke[idsp_idx, i]),
                )
            )
        for k in range(ci, trace.n_samples - 1):
            if f[k] < 0.0 < f[k + 1]:
                theta = f[k] / (f[k] - f[k + 1])
                idx = k if theta < 0.5 else k + 1
                if omega[idx] <= 0.0:
                    continue
                if idx == idsp_idx:
                    continue  # zero-speed takes precedence at a tie
                events.append(
                    EnergyEvent(
                        kind="IDLP",
                        machine=mid,
                        t=float(trace.t[idx]),
                        value=float(trace.impe[idx, i]),
                        residual_ke=float(trace.imke[idx, i]),
                    )
                )
                break
    events.sort(key=lambda e: (e.t, e.machine))
    return events


def conservation_report(trace: EnergyTrace) -> ConservationReport:
    """Post-clearing drift of SMTE and of each machine's total."""
    ci = trace.clearing_index
    ref = float(trace.smte[ci])
    drift = np.abs(trace.smte[ci:] - ref)
    per_machine = np.abs(trace.imte[ci:] - trace.imte[ci]).max(axis=0)
    max_drift = float(drift.max())
    return ConservationReport(
        reference=ref,
        max_drift=max_drift,
        relative_drift=max_drift / max(1.0, abs(ref)),
        per_machine=per_machine,
        window=(float(trace.t[ci]), float(trace.t[-1])),
    )


def divergence_check(
    trace: EnergyTrace, threshold: float = DIVERGENCE_THRESHOLD
) -> DivergenceReport:
    """Classify potential energies as bounded or unbounded-negative.

    Unbounded: below -threshold at the end of the run and still descending
    net over the final tenth of the samples. Separated machines slip poles,
    which superposes a ripple on the secular descent, so the tail test uses
    the net change rather than sample-to-sample monotonicity.
    """
    tail = max(2, trace.n_samples // 10)

    def unbounded(series: np.ndarray) -> bool:
        return bool(series[-1] < -threshold and series[-1] < series[-tail])

    status = {
        mid: ("unbounded_negative" if unbounded(trace.impe[:, i]) else "bounded")
        for i, mid in enumerate(trace.machine_ids)
    }
    return DivergenceReport(
        machine_status=status,
        system_unbounded=unbounded(trace.smpe),
        threshold=threshold,
        censored=trace.truncated,
    )


def pes_sample(
    scenario: Scenario,
    axis_machines: tuple[int, int],
    grid: GridSpec,
    substeps: int = 200,
    jobs: int = 1,
) -> PesGrid:
    """Sample the superimposed potential energy on a two-machine window.

    Grid values are angle offsets from the post-fault stable equilibrium in
    COI coordinates; each sampled point is integrated along the straight ray
    from the equilibrium. The two axis machines move; with three machines the
    remaining angle follows the COI constraint, otherwise the remaining
    machines hold their equilibrium values. The (0, 0) node is the
    equilibrium itself and evaluates to exactly zero. Results are
    independent of `jobs`.
    """
    from .equilibria import solve_sep

    if substeps < 1:
        raise ScenarioError("substeps must be positive")
    ia = scenario.index_of(axis_machines[0])
    ib = scenario.index_of(axis_machines[1])
    if ia == ib:
        raise ScenarioError("axis machines must differ")
    sep = solve_sep(scenario, "postfault")
    a_values = np.linspace(grid.a_min, grid.a_max, grid.a_steps)
    b_values = np.linspace(grid.b_min, grid.b_max, grid.b_steps)

    args = (scenario, ia, ib, sep.delta_coi, b_values, substeps)
    rows = range(grid.a_steps)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(_pes_row, ((a_values[r], args) for r in rows))
            )
    else:
        results = [_pes_row((a_values[r], args)) for r in rows]

    return PesGrid(
        axis_ids=(axis_machines[0], axis_machines[1]),
        a_values=a_values,
        b_values=b_values,
        smpe=np.vstack(results),
        sep_delta_coi=sep.delta_coi,
        substeps=substeps,
    )


def _pes_row(packed) -> np.ndarray:
    a_val, (scenario, ia, ib, sep_delta, b_values, substeps) = packed
    stage = scenario.stages.postfault
    m, pm, emf = scenario.m_vec, scenario.pm_vec, scenario.emf_vec
    n = scenario.n
    third = None
    if n == 3:
        third = next(i for i in range(3) if i not in (ia, ib))
    out = np.empty(b_values.shape[0])
    for j, db in enumerate(b_values):
        point = sep_delta.copy()
        da = a_val
        point[ia] += da
        point[ib] += db
        if third is not None:
            point[third] -= (m[ia] * da + m[ib] * db) / m[third]
        val = kernels.ray_smpe(sep_delta, point, substeps, m, pm, emf, stage.g, stage.b)
        out[j] = val if math.isfinite(val) else math.nan
    return out


def residual_decomposition(values, machine_ids=None):
    """Split a residual kinetic energy into per-machine contributions.

    `values` are the machines' kinetic energies at the instant of interest.
    The total uses compensated summation so it equals the decimal sum of the
    inputs; the largest contributor is flagged.
    """
    vals = [float(v) for v in np.asarray(values, dtype=np.float64)]
    ids = list(machine_ids) if machine_ids is not None else list(range(1, len(vals) + 1))
    if len(ids) != len(vals):
        raise ScenarioError("machine id list does not match value count")
    total = math.fsum(vals)
    top = ids[int(np.argmax(vals))] if vals else None
    return {
        "per_machine": list(zip(ids, vals)),
        "total": total,
        "max_contributor": top,
    }


# ---------------------------------------------------------------------------
# serialization


def _meta_lines(schema: str, meta: dict) -> list[str]:
    parts = " ".join(f"{k}={v}" for k, v in meta.items())
    return [f"# schema: {schema}", f"# settings: {parts}"]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def energy_trace_to_csv(trace: EnergyTrace) -> str:
    ids = trace.machine_ids
    header = (
        ["t"]
        + [f"imke_{i}" for i in ids]
        + [f"impe_{i}" for i in ids]
        + ["smke", "smpe", "smte"]
    )
    lines = _meta_lines(ENERGY_CSV_SCHEMA, trace.settings_meta())
    lines.append(",".join(header))
    for k in range(trace.n_samples):
        row = [
            _fmt(trace.t[k]),
            *(_fmt(v) for v in trace.imke[k]),
            *(_fmt(v) for v in trace.impe[k]),
            _fmt(trace.smke[k]),
            _fmt(trace.smpe[k]),
            _fmt(trace.smte[k]),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def event_to_dict(event: EnergyEvent) -> dict:
    return {
        "kind": event.kind,
        "machine": event.machine,
        "t": event.t,
        "value": event.value,
        "residual_ke": event.residual_ke,
        "censored": event.censored,
    }


def events_to_json_dict(events, trace: EnergyTrace) -> dict:
    return {
        "schema": EVENTS_SCHEMA,
        "settings": trace.settings_meta(),
        "events": [event_to_dict(e) for e in events],
    }


def pes_to_csv(grid: PesGrid) -> str:
    lines = _meta_lines(PES_CSV_SCHEMA, grid.settings_meta())
    lines.append("offset_a_deg,offset_b_deg,smpe")
    for i, a in enumerate(grid.a_values):
        for j, b in enumerate(grid.b_values):
            lines.append(
                ",".join(
                    [_fmt(math.degrees(a)), _fmt(math.degrees(b)), _fmt(grid.smpe[i, j])]
                )
            )
    return "\n".join(lines) + "\n"
