"""Stability assessment: per-machine verdicts, system verdict, the
superimposed-machine verdict, their comparison, and critical clearing time.

A machine is unstable when it shows an IDLP or its potential energy
diverges; stable when it turns around (IDSP) and stays bounded; censored
when the horizon ends before either. The system verdict is driven by the
individual ones (any unstable machine makes the system unstable). The
superimposed verdict is what the aggregated energy alone would conclude;
the comparative report collects where the two views disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    EnergyEvent,
    EnergyTrace,
    divergence_check,
    find_idsp_idlp,
    find_smpp,
    machine_energy_trace,
    omega_crossings,
    residual_decomposition,
)
from .errors import BracketError, CensoredError, ScenarioError
from .model import Scenario
from .simulator import Trajectory, integrate

CRITICALITY_KAPPA = 3.0
QUIESCENT_OMEGA = 1e-6
QUIESCENT_IMPE = 1e-9
REPORT_SCHEMA = "swingenergy.report/1"
CCT_SCHEMA = "swingenergy.cct/1"


@dataclass
class MachineVerdict:
    machine: int
    status: str                       # "stable" | "unstable" | "censored"
    is_critical: bool
    first_event: EnergyEvent | None   # the verdict-deciding event
    peak_impe: float
    crossing_times: tuple[float, ...] = ()

    def swing_index_at(self, t: float) -> int:
        """Number of COI speed zero crossings up to time t (half-step slack)."""
        return sum(1 for ct in self.crossing_times if ct <= t + 1e-12)


@dataclass(frozen=True)
class SystemVerdict:
    status: str
    leading_machine: int | None


@dataclass
class SuperimposedVerdict:
    status: str
    smpp: EnergyEvent
    residual_smke: float
    smpe_unbounded: bool
    margin: object | None = None


@dataclass
class ComparativeReport:
    smpp_t: float
    event_offsets: list[dict]
    swing_table: list[dict]
    residual: dict
    event_window: tuple[float, float] | None
    window_contains_smpp: bool | None
    findings: list[str] = field(default_factory=list)


@dataclass
class AssessmentReport:
    scenario_name: str
    settings: dict
    individual: list[MachineVerdict]
    system: SystemVerdict
    superimposed: SuperimposedVerdict
    comparative: ComparativeReport


@dataclass
class CctResult:
    cct: float
    bracket: tuple[float, float]
    resolution: float
    probes: list[tuple[float, str]]
    verdict_source: str
    dt: float
    horizon: float


def individual_verdicts(
    trajectory: Trajectory, trace: EnergyTrace, kappa: float = CRITICALITY_KAPPA
) -> list[MachineVerdict]:
    """Per-machine verdicts with criticality flags.

    Critical: unstable, or the machine's post-clearing potential-energy peak
    reaches kappa times the median peak. Machines that never leave the
    equilibrium (roundoff-level motion) are stable with no events.
    """
    ci = trace.clearing_index
    events = find_idsp_idlp(trajectory, trace)
    div = divergence_check(trace)
    peaks = trace.impe[ci:].max(axis=0)
    median_peak = float(np.median(peaks))
    verdicts = []
    for i, mid in enumerate(trace.machine_ids):
        idsp = next((e for e in events if e.machine == mid and e.kind == "IDSP"), None)
        idlp = next((e for e in events if e.machine == mid and e.kind == "IDLP"), None)
        unbounded = div.machine_status[mid] == "unbounded_negative"
        quiescent = (
            np.abs(trajectory.omega_coi[ci:, i]).max() <= QUIESCENT_OMEGA
            and np.abs(trace.impe[ci:, i]).max() <= QUIESCENT_IMPE
        )
        # a liberation only decides the verdict when the machine never turned
        # around first; later f-upcrossings occur in bounded multi-swing
        # motion too, so those count only with divergence backing them
        liberated = idlp is not None and (idsp is None or idlp.t < idsp.t)
        if quiescent:
            # roundoff flicker fakes crossings; a motionless machine is stable
            status, first = "stable", None
        elif liberated or unbounded:
            status, first = "unstable", idlp
        elif idsp is not None:
            status, first = "stable", idsp
        else:
            status, first = "censored", None
        critical = status == "unstable" or (
            peaks[i] > 1e-9 and peaks[i] >= kappa * median_peak
        )
        # roundoff-level speed flickers sign; a quiescent machine has no swings
        crossings = (
            [] if quiescent else omega_crossings(trajectory.omega_coi[:, i], ci)
        )
        verdicts.append(
            MachineVerdict(
                machine=mid,
                status=status,
                is_critical=bool(critical),
                first_event=first,
                peak_impe=float(peaks[i]),
                crossing_times=tuple(float(trace.t[k]) for k, _ in crossings),
            )
        )
    return verdicts


def system_verdict(verdicts: list[MachineVerdict]) -> SystemVerdict:
    """Any unstable machine makes the system unstable; the leading machine
    is the one with the earliest deciding event."""
    unstable = [v for v in verdicts if v.status == "unstable"]
    if unstable:
        def onset(v: MachineVerdict) -> tuple:
            t = v.first_event.t if v.first_event is not None else math.inf
            return (t, v.machine)

        return SystemVerdict("unstable", min(unstable, key=onset).machine)
    if any(v.status == "censored" for v in verdicts):
        return SystemVerdict("censored", None)
    return SystemVerdict("stable", None)


def superimposed_verdict(trace: EnergyTrace, margin=None) -> SuperimposedVerdict:
    """What the aggregated energy says on its own.

    With a margin: its sign decides. Without: unbounded SMPE decides
    unstable, a censored peak censors, otherwise stable.
    """
    smpp = find_smpp(trace)
    div = divergence_check(trace)
    if margin is not None:
        status = "stable" if margin.eta > 0 else "unstable" if margin.eta < 0 else "critical"
    elif div.system_unbounded:
        status = "unstable"
    elif smpp.censored:
        status = "censored"
    else:
        status = "stable"
    return SuperimposedVerdict(
        status=status,
        smpp=smpp,
        residual_smke=smpp.residual_ke,
        smpe_unbounded=div.system_unbounded,
        margin=margin,
    )


def comparative_report(
    trajectory: Trajectory,
    trace: EnergyTrace,
    verdicts: list[MachineVerdict] | None = None,
) -> ComparativeReport:
    """Where the superimposed picture and the individual machines disagree.

    Collects the time offsets between the SMPE peak and each critical
    machine's deciding event, every machine's swing phase at that peak, and
    the decomposition of the residual kinetic energy carried across it.
    """
    if verdicts is None:
        verdicts = individual_verdicts(trajectory, trace)
    ci = trace.clearing_index
    k_peak = ci + int(np.argmax(trace.smpe[ci:]))
    smpp_t = float(trace.t[k_peak])

    offsets = []
    for v in verdicts:
        if v.is_critical and v.first_event is not None:
            offsets.append(
                {
                    "machine": v.machine,
                    "kind": v.first_event.kind,
                    "t": v.first_event.t,
                    "offset": v.first_event.t - smpp_t,
                }
            )
    window = None
    contains = None
    if offsets:
        times = [o["t"] for o in offsets]
        window = (min(times), max(times))
        if len(offsets) >= 2:
            contains = window[0] <= smpp_t <= window[1]

    swing_table = []
    for i, v in enumerate(verdicts):
        omega = float(trajectory.omega_coi[k_peak, i])
        f = float(trajectory.f_coi[k_peak, i])
        swing = sum(1 for ct in v.crossing_times if ct < smpp_t - 1e-12) + 1
        swing_table.append(
            {
                "machine": v.machine,
                "swing": swing,
                "phase": "accelerating" if f * omega > 0 else "decelerating",
                "omega": omega,
                "f": f,
                "imke": float(trace.imke[k_peak, i]),
            }
        )

    residual = residual_decomposition(trace.imke[k_peak], trace.machine_ids)

    findings = []
    for o in offsets:
        lead = "before" if o["offset"] < 0 else "after"
        findings.append(
            f"machine {o['machine']} {o['kind']} at {o['t']:.3f} s, "
            f"{abs(o['offset']):.3f} s {lead} the SMPE peak"
        )
    if contains is not None:
        inside = "inside" if contains else "outside"
        findings.append(
            f"SMPE peak at {smpp_t:.3f} s lies {inside} the critical-machine "
            f"event window [{window[0]:.3f}, {window[1]:.3f}] s"
        )
    total = residual["total"]
    if residual["max_contributor"] is not None and total > 0:
        top = residual["max_contributor"]
        share = dict(residual["per_machine"])[top] / total
        findings.append(
            f"machine {top} carries {share:.0%} of the residual kinetic energy "
            f"at the SMPE peak"
        )
    multi_swing = [r for r in swing_table if r["swing"] > 1]
    if multi_swing:
        names = ", ".join(str(r["machine"]) for r in multi_swing)
        findings.append(f"machines past their first swing at the peak: {names}")

    return ComparativeReport(
        smpp_t=smpp_t,
        event_offsets=offsets,
        swing_table=swing_table,
        residual=residual,
        event_window=window,
        window_contains_smpp=contains,
        findings=findings,
    )


def build_report(
    trajectory: Trajectory,
    trace: EnergyTrace | None = None,
    margin=None,
    kappa: float = CRITICALITY_KAPPA,
) -> AssessmentReport:
    """Full assessment of one simulated trajectory."""
    if trace is None:
        trace = machine_energy_trace(trajectory)
    verdicts = individual_verdicts(trajectory, trace, kappa)
    return AssessmentReport(
        scenario_name=trajectory.scenario.name,
        settings=trajectory.settings_meta(),
        individual=verdicts,
        system=system_verdict(verdicts),
        superimposed=superimposed_verdict(trace, margin),
        comparative=comparative_report(trajectory, trace, verdicts),
    )


# ---------------------------------------------------------------------------
# critical clearing time


def _probe(scenario: Scenario, t_cl: float, dt: float, horizon: float) -> str:
    scen = scenario.with_overrides(clearing_time=t_cl, dt=dt, horizon=horizon)
    traj = integrate(scen)
    trace = machine_energy_trace(traj)
    verdicts = individual_verdicts(traj, trace)
    return system_verdict(verdicts).status


def find_cct(
    scenario: Scenario,
    bracket: tuple[float, float],
    resolution: float = 0.001,
    horizon: float | None = None,
    jobs: int = 1,
) -> CctResult:
    """Critical clearing time by bisection on the resolution grid.

    The bracket must be verified: stable at the low end, unstable at the
    high end, else BracketError with the probe outcomes (a non-monotone
    verdict profile inside the bracket is not detectable by bisection;
    documented limitation). Probes run at dt = min(dt, resolution) so every
    probed clearing time lies on the sample grid. Returns the last stable
    time; the final bracket width is at most the resolution. A censored
    probe raises CensoredError (extend the horizon).
    """
    if resolution <= 0:
        raise ScenarioError("resolution must be positive")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 <= lo < hi):
        raise ScenarioError("bracket must satisfy 0 <= lo < hi")
    k_lo = int(round(lo / resolution))
    k_hi = int(round(hi / resolution))
    if k_lo >= k_hi:
        raise ScenarioError("bracket narrower than the resolution")
    dt = min(scenario.sim.dt, resolution)
    horizon = float(horizon) if horizon is not None else scenario.sim.horizon

    probes: list[tuple[float, str]] = []

    def probe(k: int) -> str:
        status = _probe(scenario, k * resolution, dt, horizon)
        probes.append((k * resolution, status))
        if status == "censored":
            raise CensoredError(
                f"no verdict at clearing time {k * resolution:.3f} s within "
                f"{horizon} s; extend the horizon"
            )
        return status

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=2) as pool:
            flo = pool.submit(_probe, scenario, k_lo * resolution, dt, horizon)
            fhi = pool.submit(_probe, scenario, k_hi * resolution, dt, horizon)
            status_lo, status_hi = flo.result(), fhi.result()
        probes.append((k_lo * resolution, status_lo))
        probes.append((k_hi * resolution, status_hi))
        for status, k in ((status_lo, k_lo), (status_hi, k_hi)):
            if status == "censored":
                raise CensoredError(
                    f"no verdict at clearing time {k * resolution:.3f} s; "
                    "extend the horizon"
                )
    else:
        status_lo = probe(k_lo)
        status_hi = probe(k_hi)
    if status_lo != "stable":
        raise BracketError(
            f"bracket low end {k_lo * resolution:.3f} s is {status_lo}, not stable",
            probes=probes,
        )
    if status_hi != "unstable":
        raise BracketError(
            f"bracket high end {k_hi * resolution:.3f} s is {status_hi}, not unstable",
            probes=probes,
        )

    while k_hi - k_lo > 1:
        mid = (k_lo + k_hi) // 2
        if probe(mid) == "stable":
            k_lo = mid
        else:
            k_hi = mid

    # the deciding mechanism at the unstable end
    scen_hi = scenario.with_overrides(
        clearing_time=k_hi * resolution, dt=dt, horizon=horizon
    )
    traj = integrate(scen_hi)
    trace = machine_energy_trace(traj)
    verdicts = individual_verdicts(traj, trace)
    source = "divergence"
    for v in verdicts:
        if v.status == "unstable" and v.first_event is not None:
            source = "individual"
            break

    return CctResult(
        cct=k_lo * resolution,
        bracket=(k_lo * resolution, k_hi * resolution),
        resolution=resolution,
        probes=probes,
        verdict_source=source,
        dt=dt,
        horizon=horizon,
    )


# ---------------------------------------------------------------------------
# serialization


def _event_dict(event: EnergyEvent | None) -> dict | None:
    from .energy import event_to_dict

    return event_to_dict(event) if event is not None else None


def report_to_json_dict(report: AssessmentReport) -> dict:
    from .equilibria import margin_to_dict

    sup = report.superimposed
    return {
        "schema": REPORT_SCHEMA,
        "scenario": report.scenario_name,
        "settings": report.settings,
        "system": {
            "status": report.system.status,
            "leading_machine": report.system.leading_machine,
        },
        "superimposed": {
            "status": sup.status,
            "smpp": _event_dict(sup.smpp),
            "residual_smke": sup.residual_smke,
            "smpe_unbounded": sup.smpe_unbounded,
            "margin": margin_to_dict(sup.margin) if sup.margin is not None else None,
        },
        "individual": [
            {
                "machine": v.machine,
                "status": v.status,
                "is_critical": v.is_critical,
                "first_event": _event_dict(v.first_event),
                "peak_impe": v.peak_impe,
                "swing_count": len(v.crossing_times),
            }
            for v in report.individual
        ],
        "comparative": {
            "smpp_t": report.comparative.smpp_t,
            "event_offsets": report.comparative.event_offsets,
            "swing_table": report.comparative.swing_table,
            "residual": report.comparative.residual,
            "event_window": report.comparative.event_window,
            "window_contains_smpp": report.comparative.window_contains_smpp,
            "findings": report.comparative.findings,
        },
    }


def report_to_text(report: AssessmentReport) -> str:
    lines = []
    name = report.scenario_name or "(unnamed)"
    lines.append(f"scenario: {name}")
    lines.append(
        f"system verdict: {report.system.status}"
        + (
            f" (leading machine {report.system.leading_machine})"
            if report.system.leading_machine is not None
            else ""
        )
    )
    sup = report.superimposed
    lines.append(
        f"superimposed verdict: {sup.status}  "
        f"smpe_peak={sup.smpp.value:.4f} t={sup.smpp.t:.3f}s "
        f"residual_smke={sup.residual_smke:.4f}"
    )
    lines.append("")
    lines.append(f"{'machine':>8} {'status':>10} {'critical':>9} "
                 f"{'first event':>16} {'peak_impe':>10} {'swings':>7}")
    for v in report.individual:
        ev = (
            f"{v.first_event.kind}@{v.first_event.t:.3f}s"
            if v.first_event is not None
            else "-"
        )
        lines.append(
            f"{v.machine:>8} {v.status:>10} {str(v.is_critical):>9} "
            f"{ev:>16} {v.peak_impe:>10.4f} {len(v.crossing_times):>7}"
        )
    if report.comparative.findings:
        lines.append("")
        lines.append("findings:")
        for s in report.comparative.findings:
            lines.append(f"  - {s}")
    return "\n".join(lines) + "\n"


def cct_to_json_dict(result: CctResult, scenario: Scenario) -> dict:
    return {
        "schema": CCT_SCHEMA,
        "scenario": scenario.name,
        "settings": {
            "integrator": "rk4",
            "dt": result.dt,
            "horizon": result.horizon,
            "resolution": result.resolution,
        },
        "cct": result.cct,
        "bracket": list(result.bracket),
        "verdict_source": result.verdict_source,
        "probes": [{"clearing_time": t, "status": s} for t, s in result.probes],
    }
