"""System model: machines, reduced network stages, scenario documents.

A scenario couples a classical-model machine set (constant EMF behind
transient reactance, inertia M absorbing the frequency-base conversion) with
three reduced admittance matrices on the machine internal nodes: pre-fault,
fault-on, post-fault. Documents provide the matrices directly or bus-level
data (buses, branches, loads at a solved operating point) that this module
folds and Kron-reduces itself.

Angles are degrees in documents and radians everywhere else; powers are per
unit on the common MVA base.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ReductionError, ScenarioError

SCHEMA_VERSION = 1
STAGE_LABELS = ("prefault", "faulton", "postfault")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Machine:
    """One classical-model machine."""

    id: int
    m: float          # inertia coefficient, p.u. s^2/rad
    pm: float         # mechanical power, p.u.
    emf: float        # internal EMF magnitude, p.u.
    damping: float = 0.0


@dataclass(frozen=True)
class NetworkStage:
    """One reduced machine-node admittance matrix, split into G and B."""

    label: str
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.label not in STAGE_LABELS:
            raise ScenarioError(f"unknown stage label {self.label!r}")
        object.__setattr__(self, "g", _readonly(self.g))
        object.__setattr__(self, "b", _readonly(self.b))
        if self.g.shape != self.b.shape or self.g.ndim != 2 or self.g.shape[0] != self.g.shape[1]:
            raise ScenarioError(f"stage {self.label!r}: admittance matrix must be square")

    @classmethod
    def from_y(cls, label: str, y: np.ndarray) -> "NetworkStage":
        y = np.asarray(y, dtype=complex)
        return cls(label, y.real.copy(), y.imag.copy())

    @property
    def y(self) -> np.ndarray:
        return self.g + 1j * self.b

    @property
    def n(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class ReducedNetworkSet:
    prefault: NetworkStage
    faulton: NetworkStage
    postfault: NetworkStage

    def by_label(self, label: str) -> NetworkStage:
        if label not in STAGE_LABELS:
            raise ScenarioError(f"unknown stage label {label!r}")
        return getattr(self, label)


@dataclass(frozen=True)
class FaultSpec:
    bus: int
    clearing_time: float
    trip_branch: tuple[int, int] | None = None


@dataclass(frozen=True)
class SimSettings:
    dt: float = 0.01
    horizon: float = 1.4


@dataclass(frozen=True)
class Scenario:
    """Immutable simulation case: machines, stages, fault, settings."""

    machines: tuple[Machine, ...]
    stages: ReducedNetworkSet
    fault: FaultSpec
    sim: SimSettings = field(default_factory=SimSettings)
    name: str = ""
    # Absolute internal angles of the raw operating point, used as the
    # default Newton start and simulation origin. Not part of documents.
    angle_guess: np.ndarray | None = None

    def __post_init__(self):
        ids = [mc.id for mc in self.machines]
        if not ids:
            raise ScenarioError("scenario has no machines")
        if len(set(ids)) != len(ids):
            raise ScenarioError("machine ids must be unique")
        for mc in self.machines:
            if mc.m <= 0:
                raise ScenarioError(f"machine {mc.id}: inertia must be positive")
            if mc.emf <= 0:
                raise ScenarioError(f"machine {mc.id}: EMF must be positive")
            if mc.damping < 0:
                raise ScenarioError(f"machine {mc.id}: damping must be non-negative")
        n = len(ids)
        for label in STAGE_LABELS:
            stage = self.stages.by_label(label)
            if stage.n != n:
                raise ScenarioError(
                    f"stage {label!r} is {stage.n}x{stage.n} but there are {n} machines"
                )
        if self.fault.clearing_time < 0:
            raise ScenarioError("clearing_time must be non-negative")
        if self.sim.dt <= 0:
            raise ScenarioError("dt must be positive")
        if self.sim.horizon <= 0:
            raise ScenarioError("horizon must be positive")
        if self.fault.clearing_time > self.sim.horizon:
            raise ScenarioError("clearing_time must not exceed horizon")
        if self.angle_guess is not None:
            guess = _readonly(np.asarray(self.angle_guess, dtype=np.float64))
            if guess.shape != (n,):
                raise ScenarioError("angle_guess length must match machine count")
            object.__setattr__(self, "angle_guess", guess)

    @property
    def n(self) -> int:
        return len(self.machines)

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(mc.id for mc in self.machines)

    @cached_property
    def m_vec(self) -> np.ndarray:
        return _readonly([mc.m for mc in self.machines])

    @cached_property
    def pm_vec(self) -> np.ndarray:
        return _readonly([mc.pm for mc in self.machines])

    @cached_property
    def emf_vec(self) -> np.ndarray:
        return _readonly([mc.emf for mc in self.machines])

    @cached_property
    def damping_vec(self) -> np.ndarray:
        return _readonly([mc.damping for mc in self.machines])

    @property
    def m_total(self) -> float:
        return float(self.m_vec.sum())

    def index_of(self, machine_id: int) -> int:
        try:
            return self.ids.index(machine_id)
        except ValueError:
            raise ScenarioError(f"no machine with id {machine_id}") from None

    def with_overrides(
        self,
        clearing_time: float | None = None,
        dt: float | None = None,
        horizon: float | None = None,
    ) -> "Scenario":
        """New scenario with selected settings replaced; revalidates."""
        fault = self.fault
        sim = self.sim
        if clearing_time is not None:
            fault = replace(fault, clearing_time=float(clearing_time))
        if dt is not None or horizon is not None:
            sim = replace(
                sim,
                dt=float(dt) if dt is not None else sim.dt,
                horizon=float(horizon) if horizon is not None else sim.horizon,
            )
        return replace(self, fault=fault, sim=sim)


def electrical_power(delta, machines, stage: NetworkStage) -> np.ndarray:
    """Active power injected by each machine at angle vector `delta`.

    Invariant under a common shift of all angles. `machines` may be a
    Scenario or a sequence of Machine.
    """
    emf = machines.emf_vec if isinstance(machines, Scenario) else np.array(
        [mc.emf for mc in machines]
    )
    return kernels.electrical_power(delta, emf, stage.g, stage.b)


def kron_reduce(y: np.ndarray, retained: Sequence[int]) -> np.ndarray:
    """Eliminate all nodes not in `retained` from admittance matrix `y`.

    Returns Y_rr - Y_re Y_ee^-1 Y_er with rows/columns ordered as given in
    `retained`. Fully disconnected eliminated nodes (zero row and column)
    drop out as the identity; a singular remaining block raises
    ReductionError naming the offending node.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise ReductionError("admittance matrix must be square")
    nn = y.shape[0]
    retained = list(retained)
    if len(set(retained)) != len(retained):
        raise ReductionError("retained node list has duplicates")
    for i in retained:
        if not (0 <= i < nn):
            raise ReductionError(f"retained node {i} out of range")
    keep = set(retained)
    elim = [i for i in range(nn) if i not in keep]
    # disconnected nodes contribute nothing to the reduction
    elim = [
        i
        for i in elim
        if np.abs(y[i, :]).max() != 0.0 or np.abs(y[:, i]).max() != 0.0
    ]
    yrr = y[np.ix_(retained, retained)]
    if not elim:
        return yrr
    yre = y[np.ix_(retained, elim)]
    yer = y[np.ix_(elim, retained)]
    yee = y[np.ix_(elim, elim)]
    # LAPACK's exact-singularity test is defeated by roundoff pivots (an
    # islanded subnetwork solves to ~1e15 garbage instead of raising), so
    # screen the block's conditioning before trusting the solve
    sv = np.linalg.svd(yee, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-12:
        _, _, vh = np.linalg.svd(yee)
        bad = elim[int(np.argmax(np.abs(vh[-1])))]
        raise ReductionError(
            f"eliminated block is singular at node index {bad}", bus=bad
        )
    return yrr - yre @ np.linalg.solve(yee, yer)


# ---------------------------------------------------------------------------
# document parsing


def _require(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise ScenarioError(f"{ctx}: missing required key {key!r}")
    return doc[key]


def _number(value, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{ctx}: expected a number, got {value!r}")
    return float(value)


def _parse_complex_matrix(entry, ctx: str) -> np.ndarray:
    arr = np.asarray(entry, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise ScenarioError(f"{ctx}: expected an n x n matrix of [re, im] pairs")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def _parse_sim(doc: dict) -> SimSettings:
    sim = doc.get("sim", {})
    if not isinstance(sim, dict):
        raise ScenarioError("sim: expected an object")
    return SimSettings(
        dt=_number(sim.get("dt", 0.01), "sim.dt"),
        horizon=_number(sim.get("horizon", 1.4), "sim.horizon"),
    )


def _parse_fault(doc: dict) -> FaultSpec:
    fault = _require(doc, "fault", "scenario")
    if not isinstance(fault, dict):
        raise ScenarioError("fault: expected an object")
    bus = _require(fault, "bus", "fault")
    clearing = _number(_require(fault, "clearing_time", "fault"), "fault.clearing_time")
    trip = fault.get("trip_branch")
    if trip is not None:
        if not (isinstance(trip, (list, tuple)) and len(trip) == 2):
            raise ScenarioError("fault.trip_branch: expected a [from, to] pair")
        trip = (int(trip[0]), int(trip[1]))
    return FaultSpec(bus=int(bus), clearing_time=clearing, trip_branch=trip)


def _scenario_from_reduced(doc: dict) -> Scenario:
    machines = []
    for k, entry in enumerate(_require(doc, "machines", "scenario")):
        ctx = f"machines[{k}]"
        machines.append(
            Machine(
                id=int(_require(entry, "id", ctx)),
                m=_number(_require(entry, "m", ctx), f"{ctx}.m"),
                pm=_number(_require(entry, "pm", ctx), f"{ctx}.pm"),
                emf=_number(_require(entry, "emf", ctx), f"{ctx}.emf"),
                damping=_number(entry.get("damping", 0.0), f"{ctx}.damping"),
            )
        )
    reduced = doc["network"]["reduced"]
    stages = {}
    for label in STAGE_LABELS:
        stages[label] = NetworkStage.from_y(
            label, _parse_complex_matrix(_require(reduced, label, "network.reduced"), label)
        )
    return Scenario(
        machines=tuple(machines),
        stages=ReducedNetworkSet(**stages),
        fault=_parse_fault(doc),
        sim=_parse_sim(doc),
        name=str(doc.get("name", "")),
    )


def _build_bus_y(bus_index: dict, branches: Iterable[dict], skip=None) -> np.ndarray:
    nb = len(bus_index)
    y = np.zeros((nb, nb), dtype=complex)
    for k, br in enumerate(branches):
        if skip is not None and k == skip:
            continue
        ctx = f"branches[{k}]"
        f = bus_index.get(int(_require(br, "from", ctx)))
        t = bus_index.get(int(_require(br, "to", ctx)))
        if f is None or t is None:
            raise ScenarioError(f"{ctx}: endpoint bus not in bus list")
        r = _number(br.get("r", 0.0), f"{ctx}.r")
        x = _number(_require(br, "x", ctx), f"{ctx}.x")
        half_b = 0.5j * _number(br.get("b", 0.0), f"{ctx}.b")
        tap = _number(br.get("tap", 1.0), f"{ctx}.tap")
        if tap == 0.0:
            tap = 1.0
        ys = 1.0 / complex(r, x)
        y[f, f] += (ys + half_b) / tap**2
        y[t, t] += ys + half_b
        y[f, t] -= ys / tap
        y[t, f] -= ys / tap
    return y


def _scenario_from_raw(doc: dict) -> Scenario:
    net = doc["network"]
    buses = _require(net, "buses", "network")
    branches = _require(net, "branches", "network")
    loads = net.get("loads", [])

    bus_index: dict[int, int] = {}
    vm = np.empty(len(buses))
    va = np.empty(len(buses))
    for k, entry in enumerate(buses):
        ctx = f"buses[{k}]"
        bid = int(_require(entry, "id", ctx))
        if bid in bus_index:
            raise ScenarioError(f"{ctx}: duplicate bus id {bid}")
        bus_index[bid] = k
        vm[k] = _number(_require(entry, "vm", ctx), f"{ctx}.vm")
        va[k] = math.radians(_number(entry.get("va_deg", 0.0), f"{ctx}.va_deg"))
        if vm[k] <= 0:
            raise ScenarioError(f"{ctx}: vm must be positive")

    nb = len(buses)
    ybus = _build_bus_y(bus_index, branches)
    for k, ld in enumerate(loads):
        ctx = f"loads[{k}]"
        idx = bus_index.get(int(_require(ld, "bus", ctx)))
        if idx is None:
            raise ScenarioError(f"{ctx}: bus not in bus list")
        p = _number(_require(ld, "p", ctx), f"{ctx}.p")
        q = _number(_require(ld, "q", ctx), f"{ctx}.q")
        ybus[idx, idx] += complex(p, -q) / vm[idx] ** 2

    raw_machines = _require(doc, "machines", "scenario")
    ng = len(raw_machines)
    ids, m_vals, damp = [], [], []
    gen_bus = np.empty(ng, dtype=int)
    xdp = np.empty(ng)
    emf = np.empty(ng)
    delta0 = np.empty(ng)
    vbus = vm * np.exp(1j * va)
    for k, entry in enumerate(raw_machines):
        ctx = f"machines[{k}]"
        ids.append(int(_require(entry, "id", ctx)))
        bidx = bus_index.get(int(_require(entry, "bus", ctx)))
        if bidx is None:
            raise ScenarioError(f"{ctx}: bus not in bus list")
        gen_bus[k] = bidx
        m_vals.append(_number(_require(entry, "m", ctx), f"{ctx}.m"))
        damp.append(_number(entry.get("damping", 0.0), f"{ctx}.damping"))
        xdp[k] = _number(_require(entry, "xdp", ctx), f"{ctx}.xdp")
        if xdp[k] <= 0:
            raise ScenarioError(f"{ctx}: xdp must be positive")
        pg = _number(_require(entry, "pg", ctx), f"{ctx}.pg")
        qg = _number(_require(entry, "qg", ctx), f"{ctx}.qg")
        v = vbus[bidx]
        current = np.conj(complex(pg, qg) / v)
        e_ph = v + 1j * xdp[k] * current
        emf[k] = abs(e_ph)
        delta0[k] = np.angle(e_ph)

    def augmented(bus_y: np.ndarray) -> np.ndarray:
        y = np.zeros((nb + ng, nb + ng), dtype=complex)
        y[:nb, :nb] = bus_y
        for k in range(ng):
            yg = 1.0 / complex(0.0, xdp[k])
            gnode = nb + k
            y[gnode, gnode] += yg
            y[gen_bus[k], gen_bus[k]] += yg
            y[gnode, gen_bus[k]] -= yg
            y[gen_bus[k], gnode] -= yg
        return y

    internal = list(range(nb, nb + ng))
    fault = _parse_fault(doc)
    if fault.bus not in bus_index:
        raise ScenarioError(f"fault.bus {fault.bus} not in bus list")

    y_pre = kron_reduce(augmented(ybus), internal)

    # bolted three-phase fault: the faulted bus is held at zero voltage,
    # which removes its row and column before reduction
    fidx = bus_index[fault.bus]
    aug = augmented(ybus)
    keep = [i for i in range(nb + ng) if i != fidx]
    y_f_full = aug[np.ix_(keep, keep)]
    internal_f = [keep.index(i) for i in internal]
    y_fault = kron_reduce(y_f_full, internal_f)

    if fault.trip_branch is not None:
        fb, tb = fault.trip_branch
        match = None
        for k, br in enumerate(branches):
            ends = {int(br["from"]), int(br["to"])}
            if ends == {fb, tb}:
                match = k
                break
        if match is None:
            raise ScenarioError(f"fault.trip_branch [{fb}, {tb}] not in branch list")
        ybus_post = _build_bus_y(bus_index, branches, skip=match)
        for k, ld in enumerate(loads):
            idx = bus_index[int(ld["bus"])]
            ybus_post[idx, idx] += complex(ld["p"], -ld["q"]) / vm[idx] ** 2
        y_post = kron_reduce(augmented(ybus_post), internal)
    else:
        y_post = y_pre.copy()

    # mechanical power balances the reduced-network injection exactly, so the
    # derived operating point is an equilibrium of the model being simulated
    pm = kernels.electrical_power(delta0, emf, y_pre.real.copy(), y_pre.imag.copy())

    machines = tuple(
        Machine(id=ids[k], m=m_vals[k], pm=float(pm[k]), emf=float(emf[k]), damping=damp[k])
        for k in range(ng)
    )
    return Scenario(
        machines=machines,
        stages=ReducedNetworkSet(
            prefault=NetworkStage.from_y("prefault", y_pre),
            faulton=NetworkStage.from_y("faulton", y_fault),
            postfault=NetworkStage.from_y("postfault", y_post),
        ),
        fault=fault,
        sim=_parse_sim(doc),
        name=str(doc.get("name", "")),
        angle_guess=delta0,
    )


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    version = _require(doc, "version", "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"unsupported scenario schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    network = _require(doc, "network", "scenario")
    if not isinstance(network, dict):
        raise ScenarioError("network: expected an object")
    if "reduced" in network:
        return _scenario_from_reduced(doc)
    if "buses" in network:
        return _scenario_from_raw(doc)
    raise ScenarioError("network: expected either 'reduced' matrices or 'buses' data")


def load_scenario(source) -> Scenario:
    """Parse a scenario from a dict, a JSON string, or a file path."""
    if isinstance(source, dict):
        return scenario_from_dict(source)
    if isinstance(source, (str, os.PathLike)):
        text = None
        if isinstance(source, os.PathLike) or os.path.exists(source):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
        return scenario_from_dict(doc)
    raise ScenarioError(f"cannot load a scenario from {type(source).__name__}")


def bundled_scenario_path(name: str) -> str:
    """Filesystem path of a bundled scenario document (ts3_ninebus, ts10_newengland)."""
    from importlib.resources import files

    res = files("swingenergy.data").joinpath(f"{name}.json")
    if not res.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return str(res)


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
