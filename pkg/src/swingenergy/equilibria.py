"""Equilibrium solving, classification, and energy margins.

Equilibria of the COI dynamics solve f_i(delta) = 0. The inertia-weighted
sum of f is identically zero, so the problem is solved in n - 1 independent
coordinates: the highest-inertia machine's angle is eliminated and
reconstructed from the COI constraint sum_i M_i delta_i = 0. Newton uses the
analytic Jacobian of the injection model.

Classification counts eigenvalues with positive real part of the linearized
dynamics' angle block M^-1 df/dx on the constraint manifold: a stable
equilibrium has none, a type-k unstable one has k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ClassificationError, MarginError, CensoredError, SolverError
from .model import Scenario

MAX_ITERATIONS = 80
MAX_STEP = 0.5  # rad, per-coordinate Newton step clamp


@dataclass(frozen=True)
class EquilibriumPoint:
    kind: str                  # "SEP" or "UEP"
    delta_coi: np.ndarray      # radians, inertia-weighted sum zero
    mismatch_norm: float       # max |f_i| at the point
    jacobian_signature: int    # positive-real-part eigenvalue count
    stage: str
    iterations: int


@dataclass(frozen=True)
class Margin:
    """Normalized transient energy margin.

    eta = (v_cr - v_c) / v_ke_c; positive means stable, negative unstable,
    zero critical. The system margin equals the superimposed-machine margin
    by construction (same float, bitwise).
    """

    v_cr: float
    v_c: float
    v_ke_c: float
    eta: float
    eta_system: float
    source: str


@dataclass(frozen=True)
class SctpEnergy:
    """Critical energy read off a critical-stable run at its SMPE peak."""

    v_cr: float           # SMKE + SMPE at the peak
    smpe: float           # potential component at the peak
    residual_smke: float  # kinetic component at the peak
    t_smpp: float
    source: str = "SCTP"


def pe_jacobian(delta, emf, g, b) -> np.ndarray:
    """d Pe_i / d delta_j of the injection model (analytic)."""
    delta = np.asarray(delta, dtype=np.float64)
    diff = delta[:, None] - delta[None, :]
    ee = np.multiply.outer(emf, emf)
    off = ee * (g * np.sin(diff) - b * np.cos(diff))
    np.fill_diagonal(off, 0.0)
    jac = off.copy()
    np.fill_diagonal(jac, -off.sum(axis=1))
    return jac


def coi_jacobian(delta, m, pm, emf, g, b) -> np.ndarray:
    """d f_i / d delta_j for the COI accelerating power (full n x n)."""
    jpe = pe_jacobian(delta, emf, g, b)
    return -jpe + np.multiply.outer(m / m.sum(), jpe.sum(axis=0))


def _project_coi(guess: np.ndarray, m: np.ndarray) -> np.ndarray:
    return guess - (m @ guess) / m.sum()


def _stage_arrays(scenario: Scenario, stage: str):
    st = scenario.stages.by_label(stage)
    return scenario.m_vec, scenario.pm_vec, scenario.emf_vec, st.g, st.b


def _newton(scenario: Scenario, stage: str, guess: np.ndarray, tol: float):
    m, pm, emf, g, b = _stage_arrays(scenario, stage)
    n = scenario.n
    ref = int(np.argmax(m))
    free = [i for i in range(n) if i != ref]

    def full(x: np.ndarray) -> np.ndarray:
        delta = np.empty(n)
        delta[free] = x
        delta[ref] = -(m[free] @ x) / m[ref]
        return delta

    def residual(delta: np.ndarray) -> np.ndarray:
        return kernels.coi_accel(delta, m, pm, emf, g, b)

    x = _project_coi(np.asarray(guess, dtype=np.float64), m)[free]
    delta = full(x)
    fvec = residual(delta)
    res = float(np.abs(fvec).max())
    history = [res]
    iterations = 0
    for _ in range(MAX_ITERATIONS):
        if res <= tol:
            break
        jac = coi_jacobian(delta, m, pm, emf, g, b)
        jred = jac[np.ix_(free, free)] - np.multiply.outer(
            jac[free, ref], m[free] / m[ref]
        )
        try:
            step = np.linalg.solve(jred, -fvec[free])
        except np.linalg.LinAlgError:
            raise SolverError(
                f"singular Jacobian at iteration {iterations}", residual_history=history
            ) from None
        # clamp the step so a near-singular Jacobian (ridge crossings) cannot
        # throw the iterate onto a far angle sheet, then backtrack
        biggest = float(np.abs(step).max())
        lam = min(1.0, MAX_STEP / biggest) if biggest > 0 else 1.0
        lam_floor = lam / 64.0
        accepted = None
        while lam >= lam_floor:
            x_try = x + lam * step
            delta_try = full(x_try)
            f_try = residual(delta_try)
            res_try = float(np.abs(f_try).max())
            if res_try < res:
                accepted = (x_try, delta_try, f_try, res_try)
                break
            lam *= 0.5
        if accepted is None:
            # plateau: take the clamped step and keep iterating
            lam = min(1.0, MAX_STEP / biggest) if biggest > 0 else 1.0
            x_try = x + lam * step
            delta_try = full(x_try)
            f_try = residual(delta_try)
            accepted = (x_try, delta_try, f_try, float(np.abs(f_try).max()))
        x, delta, fvec, res = accepted
        history.append(res)
        iterations += 1
    if res > tol:
        raise SolverError(
            f"no convergence in {MAX_ITERATIONS} iterations on stage {stage!r} "
            f"(residual {res:.3e})",
            residual_history=history,
        )

    if free:
        jac = coi_jacobian(delta, m, pm, emf, g, b)
        jred = jac[np.ix_(free, free)] - np.multiply.outer(
            jac[free, ref], m[free] / m[ref]
        )
        eigs = np.linalg.eigvals(jred / m[free, None])
        thr = 1e-9 * max(1.0, float(np.abs(eigs).max()))
        signature = int((eigs.real > thr).sum())
    else:
        signature = 0
    return delta, res, signature, iterations


def solve_sep(
    scenario: Scenario,
    stage: str = "prefault",
    guess: np.ndarray | None = None,
    tol: float = 1e-11,
) -> EquilibriumPoint:
    """Stable equilibrium of a stage in COI coordinates.

    Starts from the scenario's derived operating point when available, else
    flat (or the supplied guess). Converging to a point with unstable
    directions raises ClassificationError.
    """
    if guess is None:
        guess = (
            scenario.angle_guess
            if scenario.angle_guess is not None
            else np.zeros(scenario.n)
        )
    delta, res, signature, iters = _newton(scenario, stage, guess, tol)
    if signature != 0:
        raise ClassificationError(
            f"converged to a type-{signature} point, not a stable equilibrium"
        )
    return EquilibriumPoint("SEP", delta, res, signature, stage, iters)


def solve_uep(
    scenario: Scenario,
    reflect: tuple[int, ...] | list[int],
    stage: str = "postfault",
    guess: np.ndarray | None = None,
    tol: float = 1e-11,
) -> EquilibriumPoint:
    """Unstable equilibrium from a reflection guess.

    The suspected critical machines (`reflect`, machine ids) start at
    pi - delta_sep; the rest at delta_sep. If Newton falls back into the
    stable point the result is reported with kind "SEP" for the caller to
    detect.
    """
    sep = solve_sep(scenario, stage, tol=tol)
    if guess is None:
        guess = sep.delta_coi.copy()
        for mid in reflect:
            i = scenario.index_of(mid)
            guess[i] = math.pi - sep.delta_coi[i]
    delta, res, signature, iters = _newton(scenario, stage, guess, tol)
    kind = "UEP" if signature >= 1 else "SEP"
    return EquilibriumPoint(kind, delta, res, signature, stage, iters)


def linear_trajectory(sep, uep, n_points: int) -> np.ndarray:
    """Straight segment in COI angle space from sep to uep, inclusive.

    delta(alpha) = delta_sep + alpha (delta_uep - delta_sep), alpha in [0, 1].
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    a = sep.delta_coi if isinstance(sep, EquilibriumPoint) else np.asarray(sep, float)
    z = uep.delta_coi if isinstance(uep, EquilibriumPoint) else np.asarray(uep, float)
    alpha = np.linspace(0.0, 1.0, int(n_points))
    return a[None, :] + alpha[:, None] * (z - a)[None, :]


def uep_energy(scenario: Scenario, sep, uep, substeps: int = 1000) -> float:
    """Superimposed potential energy at the UEP along the straight ray.

    Trapezoid quadrature of sum_i(-f_i) d delta_i on the post-fault network
    from the stable point to the unstable one. Zero when the endpoints
    coincide.
    """
    if substeps < 1:
        raise ValueError("substeps must be positive")
    a = sep.delta_coi if isinstance(sep, EquilibriumPoint) else np.asarray(sep, float)
    z = uep.delta_coi if isinstance(uep, EquilibriumPoint) else np.asarray(uep, float)
    m, pm, emf, g, b = _stage_arrays(scenario, "postfault")
    return kernels.ray_smpe(a, z, substeps, m, pm, emf, g, b)


def sctp_energy(trajectory, trace) -> SctpEnergy:
    """Critical energy from a critical-stable run: SMTE at the SMPE peak.

    The run must contain its peak; a peak censored by the horizon raises
    CensoredError (extend the horizon). A no-fault run degenerates to zero
    with a warning.
    """
    from .energy import find_smpp  # deferred; energy imports this module

    event = find_smpp(trace)
    if event.censored:
        raise CensoredError(
            "potential-energy peak not contained in the run; extend the horizon"
        )
    v_cr = float(event.value + event.residual_ke)
    if abs(v_cr) < 1e-12:
        warnings.warn("degenerate critical energy (no-fault run)", stacklevel=2)
        v_cr = 0.0
    return SctpEnergy(
        v_cr=v_cr,
        smpe=float(event.value),
        residual_smke=float(event.residual_ke),
        t_smpp=float(event.t),
    )


def margin(v_cr: float, v_c: float, v_ke_c: float, source: str) -> Margin:
    """Energy margin (v_cr - v_c) normalized by the clearing kinetic energy."""
    if v_ke_c <= 0.0:
        raise MarginError("margin undefined: clearing kinetic energy must be positive")
    eta = (v_cr - v_c) / v_ke_c
    return Margin(
        v_cr=float(v_cr),
        v_c=float(v_c),
        v_ke_c=float(v_ke_c),
        eta=eta,
        eta_system=eta,
        source=source,
    )


def equilibrium_to_dict(point: EquilibriumPoint) -> dict:
    return {
        "kind": point.kind,
        "delta_coi_deg": [math.degrees(v) for v in point.delta_coi],
        "mismatch_norm": point.mismatch_norm,
        "jacobian_signature": point.jacobian_signature,
        "stage": point.stage,
    }


def margin_to_dict(m: Margin) -> dict:
    return {
        "v_cr": m.v_cr,
        "v_c": m.v_c,
        "v_ke_c": m.v_ke_c,
        "eta": m.eta,
        "eta_system": m.eta_system,
        "source": m.source,
    }
