"""Pure numpy kernels.

Reference implementations of the hot numerical cores. `swingenergy.kernels`
prefers the compiled twin (`swingenergy._core`) when it is importable; both
implement exactly the same contracts and the test suite holds them against
each other.

Conventions: angles in radians, speeds in rad/s deviation from synchronous,
powers in per unit on the common MVA base. `g` and `b` are the real and
imaginary parts of a reduced machine-node admittance matrix.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def electrical_power(delta, emf, g, b):
    """Active power injected by each machine EMF into the reduced network.

    P_i = E_i^2 G_ii + sum_{j != i} E_i E_j (G_ij cos(d_i - d_j)
                                             + B_ij sin(d_i - d_j))
    """
    delta = np.asarray(delta, dtype=np.float64)
    diff = delta[:, None] - delta[None, :]
    ee = np.multiply.outer(emf, emf)
    # The j == i term contributes E_i^2 G_ii via cos(0); sin(0) kills B_ii.
    return (ee * g * np.cos(diff) + ee * b * np.sin(diff)).sum(axis=1)


def electrical_power_many(delta, emf, g, b):
    """electrical_power evaluated row-wise on an (m, n) angle array."""
    delta = np.asarray(delta, dtype=np.float64)
    diff = delta[:, :, None] - delta[:, None, :]
    kg = np.multiply.outer(emf, emf) * g
    kb = np.multiply.outer(emf, emf) * b
    return np.einsum("ij,mij->mi", kg, np.cos(diff)) + np.einsum(
        "ij,mij->mi", kb, np.sin(diff)
    )


def coi_accel_many(delta, m_inertia, p_mech, emf, g, b):
    """COI-frame accelerating power f_i on an (m, n) angle array.

    f_i = Pm_i - Pe_i - (M_i / M_T) * sum_j (Pm_j - Pe_j)

    The inertia-weighted sum of the result is zero for every row.
    """
    pa = p_mech - electrical_power_many(delta, emf, g, b)
    pcoi = pa.sum(axis=1)
    return pa - np.multiply.outer(pcoi, m_inertia / m_inertia.sum())


def rk4_swing(delta0, omega0, m_inertia, p_mech, damping, emf, g, b, dt, nsteps):
    """Fixed-step classical RK4 on the absolute-frame swing equations.

    d delta_i / dt = omega_i
    M_i d omega_i / dt = Pm_i - Pe_i(delta) - D_i omega_i

    Returns (delta, omega, steps_done) where the arrays have nsteps + 1 rows
    and rows beyond steps_done are unspecified. steps_done < nsteps means a
    step produced a non-finite state and integration stopped at the last
    finite sample.
    """
    n = delta0.shape[0]
    delta = np.empty((nsteps + 1, n))
    omega = np.empty((nsteps + 1, n))
    delta[0] = delta0
    omega[0] = omega0

    def accel(d, w):
        return (p_mech - electrical_power(d, emf, g, b) - damping * w) / m_inertia

    h = dt
    steps_done = 0
    for k in range(nsteps):
        d, w = delta[k], omega[k]
        k1d = w
        k1w = accel(d, w)
        k2d = w + 0.5 * h * k1w
        k2w = accel(d + 0.5 * h * k1d, k2d)
        k3d = w + 0.5 * h * k2w
        k3w = accel(d + 0.5 * h * k2d, k3d)
        k4d = w + h * k3w
        k4w = accel(d + h * k3d, k4d)
        dn = d + (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        wn = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        if not (np.isfinite(dn).all() and np.isfinite(wn).all()):
            break
        delta[k + 1] = dn
        omega[k + 1] = wn
        steps_done = k + 1
    return delta, omega, steps_done


def ray_smpe(start, end, substeps, m_inertia, p_mech, emf, g, b):
    """Superimposed potential energy along a straight ray in COI angle space.

    Composite trapezoid of sum_i(-f_i) d delta_i from `start` to `end` with
    `substeps` panels. The integrand is the COI accelerating power on the
    given stage; the value at `start` is zero by construction.
    """
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    seg = end - start
    if not seg.any():
        return 0.0
    alpha = np.linspace(0.0, 1.0, int(substeps) + 1)
    pts = start[None, :] + alpha[:, None] * seg[None, :]
    f = coi_accel_many(pts, m_inertia, p_mech, emf, g, b)
    integrand = -(f @ seg)
    return float(np.trapezoid(integrand, alpha))
