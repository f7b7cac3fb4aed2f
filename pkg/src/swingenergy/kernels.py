"""Kernel backend selection.

The compiled extension (swingenergy._core) and the numpy reference
(swingenergy._fallback) implement the same five functions. The compiled one
is preferred when importable; set SWINGENERGY_PURE=1 to force the fallback
(used by the benchmark and the backend-parity tests).

All wrappers normalize inputs to C-contiguous float64 so both backends see
identical data. Within one backend results are deterministic; across
backends they agree to roundoff (summation order differs).
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("SWINGENERGY_PURE"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND: str = _impl.BACKEND


def _vec(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _mat(a) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError("expected a 2-d array")
    return out


def electrical_power(delta, emf, g, b) -> np.ndarray:
    """Per-machine active power injection at one angle vector."""
    return _impl.electrical_power(_vec(delta), _vec(emf), _mat(g), _mat(b))


def electrical_power_many(delta, emf, g, b) -> np.ndarray:
    """Per-machine active power injection, row-wise on (m, n) angles."""
    return _impl.electrical_power_many(_mat(delta), _vec(emf), _mat(g), _mat(b))


def coi_accel_many(delta, m_inertia, p_mech, emf, g, b) -> np.ndarray:
    """COI accelerating power f_i, row-wise on (m, n) angles."""
    return _impl.coi_accel_many(
        _mat(delta), _vec(m_inertia), _vec(p_mech), _vec(emf), _mat(g), _mat(b)
    )


def coi_accel(delta, m_inertia, p_mech, emf, g, b) -> np.ndarray:
    """COI accelerating power f_i at one angle vector."""
    return coi_accel_many(
        np.asarray(delta, dtype=np.float64)[None, :], m_inertia, p_mech, emf, g, b
    )[0]


def rk4_swing(delta0, omega0, m_inertia, p_mech, damping, emf, g, b, dt, nsteps):
    """Fixed-step RK4 on the swing equations; see _fallback.rk4_swing."""
    return _impl.rk4_swing(
        _vec(delta0),
        _vec(omega0),
        _vec(m_inertia),
        _vec(p_mech),
        _vec(damping),
        _vec(emf),
        _mat(g),
        _mat(b),
        float(dt),
        int(nsteps),
    )


def ray_smpe(start, end, substeps, m_inertia, p_mech, emf, g, b) -> float:
    """Superimposed potential energy along a straight ray; trapezoid rule.

    Shared integrand for the potential-energy surface sampler and the
    equilibrium-based critical energy; the two callers differ only in where
    the rays come from and how many panels they request.
    """
    return float(
        _impl.ray_smpe(
            _vec(start),
            _vec(end),
            int(substeps),
            _vec(m_inertia),
            _vec(p_mech),
            _vec(emf),
            _mat(g),
            _mat(b),
        )
    )
