"""Kernel backend benchmark: compiled extension vs numpy fallback.

Times the five shared kernels on the bundled 10-machine system and on a
synthetic 50-machine network, best-of-N wall clock per call. Run from the
repository root:

    python3 benchmarks/bench_kernels.py [--repeats 7]

The two backends are imported side by side, so the comparison runs in one
process on identical inputs; agreement is checked while timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import swingenergy as se
from swingenergy import _fallback

try:
    from swingenergy import _core
except ImportError:
    _core = None


def synthetic_stage(n: int, seed: int = 7):
    """Dense symmetric reduced network with a spread-out operating point."""
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.5, 3.0, size=(n, n))
    b = 0.5 * (b + b.T)
    g = 0.05 * rng.uniform(0.1, 1.0, size=(n, n))
    g = 0.5 * (g + g.T)
    emf = rng.uniform(0.95, 1.1, size=n)
    m = rng.uniform(0.02, 0.3, size=n)
    delta = rng.uniform(-0.6, 0.6, size=n)
    pm = _fallback.electrical_power(delta, emf, g, b)
    return delta, m, pm, emf, g, b


def best_of(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(tag: str, delta, m, pm, emf, g, b):
    n = delta.shape[0]
    batch = np.linspace(0.0, 1.0, 400)[:, None] * delta[None, :]
    omega0 = np.zeros(n)
    damping = np.zeros(n)
    end = delta + 0.8
    return [
        (f"electrical_power_many  {tag} x400",
         lambda impl: impl.electrical_power_many(batch, emf, g, b)),
        (f"coi_accel_many         {tag} x400",
         lambda impl: impl.coi_accel_many(batch, m, pm, emf, g, b)),
        (f"rk4_swing              {tag} 3000 steps",
         lambda impl: impl.rk4_swing(delta, omega0, m, pm, damping, emf, g, b, 1e-3, 3000)),
        (f"ray_smpe               {tag} 2000 panels",
         lambda impl: impl.ray_smpe(delta, end, 2000, m, pm, emf, g, b)),
    ]


def flatten(result):
    if isinstance(result, tuple):
        return np.concatenate([np.asarray(r, dtype=np.float64).ravel() for r in result])
    return np.atleast_1d(np.asarray(result, dtype=np.float64)).ravel()


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7, help="best-of repeat count")
    args = ap.parse_args()

    if _core is None:
        print("compiled extension not built; only the numpy fallback is available")
        print("build it with: pip install -e . --no-build-isolation")
        return 1

    ts10 = se.bundled_scenario("ts10_newengland")
    stage = ts10.stages.postfault
    cases = [
        workloads("n=10", ts10.angle_guess, ts10.m_vec, ts10.pm_vec,
                  ts10.emf_vec, stage.g, stage.b),
        workloads("n=50", *synthetic_stage(50)),
    ]

    width = 44
    print(f"{'kernel / workload':<{width}} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for case in cases:
        for label, call in case:
            # warm both, check agreement, then time
            ref = flatten(call(_fallback))
            got = flatten(call(_core))
            worst = float(np.abs(ref - got).max())
            scale = max(1.0, float(np.abs(ref).max()))
            if worst > 1e-9 * scale:
                raise SystemExit(f"{label}: backends disagree by {worst:.3e}")
            t_pure = best_of(lambda: call(_fallback), args.repeats)
            t_comp = best_of(lambda: call(_core), args.repeats)
            print(
                f"{label:<{width}} {t_pure * 1e3:>8.3f}ms {t_comp * 1e3:>8.3f}ms "
                f"{t_pure / t_comp:>7.1f}x"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
