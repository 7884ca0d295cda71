"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the raw ECM charge loop and the raw baseline+corrector loop on the
default nine-profile grid, once per available backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from chargeend import kernels
from chargeend.config import default_config
from chargeend.corrector import StrategyParams
from chargeend.harness import ExperimentSpec, resolve_profile


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = default_config()
    spec = ExperimentSpec.from_config(cfg)
    loaded = [resolve_profile(src, spec) for src in spec.profiles]
    n_samples = sum(len(lp.profile) for lp in loaded)
    params = StrategyParams()
    backends = kernels.available_backends()

    cell = cfg.cell
    sims = []
    for src in cfg.profiles:
        ch = cfg.chargers[src.charger]
        sims.append((
            cell.ocv_soc, cell.ocv_v, cell.capacity_ah, cell.r0, cell.r1, cell.c1, src.soc0, 0.0, cfg.dt,
            np.array([u for u, _ in ch.bands]), np.array([i for _, i in ch.bands]),
            ch.cv_voltage_v, ch.cutoff_current_a, 500_000,
        ))

    p = params
    tail = (
        p.v_100, p.gamma, p.t_debounce, p.denom_epsilon, p.map_ac.as_tuple(), p.map_dc.as_tuple(),
        p.alpha_ac.rates, p.alpha_ac.alphas, p.alpha_dc.rates, p.alpha_dc.alphas,
    )
    pipes = []
    for lp in loaded:
        arr = lp.profile.arrays()
        cols = tuple(arr[k] for k in ("t", "current", "v_max", "t_min", "t_max", "mode"))
        for inj in cfg.injections:
            pipes.append((cols, max(0.0, float(lp.truth[0]) + inj), lp.profile.capacity_ah))

    results = {}
    for name, mod in backends.items():
        def pipeline():
            for a, soc0, cap in pipes:
                mod.run_pipeline(*a[:6], soc0, cap, 1.0, True, *tail, cap)

        def simulate():
            for a in sims:
                mod.simulate_charge(*a)

        results[name] = (_best(simulate, args.repeat), _best(pipeline, args.repeat))

    runs = len(loaded) * len(cfg.injections)
    print(f"{len(loaded)} profiles, {n_samples} samples, {runs} pipeline runs (best of {args.repeat})")
    print(f"{'backend':<8} {'simulate [s]':>13} {'pipeline [s]':>13} {'Msample/s':>10}")
    for name, (sim, pipe) in results.items():
        print(f"{name:<8} {sim:>13.4f} {pipe:>13.4f} {n_samples * len(cfg.injections) / pipe / 1e6:>10.2f}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speedup  {py[0] / cy[0]:>12.1f}x {py[1] / cy[1]:>12.1f}x")


if __name__ == "__main__":
    main()
