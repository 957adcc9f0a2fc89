#!/usr/bin/env python3
"""Tune generator mechanism knobs until the population hits its targets.

Iterates per user type: generate a single-type population, measure the
gated statistics with ``egofraud.synth.validate``, and correct the four
mechanism knobs (triangle_attempt_share, cycle_propensity,
clustering_scale, surplus_scale) by ratio updates. Prints tuned knob values
to paste into the configuration file.

Maintainer tool; not part of the installed package.

Usage:
    python tools/calibrate_generator.py [--n 4000] [--iters 6] [--types normal,...]
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

from egofraud.synth import (SynthConfig, generate, load_config,
                            load_default_config, validate)


def _clamp(x, lo, hi):
    return max(lo, min(hi, x))


def _measure(arch, n, seed):
    cfg = SynthConfig(archetypes={arch.user_type: replace(arch, n_users=n)})
    t0 = time.time()
    ds = generate(cfg, seed=seed)
    report = validate(ds, cfg)
    rows = {r.statistic: r for r in report.rows}
    return rows, time.time() - t0


def tune_type(arch, n, iters, seed):
    for it in range(iters):
        rows, dt = _measure(arch, n, seed + it)
        c0 = rows["triangle_free_share"]
        cyp0 = rows["cycle_zero_share"]
        cmed = rows["clustering_median"]
        smed = rows["strength_median"]
        tmed = rows["txpp_median"]

        frac_errs = {name: abs(rows[name].actual - rows[name].target)
                     for name in ("triangle_free_share", "cycle_zero_share")}
        med_errs = {name: abs(rows[name].actual - rows[name].target) / rows[name].target
                    for name in ("clustering_median", "strength_median", "txpp_median")
                    if rows[name].actual is not None}
        print(f"  iter {it}: gen+val {dt:5.1f}s  "
              f"c0 {c0.actual:.3f}/{c0.target:.3f}  cyp0 {cyp0.actual:.3f}/{cyp0.target:.3f}  "
              f"cmed {cmed.actual:.2e}/{cmed.target:.2e}  "
              f"smed {smed.actual:.0f}/{smed.target:.0f}  tmed {tmed.actual:.2f}/{tmed.target:.2f}",
              flush=True)
        if (all(e <= 0.015 for e in frac_errs.values())
                and med_errs.get("clustering_median", 1) <= 0.15
                and med_errs.get("strength_median", 1) <= 0.18
                and med_errs.get("txpp_median", 1) <= 0.18):
            print("  converged")
            break

        # triangle attempts: scale by the realized yield of attempts
        yield_rate = (1.0 - c0.actual) / arch.triangle_attempt_share
        attempt = _clamp((1.0 - c0.target) / max(yield_rate, 1e-6), 0.05, 1.0)

        # cycle propensity: match the share of cycle-positive triangle users
        f_real = max(1.0 - cyp0.actual, 1e-6)
        f_tgt = 1.0 - cyp0.target
        propensity = _clamp(arch.cycle_propensity * f_tgt / f_real, 0.001, 1.0)

        # clustering scale: straight median ratio
        cscale = arch.clustering_scale
        if cmed.actual:
            cscale = _clamp(cscale * cmed.target / cmed.actual, 0.02, 50.0)

        # surplus scale: push the strength median toward target while
        # keeping the tx-per-partner median within its tolerance window
        sscale = arch.surplus_scale
        if smed.actual and tmed.actual:
            desired = sscale * (smed.target / smed.actual) ** 0.8
            m = (tmed.actual - 1.0) / sscale  # txpp surplus at unit scale
            lo = (0.80 * tmed.target - 1.0) / m if m > 0 else 0.1
            hi = (1.20 * tmed.target - 1.0) / m if m > 0 else 10.0
            sscale = _clamp(desired, max(lo, 0.1), max(hi, 0.12))

        arch = replace(arch, triangle_attempt_share=attempt,
                       cycle_propensity=propensity,
                       clustering_scale=cscale, surplus_scale=sscale)
    return arch


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--iters", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--types", default=None,
                    help="comma-separated subset of user types")
    args = ap.parse_args()

    config = load_config(args.config) if args.config else load_default_config()
    wanted = args.types.split(",") if args.types else list(config.archetypes)
    tuned = {}
    for name in wanted:
        print(f"tuning {name}", flush=True)
        tuned[name] = tune_type(config.archetypes[name], args.n, args.iters,
                                args.seed)
    print("\n# tuned knobs (paste into the config):")
    for name, arch in tuned.items():
        print(f"{name}:")
        print(f"  triangle_attempt_share: {arch.triangle_attempt_share:.4f}")
        print(f"  cycle_propensity: {arch.cycle_propensity:.4f}")
        print(f"  clustering_scale: {arch.clustering_scale:.4f}")
        print(f"  surplus_scale: {arch.surplus_scale:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
