#!/usr/bin/env python3
"""Monte Carlo cross-validation of the exact engine at adjustable budgets.

Runs the three simulation studies (extinction pmf, conditioned ensemble,
total progeny) against their exact or closed-form counterparts and prints
z-scores / ratio trends.  Use --replicas to trade time for resolution.
"""

import argparse
import math

import numpy as np

from branchlab import (
    ConditionalLawQuery,
    McConfig,
    conditional_ensemble,
    conditional_laplace,
    constants,
    extinction_pmf,
    extinction_time_counts,
    moments,
    total_progeny,
    unit_model,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replicas", type=int, default=10**5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    spec = unit_model(2)
    ac = constants(moments(spec))
    R = args.replicas

    counts, censored = extinction_time_counts(spec, McConfig(seed=args.seed, replicas=R), 100)
    pmf = extinction_pmf(spec, 1, 100)
    ks = float(np.max(np.abs(np.cumsum(counts) / R - pmf.cdf())))
    print(f"extinction pmf: sup-CDF dist {ks:.2e} (band {2 / math.sqrt(R):.2e}),"
          f" censored {censored}")

    n, m = 100, 50
    p = pmf.prob(n)
    budget = max(R, int(200 / p))
    ens = conditional_ensemble(spec, n, m, McConfig(seed=args.seed + 1, replicas=budget))
    b_last = float(moments(spec).b[-1])
    emp, se = ens.laplace([0.0, 1.0], [1.0, b_last * n])
    exact = conditional_laplace(
        spec, ConditionalLawQuery(n=n, m=m, lam=(0.0, 1.0), scales=(1.0, b_last * n))
    ).value
    print(f"ensemble (n={n}, m={m}): accepted {ens.accepted},"
          f" laplace emp {emp:.5f} vs exact {exact:.5f} (|z| = {abs(emp - exact) / se:.2f})")

    stats = total_progeny(spec, McConfig(seed=args.seed + 2, replicas=R,
                                         max_generations=30_000), 1, 1, 2)
    print(f"total progeny: censored {stats.censored}, P(W=0) {stats.p_zero():.5f}"
          f" vs {1 - math.sqrt(1 - math.exp(-1)):.5f}")
    for lam in (1e-2, 1e-3):
        one_minus = 1.0 - stats.laplace(lam)[0]
        print(f"  lam {lam:g}: (1 - E e^-lam W) / (D1 sqrt(lam))"
              f" = {one_minus / (float(ac.d[1]) * math.sqrt(lam)):.4f}")


if __name__ == "__main__":
    main()
