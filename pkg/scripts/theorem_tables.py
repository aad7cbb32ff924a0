#!/usr/bin/env python3
"""Print the full set of convergence tables for the unit-parameter models.

Covers the extinction-moment law, survival decay, all four conditional-law
regimes, and the Yaglom transform, for two and three types.  Grids are the
ones the verification suite uses; expect a few seconds of compute for the
n = 1e6 sweeps.
"""

import argparse

import numpy as np

from branchlab import theorem_table, unit_model


def show(title, tab):
    print(f"== {title}")
    print(tab.render_text())
    print()


def run(n_types: int):
    spec = unit_model(n_types)
    small = (10**3, 10**4, 10**5)
    big = (10**4, 10**5, 10**6)
    print(f"#### unit-parameter model, N = {n_types} ####\n")
    for i in range(1, n_types + 1):
        show(f"extinction moment, start type {i}", theorem_table("T1", spec, small, i=i))
        show(f"survival decay, start type {i}", theorem_table("Surv", spec, small, i=i))
    show("early regime, lam = 0.5 everywhere",
         theorem_table("T2", spec, big, lam=np.full(n_types, 0.5), precision="compensated"))
    for i in range(1, n_types):
        lam3 = np.full(n_types - i + 1, 0.5)
        show(f"sharp regime, i = {i}, y = 1",
             theorem_table("T3", spec, small, i=i, y=1.0, lam=lam3))
        lam4 = np.full(n_types - i, 0.5)
        show(f"intermediate regime, i = {i}",
             theorem_table("T4", spec, big, i=i, lam=lam4, precision="compensated"))
    show("final stage, x = 0.5, lam = 1",
         theorem_table("T5", spec, (500, 2000, 5000), x=0.5, lam=1.0))
    show("Yaglom transform, lam = 1",
         theorem_table("Yaglom", spec, (10**2, 10**3, 10**4), lam=1.0))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--types", type=int, default=2, choices=(2, 3))
    run(ap.parse_args().types)
