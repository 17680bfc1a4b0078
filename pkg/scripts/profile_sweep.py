"""Sweep the candidate-family profiles across weights and slabs.

Prints one row per (weight, slab) combination: the ODE verdict of each
family, the worst parallel defect F''F + 2c, and the minimum comparison
margin F - G.  A nonnegative margin column is the isoperimetric
statement that perpendicular cuts never lose to parallel cuts.
"""

import argparse
import math

from isoflow import (
    AffineWeight,
    Density,
    LogPowerWeight,
    QuadraticWeight,
    ZeroWeight,
    build_profile,
    check_profile_ode,
    compare_profiles,
)

INF = math.inf

WEIGHTS = (
    ("zero", ZeroWeight(), ((0.0, 1.0), (-1.0, 1.0), (0.0, INF), (-INF, INF))),
    ("affine(1,0)", AffineWeight(1.0, 0.0), ((0.0, 1.0), (-1.0, 1.0), (0.0, INF), (-INF, INF))),
    ("quadratic(1,0,0)", QuadraticWeight(1.0, 0.0, 0.0), ((0.0, 1.0), (-1.0, 1.0), (0.0, INF), (-INF, INF))),
    ("log_power(2)", LogPowerWeight(2.0), ((0.0, 1.0), (0.0, INF))),
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--c", type=float, default=0.5, help="Gaussian confinement constant")
    parser.add_argument("--grid", type=int, default=257, help="profile grid size")
    args = parser.parse_args()

    header = f"{'weight':18s} {'slab':14s} {'par ODE':10s} {'perp ODE':10s} {'max defect':>11s} {'min F-G':>11s} verdict"
    print(header)
    print("-" * len(header))
    for label, weight, slabs in WEIGHTS:
        for slab in slabs:
            density = Density(weight, args.c, 2, slab)
            par = build_profile(density, "parallel", grid_size=args.grid)
            perp = build_profile(density, "perpendicular", grid_size=args.grid)
            ode_par = check_profile_ode(par, args.c)
            ode_perp = check_profile_ode(perp, args.c)
            cmp = compare_profiles(par, perp)
            slab_txt = f"({slab[0]:g}, {slab[1]:g})"
            print(
                f"{label:18s} {slab_txt:14s} {ode_par.verdict:10s} {ode_perp.verdict:10s} "
                f"{ode_par.max_defect:11.3e} {cmp.min_margin:11.3e} {cmp.verdict}"
            )


if __name__ == "__main__":
    main()
