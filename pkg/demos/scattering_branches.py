"""Deflection functions and cross-sections for three interactions.

A hard sphere scatters isotropically.  A weakly screened Coulomb field follows
the Rutherford law.  A Lennard-Jones well has several impact parameters per
angle and a rainbow where the deflection turns around.
"""
import math

import numpy as np

from pathmeasure.dynamics import HardSphere, LennardJones, ScreenedCoulomb
from pathmeasure.scattering import cross_section_table, deflection_scan, rutherford_cross_section


def show(title, scan, degrees, reference=None):
    tab = cross_section_table(scan, np.radians(degrees))
    print(f"{title}  (b_max={scan.b_max:g}, {len(scan.segments())} monotone segment(s))")
    for deg, sigma, nb, flag in zip(degrees, tab.sigma, tab.n_branches, tab.flags):
        ref = "" if reference is None else f"  reference {reference(math.radians(deg)):.6g}"
        print(f"  {deg:6.1f} deg  sigma {sigma:12.6g}  branches {nb}  {flag}{ref}")


def main():
    angles = [10.0, 30.0, 60.0, 90.0, 150.0]
    show("hard sphere R=2", deflection_scan(HardSphere(2.0), 1.0, n=50), angles, lambda th: 1.0)
    show("screened Coulomb a=1e4", deflection_scan(ScreenedCoulomb(1.0, 1e4), 1.0, n=300, b_max=8.0), angles[1:],
         lambda th: rutherford_cross_section(th, 1.0, 1.0))
    lj = deflection_scan(LennardJones(1.0, 1.0), 5.0, n=300, b_max=3.0)
    rainbow = math.degrees(lj.theta[lj.segments()[1][1]])
    print(f"\nLennard-Jones rainbow near {rainbow:.1f} deg")
    show("Lennard-Jones E=5", lj, [5.0, 10.0, 20.0, 40.0, 90.0])


if __name__ == "__main__":
    main()
