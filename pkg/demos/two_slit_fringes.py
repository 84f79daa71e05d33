"""Two-path interference on a screen.

Each screen point is reached by one path through each slit.  The classical
part of the density is flat; the cross term carries fringes whose spacing is
set by the slit separation, the flight distance and the momentum.
"""
import numpy as np

from pathmeasure.semiclassical import TwoSlitModel, fringe_profile


def main():
    for L, s, p in [(10.0, 10.0, 1.0), (20.0, 10.0, 1.0), (10.0, 5.0, 2.0), (40.0, 4.0, 3.0)]:
        model = TwoSlitModel(L=L, s=s, p=p)
        pred = model.predicted_spacing()
        prof = fringe_profile(model, np.linspace(-2 * pred, 2 * pred, 161))
        print(f"L={L:5.1f} s={s:5.1f} p={p:3.1f}: spacing {prof.spacing():8.4f}  predicted {pred:8.4f}  "
              f"visibility {np.ptp(prof.rho_FQ) / (prof.rho_FQ.max() + prof.rho_FQ.min()):.3f}")

    model = TwoSlitModel(L=10.0, s=10.0, p=1.0)
    prof = fringe_profile(model, np.linspace(-6.0, 6.0, 13))
    print("\n  y      rho_FC      rho_FI      rho_FQ")
    for row in zip(prof.screen, prof.rho_FC, prof.rho_FI, prof.rho_FQ):
        print("  {:5.1f}  {:10.6f}  {:10.6f}  {:10.6f}".format(*row))


if __name__ == "__main__":
    main()
