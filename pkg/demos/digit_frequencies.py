"""Zero-digit frequencies under the doubling map.

Rational seeds are periodic, so their orbit frequency is fixed by one period.
Sequences drawn from a product measure on digits concentrate at that measure's
zero probability instead.
"""
import numpy as np

from pathmeasure.measure_lab import (
    CylinderConstraint,
    DigitMeasure,
    binary_period,
    cylinder_measure,
    expand_rational,
    sample_zero_frequencies,
    zero_frequency_report,
)


def main():
    print("periodic seeds")
    for num, den in [(1, 3), (2, 7), (1, 5), (3, 11)]:
        n = 60 * binary_period(num, den)
        rep = zero_frequency_report(expand_rational(num, den, n), n)
        print(f"  {num}/{den}: period {binary_period(num, den):2d}  zero frequency {rep.frequency:.6f}")

    print("sampled sequences (200 x 10^4 digits)")
    for alpha in (0.5, 0.7, 0.9):
        f = sample_zero_frequencies(DigitMeasure(alpha), 10_000, 200, seed=1)
        print(f"  alpha={alpha}: mean {f.mean():.5f}  spread {f.std(ddof=1):.5f}  "
              f"expected spread {np.sqrt(alpha * (1 - alpha) / 10_000):.5f}")

    c = CylinderConstraint(((1, 0), (3, 1)))
    print(f"cylinder {{d1=0, d3=1}} at alpha=0.7 has measure {cylinder_measure(c, DigitMeasure(0.7)):.4f}")


if __name__ == "__main__":
    main()
