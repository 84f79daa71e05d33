"""The reference implementations reproduce the frozen values they are checked against."""

import math

import pytest

import oracles as orc


def test_digit_oracle_matches_frozen_expansions():
    assert orc.binary_digits(1, 3, 8) == orc.ONE_THIRD_DIGITS
    assert orc.binary_digits(2, 7, 9) == orc.TWO_SEVENTHS_DIGITS
    assert orc.binary_digits(1, 2, 4) == "1000"


def test_cylinder_oracle_example():
    assert orc.cylinder_bruteforce([(1, 0), (3, 1)], 0.7) == pytest.approx(orc.CYLINDER_EXAMPLE, abs=1e-15)
    assert orc.cylinder_bruteforce([], 0.3) == 1.0


def test_oscillator_oracles():
    T = math.pi / 4
    assert orc.oscillator_action(1, 1, T, 0, 1) == pytest.approx(orc.OSCILLATOR_ACTION_QUARTER, abs=1e-15)
    assert orc.oscillator_kernel_modsq(1, 1, T) == pytest.approx(math.sqrt(2) / (2 * math.pi))
    assert orc.oscillator_initial_momentum(1, 1, T, 0, 1) == pytest.approx(math.sqrt(2))
    assert orc.oscillator_conjugate_points(1, 4.0) == 1
    assert orc.oscillator_conjugate_points(1, 2 * math.pi) == 1


def test_decay_frozen_values_are_consistent():
    d = orc.DECAY_WORKED
    t = orc.DECAY_T
    a, b = t - d["t_I"], d["t_F"] - t
    S = (-d["m1"] * a - (d["m2"] + d["m3"]) * b
         + 0.5 * d["m2"] * d["x2"] ** 2 / b + 0.5 * d["m3"] * d["x3"] ** 2 / b)
    assert S == pytest.approx(orc.DECAY_ACTION, abs=1e-12)
    assert d["m2"] * d["x2"] / b == pytest.approx(orc.DECAY_P2, abs=1e-12)


def test_rutherford_oracle_round_trip():
    for th in (0.3, 1.0, 2.5):
        assert orc.rutherford_angle(orc.rutherford_b(th, 1.0, 1.0), 1.0, 1.0) == pytest.approx(th)
    assert orc.rutherford_sigma(math.pi / 2, 1, 1) == pytest.approx(0.25)


def test_box_grid_oracle_reproduces_frozen_covariance():
    # minus family before the window: sign +1, x1 coefficient -2
    assert orc.box_cov_grid(-2.0, 1.0, -3.0, 1.0) == pytest.approx(orc.ETA_MINUS_PRE_COV_UNIT_BOX, rel=1e-3)
    assert abs(orc.box_cov_grid(0.0, 1.0, -3.0, 1.0)) < 1e-6


def test_finite_mass_collision_reflects_in_heavy_limit():
    y, u = orc.elastic_collision_sim(1e12, 1.0, 0.0, -1.0, 1.0, 2.0)
    assert y == pytest.approx(-1.0, abs=1e-9)
    assert u == pytest.approx(-1.0, abs=1e-9)
