import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as orc
from pathmeasure.dynamics import (
    ExternalCentral,
    ExternalHarmonic,
    HamiltonianSpec,
    PhasePoint,
    ScreenedCoulomb,
    integrate,
    shoot_boundary,
)
from pathmeasure.errors import CausticError, DomainError, ModelError, NumericalError
from pathmeasure.semiclassical import (
    Branch,
    FringeProfile,
    TwoSlitModel,
    UnreachableWarning,
    classical_density,
    fringe_profile,
    free_propagator,
    interference_term,
    make_branch,
    maslov_index,
    oscillator_propagator,
    quantum_density,
    semiclassical_propagator,
    vanvleck_factor,
    vanvleck_monodromy,
)

FREE = HamiltonianSpec.free([1.0])
OSC = HamiltonianSpec.harmonic([1.0], [1.0])
DUMMY = integrate(FREE, PhasePoint([0.0], [1.0], 0.0), 1.0)


def branches_for(spec, x1, x2, T, **kw):
    return [make_branch(spec, tr, **kw) for tr in shoot_boundary(spec, [x1], 0.0, [x2], T)]


def fake(d, w, m=0):
    return Branch(DUMMY, w, d, m)


def test_free_density_matches_exact_kernel():
    for m, T in [(1.0, 1.0), (2.0, 0.5), (0.3, 4.0)]:
        spec = HamiltonianSpec.free([m])
        br = branches_for(spec, 0.1, 1.7, T)
        assert len(br) == 1
        rho = quantum_density(br)
        assert rho == pytest.approx(orc.free_kernel_modsq(m, T), rel=1e-10)
        assert rho == pytest.approx(abs(free_propagator(m, T, 0.1, 1.7)) ** 2, rel=1e-10)


@pytest.mark.parametrize("T", [0.3, math.pi / 4, 2.0, 3.0])
def test_oscillator_propagator_matches_mehler_kernel(T):
    br = branches_for(OSC, 0.2, 0.9, T)
    K = semiclassical_propagator(br)
    exact = oscillator_propagator(1.0, 1.0, T, 0.2, 0.9)
    assert abs(K - exact) <= 1e-8 * abs(exact)
    assert quantum_density(br) == pytest.approx(orc.oscillator_kernel_modsq(1, 1, T), rel=1e-8)


@pytest.mark.parametrize("T", [2.0, 4.0, 7.0])
def test_oscillator_phase_past_foci(T):
    # each focus passed retards the kernel by a quarter period
    br = branches_for(OSC, 0.2, 0.9, T)
    K = semiclassical_propagator(br)
    k = orc.oscillator_conjugate_points(1.0, T)
    W = orc.oscillator_action(1, 1, T, 0.2, 0.9)
    exact = math.sqrt(orc.oscillator_kernel_modsq(1, 1, T)) * np.exp(1j * (W - math.pi / 4 - k * math.pi / 2))
    assert abs(K - exact) <= 1e-8 * abs(exact)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(-50, 50), st.integers(0, 6)), min_size=1, max_size=6))
def test_decomposition_identity(data):
    br = [fake(d, w, m) for d, w, m in data]
    lhs = abs(sum(b.amplitude for b in br)) ** 2
    rhs = classical_density(br) + interference_term(br)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12 * classical_density(br))
    # Cauchy-Schwarz / AM-GM bound on the cross terms
    assert abs(interference_term(br)) <= (len(br) - 1) * classical_density(br) * (1 + 1e-12)


def test_interference_examples():
    d = 0.7
    assert interference_term([fake(d, 1.0), fake(d, 1.0)]) == pytest.approx(2 * d)
    assert interference_term([fake(d, 1.0), fake(d, 1.0 + math.pi)]) == pytest.approx(-2 * d)
    assert quantum_density([fake(d, 1.0), fake(d, 1.0 + math.pi)], ndof=1) == pytest.approx(0.0, abs=1e-15)
    # a Maslov difference of 2 is a half-period shift
    assert interference_term([fake(d, 1.0, 0), fake(d, 1.0, 2)]) == pytest.approx(-2 * d)
    assert interference_term([fake(d, 1.0)]) == 0.0


def test_unreachable_end_point_warns():
    with pytest.warns(UnreachableWarning):
        assert classical_density([]) == 0.0
    assert quantum_density([]) == 0.0
    assert shoot_boundary(OSC, [0.3], 0.0, [0.5], math.pi).unreachable


def test_branch_validation():
    with pytest.raises(DomainError):
        fake(0.0, 1.0)
    with pytest.raises(DomainError):
        fake(1.0, 1.0, -1)
    with pytest.raises(DomainError):
        semiclassical_propagator([])


@pytest.mark.parametrize("spec,x1,x2,T", [
    (OSC, 0.2, 0.9, 1.0),
    (OSC, 0.2, 0.9, 4.0),
    (HamiltonianSpec([1.0], 1, (ExternalCentral(ScreenedCoulomb(1.0, 1.0)),)), 1.0, 2.0, 1.5),
])
def test_finite_difference_vanvleck_agrees_with_monodromy(spec, x1, x2, T):
    tr = shoot_boundary(spec, [x1], 0.0, [x2], T)[0]
    mono = vanvleck_monodromy(spec, tr)
    fd = vanvleck_factor(spec, tr)
    assert fd == pytest.approx(mono, rel=1e-4)


def test_oscillator_vanvleck_is_inverse_sine():
    for T in (0.5, 2.0, 4.0):
        tr = shoot_boundary(OSC, [0.0], 0.0, [0.5], T)[0]
        assert vanvleck_monodromy(OSC, tr) == pytest.approx(1 / abs(math.sin(T)), rel=1e-9)


@pytest.mark.parametrize("T,expected", [(math.pi / 4, 0), (2.0, 0), (4.0, 1), (7.0, 2), (10.0, 3)])
def test_maslov_counts_foci(T, expected):
    tr = shoot_boundary(OSC, [0.0], 0.0, [1.0], T)[0]
    assert maslov_index(OSC, tr) == expected == orc.oscillator_conjugate_points(1.0, T)


def test_maslov_counts_multiplicity():
    iso = HamiltonianSpec.harmonic([1.0], [1.0], dimension=2)
    tr = integrate(iso, PhasePoint([0.1, 0.2], [0.5, -0.3], 0.0), 4.0)
    assert maslov_index(iso, tr) == 2
    # frequencies 1 and 2: zeros of sin t and sin 2t, one coinciding at pi
    two = HamiltonianSpec([1.0, 1.0], 1, (ExternalHarmonic((1.0, 2.0)),))
    tr = integrate(two, PhasePoint([0.1, 0.2], [0.5, -0.3], 0.0), 4.0)
    assert maslov_index(two, tr) == orc.oscillator_conjugate_points(1, 4) + orc.oscillator_conjugate_points(2, 4) == 3


def test_focus_end_point_is_a_caustic():
    tr = integrate(OSC, PhasePoint([0.0], [1.0], 0.0), math.pi)
    with pytest.raises(CausticError):
        maslov_index(OSC, tr)
    with pytest.raises(CausticError):
        vanvleck_monodromy(OSC, tr)


def test_make_branch_rejects_unknown_method():
    with pytest.raises(DomainError):
        make_branch(FREE, DUMMY, vanvleck="guess")


def test_two_slit_fringes():
    model = TwoSlitModel(L=10.0, s=10.0, p=1.0)
    prof = fringe_profile(model, np.linspace(-10.0, 10.0, 81))
    assert prof.spacing() == pytest.approx(model.predicted_spacing(), rel=2e-3)
    # classical part is flat for free flight; interference carries the structure
    assert np.ptp(prof.rho_FC) <= 1e-12 * prof.rho_FC.mean()
    assert np.all(np.abs(prof.rho_FI) <= prof.rho_FC * (1 + 1e-12))
    assert np.allclose(prof.rho_FQ, (prof.rho_FC + prof.rho_FI) / (2 * np.pi) ** 2, rtol=1e-12, atol=0)


def test_coincident_slits_give_a_flat_profile():
    model = TwoSlitModel(L=10.0, s=0.0, p=1.0)
    prof = fringe_profile(model, np.linspace(-3, 3, 7))
    assert np.allclose(prof.rho_FI, prof.rho_FC, rtol=1e-12)
    assert np.ptp(prof.rho_FQ) <= 1e-12 * prof.rho_FQ.mean()
    with pytest.raises(NumericalError):
        prof.spacing()


def test_fringe_profile_requires_two_branches():
    single = TwoSlitModel(L=10.0, s=1.0, p=1.0)

    def one_branch(y):
        return single(y)[:1]

    with pytest.raises(ModelError):
        fringe_profile(one_branch, [0.0])


def test_fringe_csv(tmp_path):
    prof = FringeProfile(np.array([0.0, 1.0]), np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    text = prof.to_csv(tmp_path / "f.csv").read_text()
    assert text.splitlines()[0] == "screen_coordinate,rho_FQ,rho_FC,rho_FI"
    assert len(text.splitlines()) == 3
