"""Acceptance criteria, each checked at its stated tolerance and runtime budget.

Every test records one ``(criterion, passed, detail)`` line through the
``acceptance_log`` fixture; the lines are printed in the terminal summary.
"""
import json
import math
import time

import numpy as np

import oracles as orc
from pathmeasure.cli import main
from pathmeasure.correlations import (
    FAMILIES,
    Box,
    CollisionModel,
    correlation_statistic,
    liouville_check,
    signature_matrix,
)
from pathmeasure.decay import DecaySpec, solve_vertex_closed_form, solve_vertex_numeric
from pathmeasure.dynamics import (
    ExternalHarmonic,
    HamiltonianSpec,
    HardSphere,
    PairPotential,
    PhasePoint,
    ScreenedCoulomb,
    SpringPotential,
    StepControl,
    classify_channel,
    integrate,
    p_limit,
    shoot_boundary,
)
from pathmeasure.measure_lab import DigitMeasure, expand_rational, orbit_zero_frequency, sample_zero_frequencies
from pathmeasure.scattering import (
    IncidenceDensity,
    classical_cross_section,
    cross_section_from_measure,
    deflection_function,
    deflection_scan,
    invert_branches,
    rutherford_cross_section,
    scattered_flux,
    transfer_density,
)
from pathmeasure.semiclassical import (
    TwoSlitModel,
    classical_density,
    fringe_profile,
    free_propagator,
    interference_term,
    make_branch,
    oscillator_propagator,
    quantum_density,
    semiclassical_propagator,
)


class Criterion:
    """Collects named checks for one criterion and logs a single line."""

    def __init__(self, log, name, budget=None):
        self.log, self.name, self.budget = log, name, budget
        self.failed, self.details = [], []
        self.start = time.perf_counter()

    def check(self, label, ok, detail=""):
        if not ok:
            self.failed.append(label)
        if detail:
            self.details.append(f"{label}: {detail}")

    def finish(self):
        elapsed = time.perf_counter() - self.start
        if self.budget is not None:
            self.check("runtime", elapsed < self.budget, f"{elapsed:.1f}s < {self.budget}s")
        ok = not self.failed
        detail = "; ".join(self.details)
        if not ok:
            detail = f"failed [{', '.join(self.failed)}] " + detail
        self.log.append((self.name, ok, detail))
        print(f"{self.name} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail


def test_criterion_1_bernoulli(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 1: Bernoulli regularities", budget=5.0)
    f = orbit_zero_frequency(expand_rational(1, 3, 2000), 1000)
    c.check("1/3", abs(f - 0.5) <= 1 / 1000, f"{f:.6f}")
    f = orbit_zero_frequency(expand_rational(2, 7, 2000), 999)
    c.check("2/7", abs(f - 2 / 3) <= 2 / 999, f"{f:.6f}")
    for alpha in (0.5, 0.7):
        mean = float(np.mean(sample_zero_frequencies(DigitMeasure(alpha), 10_000, 200, seed=2024)))
        c.check(f"alpha={alpha}", abs(mean - alpha) <= 0.01, f"{mean:.5f}")
    c.finish()


def _grid():
    # 5 durations x 4 end points, omega T inside (0.1, pi - 0.1)
    for T in np.linspace(0.15, math.pi - 0.15, 5):
        for x2 in (-1.3, 0.4, 0.9, 2.0):
            yield float(T), x2


X1 = 0.2
FREE = HamiltonianSpec.free([1.0])
OSC = HamiltonianSpec.harmonic([1.0], [1.0])


def _branches(spec, T, x2):
    return [make_branch(spec, tr) for tr in shoot_boundary(spec, [X1], 0.0, [x2], T)]


def test_criterion_2_semiclassical_exactness(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 2: semiclassical exactness", budget=30.0)
    worst = {"free": 0.0, "oscillator": 0.0}
    n = 0
    for T, x2 in _grid():
        n += 1
        for name, spec, exact in (("free", FREE, free_propagator(1.0, T, X1, x2)),
                                  ("oscillator", OSC, oscillator_propagator(1.0, 1.0, T, X1, x2))):
            modsq = abs(semiclassical_propagator(_branches(spec, T, x2))) ** 2
            worst[name] = max(worst[name], abs(modsq - abs(exact) ** 2) / abs(exact) ** 2)
    c.check("grid", n == 20, f"{n} points")
    for name, err in worst.items():
        c.check(name, err <= 1e-9, f"max rel {err:.1e}")
    c.finish()


def test_criterion_3_decomposition_identity(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 3: decomposition identity")
    cases = []
    for T, x2 in _grid():
        cases.append(_branches(FREE, T, x2))
        cases.append(_branches(OSC, T, x2))
    for T in (2.0, 4.0, 7.0):
        cases.append(_branches(OSC, T, 0.9))
    model = TwoSlitModel(L=10.0, s=10.0, p=1.0)
    cases.extend(model(y) for y in np.linspace(-10.0, 10.0, 21))
    worst = 0.0
    for br in cases:
        n = br[0].trajectory.positions.shape[1]
        resid = quantum_density(br, ndof=n) * (2 * math.pi) ** n - classical_density(br) - interference_term(br)
        worst = max(worst, abs(resid))
    c.check("residual", worst <= 1e-12, f"max {worst:.1e} over {len(cases)} cases")
    c.finish()


def test_criterion_4_fringes(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 4: fringe model")
    for L, s, p in [(10.0, 10.0, 1.0), (20.0, 10.0, 1.0), (10.0, 5.0, 2.0)]:
        model = TwoSlitModel(L=L, s=s, p=p)
        half = 1.6 * model.predicted_spacing()
        prof = fringe_profile(model, np.linspace(-half, half, 81))
        rel = abs(prof.spacing() / model.predicted_spacing() - 1.0)
        spread = float(np.ptp(prof.rho_FC))
        c.check(f"spacing L={L:g},s={s:g},p={p:g}", rel < 0.02, f"{rel:.1e}")
        c.check(f"rho_FC L={L:g},s={s:g},p={p:g}", spread <= 1e-10, f"spread {spread:.1e}")
    c.finish()


def test_criterion_5_scattering(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 5: scattering oracles", budget=60.0)
    R = 2.0
    sphere = HardSphere(R)
    worst = 0.0
    for th in np.radians(np.linspace(10.0, 170.0, 10)):
        # slope read from the orbit, independent of the analytic inversion
        b = orc.hard_sphere_b(th, R)
        d = deflection_function(sphere, 1.0, b)
        sigma = b / abs(d.dtheta_db) / math.sin(th)
        branch = classical_cross_section(invert_branches(deflection_scan(sphere, 1.0, n=8), th), th)
        worst = max(worst, abs(sigma - R ** 2 / 4), abs(branch - R ** 2 / 4))
    c.check("hard sphere", worst <= 1e-6, f"max abs {worst:.1e}")

    k, E = 1.0, 1.0
    scan = deflection_scan(ScreenedCoulomb(k, 1e4), E, n=400, b_max=4.0)
    worst, exact_transfer = 0.0, True
    for th in np.radians(np.linspace(20.0, 160.0, 15)):
        br = invert_branches(scan, th)
        sigma = classical_cross_section(br, th)
        worst = max(worst, abs(sigma / rutherford_cross_section(th, k, E) - 1))
        exact_transfer &= transfer_density(IncidenceDensity.constant(1.0), br, th) == sigma
    c.check("Rutherford", worst <= 5e-3, f"max rel {worst:.1e}")
    c.check("transfer", exact_transfer, "rho_I = 1 reproduces sigma exactly")

    flux, area = scattered_flux(deflection_scan(ScreenedCoulomb(1.0, 1.0), 1.0, n=300), math.radians(5.0))
    rel = abs(flux / area - 1)
    c.check("flux", rel <= 1e-3, f"rel {rel:.1e}")
    c.finish()


def test_criterion_6_measure_cross_section(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 6: measure-based cross-section")
    # hard sphere R = 2: uniform final density 1
    theta = np.linspace(0.0, math.pi, 4001)
    rho = np.ones_like(theta)
    tab = cross_section_from_measure(theta, rho, [1.0, 1.5, 1.9], lambda B: 2 * math.acos(B / 2.0))
    err_mu = float(np.max(np.abs(tab.normalizers - 1)))
    err_sigma = float(np.max(np.abs(tab.sigma - rho)))
    c.check("hard sphere mu", err_mu <= 1e-6, f"{err_mu:.1e}")
    c.check("hard sphere sigma", err_sigma <= 1e-6, f"{err_sigma:.1e}")
    # Rutherford density on angles above 10 degrees
    theta = np.linspace(math.radians(10), math.pi, 20001)
    rho = rutherford_cross_section(theta, 1.0, 1.0)
    tab = cross_section_from_measure(theta, rho, [0.5, 1.0, 2.0], lambda B: orc.rutherford_angle(B, 1.0, 1.0))
    err_mu = float(np.max(np.abs(tab.normalizers - 1)))
    err_sigma = float(np.max(np.abs(tab.sigma / rho - 1)))
    c.check("Rutherford mu", err_mu <= 1e-6, f"{err_mu:.1e}")
    c.check("Rutherford sigma", err_sigma <= 1e-6, f"{err_sigma:.1e}")
    c.finish()


def test_criterion_7_decay(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 7: decay vertex", budget=5.0)
    spec = DecaySpec(**orc.DECAY_WORKED)
    closed = solve_vertex_closed_form(spec)
    c.check("t", abs(closed.t - (10 - math.sqrt(3))) <= 1e-12, f"{closed.t:.9f}")
    c.check("p2", abs(closed.p2[0] - 2 * math.sqrt(3)) <= 1e-12 and abs(closed.p3[0] + 2 * math.sqrt(3)) <= 1e-12,
            f"{closed.p2[0]:.9f}, {closed.p3[0]:.9f}")
    num = solve_vertex_numeric(spec)
    gap = max(abs(num.t - closed.t), float(np.max(np.abs(num.x - closed.x))))
    c.check("numeric", gap <= 1e-6, f"{gap:.1e}")
    resid = max(closed.momentum_residual, closed.energy_residual, num.momentum_residual, num.energy_residual)
    c.check("residuals", resid <= 1e-9, f"{resid:.1e}")
    other = solve_vertex_numeric(DecaySpec(**{**orc.DECAY_WORKED, "x2": 3.0}))
    moved = max(abs(other.t - num.t), float(np.max(np.abs(other.x - num.x))))
    c.check("indeterminism", moved > 1e-3, f"vertex moves by {moved:.2f}")
    c.finish()


def test_criterion_8_correlations(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 8: correlations", budget=30.0)
    model = CollisionModel(1000.0, 1.0, 1.0, Box(-0.5, 0.5), Box(-1.0, 0.0), -1.0, 2.0)
    t_pre, t_post = -1.5, 3.0
    worst = 0.0
    for fam in FAMILIES:
        for t, u in [(t_pre, t_post - t_pre), (t_post, t_pre - t_post), (t_pre, -2.0), (t_post, 1.5)]:
            worst = max(worst, liouville_check(model, fam, t, u, n=4000))
    c.check("Liouville", worst <= 1e-12, f"max {worst:.1e}")
    sig = signature_matrix(model, t_pre, t_post)
    c.check("signature", sig == [["0", "+"], ["+", "0"], ["+", "+"]], json.dumps(sig))
    cov = correlation_statistic(model, "minus", "pre", t_pre)
    c.check("eta_minus pre", abs(cov - 1 / 6) <= 1e-4, f"{cov:.6f}")
    c.finish()


def test_criterion_9_p_limits_and_channels(acceptance_log):
    c = Criterion(acceptance_log, "CRITERION 9: p-limits and channels", budget=60.0)
    rep = p_limit(HamiltonianSpec.free([2.0], dimension=2), PhasePoint([1.0, -3.0], [0.7, -1.1], 0.0))
    err = float(np.max(np.abs(rep.estimate - [0.7, -1.1])))
    c.check("free", err <= 1e-9, f"{err:.1e}")
    rep = p_limit(OSC, PhasePoint([1.0], [0.5], 0.0), horizons=(1e2, 1e3, 1e4))
    norm = float(np.linalg.norm(rep.raw[-1]))
    slope = rep.decay_exponent()
    c.check("harmonic", norm <= 1e-3, f"|p|={norm:.1e} at T=1e4")
    c.check("1/T decay", abs(slope + 1) <= 0.1, f"exponent {slope:.3f}")

    ctl = StepControl(method="verlet", dt=0.01, n_samples=4001)
    free2 = HamiltonianSpec.free([1.0, 1.0])
    part = classify_channel(free2, integrate(free2, PhasePoint([0.0, 0.5], [1.0, -1.0], 0.0), 200.0))
    c.check("two free", part.fragments == ((0,), (1,)), str(part.fragments))
    pair = HamiltonianSpec([1.0, 2.0, 1.5], 1, (PairPotential(0, 1, SpringPotential(4.0)),))
    part = classify_channel(pair, integrate(pair, PhasePoint([0.0, 0.3, 1.0], [0.4, 0.2, 1.5], 0.0), 400.0, ctl))
    c.check("pair + free", part.fragments == ((0, 1), (2,)), str(part.fragments))
    trap = HamiltonianSpec([1.0, 1.0, 1.0], 1, (ExternalHarmonic((1.0,)), PairPotential(0, 1, SpringPotential(0.3))))
    part = classify_channel(trap, integrate(trap, PhasePoint([0.5, -0.5, 0.2], [0.0, 0.3, -0.4], 0.0), 200.0, ctl))
    speed = float(np.linalg.norm(part.velocities[0]))
    c.check("one trap", part.fragments == ((0, 1, 2),) and speed < 1e-2, f"{part.fragments}, |V|={speed:.1e}")
    c.finish()


def test_criterion_10_determinism(acceptance_log, tmp_path):
    c = Criterion(acceptance_log, "CRITERION 10: determinism")
    configs = [
        {"experiment": "bernoulli", "parameters": {"alpha": 0.7, "n_sequences": 50, "n_digits": 2000}, "seed": 9},
        {"experiment": "correlate", "parameters": {"n_samples": 500}, "seed": 9},
        {"experiment": "decay", "parameters": {"masses": [10.0, 3.0, 2.0], "c": 1.0, "t_I": 0.0, "t_F": 10.0,
                                               "x1": [0.0], "x2": [2.0], "x3": [-3.0]}, "seed": 9},
    ]
    for cfg in configs:
        path = tmp_path / f"{cfg['experiment']}.json"
        path.write_text(json.dumps(cfg))
        runs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{cfg['experiment']}_{tag}"
            code = main(["--config", str(path), "--output", str(out)])
            arts = json.loads((out / "manifest.json").read_text())["artifacts"] if code == 0 else []
            runs.append((code, {a["path"]: (out / a["path"]).read_bytes() for a in arts}))
        same = runs[0][0] == runs[1][0] == 0 and runs[0][1] == runs[1][1] and runs[0][1]
        c.check(cfg["experiment"], bool(same), f"{len(runs[0][1])} artifacts identical")
    c.finish()
