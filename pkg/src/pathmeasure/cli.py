"""Command-line front end: run one experiment from a JSON config.

Usage::

    pathmeasure [EXPERIMENT] --config cfg.json --output out/ [--threads N] [--seed S]

The config is a JSON object with keys ``experiment``, ``parameters``,
``output_dir`` and ``seed``.  Artifacts (CSV/JSON) and ``manifest.json`` are
written to the output directory.

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 4 I/O failure.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._io import sha256_file, write_csv
from .errors import DomainError, ModelError, NumericalError, SingularAngleError

logger = logging.getLogger("pathmeasure")

EXPERIMENTS = ("bernoulli", "propagate", "semiclassical", "fringes", "scatter", "decay", "correlate")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    """Invalid configuration; the message names the offending field."""


class Params:
    """Typed access to one JSON object of the config with located error messages."""

    def __init__(self, data, path, text):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a JSON object{_where(text, path)}")
        self.data = data
        self.path = path
        self.text = text

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def _fail(self, key, msg):
        loc = _where(self.text, key) or _where(self.text, self.path)
        raise ConfigError(f"field '{self._name(key)}': {msg}{loc}")

    def has(self, key):
        return key in self.data

    def req(self, key, kind=float):
        if key not in self.data:
            self._fail(key, "missing required field")
        return self._convert(key, self.data[key], kind)

    def get(self, key, default, kind=float):
        if key not in self.data:
            return default
        return self._convert(key, self.data[key], kind)

    def sub(self, key, default=None):
        if key not in self.data:
            if default is None:
                self._fail(key, "missing required field")
            return Params(default, self._name(key), self.text)
        return Params(self.data[key], self._name(key), self.text)

    def _convert(self, key, value, kind):
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                return float(value)
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
                return value
            if kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
                return value
            if kind is str:
                if not isinstance(value, str):
                    raise TypeError
                return value
            if kind == "vector":
                arr = np.atleast_1d(np.asarray(value, dtype=float))
                if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                    raise TypeError
                return arr
            if kind == "list":
                if not isinstance(value, list):
                    raise TypeError
                return value
        except (TypeError, ValueError):
            self._fail(key, f"expected {kind if isinstance(kind, str) else kind.__name__}, got {value!r}")
        raise AssertionError(kind)


def _where(text, key):
    if not text or not key:
        return ""
    last = key.split(".")[-1]
    m = re.search(r'"%s"\s*:' % re.escape(last), text)
    if not m:
        return ""
    return f" (line {text.count(chr(10), 0, m.start()) + 1})"


# --- potentials ---------------------------------------------------------------


def _shape(p: Params):
    from .dynamics import HardSphere, LennardJones, ScreenedCoulomb, SpringPotential, TabulatedPotential

    kind = p.req("type", str)
    if kind == "screened_coulomb":
        return ScreenedCoulomb(p.req("k"), p.req("a"))
    if kind == "lennard_jones":
        return LennardJones(p.req("epsilon"), p.req("sigma"))
    if kind == "spring":
        return SpringPotential(p.req("kappa"))
    if kind == "tabulated":
        return TabulatedPotential(p.req("r", "vector"), p.req("v", "vector"))
    if kind == "hard_sphere":
        return HardSphere(p.req("R"))
    p._fail("type", f"unknown potential shape {kind!r}")


def _terms(p: Params):
    from .dynamics import ExternalCentral, ExternalHarmonic, PairPotential

    out = []
    for k, raw in enumerate(p.get("terms", [], "list")):
        t = Params(raw, f"{p.path}.terms[{k}]", p.text)
        kind = t.req("type", str)
        if kind == "harmonic":
            out.append(ExternalHarmonic(tuple(t.req("omega", "vector"))))
        elif kind == "central":
            parts = tuple(int(i) for i in t.get("particles", [0], "list"))
            out.append(ExternalCentral(_shape(t.sub("shape")), parts))
        elif kind == "pair":
            out.append(PairPotential(t.req("i", int), t.req("j", int), _shape(t.sub("shape"))))
        else:
            t._fail("type", f"unknown term type {kind!r}")
    return tuple(out)


def _hamiltonian(p: Params):
    from .dynamics import HamiltonianSpec

    return HamiltonianSpec(tuple(p.req("masses", "vector")), p.get("dimension", 1, int), _terms(p))


# --- experiments ----------------------------------------------------------------


def _bernoulli_chunk(args):
    from .measure_lab import DigitMeasure, sample_zero_frequencies

    alpha, n, count, seed = args
    return sample_zero_frequencies(DigitMeasure(alpha), n, count, seed)


def run_bernoulli(p: Params, out: Path, seed: int, threads: int):
    from .measure_lab import binary_period, expand_rational, zero_frequency_report

    alpha = p.get("alpha", 0.5)
    count = p.get("n_sequences", 200, int)
    n = p.get("n_digits", 10_000, int)
    if count < 1 or n < 1:
        raise DomainError("n_sequences and n_digits must be positive")
    if threads > 1:
        bounds = np.linspace(0, count, min(threads, count) + 1).astype(int)
        jobs = [(alpha, n, int(b - a), seed + int(a)) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            freqs = np.concatenate(list(pool.map(_bernoulli_chunk, jobs)))
    else:
        freqs = _bernoulli_chunk((alpha, n, count, seed))
    arts = [write_csv(out / "frequencies.csv", ["sequence", "seed", "zero_frequency"],
                      ((k, seed + k, f) for k, f in enumerate(freqs)))]
    orbits = p.get("orbits", [{"numerator": 1, "denominator": 3, "n": 1000},
                              {"numerator": 2, "denominator": 7, "n": 999}], "list")
    rows = []
    for k, raw in enumerate(orbits):
        o = Params(raw, f"parameters.orbits[{k}]", p.text)
        num, den, m = o.req("numerator", int), o.req("denominator", int), o.req("n", int)
        rep = zero_frequency_report(expand_rational(num, den, m), m)
        rows.append((num, den, m, rep.frequency, rep.half_frequency, binary_period(num, den)))
    arts.append(write_csv(out / "orbits.csv",
                          ["numerator", "denominator", "n", "zero_frequency", "half_frequency", "period"], rows))
    summary = {
        "alpha": alpha, "n_sequences": count, "n_digits": n,
        "mean_zero_frequency": float(freqs.mean()), "std_zero_frequency": float(freqs.std(ddof=1)) if count > 1 else 0.0,
        "orbit_frequencies": {f"{r[0]}/{r[1]}": r[3] for r in rows},
    }
    return arts, summary


def run_propagate(p: Params, out: Path, seed: int, threads: int):
    from .dynamics import PhasePoint, StepControl, classify_channel, integrate, p_limit

    spec = _hamiltonian(p)
    start = PhasePoint(p.req("x0", "vector"), p.req("p0", "vector"), p.get("t0", 0.0))
    ctl = StepControl(method=p.get("method", "rk", str), dt=p.get("dt", 1e-2),
                      n_samples=p.get("n_samples", 2001, int))
    traj = integrate(spec, start, p.req("t_end"), ctl)
    arts = [traj.to_csv(out / "trajectory.csv")]
    summary = {"energy_drift": traj.energy_drift(), "final_positions": traj.positions[-1].tolist(),
               "final_momenta": traj.momenta[-1].tolist()}
    if p.get("p_limit", False, bool):
        rep = p_limit(spec, start, p.get("horizons", [1e2, 1e3, 1e4], "vector"))
        n = spec.ndof
        ex = np.vstack([np.full((1, n), np.nan), rep.extrapolated]) if len(rep.horizons) > 1 else rep.extrapolated
        header = (["horizon"] + [f"raw{i + 1}" for i in range(n)] + [f"extrapolated{i + 1}" for i in range(n)]
                  + ["envelope"])
        rows = ((T, *r, *e, v) for T, r, e, v in zip(rep.horizons, rep.raw, ex, rep.envelope))
        arts.append(write_csv(out / "p_limit.csv", header, rows))
        summary["p_limit"] = rep.estimate.tolist()
        summary["p_limit_converged"] = rep.converged
    if spec.n_particles > 1:
        part = classify_channel(spec, traj)
        summary["channel"] = [list(f) for f in part.fragments]
        summary["channel_conclusive"] = part.conclusive
    return arts, summary


def run_semiclassical(p: Params, out: Path, seed: int, threads: int):
    import warnings

    from .dynamics import HamiltonianSpec, shoot_boundary
    from .semiclassical import (
        UnreachableWarning,
        free_propagator,
        make_branch,
        oscillator_propagator,
        quantum_density,
    )

    masses = p.req("masses", "vector")
    if masses.size != 1:
        p._fail("masses", "semiclassical experiment takes a single particle")
    m = float(masses[0])
    dim = p.get("dimension", 1, int)
    omega = p.get("omega", None)
    spec = HamiltonianSpec.harmonic([m], [omega], dim) if omega is not None else HamiltonianSpec.free([m], dim)
    x1 = p.get("x1", np.zeros(dim), "vector")
    times = p.get("times", [0.5, 1.0, 2.0], "vector")
    ends = p.get("endpoints", [[0.3], [1.0]], "list")
    rows, errs = [], []
    for T in times:
        for k, x2 in enumerate(ends):
            x2 = Params({"x": x2}, f"parameters.endpoints[{k}]", p.text).req("x", "vector")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UnreachableWarning)
                branches = [make_branch(spec, tr) for tr in shoot_boundary(spec, x1, 0.0, x2, T)]
            rho = quantum_density(branches, spec.ndof)
            exact = float("nan")
            if omega is None:
                exact = abs(free_propagator(m, T, x1, x2)) ** 2
            elif dim == 1 and 0 < omega * T < math.pi:
                exact = abs(oscillator_propagator(m, omega, T, x1[0], x2[0])) ** 2
            rel = abs(rho - exact) / exact if np.isfinite(exact) else float("nan")
            if np.isfinite(rel):
                errs.append(rel)
            rows.append((T, *x2, len(branches), sum(b.vanvleck for b in branches),
                         sum(b.maslov for b in branches), rho, exact, rel))
    header = ["T"] + [f"x2_{i + 1}" for i in range(spec.ndof)] + ["n_branches", "rho_FC", "maslov_sum",
                                                                   "rho_FQ", "exact_modulus_sq", "rel_error"]
    arts = [write_csv(out / "semiclassical.csv", header, rows)]
    return arts, {"points": len(rows), "max_rel_error": max(errs) if errs else None}


def run_fringes(p: Params, out: Path, seed: int, threads: int):
    from .semiclassical import TwoSlitModel, fringe_profile

    model = TwoSlitModel(p.req("L"), p.req("s"), p.req("p"), p.get("m", 1.0))
    spacing = model.predicted_spacing()
    scr = p.sub("screen", {})
    screen = np.linspace(scr.get("lo", -3 * spacing), scr.get("hi", 3 * spacing), scr.get("n", 241, int))
    prof = fringe_profile(model, screen, workers=threads)
    arts = [prof.to_csv(out / "fringes.csv")]
    measured = prof.spacing()
    return arts, {"spacing_measured": measured, "spacing_predicted": spacing,
                  "spacing_rel_error": abs(measured - spacing) / spacing,
                  "rho_FC_spread": float(np.ptp(prof.rho_FC))}


def run_scatter(p: Params, out: Path, seed: int, threads: int):
    from .dynamics import HardSphere, ScreenedCoulomb
    from .scattering import cross_section_table, deflection_scan, rutherford_cross_section, scattered_flux

    shape = _shape(p.sub("potential"))
    E = p.req("energy")
    grid = p.sub("theta_deg", {})
    thetas = np.radians(np.linspace(grid.get("lo", 20.0), grid.get("hi", 160.0), grid.get("n", 15, int)))
    scan = deflection_scan(shape, E, n=p.get("n_scan", 2000, int), workers=threads)
    table = cross_section_table(scan, thetas)
    arts = [scan.to_csv(out / "deflection.csv"), table.to_csv(out / "cross_section.csv")]
    ok = np.isfinite(table.sigma)
    summary = {"b_max": scan.b_max, "n_branches_max": int(table.n_branches.max()),
               "flagged": int((~ok).sum())}
    if isinstance(shape, ScreenedCoulomb) and shape.k > 0:
        ref = rutherford_cross_section(thetas[ok], shape.k, E)
        summary["max_rel_dev_rutherford"] = float(np.max(np.abs(table.sigma[ok] / ref - 1)))
    if isinstance(shape, HardSphere):
        summary["max_rel_dev_hard_sphere"] = float(np.max(np.abs(table.sigma[ok] / (shape.R ** 2 / 4) - 1)))
    if p.has("flux_theta_min_deg"):
        flux, area = scattered_flux(scan, math.radians(p.req("flux_theta_min_deg")))
        summary["flux_rel_error"] = abs(flux - area) / area
    return arts, summary


def run_decay(p: Params, out: Path, seed: int, threads: int):
    from .decay import DecaySpec, solve_vertex_closed_form, solve_vertex_numeric

    masses = p.req("masses", "vector")
    if masses.size != 3:
        p._fail("masses", "expected [m1, m2, m3]")
    spec = DecaySpec(*masses, p.get("c", 1.0), p.req("t_I"), p.req("t_F"),
                     p.req("x1", "vector"), p.req("x2", "vector"), p.req("x3", "vector"))
    method = p.get("method", "auto", str)
    if method == "closed_form":
        v = solve_vertex_closed_form(spec)
    elif method == "numeric":
        v = solve_vertex_numeric(spec)
    elif method == "auto":
        v = solve_vertex_closed_form(spec, fallback=True)
    else:
        p._fail("method", "expected closed_form, numeric or auto")
    path = out / "vertex.json"
    path.write_text(json.dumps(v.as_dict(), indent=2, sort_keys=True) + "\n", encoding="ascii")
    return [path], {"t": v.t, "x": v.x.tolist(), "action": v.action, "method": v.method,
                    "momentum_residual": v.momentum_residual, "energy_residual": v.energy_residual}


def _profile(p: Params):
    from .correlations import Box, TruncatedGaussian

    kind = p.req("type", str)
    if kind == "box":
        return Box(p.req("lo"), p.req("hi"))
    if kind == "gaussian":
        return TruncatedGaussian(p.req("mu"), p.req("sigma"), p.get("cut", 4.0))
    p._fail("type", f"unknown profile {kind!r}")


def run_correlate(p: Params, out: Path, seed: int, threads: int):
    from .correlations import FAMILIES, CollisionModel, correlation_statistic, liouville_check

    model = CollisionModel(p.get("m1", 1000.0), p.get("m2", 1.0), p.get("v", 1.0),
                           _profile(p.sub("rho1", {"type": "box", "lo": -0.5, "hi": 0.5})),
                           _profile(p.sub("rho2", {"type": "box", "lo": -1.0, "hi": 0.0})),
                           p.get("t_I", -2.0), p.get("t_F", 3.0))
    t_pre = p.get("t_pre", model.t_I - 1.0)
    t_post = p.get("t_post", model.t_F + 1.0)
    n = p.get("n_samples", 10_000, int)
    cov_rows, liou_rows = [], []
    for fam in FAMILIES:
        for br, t in (("pre", t_pre), ("post", t_post)):
            c = correlation_statistic(model, fam, br, t)
            cov_rows.append((fam, br, t, c, "+" if c > 1e-3 else "-" if c < -1e-3 else "0"))
        for t, u in ((t_pre - 1.0, 1.0), (t_post, 1.0), (t_pre, t_post - t_pre)):
            liou_rows.append((fam, t, u, liouville_check(model, fam, t, u, n=n, seed=seed)))
    arts = [write_csv(out / "covariance.csv", ["family", "branch", "t", "covariance", "sign"], cov_rows),
            write_csv(out / "liouville.csv", ["family", "t", "u", "residual"], liou_rows)]
    signature = [[r[4] for r in cov_rows[2 * k:2 * k + 2]] for k in range(3)]
    return arts, {"signature": signature, "max_liouville_residual": max(r[3] for r in liou_rows),
                  "covariance": {f"{r[0]}_{r[1]}": r[3] for r in cov_rows}}


RUNNERS = {
    "bernoulli": run_bernoulli, "propagate": run_propagate, "semiclassical": run_semiclassical,
    "fringes": run_fringes, "scatter": run_scatter, "decay": run_decay, "correlate": run_correlate,
}


# --- driver ---------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="pathmeasure", description="Run a path-measure experiment from a JSON config.")
    ap.add_argument("experiment", nargs="?", choices=EXPERIMENTS,
                    help="experiment to run (defaults to the config's 'experiment' field)")
    ap.add_argument("--config", type=Path, help="JSON config file")
    ap.add_argument("--output", type=Path, help="output directory (overrides output_dir)")
    ap.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    return ap


def _setup_logging():
    level = os.environ.get("PATHMEASURE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    if level not in levels:
        logger.error("PATHMEASURE_LOG=%r not one of error/info/debug; using error", level)


def load_config(path, experiment=None):
    """Parse and validate the top level of a config; returns ``(dict, text)``."""
    text = ""
    cfg = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    top = Params(cfg, "", text)
    name = top.get("experiment", experiment, str)
    if experiment is not None and name != experiment:
        top._fail("experiment", f"config says {name!r} but {experiment!r} was requested")
    if name is None:
        raise ConfigError("field 'experiment': missing required field (give it in the config or on the command line)")
    if name not in EXPERIMENTS:
        top._fail("experiment", f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    unknown = set(cfg) - {"experiment", "parameters", "output_dir", "seed"}
    if unknown:
        top._fail(sorted(unknown)[0], "unknown top-level field")
    cfg = dict(cfg)
    cfg["experiment"] = name
    cfg.setdefault("parameters", {})
    top.get("seed", 0, int)
    top.get("output_dir", "", str)
    return cfg, text


def run(cfg, text="", output=None, threads=1, seed=None):
    """Run a validated config; returns the manifest dict."""
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    name = cfg["experiment"]
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out = Path(output if output is not None else cfg.get("output_dir") or "pathmeasure_out")
    params = Params(cfg["parameters"], "parameters", text)
    effective = {"experiment": name, "parameters": cfg["parameters"], "seed": seed}
    digest = hashlib.sha256(json.dumps(effective, sort_keys=True).encode()).hexdigest()
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    arts, summary = RUNNERS[name](params, out, seed, threads)
    wall = time.perf_counter() - t0
    manifest = {
        "experiment": name, "version": __version__, "config_sha256": digest, "seed": seed,
        "threads": threads, "wall_time_s": wall, "summary": summary,
        "artifacts": [{"path": Path(a).name, "sha256": sha256_file(a)} for a in arts],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n",
                                       encoding="ascii")
    return manifest


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging()
    try:
        cfg, text = load_config(args.config, args.experiment)
        manifest = run(cfg, text, args.output, args.threads, args.seed)
    except ConfigError as exc:
        print(f"pathmeasure: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularAngleError, NumericalError) as exc:
        print(f"pathmeasure: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ModelError) as exc:
        print(f"pathmeasure: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pathmeasure: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(manifest["summary"], sort_keys=True, default=_jsonable))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
