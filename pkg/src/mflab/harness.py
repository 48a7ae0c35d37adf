"""Experiment configs, N-sweeps, trend fits and on-disk results.

Every run writes ``config.json``, ``series.csv`` and ``summary.json`` into its
output directory.  Numbers are written with ``repr`` so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import gp, manybody, potentials, scattering, smearing, weights
from .potentials import DomainError

EXPERIMENTS = ("scat-sweep", "smear-sweep", "weights-audit", "gp-run", "nbody-convergence",
               "gronwall-probe")


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    """A sub-module error, tagged with the sweep coordinates that raised it."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    out: Path | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict, out=None, seed=None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        kind = doc.get("experiment")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {kind!r}; expected one of {', '.join(EXPERIMENTS)}")
        params = {k: v for k, v in doc.items() if k not in ("experiment", "seed", "out")}
        s = int(doc.get("seed", 0) if seed is None else seed)
        o = out if out is not None else doc.get("out")
        return cls(kind, params, None if o is None else Path(o), s)

    @classmethod
    def load(cls, path, out=None, seed=None) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, out, seed)

    def to_dict(self) -> dict:
        return {"experiment": self.kind, "seed": self.seed, **self.params}

    def get(self, key, default=None):
        return self.params.get(key, default)


# ---------------------------------------------------------------------------
# fits and reports
# ---------------------------------------------------------------------------

@dataclass
class Fit:
    name: str
    slope: float
    intercept: float
    r2: float
    ci95: tuple
    max_slope: float | None = None
    min_slope: float | None = None
    min_r2: float = 0.98

    @property
    def passed(self) -> bool:
        ok = self.r2 >= self.min_r2
        if self.max_slope is not None:
            ok &= self.slope <= self.max_slope
        if self.min_slope is not None:
            ok &= self.slope >= self.min_slope
        return bool(ok)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "ci95": list(self.ci95), "max_slope": self.max_slope, "min_slope": self.min_slope,
                "verdict": "PASS" if self.passed else "FAIL"}


def loglog_fit(name, x, y, max_slope=None, min_slope=None, min_r2=0.98) -> Fit:
    """Least squares of log y against log x, with a 95% interval on the slope."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float)))
    res = stats.linregress(lx, ly)
    n = len(lx)
    if n > 2:
        half = float(stats.t.ppf(0.975, n - 2) * res.stderr)
        r2 = float(res.rvalue ** 2)
    else:
        half, r2 = float("nan"), 1.0
    return Fit(name, float(res.slope), float(res.intercept), r2,
               (float(res.slope) - half, float(res.slope) + half), max_slope, min_slope, min_r2)


@dataclass
class TrendReport:
    kind: str
    columns: list
    rows: list
    fits: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)     # name -> (bool, detail)
    extra: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        out = {f.name: ("PASS" if f.passed else "FAIL") for f in self.fits}
        out.update({k: ("PASS" if ok else "FAIL") for k, (ok, _) in self.checks.items()})
        return out

    @property
    def passed(self) -> bool:
        return all(v == "PASS" for v in self.verdicts.values())

    def summary(self) -> dict:
        return {"experiment": self.kind,
                "verdict": "PASS" if self.passed else "FAIL",
                "verdicts": self.verdicts,
                "fits": {f.name: f.to_dict() for f in self.fits},
                "checks": {k: {"pass": bool(ok), "detail": _jsonable(d)}
                           for k, (ok, d) in self.checks.items()},
                **_jsonable(self.extra)}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in sorted(self.rows, key=_sort_key):
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _sort_key(row):
    return tuple((0, v) if isinstance(v, (int, float, np.integer, np.floating)) else (1, str(v))
                 for v in row)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def write_outputs(cfg: ExperimentConfig, report: TrendReport, out: Path | None = None) -> Path | None:
    out = out or cfg.out
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "series.csv").write_text(report.csv_text())
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _profile(cfg: ExperimentConfig) -> potentials.RadialProfile:
    doc = cfg.get("profile", {"kind": "square-barrier", "V0": 10.0, "R": 1.0})
    if isinstance(doc, str):
        return potentials.load_profile(doc)
    return potentials.profile_from_dict(doc)


def _scaled(cfg, base, N):
    spf = int(cfg.get("steps_per_feature", 2000))
    if cfg.get("mu") is not None:
        p = potentials.scale_mu(base, N, float(cfg.get("mu")), bool(cfg.get("expand", False)))
    else:
        p = potentials.scale(base, N, float(cfg.get("beta", 1.0)))
    return potentials.ScaledPotential(p.base, p.N, p.beta, p.mu, p.expand, spf)


def _map(fn, items, workers: int):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _tagged(kind, coords, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (DomainError, manybody.CapacityError, scattering.SolverError, gp.StepSizeError,
            gp.ConvergenceError) as exc:
        raise ExperimentError(f"{kind} at {coords}: {type(exc).__name__}: {exc}") from exc


# ---------------------------------------------------------------------------
# scat-sweep
# ---------------------------------------------------------------------------

def _scat_point(args):
    cfg, N = args
    base = _profile(cfg)
    p = _scaled(cfg, base, N)
    s = scattering.scat(p, steps_per_feature=p.steps_per_feature)
    row = {"N": N, "scat": s, "coupling": 4.0 * math.pi * N * s, "L1": p.l1, "sup": p.sup}
    beta1 = cfg.get("beta1")
    if beta1 is not None:
        comp, prof, info = scattering.microstructure(p, float(beta1))
        g = scattering.g_norms(prof)
        bound_lo = 1.0 - comp.a_N / (4.0 * math.pi * N ** (-float(beta1)))
        row.update({"K": prof.K, "K_lower": bound_lo, "R_flat": comp.W_outer_radius,
                    "g_L1": g["L1"], "g_L2": g["L2"], "g_L3": g["L3"],
                    "zero_scat_residual": info["zero_scat_residual"],
                    "NWf_L1": N * info["int_Wf"],
                    "f_monotone": float(np.min(np.diff(prof.f[prof.r <= comp.W_outer_radius])))})
    return row


def run_scat_sweep(cfg: ExperimentConfig) -> TrendReport:
    Ns = [float(n) for n in cfg.get("N", [1e2, 1e3, 1e4])]
    rows = _map(_scat_task, [(cfg, N) for N in Ns], int(cfg.get("workers", 1)))
    base = _profile(cfg)
    beta1 = cfg.get("beta1")
    cols = ["N [count]", "scat [length]", "4 pi N scat [energy*length^3]",
            "L1 [energy*length^3]", "sup [energy]"]
    keys = ["N", "scat", "coupling", "L1", "sup"]
    if beta1 is not None:
        cols += ["K [1]", "K lower bound [1]", "R_flat [length]", "g L1 [length^3]",
                 "g L2 [length^1.5]", "g L3 [length]", "zero-scat residual [1]",
                 "N |Wf|_1 [energy*length^3]"]
        keys += ["K", "K_lower", "R_flat", "g_L1", "g_L2", "g_L3", "zero_scat_residual", "NWf_L1"]
    report = TrendReport("scat-sweep", cols, [[r[k] for k in keys] for r in rows])

    if len(Ns) >= 3:
        cls = potentials.classify(_scaled(cfg, base, Ns[0]), Ns)
        report.checks["class membership"] = (cls.verdict == "PASS", cls.summary())
        report.extra["a"] = cls.a
    if beta1 is not None:
        b1 = float(beta1)
        tol = float(cfg.get("residual_tol", 1e-8))
        report.checks["zero scattering"] = (max(r["zero_scat_residual"] for r in rows) < tol,
                                            max(r["zero_scat_residual"] for r in rows))
        report.checks["K bounds"] = (all(r["K_lower"] - 1e-12 <= r["K"] <= 1 + 1e-12 for r in rows),
                                     [(r["K_lower"], r["K"]) for r in rows])
        report.checks["f monotone"] = (min(r["f_monotone"] for r in rows) > -1e-12,
                                       min(r["f_monotone"] for r in rows))
        if len(Ns) >= 2:
            report.fits.append(loglog_fit("g L1 exponent", Ns, [r["g_L1"] for r in rows],
                                          max_slope=-1 - 2 * b1 + 0.1))
            report.fits.append(loglog_fit("g L2 exponent", Ns, [r["g_L2"] for r in rows],
                                          max_slope=-1 - b1 / 2 + 0.1))
            report.fits.append(loglog_fit("R_flat exponent", Ns, [r["R_flat"] for r in rows],
                                          max_slope=-b1 + 0.05, min_slope=-b1 - 0.05))
    return report


def _scat_task(args):  # module level so worker processes can pickle it
    return _tagged("scat-sweep", {"N": args[1]}, _scat_point, args)


# ---------------------------------------------------------------------------
# smear-sweep
# ---------------------------------------------------------------------------

def _smear_point(args):
    cfg, N = args
    base = _profile(cfg)
    p = _scaled(cfg, base, N)
    pair = smearing.build_smeared(p, float(cfg.get("beta1", 0.25)),
                                  per_shell=int(cfg.get("points_per_shell", 400)))
    norms = smearing.h_norms(pair)
    r_out = np.linspace(1.0, 4.0, 50) * pair.U_radius
    r_out = r_out[r_out > pair.outer_radius]
    hmax = float(np.max(np.abs(pair.h_table[1])))
    outside = float(np.max(np.abs(pair.h(r_out)))) / hmax if r_out.size and hmax > 0 else 0.0
    return {"N": N, "beta": p.beta, "beta1": pair.beta1, **norms,
            "neutrality": pair.neutrality_residual,
            "laplacian": smearing.laplacian_residual(pair, int(cfg.get("laplacian_points", 4000))),
            "outside": outside, "C_pointwise": smearing.h_pointwise_constant(pair)}


def _smear_task(args):
    return _tagged("smear-sweep", {"N": args[1]}, _smear_point, args)


def run_smear_sweep(cfg: ExperimentConfig) -> TrendReport:
    Ns = [float(n) for n in cfg.get("N", [1e2, 1e3, 1e4, 1e5])]
    b1 = float(cfg.get("beta1", 0.25))
    rows = _map(_smear_task, [(cfg, N) for N in Ns], int(cfg.get("workers", 1)))
    cols = ["N [count]", "beta [1]", "beta1 [1]", "h L2 [length^2.5]", "h L3 [length^2]",
            "grad h L1 [length^3]", "grad h L2 [length^1.5]", "neutrality residual [1]",
            "laplacian residual [1]"]
    keys = ["N", "beta", "beta1", "L2", "L3", "grad_L1", "grad_L2", "neutrality", "laplacian"]
    report = TrendReport("smear-sweep", cols, [[r[k] for k in keys] for r in rows])
    report.checks["laplacian"] = (max(r["laplacian"] for r in rows) < 1e-6,
                                  max(r["laplacian"] for r in rows))
    report.checks["h vanishes outside"] = (max(r["outside"] for r in rows) < 1e-10,
                                           max(r["outside"] for r in rows))
    report.checks["neutrality"] = (max(r["neutrality"] for r in rows) < 1e-12,
                                   max(r["neutrality"] for r in rows))
    if len(Ns) >= 2:
        report.fits.append(loglog_fit("h L2 exponent", Ns, [r["L2"] for r in rows],
                                      max_slope=-1 - b1 / 2 + 0.1))
        report.fits.append(loglog_fit("grad h L1 exponent", Ns, [r["grad_L1"] for r in rows],
                                      max_slope=-1 - b1 + 0.1))
        # ||h||_3 <= C N^-1 (ln N)^{1/3}: the compensated quantity should not grow
        comp = [r["L3"] * r["N"] / math.log(r["N"]) ** (1 / 3) for r in rows]
        report.fits.append(loglog_fit("h L3 compensated", Ns, comp, max_slope=0.1, min_r2=0.0))
        report.extra["h_L3_compensated"] = comp
    report.extra["C_pointwise"] = max(r["C_pointwise"] for r in rows)
    return report


# ---------------------------------------------------------------------------
# weights-audit
# ---------------------------------------------------------------------------

def run_weights_audit(cfg: ExperimentConfig) -> TrendReport:
    Ns = [int(n) for n in cfg.get("N", [4, 50, 200])]
    cols = ["N [count]", "j [1]", "lower c_j [1]", "upper ratio [1]", "upper violations [count]",
            "first-difference C [1]", "second-difference C [1]"]
    report = TrendReport("weights-audit", cols, [])
    worst_rec, total_viol = 0.0, 0
    for N in Ns:
        fam = _tagged("weights-audit", {"N": N}, weights.build_m_family, N)
        b = weights.check_bounds(fam)
        for r in b.rows():
            report.rows.append([N, r["j"], r["lower_c"], r["upper_C"], r["upper_violations"],
                                r["diff1_C"], r["diff2_C"]])
        worst_rec = max(worst_rec, b.recursion_residual)
        total_viol += b.violations
        report.extra[f"N={N}"] = b.summary()
    report.checks["recursion (a)"] = (worst_rec < 1e-14, worst_rec)
    report.checks["sandwich bound (b)"] = (total_viol == 0, total_viol)
    return report


def dump_weights(N: int) -> str:
    fam = weights.build_m_family(N)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "k", "m^j(k,N)"])
    for j, vec in enumerate(fam):
        for k, v in enumerate(vec.values):
            w.writerow([j, k, repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# gp-run
# ---------------------------------------------------------------------------

def _grid(cfg):
    g = cfg.get("grid", {})
    return int(g.get("d", 1)), int(g.get("M", 256)), float(g.get("L", 20.0))


def _initial_field(cfg, d, M, L, a):
    init = cfg.get("init", "ground")
    if init == "ground":
        doc = cfg.get("ground_trap")
        if doc is None:
            # start from the t = 0 trap with the ramp frozen
            doc = {k: v for k, v in (cfg.get("trap") or {}).items() if k != "ramp"}
        trap0 = gp.TrapSchedule.from_dict(doc)
        return gp.ground_state(trap0, a, float(cfg.get("ground_tol", 1e-12)), d=d, M=M, L=L)
    if init == "gaussian":
        return gp.gaussian(d, M, L, float(cfg.get("sigma", 1.0)))
    if init == "constant":
        return gp.from_function(lambda *xs: np.ones_like(xs[0]), d, M, L)
    raise ConfigError(f"unknown init {init!r}")


def run_gp(cfg: ExperimentConfig) -> TrendReport:
    d, M, L = _grid(cfg)
    a = float(cfg.get("a", 0.0))
    trap = gp.TrapSchedule.from_dict(cfg.get("trap"))
    phi = _tagged("gp-run", {"stage": "init"}, _initial_field, cfg, d, M, L, a)
    T, dt = float(cfg.get("T", 1.0)), float(cfg.get("dt", 1e-3))
    run = _tagged("gp-run", {"T": T, "dt": dt}, gp.evolve, phi, trap, a, dt, T,
                  every=int(cfg.get("every", 10)), snapshot_every=int(cfg.get("snapshot_every", 0)),
                  radius=float(cfg.get("ball_radius", 1.0)))
    cols = ["t [time]", "E_GP [energy]", "norm [1]", "sup|phi| [length^-d/2]",
            "local L6 grad [length^-(d+3)/6]", "|Laplace phi| [length^-2]", "sup|dA/dt| [energy/time]",
            "integral of monitors [1]", "edge mass [1]"]
    report = TrendReport("gp-run", cols, [list(s.row()) for s in run.series])
    T_run = run.series[-1].t - run.series[0].t
    drift = max(abs(s.norm - 1.0) for s in run.series)
    report.checks["norm drift"] = (drift / max(T_run, 1e-300) < 1e-10, drift)
    report.checks["gronwall integral nondecreasing"] = (
        all(b.gronwall >= a_.gronwall for a_, b in zip(run.series, run.series[1:])), None)
    if trap.form != "off":
        edge = max(s.edge_mass for s in run.series)
        report.checks["edge mass"] = (edge < 1e-8, edge)
    if trap.is_static:
        e0 = run.series[0].energy
        de = max(abs(s.energy - e0) for s in run.series) / max(abs(e0), 1e-300)
        report.checks["energy drift"] = (de < float(cfg.get("energy_tol", 1e-8)), de)
    fit_from = cfg.get("decay_fit_from")
    if fit_from is not None:
        ts = np.array([s.t for s in run.series])
        sup = np.array([s.sup for s in run.series])
        sel = ts >= float(fit_from)
        want = -d / 2.0
        report.fits.append(loglog_fit("sup decay exponent", ts[sel], sup[sel],
                                      max_slope=want * 0.95, min_slope=want * 1.05))
    report.extra["dt_used"] = run.dt
    out = cfg.out
    if cfg.get("snapshot_every") and out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        gp.dump_density(run, Path(out) / "density.f64")
    return report


# ---------------------------------------------------------------------------
# many-body
# ---------------------------------------------------------------------------

def _pair(cfg, N, d, M, L, a):
    """Pair potential whose mean-field coupling is ``a``."""
    norm = cfg.get("pair_norm", "N")
    total = 2.0 * a / (N if norm == "N" else N - 1)
    choice = cfg.get("potential", "contact")
    if a == 0 or choice == "zero":
        return manybody.PairPotential.zero(d, M)
    if choice == "contact":
        return manybody.PairPotential.contact(total, d, M, L)
    if isinstance(choice, dict) and choice.get("kind") == "bump":
        width = float(choice.get("width", L / M))
        raw = manybody.PairPotential.from_radial(lambda r: np.where(r <= width, 1.0, 0.0), d, M, L)
        return manybody.PairPotential(raw.table * total / raw.integral(L), raw.range_, "bump")
    raise ConfigError(f"unknown pair potential {choice!r}")


def _nbody_setup(cfg, N):
    d = int(cfg.get("d", 1))
    M, L = int(cfg.get("M", 16)), float(cfg.get("L", 10.0))
    a = float(cfg.get("a", 1.0))
    trap = gp.TrapSchedule.from_dict(cfg.get("trap", {"form": "harmonic", "strength": 1.0}))
    manybody.check_capacity(N, M, d, int(cfg.get("budget", manybody.DEFAULT_BUDGET)))
    phi0 = _initial_field(cfg, d, M, L, a)
    V = _pair(cfg, N, d, M, L, a)
    H = manybody.Hamiltonian(N, d, M, L, V, trap, int(cfg.get("budget", manybody.DEFAULT_BUDGET)))
    psi = manybody.product_state(phi0, N)
    eps = float(cfg.get("perturb", 0.0))
    if eps:
        psi = _perturbed(psi, phi0, eps, np.random.default_rng(int(cfg.get("seed_offset", 0)) + N))
    return d, M, L, a, trap, phi0, H, psi


def _perturbed(psi, phi, eps, rng):
    """Mix in a symmetric excitation orthogonal to phi in one particle."""
    chi = rng.standard_normal(phi.psi.shape) + 1j * rng.standard_normal(phi.psi.shape)
    chi = chi - phi.psi * np.vdot(phi.psi, chi) * phi.dV
    chi = gp.Field(phi.d, phi.M, phi.L, chi).normalized()
    ex = np.multiply.outer(chi.psi.reshape(-1), manybody.product_state(phi, psi.N - 1).amplitudes)
    ex = manybody.symmetrize(psi.with_amplitudes(ex.reshape(psi.amplitudes.shape)))
    amp = math.sqrt(1 - eps) * psi.amplitudes + math.sqrt(eps) * ex.amplitudes
    out = psi.with_amplitudes(amp)
    return out.with_amplitudes(amp / out.norm())


def _nbody_point(args):
    cfg, N = args
    d, M, L, a, trap, phi, H, psi = _nbody_setup(cfg, N)
    T, dt = float(cfg.get("T", 0.5)), float(cfg.get("dt", 2e-3))
    n = max(1, int(round(T / dt)))
    dt = T / n
    psi = manybody.evolve(psi, H, dt, n)
    for k in range(n):
        phi = gp.step(phi, trap, a, dt, k * dt)
    ctx = manybody.ProjectorContext(phi)
    al, parts = manybody.alpha(psi, ctx, H, a, T, parts=True)
    tr = manybody.reduced_density(psi).trace_distance(ctx)
    return {"N": N, "alpha": al, **parts, "trace_distance": tr}


def _nbody_task(args):
    return _tagged("nbody-convergence", {"N": args[1]}, _nbody_point, args)


def run_nbody_convergence(cfg: ExperimentConfig) -> TrendReport:
    Ns = [int(n) for n in cfg.get("N", [2, 3, 4, 5])]
    rows = _map(_nbody_task, [(cfg, N) for N in Ns], int(cfg.get("workers", 1)))
    rows.sort(key=lambda r: r["N"])
    cols = ["N [count]", "alpha [1]", "<n> [1]", "E per particle [energy]", "E_GP [energy]",
            "trace distance [1]"]
    report = TrendReport("nbody-convergence", cols,
                         [[r["N"], r["alpha"], r["n"], r["E"], r["E_GP"], r["trace_distance"]]
                          for r in rows])
    alphas = [r["alpha"] for r in rows]
    tol = float(cfg.get("monotone_tol", 1e-12))
    report.checks["alpha nonincreasing in N"] = (
        all(b <= a_ + tol for a_, b in zip(alphas, alphas[1:])), alphas)
    thresh = float(cfg.get("alpha_max", 0.1))
    report.checks["alpha at largest N"] = (alphas[-1] < thresh, alphas[-1])
    return report


def run_gronwall_probe(cfg: ExperimentConfig) -> TrendReport:
    N = int(cfg.get("N", 3))
    d, M, L, a, trap, phi, H, psi = _tagged("gronwall-probe", {"N": N}, _nbody_setup, cfg, N)
    T, dt = float(cfg.get("T", 0.5)), float(cfg.get("dt", 1e-3))
    every = int(cfg.get("every", 10))
    n = max(1, int(round(T / dt)))
    dt = T / n
    delta = float(cfg.get("delta", 0.0))
    nw = weights.n_weights(N)
    kern = gp._ball_kernel(d, M, L, float(cfg.get("ball_radius", 1.0)))
    cols = ["t [time]", "<n> [1]", "<n^2> [1]", "E per particle [energy]", "E_GP [energy]",
            "alpha [1]", "alpha'_0 [1/time]", "alpha'_1 [1/time]", "alpha'_2 [1/time]",
            "trace distance [1]", "integral of monitors [1]"]
    report = TrendReport("gronwall-probe", cols, [])
    diag = None
    t = 0.0
    for k in range(n + 1):
        if k % every == 0 or k == n:
            ctx = manybody.ProjectorContext(phi)
            al, parts = manybody.alpha(psi, ctx, H, a, t, parts=True)
            ap = manybody.alpha_prime(psi, ctx, H, a, t)
            n2 = ctx.weight_expectation(psi, weights.WeightVector(N, nw.values ** 2))
            diag = gp.monitors(phi, trap, a, t, diag, _kernel=kern)
            report.rows.append([t, parts["n"], n2, parts["E"], parts["E_GP"], al, ap["a0"], ap["a1"],
                                ap["a2"], manybody.reduced_density(psi).trace_distance(ctx),
                                diag.gronwall])
        if k < n:
            psi = manybody.evolve(psi, H, dt, 1, t)
            phi = gp.step(phi, trap, a, dt, t)
            t = (k + 1) * dt
    al0 = report.rows[0][5]
    C = 0.0
    for row in report.rows[1:]:
        I = row[-1]
        if I > 0:
            C = max(C, math.log(max(row[5], 1e-300) / (al0 + delta)) / I)
    bound_ok = all(row[5] <= (al0 + delta) * math.exp(C * row[-1]) * (1 + 1e-12) for row in report.rows)
    report.checks["gronwall envelope"] = (bound_ok and math.isfinite(C), C)
    report.extra.update({"C_fit": C, "delta": delta, "alpha0": al0})
    return report


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

RUNNERS = {"scat-sweep": run_scat_sweep, "smear-sweep": run_smear_sweep,
           "weights-audit": run_weights_audit, "gp-run": run_gp,
           "nbody-convergence": run_nbody_convergence, "gronwall-probe": run_gronwall_probe}


def run(cfg: ExperimentConfig, out=None) -> TrendReport:
    diags = validate(cfg)
    if diags:
        raise ConfigError("; ".join(diags))
    cfg = copy.deepcopy(cfg)
    if out is not None:
        cfg.out = Path(out)
    report = RUNNERS[cfg.kind](cfg)
    write_outputs(cfg, report)
    return report


def validate(cfg: ExperimentConfig) -> list:
    """Static checks; returns a list of human-readable diagnostics (empty if clean)."""
    diags = []
    p = cfg.params
    beta = p.get("beta")
    if beta is not None and not 0.0 < float(beta) <= 1.0:
        diags.append(f"beta={beta} outside (0,1]")
    if p.get("mu") is not None and not float(p["mu"]) > 2.0:
        diags.append(f"mu={p['mu']} must exceed 2")
    b1 = p.get("beta1")
    if b1 is not None:
        hi = float(beta) if beta is not None else 1.0
        if float(b1) < 0 or float(b1) > hi:
            diags.append(f"beta1={b1} outside [0, beta={hi}]")
        if cfg.kind == "scat-sweep" and float(b1) == hi:
            diags.append("the compensator needs beta1 < beta")
    declared = p.get("class")
    if declared is not None and beta is not None:
        want = "V_1" if float(beta) == 1.0 else "V_beta"
        if declared != want:
            diags.append(f"declared class {declared} does not match beta={beta} (expected {want})")
    Ns = p.get("N")
    if Ns is not None:
        seq = Ns if isinstance(Ns, list) else [Ns]
        if any(float(n) < 1 for n in seq):
            diags.append("particle numbers must be at least 1")
    if "profile" in p and not isinstance(p["profile"], str):
        try:
            potentials.profile_from_dict(p["profile"])
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            diags.append(f"profile: {exc}")
    for key in ("trap", "ground_trap"):
        if key in p:
            try:
                trap = gp.TrapSchedule.from_dict(p[key])
            except (DomainError, TypeError, ValueError) as exc:
                diags.append(f"{key}: {exc}")
                continue
            ramp = trap.ramp or {}
            if ramp.get("type") == "linear" and not float(ramp.get("t_end", 0)) > 0:
                diags.append(f"{key}: linear ramp with t_end <= 0 has unbounded dA/dt")
            elif not math.isfinite(trap.sup_s_dot()):
                diags.append(f"{key}: sup |dA/dt| is not finite")
    if cfg.kind in ("nbody-convergence", "gronwall-probe"):
        M, d = int(p.get("M", 16)), int(p.get("d", 1))
        budget = int(p.get("budget", manybody.DEFAULT_BUDGET))
        for N in (Ns if isinstance(Ns, list) else [Ns if Ns is not None else 3]):
            try:
                manybody.check_capacity(int(N), M, d, budget)
            except manybody.CapacityError as exc:
                diags.append(f"capacity: N={N}: {exc}")
    if cfg.kind == "weights-audit":
        for N in (Ns or [4, 50, 200]):
            if int(N) < 2:
                diags.append(f"weights need N >= 2, got {N}")
    return diags
