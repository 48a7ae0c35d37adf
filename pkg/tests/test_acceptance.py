"""Acceptance criteria 1-10.

Each ``criterion_*`` function returns ``(passed, detail)``; the tests assert on
them and the collected verdicts are printed as one line per criterion at the
end of the session (see conftest.py).  Run as a script for the same lines
without pytest:

    python tests/test_acceptance.py
"""
import math
import time

import numpy as np
import pytest

from mflab import gp, manybody
from mflab.manybody import (Hamiltonian, PairPotential, ProjectorContext, alpha, alpha_prime,
                            convolution_identity_check, identity_residuals, product_state,
                            random_symmetric)
from mflab.potentials import scale, square_barrier
from mflab.scattering import g_norms, microstructure, scat
from mflab.smearing import build_smeared, h_norms, laplacian_residual
from mflab.weights import WeightVector, build_m_family, check_bounds
from mflab.harness import loglog_fit

RESULTS = {}


def record(num, title, limit, warm=None):
    """Decorator: time the criterion, compare to its runtime limit, store the verdict.

    ``warm`` runs first, untimed, so JIT compilation is not billed to the criterion.
    """
    def wrap(fn):
        def inner():
            if warm is not None:
                warm()
            t0 = time.perf_counter()
            ok, detail = fn()
            elapsed = time.perf_counter() - t0
            fast = elapsed < limit
            detail = f"{detail}; runtime {elapsed:.2f}s (limit {limit:g}s)"
            RESULTS[num] = (ok and fast, title, detail)
            return ok and fast, detail
        inner.num = num
        return inner
    return wrap


BARRIER = square_barrier(10.0, 1.0)


# 1 ---------------------------------------------------------------------------

@record(1, "scattering oracle", 1.0)
def criterion_1():
    s = scat(BARRIER)
    exact = 1.0 - math.tanh(math.sqrt(5.0)) / math.sqrt(5.0)
    err = abs(s - exact)
    return err < 1e-8, f"|scat - exact| = {err:.2e}"


# 2 ---------------------------------------------------------------------------

@record(2, "Born regime", 10.0)
def criterion_2():
    ratios = []
    for N in (1e2, 1e3, 1e4, 1e5):
        V = scale(BARRIER, N, 0.2)
        ratios.append(abs(8 * math.pi * scat(V) - V.l1) / V.l1)
    mono = all(b < a for a, b in zip(ratios, ratios[1:]))
    return mono and ratios[-1] < 1e-3, "ratios " + ", ".join(f"{r:.3e}" for r in ratios)


# 3 ---------------------------------------------------------------------------

@record(3, "hard-scaling constancy", 10.0)
def criterion_3():
    vals = [4 * math.pi * N * scat(scale(BARRIER, N, 1.0)) for N in (1, 10, 100, 1000)]
    spread = (max(vals) - min(vals)) / abs(np.mean(vals))
    return spread < 1e-6, f"4 pi N scat = {vals[0]:.10f}, relative spread {spread:.2e}"


# 4 ---------------------------------------------------------------------------

@record(4, "microstructure audit", 30.0)
def criterion_4():
    beta, beta1 = 0.8, 0.5
    Ns = [1e2, 1e3, 1e4]
    resid, k_ok, g1 = [], True, []
    for N in Ns:
        V = scale(BARRIER, N, beta)
        comp, prof, info = microstructure(V, beta1)
        resid.append(info["zero_scat_residual"])
        lower = 1.0 - comp.a_N / (4 * math.pi * N ** -beta1)
        k_ok &= lower - 1e-12 <= prof.K <= 1.0 + 1e-12
        g1.append(g_norms(prof)["L1"])
    fit = loglog_fit("g L1", Ns, g1, max_slope=-1 - 2 * beta1 + 0.1)
    ok = max(resid) < 1e-8 and k_ok and fit.passed
    return ok, (f"max zero-scattering residual {max(resid):.2e}; K bounds {'ok' if k_ok else 'violated'}; "
                f"g L1 slope {fit.slope:.3f} (bound {-1 - 2 * beta1 + 0.1:.2f}, R2 {fit.r2:.4f})")


# 5 ---------------------------------------------------------------------------

@record(5, "smearing audit", 30.0)
def criterion_5():
    beta, beta1 = 0.8, 0.25
    Ns = [1e2, 1e3, 1e4, 1e5]
    norms, lap, outside = [], [], []
    for N in Ns:
        pair = build_smeared(scale(BARRIER, N, beta), beta1)
        norms.append(h_norms(pair))
        lap.append(laplacian_residual(pair))
        r = np.linspace(1.0001, 4.0, 200) * pair.outer_radius
        outside.append(float(np.max(np.abs(pair.h(r)))) / float(np.max(np.abs(pair.h_table[1]))))
    fits = [loglog_fit("L2", Ns, [n["L2"] for n in norms], max_slope=-1 - beta1 / 2 + 0.1),
            loglog_fit("grad L1", Ns, [n["grad_L1"] for n in norms], max_slope=-1 - beta1 + 0.1)]
    comp = [n["L3"] * N / math.log(N) ** (1 / 3) for n, N in zip(norms, Ns)]
    l3 = loglog_fit("L3 compensated", Ns, comp, max_slope=0.1, min_r2=0.0)
    ok = max(lap) < 1e-6 and max(outside) < 1e-10 and all(f.passed for f in fits) and l3.passed
    return ok, (f"laplacian {max(lap):.1e}; outside {max(outside):.1e}; slopes "
                + ", ".join(f"{f.name} {f.slope:.3f}<={f.max_slope:.3f}" for f in fits)
                + f", L3 N/(ln N)^(1/3) slope {l3.slope:.3f}")


# 6 ---------------------------------------------------------------------------

def _warm6():
    build_m_family(4)


@record(6, "weights audit", 5.0, warm=_warm6)
def criterion_6():
    reports = [check_bounds(build_m_family(N)) for N in (4, 50, 200)]
    viol = sum(r.violations for r in reports)
    resid = max(r.recursion_residual for r in reports)
    worst = max(max(r.upper_C.values()) for r in reports)
    ok = viol == 0 and resid < 1e-14
    return ok, (f"violations {viol}; recursion residual {resid:.1e}; "
                f"largest upper ratio {worst:.3g} (unit bound required)")


# 7 ---------------------------------------------------------------------------

@record(7, "operator-algebra identities", 60.0)
def criterion_7():
    rng = np.random.default_rng(7)
    N, M, L = 3, 8, 2 * math.pi
    phi = gp.Field(1, M, L, rng.standard_normal(M) + 1j * rng.standard_normal(M)).normalized()
    ctx = ProjectorContext(phi)
    worst = {}
    for _ in range(100):
        psi = random_symmetric(N, 1, M, L, rng)
        m = WeightVector(N, rng.random(N + 1))
        r = WeightVector(N, rng.random(N + 1))
        f = rng.standard_normal((M, M))
        for k, v in identity_residuals(ctx, psi, m, r, f + f.T).items():
            worst[k] = max(worst.get(k, 0.0), v)
    worst["convolution"] = convolution_identity_check(ctx, rng.standard_normal(M), rng, samples=100)
    ok = max(worst.values()) < 1e-12
    return ok, "max residuals " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


# 8 ---------------------------------------------------------------------------

@record(8, "GP solver", 120.0)
def criterion_8():
    M = 256
    out, ok = [], True
    # free Gaussian against the closed form sup|phi_t| = sup|phi_0| (1 + 4t^2)^(-1/4)
    phi = gp.gaussian(1, M, 40.0, 1.0)
    s0 = float(np.max(np.abs(phi.psi)))
    run = gp.evolve(phi, gp.TrapSchedule("off", 0.0), 0.0, 1e-3, 2.0, every=100)
    err = max(abs(d.sup / s0 - (1 + 4 * d.t ** 2) ** -0.25) for d in run.series)
    drift = max(abs(d.norm - 1) for d in run.series) / 2.0
    ok &= err < 1e-6 and drift < 1e-10
    out.append(f"free sup error {err:.1e}, norm drift {drift:.1e}/time")
    # static trap, 10^4 steps
    trap = gp.TrapSchedule("harmonic", 1.0)
    psi = gp.gaussian(1, M, 20.0, 0.7, center=1.0)
    run = gp.evolve(psi, trap, 1.0, 1e-4, 1.0, every=1000)
    e0 = run.series[0].energy
    de = max(abs(d.energy - e0) for d in run.series) / abs(e0)
    ok &= de < 1e-8
    out.append(f"energy drift {de:.1e}")
    # free expansion from a wide trap ground state
    g = gp.ground_state(gp.TrapSchedule("harmonic", 0.04), 0.0, 1e-12, M=M, L=400.0, dtau=0.05)
    run = gp.evolve(g, gp.TrapSchedule("off", 0.0), 0.0, 1e-2, 50.0, every=100)
    ts = np.array([d.t for d in run.series])
    sp = np.array([d.sup for d in run.series])
    sel = ts >= 20
    slope = loglog_fit("decay", ts[sel], sp[sel]).slope
    ok &= abs(slope + 0.5) <= 0.025
    out.append(f"decay exponent {slope:.4f}")
    return ok, "; ".join(out)


# 9 ---------------------------------------------------------------------------

@record(9, "derivative identity", 300.0)
def criterion_9():
    N, M, L, a = 3, 12, 8.0, 1.0
    dt, gap = 1e-4, 1e-2
    trap = gp.TrapSchedule("harmonic", 1.0, {"type": "sin", "eps": 0.3, "omega": 3.0})
    phi = gp.ground_state(gp.TrapSchedule("harmonic", 1.0), a, 1e-12, M=M, L=L)
    H = Hamiltonian(N, 1, M, L, PairPotential.contact(2 * a / N, 1, M, L), trap)
    psi = product_state(phi, N)
    t, excess = 0.0, -math.inf
    for _ in range(50):
        ctx = ProjectorContext(phi)
        ap = alpha_prime(psi, ctx, H, a, t)
        fw, bw = manybody.evolve(psi, H, dt, 1, t), manybody.evolve(psi, H, -dt, 1, t)
        pf, pb = gp.step(phi, trap, a, dt, t), gp.step(phi, trap, a, -dt, t)
        fd = (alpha(fw, ProjectorContext(pf), H, a, t + dt)
              - alpha(bw, ProjectorContext(pb), H, a, t - dt)) / (2 * dt)
        excess = max(excess, abs(fd) - (ap["a0"] + abs(ap["a1"] + ap["a2"])))
        n = int(round(gap / dt))
        psi = manybody.evolve(psi, H, dt, n, t)
        for k in range(n):
            phi = gp.step(phi, trap, a, dt, t + k * dt)
        t += gap
    return excess <= 1e-5, f"max(|d alpha/dt| - bound) = {excess:.2e} (slack 1e-5)"


# 10 --------------------------------------------------------------------------

def nbody_alpha(N, *, M=16, L=10.0, a=1.0, T=0.5, dt=2e-3, pair_norm="N"):
    """alpha(Psi_T, phi_T) after a trap quench from the interacting ground state."""
    phi = gp.ground_state(gp.TrapSchedule("harmonic", 1.0), a, 1e-12, M=M, L=L)
    trap = gp.TrapSchedule("harmonic", 0.5)
    g = 2 * a / (N if pair_norm == "N" else N - 1)
    H = Hamiltonian(N, 1, M, L, PairPotential.contact(g, 1, M, L), trap)
    psi = product_state(phi, N)
    n = int(round(T / dt))
    psi = manybody.evolve(psi, H, dt, n)
    for k in range(n):
        phi = gp.step(phi, trap, a, dt, k * dt)
    return alpha(psi, ProjectorContext(phi), H, a, T)


@record(10, "convergence trend", 1200.0)
def criterion_10():
    alphas = [nbody_alpha(N) for N in (2, 3, 4, 5)]
    mono = all(b <= a for a, b in zip(alphas, alphas[1:]))
    return mono and alphas[-1] < 0.1, "alpha(N=2..5) " + ", ".join(f"{x:.4f}" for x in alphas)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{c.num}" for c in CRITERIA])
def test_criterion(crit):
    ok, detail = crit()
    assert ok, detail


if __name__ == "__main__":
    for c in CRITERIA:
        ok, detail = c()
        print(f"{'PASS' if ok else 'FAIL'}  criterion {c.num:2d}: {detail}")
