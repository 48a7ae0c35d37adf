import numpy as np
import pytest

from mflab import gp
from mflab.potentials import DomainError


@pytest.fixture(scope="module")
def harmonic():
    return gp.TrapSchedule("harmonic", 1.0)


def test_free_gaussian_closed_form():
    phi = gp.gaussian(1, 256, 40.0, 1.0)
    s0 = np.max(np.abs(phi.psi))
    run = gp.evolve(phi, gp.TrapSchedule("off", 0.0), 0.0, 1e-3, 1.0, every=200)
    for d in run.series:
        assert d.sup / s0 == pytest.approx((1 + 4 * d.t ** 2) ** -0.25, abs=1e-10)
        assert d.norm == pytest.approx(1.0, abs=1e-12)


def test_harmonic_ground_state(harmonic):
    g = gp.ground_state(harmonic, 0.0, 1e-12, M=256, L=20.0)
    x = gp.grid_axis(256, 20.0)
    exact = np.exp(-x ** 2 / 2)
    exact /= np.sqrt(np.sum(exact ** 2) * g.dx)
    assert 1 - abs(np.vdot(exact, g.psi) * g.dx) ** 2 < 1e-10
    assert gp.energy(g, harmonic, 0.0) == pytest.approx(1.0, abs=1e-9)


def test_interaction_raises_energy(harmonic):
    es = [gp.energy(gp.ground_state(harmonic, a, 1e-10, M=128, L=20.0), harmonic, a)
          for a in (0.0, 0.5, 1.0)]
    assert es[0] < es[1] < es[2]


def test_time_reversal(harmonic):
    g = gp.ground_state(harmonic, 1.0, 1e-10, M=128, L=20.0)
    psi = gp.gaussian(1, 128, 20.0, 0.8, center=0.5)
    back = gp.step(gp.step(psi, harmonic, 1.0, 1e-3), harmonic, 1.0, -1e-3, 1e-3)
    assert np.max(np.abs(back.psi - psi.psi)) < 1e-13
    assert np.isfinite(g.norm())


def test_step_guard(harmonic):
    psi = gp.gaussian(1, 128, 20.0, 1.0)
    with pytest.raises(gp.StepSizeError) as exc:
        gp.step(psi, harmonic, 0.0, 1.0)
    assert exc.value.suggested_dt > 0
    with pytest.raises(DomainError):
        gp.step(psi, harmonic, -1.0, 1e-4)


def test_energy_rate_matches_difference():
    trap = gp.TrapSchedule("harmonic", 1.0, {"type": "sin", "eps": 0.2, "omega": 2.0})
    phi = gp.gaussian(1, 128, 20.0, 0.8, center=0.3)
    dt, t = 1e-4, 0.4
    for _ in range(50):
        phi = gp.step(phi, trap, 1.0, dt, t)
        t += dt
    fw, bw = gp.step(phi, trap, 1.0, dt, t), gp.step(phi, trap, 1.0, -dt, t)
    fd = (gp.energy(fw, trap, 1.0, t + dt) - gp.energy(bw, trap, 1.0, t - dt)) / (2 * dt)
    assert fd == pytest.approx(gp.energy_rate(phi, trap, t), rel=1e-5, abs=1e-8)


def test_trap_roundtrip_and_ramps():
    t = gp.TrapSchedule("harmonic", 1.0, {"type": "linear", "t_end": 2.0, "final": 0.0})
    assert t.s(1.0) == pytest.approx(0.5)
    assert t.s_dot(3.0) == 0.0 and t.sup_s_dot() == pytest.approx(0.5)
    assert gp.TrapSchedule.from_dict(t.to_dict()) == t
    assert gp.TrapSchedule.from_dict({}).form == "off"
    with pytest.raises(DomainError):
        gp.TrapSchedule("cubic")


def test_2d_norm_conservation():
    phi = gp.gaussian(2, 32, 16.0, 1.0)
    run = gp.evolve(phi, gp.TrapSchedule("harmonic", 0.5), 1.0, 1e-3, 0.2, every=50)
    assert max(abs(d.norm - 1) for d in run.series) < 1e-12


def test_monitors_and_sobolev(harmonic):
    psi = gp.gaussian(1, 256, 20.0, 0.7, center=1.0)
    d = gp.monitors(psi, harmonic, 1.0)
    assert 0 < d.grad6_loc <= d.lap2
    assert d.gronwall == 0.0


def test_density_dump_roundtrip(tmp_path):
    run = gp.evolve(gp.gaussian(1, 64, 20.0), gp.TrapSchedule("off", 0.0), 0.0, 1e-2, 0.1,
                    snapshot_every=5)
    gp.dump_density(run, tmp_path / "rho.f64")
    data, meta = gp.load_density(tmp_path / "rho.f64")
    assert data.shape == (len(run.snapshot_times), 64)
    np.testing.assert_array_equal(data[-1], run.snapshots[-1])
