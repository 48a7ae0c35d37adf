import math

import numpy as np
import pytest

from mflab.potentials import DomainError, scale, shells, square_barrier
from mflab.scattering import (ResolutionError, build_compensator, g_norms, microstructure, scat,
                              zero_energy_state)


def barrier_exact(V0, R):
    k = math.sqrt(V0 / 2)
    return R - math.tanh(k * R) / k


@pytest.mark.parametrize("V0,R", [(10.0, 1.0), (0.1, 2.0), (200.0, 0.3)])
def test_barrier_closed_form(V0, R):
    assert scat(square_barrier(V0, R)) == pytest.approx(barrier_exact(V0, R), abs=1e-10)


def test_zero_potential():
    assert scat(square_barrier(0.0, 1.0)) == 0.0


def test_scat_below_support_and_monotone():
    vals = [scat(square_barrier(V0, 1.0)) for V0 in (1, 10, 100, 1000)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1.0


def test_two_shell_against_transfer():
    # inner barrier then a weaker outer shell; compare with a refined run
    V = shells([(0.5, 8.0), (1.0, 2.0)])
    coarse = scat(V, steps_per_feature=2000)
    fine = scat(V, steps_per_feature=20000)
    assert coarse == pytest.approx(fine, rel=1e-10)


@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_scaling_law(lam):
    # scat(lam^2 V(lam x)) = scat(V) / lam
    V = shells([(0.5, 8.0), (1.0, 2.0)])
    W = shells([(0.5 / lam, 8.0 * lam ** 2), (1.0 / lam, 2.0 * lam ** 2)])
    assert scat(W) == pytest.approx(scat(V) / lam, rel=1e-10)


def test_resolution_floor():
    with pytest.raises(ResolutionError):
        scat(square_barrier(1, 1), steps_per_feature=3)


def test_compensator_kills_scattering():
    V = scale(square_barrier(10.0, 1.0), 1e3, 0.8)
    comp, prof, info = microstructure(V, 0.5)
    assert info["zero_scat_residual"] < 1e-8
    assert comp.W_inner_radius == pytest.approx(1e3 ** -0.5)
    assert comp.W_outer_radius > comp.W_inner_radius
    assert 0 < prof.K <= 1
    f_in = prof.f[prof.r <= comp.W_outer_radius]
    assert np.all(np.diff(f_in) > -1e-12)
    # f is flat 1 beyond the compensator
    assert np.allclose(prof.f[prof.r > comp.W_outer_radius * 1.0001], 1.0, atol=1e-10)


def test_compensator_domain():
    V = scale(square_barrier(1.0, 1.0), 100, 0.5)
    with pytest.raises(DomainError):
        build_compensator(V, 0.6)


def test_g_norms_need_compensator():
    V = scale(square_barrier(1.0, 1.0), 100, 0.5)
    with pytest.raises(DomainError):
        g_norms(zero_energy_state(V))
