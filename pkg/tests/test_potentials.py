import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflab.potentials import (DomainError, classify, profile_from_dict, scale, scale_mu, shells,
                              square_barrier, tabulated)


def test_barrier_l1_and_sup():
    b = square_barrier(10.0, 1.0)
    assert b.l1 == pytest.approx(10.0 * 4 * math.pi / 3)
    assert b.sup == 10.0
    assert b(np.array([0.5, 1.5])).tolist() == [10.0, 0.0]


@pytest.mark.parametrize("bad", [{"kind": "square-barrier", "V0": -1.0, "R": 1.0},
                                 {"kind": "nonsense"}])
def test_bad_profiles(bad):
    with pytest.raises(DomainError):
        profile_from_dict(bad)


def test_unsorted_shells_rejected():
    with pytest.raises(DomainError):
        shells([(2.0, 1.0), (1.0, 1.0)])


@given(st.floats(1.0, 1e6), st.floats(0.05, 1.0))
@settings(max_examples=40, deadline=None)
def test_scaling_law(N, beta):
    # N ||V_beta||_1 = ||V||_1 for every N and beta
    V = scale(square_barrier(3.0, 0.7), N, beta)
    assert N * V.l1 == pytest.approx(square_barrier(3.0, 0.7).l1, rel=1e-12)
    assert V.support_radius == pytest.approx(0.7 * N ** -beta)


def test_scale_domain():
    b = square_barrier(1.0, 1.0)
    for beta in (0.0, 1.2):
        with pytest.raises(DomainError):
            scale(b, 10, beta)
    with pytest.raises(DomainError):
        scale(b, 0.5, 0.5)
    with pytest.raises(DomainError):
        scale_mu(b, 10, 2.0)


def test_scale_mu_support():
    b = square_barrier(2.0, 1.0)
    p, q = scale_mu(b, 50, 3.0), scale_mu(b, 50, 3.0, expand=True)
    assert p.support_radius == pytest.approx(1 / 50)
    assert q.support_radius == pytest.approx(50)      # the literal form grows
    assert p.sup == q.sup == pytest.approx(2.0 * 50 ** 3)


def test_tabulated_roundtrip():
    t = tabulated([0.5, 1.0], [2.0, 1.0])
    assert profile_from_dict(t.to_dict()).l1 == pytest.approx(t.l1)


def test_classify_soft_branch():
    rep = classify(scale(square_barrier(10.0, 1.0), 100, 0.5), [1e2, 1e3, 1e4])
    assert rep.branch == "L1" and rep.verdict == "PASS"
    assert rep.a == pytest.approx(0.5 * square_barrier(10.0, 1.0).l1)


def test_classify_needs_increasing_sequence():
    with pytest.raises(DomainError):
        classify(scale(square_barrier(1, 1), 10, 0.5), [10, 10, 100])
