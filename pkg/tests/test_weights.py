import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflab import kernels
from mflab.potentials import DomainError
from mflab.weights import (WeightVector, _seed, build_m_family, check_bounds, constant_weights,
                           n_weights)


def test_endpoint_values():
    fam = build_m_family(4)
    assert fam[4].values[4] == pytest.approx(6.0 ** -4)
    assert fam[5].values[0] == pytest.approx(4 ** -0.5)


@given(st.integers(3, 300))
@settings(max_examples=30, deadline=None)
def test_recursion_and_positivity(N):
    fam = build_m_family(N)
    rep = check_bounds(fam)
    assert rep.recursion_residual < 1e-14
    assert rep.mn_bound <= 1.0 + 1e-15
    assert all(np.all(w.values > 0) for w in fam)


@pytest.mark.parametrize("N", [4, 5, 50, 51, 200])
def test_kernel_paths_agree(N):
    s = _seed(N)
    a, b = kernels.weight_recursion_jit(s, N), kernels.weight_recursion_numpy(s, N)
    ok = np.isfinite(a)
    assert np.array_equal(ok, np.isfinite(b))
    np.testing.assert_allclose(a[ok], b[ok], rtol=1e-13)


def test_lower_constants_positive():
    rep = check_bounds(build_m_family(200))
    assert rep.lower_c[1] > 0.1
    assert min(rep.lower_c.values()) > 0.01


def test_mn_precondition_fails_only_at_two():
    assert check_bounds(build_m_family(2)).mn_bound > 1.0
    assert check_bounds(build_m_family(3)).mn_bound == pytest.approx(1.0)


def test_upper_bound_is_violated():
    # documents the known failure of the unit upper constant
    rep = check_bounds(build_m_family(50))
    assert rep.upper_violations[5]
    assert not rep.ok
    assert "fails" in rep.notes[0]


def test_weightvector_out_of_range_and_shift():
    w = n_weights(4)
    assert w.at(-1) == 0 and w.at(5) == 0
    np.testing.assert_allclose(w.shifted(1).values, list(w.values[1:]) + [0.0])
    assert constant_weights(3, 2.0).values.tolist() == [2.0] * 4


def test_domain_errors():
    with pytest.raises(DomainError):
        build_m_family(1)
    with pytest.raises(DomainError):
        WeightVector(2, [1.0, -1.0, 0.0])
    with pytest.raises(DomainError):
        WeightVector(2, [1.0, 1.0])
