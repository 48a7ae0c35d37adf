import os
import subprocess
import sys

import numpy as np
import pytest

from mflab import kernels
from mflab.potentials import scale, square_barrier
from mflab.scattering import _build_shells, _potential_segments


@pytest.mark.parametrize("N,beta", [(1.0, 1.0), (1e3, 0.8), (1e5, 0.2)])
def test_rk4_paths_agree(N, beta):
    V = scale(square_barrier(10.0, 1.0), N, beta)
    edges, q, nsteps = _build_shells(_potential_segments(V), 200)
    a = kernels.rk4_shells_jit(edges, q, nsteps, 0.0, 1.0)
    b = kernels.rk4_shells_numpy(edges, q, nsteps, 0.0, 1.0)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-300)


def test_numpy_flag_selects_fallback():
    code = "from mflab import kernels, _accel; print(_accel.USE_NUMBA, kernels.weight_recursion.__name__)"
    env = dict(os.environ, MFLAB_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["False", "weight_recursion_numpy"]
