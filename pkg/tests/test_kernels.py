import os
import subprocess
import sys

import numpy as np
import pytest

from cylbubble import _pykernels, kernels


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_matches_numpy(gs):
    rng = np.random.default_rng(0)
    pts = rng.normal(scale=20.0, size=(500, 5))
    centers = rng.normal(scale=20.0, size=(6, 5))
    args = gs.table("U").args()
    a = kernels.bubble_sum(pts, centers, 1.3, 2.0, 2.45, *args)
    b = _pykernels.bubble_sum(pts, centers, 1.3, 2.0, 2.45, *args)
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-13
    r = np.logspace(-6, 4, 300)
    assert np.max(np.abs(kernels.profile_eval(r, *args, 0) - _pykernels.profile_eval(r, *args, 0))
                  / _pykernels.profile_eval(r, *args, 0)) <= 1e-13
    for cross in (False, True):
        a = kernels.polygon_sum(777, 0.3, 3.0, cross)
        b = _pykernels.polygon_sum(777, 0.3, 3.0, cross)
        assert a == pytest.approx(b, rel=1e-13)


def test_pure_python_switch():
    env = dict(os.environ, CYLBUBBLE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cylbubble import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
