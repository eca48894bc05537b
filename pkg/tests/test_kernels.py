import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monoconvex import kernels
from monoconvex.functions import FunctionTable, addition_table, split_closure, workspace
from monoconvex.hull import generic_fixpoint
from monoconvex.instances import BoxWindow, FiniteCyclic, LatticeZd

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not importable")

point_sets = st.integers(1, 2).flatmap(
    lambda d: st.lists(st.tuples(*[st.integers(-3, 3)] * d), min_size=1, max_size=4, unique=True))


@settings(max_examples=25)
@given(point_sets)
def test_numpy_kernel_matches_generic_fixpoint(pts):
    d = len(pts[0])
    lo, hi = [-3] * d, [3] * d
    fast = kernels.lattice_closure(pts, lo, hi, d + 1, 6, backend="numpy")
    slow = generic_fixpoint(pts, LatticeZd(d), d + 1, 6, BoxWindow(lo, hi))
    assert set(fast) == slow


@needs_numba
@settings(max_examples=25)
@given(point_sets)
def test_backends_agree_on_closure(pts):
    d = len(pts[0])
    args = (pts, [-4] * d, [4] * d, d + 1, 8)
    assert kernels.lattice_closure(*args, backend="numba") == kernels.lattice_closure(*args, backend="numpy")


@needs_numba
@pytest.mark.parametrize("n", [3, 5, 8])
def test_backends_agree_on_minplus(n):
    rng = np.random.default_rng(n)
    S = FiniteCyclic(n)
    W, _ = workspace(S, S.default_window())
    for _ in range(5):
        vals = {x: int(v) for x, v in zip(S.enumerate(W), rng.integers(-2, 6, n))}
        a = split_closure(S, W, vals, backend="numba")
        b = split_closure(S, W, vals, backend="numpy")
        assert a == b


def test_overflow_guard():
    with pytest.raises(OverflowError):
        kernels.lattice_closure([(0, 0, 0)], [-10**6] * 3, [10**6] * 3, 4, 2)


def test_addition_table_shape():
    S = LatticeZd(1)
    W = BoxWindow.cube(1, 2)
    els = S.enumerate(W)
    idx = addition_table(S, els, W)
    assert idx.shape == (5, 5)
    assert idx[0, 0] == -1  # -2 + -2 leaves the window
    assert els[idx[2, 3]] == (1,)


def test_env_flag_selects_numpy():
    env = dict(os.environ, MONOCONVEX_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from monoconvex import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_minorant_values_survive_backend_choice():
    S = FiniteCyclic(3)
    f = FunctionTable(S, S.default_window(), {0: 5, 1: 1, 2: 1})
    W, exact = workspace(S, f.window)
    assert exact
    closed = split_closure(S, W, dict(f.items()), backend="numpy")
    assert [str(closed[x]) for x in (0, 1, 2)] == ["2", "1", "1"]
