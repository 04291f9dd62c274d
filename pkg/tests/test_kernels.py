import os
import subprocess
import sys

import numpy as np
import pytest

from dmnlife import _kernels
from dmnlife.ustat import kernel_phi


def naive_delta_hat(values):
    n = len(values)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += kernel_phi(values[i], values[j])
    return total / (n * (n - 1))


def sequential_lindley(increments, start):
    out = []
    a = start
    for d in increments:
        a = max(0.0, a + d)
        out.append(a)
    return np.array(out)


def test_delta_rows_matches_naive_double_loop():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = rng.integers(2, 40)
        x = rng.exponential(size=n)
        got = _kernels.delta_hat_rows(x[None, :])[0]
        want = naive_delta_hat(x)
        assert got == pytest.approx(want, rel=1e-12)


def test_numpy_and_numba_paths_agree():
    if not _kernels.HAS_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(7)
    x = rng.exponential(size=(500, 23))
    a = _kernels._delta_hat_rows_np(x)
    b = _kernels._delta_hat_rows_nb(x)
    np.testing.assert_allclose(a, b, rtol=1e-12)

    incr = rng.normal(size=5000)
    la = _kernels._lindley_np(incr, 0.7)
    lb = _kernels._lindley_nb(incr, 0.7)
    np.testing.assert_allclose(la, lb, rtol=1e-9, atol=1e-12)


def test_lindley_matches_sequential_recursion():
    rng = np.random.default_rng(3)
    incr = rng.normal(size=400)
    want = sequential_lindley(incr, 0.25)
    got = _kernels.lindley_ages(incr, 0.25)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)
    assert np.all(got >= 0.0)


def test_delta_rows_rejects_bad_shapes():
    with pytest.raises(ValueError):
        _kernels.delta_hat_rows(np.ones(5))
    with pytest.raises(ValueError):
        _kernels.delta_hat_rows(np.ones((3, 1)))


def test_env_flag_disables_numba():
    env = dict(os.environ, DMNLIFE_NO_NUMBA="1")
    code = (
        "from dmnlife import _kernels\n"
        "import numpy as np\n"
        "assert not _kernels.NUMBA_ENABLED\n"
        "v = _kernels.delta_hat_rows(np.array([[1.0, 2.0]]))[0]\n"
        "assert abs(v - (-1.0)) < 1e-12, v\n"
        "print('ok')\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"
