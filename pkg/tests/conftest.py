import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + n * np.eye(n)) / n


def sample_joint_moments(dx, dy):
    """Monte Carlo estimates of the augmented blocks from zero-mean samples.

    ``dx`` is (N, n), ``dy`` is (N, m); Kronecker squares use the i*m + j order.
    """
    n_s, m = dy.shape
    dy2 = np.einsum("ki,kj->kij", dy, dy).reshape(n_s, m * m)
    return {
        "p_xy": dx.T @ dy / n_s,
        "p_xy2": dx.T @ dy2 / n_s,
        "p_yy": dy.T @ dy / n_s,
        "p_yy2": dy.T @ dy2 / n_s,
        "p_y2y2": dy2.T @ dy2 / n_s,
    }


def assert_dominant_close(actual, expected, rtol, floor=0.1):
    """Relative check on entries whose magnitude is at least ``floor`` of the largest."""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    mask = np.abs(expected) >= floor * np.abs(expected).max()
    np.testing.assert_allclose(actual[mask], expected[mask], rtol=rtol)


# criterion -> (passed, detail); filled by test_acceptance, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
