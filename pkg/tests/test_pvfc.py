import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from copvfc.dynamics import RobotParams, augment, coriolis_matrix, mass_matrix
from copvfc.field import FieldParams, tracking_field
from copvfc.pvfc import (
    PvfcGains, alpha, coupling_matrices, energy_matrix, frac_pow, pvfc_torque, saturation, saturation_slope,
)

G = PvfcGains()
P = RobotParams()
v3 = st.lists(st.floats(-100, 100), min_size=3, max_size=3).map(np.array)


def test_saturation_examples():
    assert saturation(-1.0, G) == -1.0
    assert saturation(1.0, G) == 1.0
    assert saturation(0.0, G) == 0.0
    assert saturation(0.005, G) == pytest.approx(0.5)
    assert saturation(-0.005, G) == pytest.approx(-0.5)


@pytest.mark.parametrize("corner", [G.delta1, 0.0, G.delta2])
def test_saturation_continuous_at_corners(corner):
    left, right = saturation(np.nextafter(corner, -1), G), saturation(np.nextafter(corner, 1), G)
    assert abs(left - right) <= 1e-12


@given(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_saturation_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert saturation(lo, G) <= saturation(hi, G)


@given(st.floats(-0.02, 0.02).filter(lambda e: min(abs(e - G.delta1), abs(e), abs(e - G.delta2)) > 1e-6))
def test_saturation_slope_matches_finite_differences(e):
    h = 1e-8
    fd = (saturation(e + h, G) - saturation(e - h, G)) / (2 * h)
    assert saturation_slope(e, G) == pytest.approx(fd, abs=1e-4)


def test_frac_pow_examples():
    np.testing.assert_allclose(frac_pow([32.0, -32.0, 0.0], 3, 5), [8.0, -8.0, 0.0])
    assert frac_pow([1.0], 3, 5)[0] == 1.0


@given(v3)
def test_frac_pow_odd_exactly(v):
    np.testing.assert_array_equal(frac_pow(-v, 3, 5), -frac_pow(v, 3, 5))


@given(v3, v3, v3, v3)
def test_coupling_matrices_skew_and_workless(w, Pm, p, qd):
    Gm, R = coupling_matrices(w, Pm, p, G)
    np.testing.assert_array_equal(Gm, -Gm.T)
    np.testing.assert_array_equal(R, -R.T)
    scale = max(1.0, np.abs(w).max() * np.abs(Pm).max() / G.Ea, G.kappa * np.abs(Pm).max() * np.abs(p).max())
    assert abs(qd @ (Gm + R) @ qd) <= 1e-12 * scale * max(1.0, np.abs(qd).max()) ** 2


def _state():
    q, qd = np.array([-0.7, 1.5]), np.array([0.2, -0.1, 1.5])
    M, C = mass_matrix(q, P), coriolis_matrix(q, qd[:2], P)
    Ma, Ca = augment(M, C, P.mf)
    fs = tracking_field(q, qd, q + 0.01, np.array([0.05, 0.02]), np.zeros(2), FieldParams(), P)
    return Ma, Ca, fs, qd


def test_torque_power_is_compensation_only():
    Ma, Ca, fs, qd = _state()
    tau, inter = pvfc_torque(Ma, Ca, fs, qd, G)
    ka = 0.5 * qd @ Ma @ qd
    s = saturation(ka - G.kd_a, G)
    expected = -s * qd @ G.K2 @ frac_pow(qd, G.r1, G.r2)
    assert tau @ qd == pytest.approx(expected, rel=1e-12, abs=1e-12)
    np.testing.assert_array_equal(inter.S, energy_matrix(ka, G))


def test_uncompensated_torque_does_no_work():
    Ma, Ca, fs, qd = _state()
    tau, inter = pvfc_torque(Ma, Ca, fs, qd, G, compensate=False)
    assert not inter.S.any()
    assert abs(tau @ qd) < 1e-10


def test_zero_velocity_gives_zero_torque():
    Ma, Ca, fs, _ = _state()
    tau, _ = pvfc_torque(Ma, Ca, fs, np.zeros(3), G)
    np.testing.assert_array_equal(tau, np.zeros(3))


def test_alpha():
    assert alpha(30.0, 3000.0) == pytest.approx(0.1)
    assert alpha(3000.0, 3000.0) == 1.0
    with pytest.raises(ValueError):
        alpha(-1.0, 3000.0)


@pytest.mark.parametrize("kwargs, message", [
    ({"r1": 2}, "odd"), ({"r2": 4}, "odd"), ({"r1": 5, "r2": 3}, "smaller"),
    ({"K2": np.ones((3, 3))}, "diagonal"), ({"delta1": 0.01}, "deadband"), ({"eta_max": -1.0}, "plateau"),
])
def test_gain_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        PvfcGains(**kwargs)
