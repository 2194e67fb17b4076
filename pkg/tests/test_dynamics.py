import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copvfc.dynamics import (
    AugmentedState, RobotParams, augment, augmented_accel, coriolis_matrix, dyn_matrices,
    forward_dynamics, forward_kinematics, jacobian, mass_matrix, max_inertia_eigenvalue, pseudoinverse,
)

P = RobotParams()
angle = st.floats(-math.pi, math.pi)
rate = st.floats(-5, 5)


def test_jacobian_examples():
    np.testing.assert_allclose(jacobian([0.0, math.pi / 2], P), [[-0.4, -0.4], [0.4, 0.0]], atol=1e-15)
    J0 = jacobian([0.0, 0.0], P)
    np.testing.assert_allclose(J0, [[0, 0], [0.8, 0.4]], atol=1e-15)
    assert abs(np.linalg.det(J0)) < 1e-15


def test_forward_kinematics_initial_pose():
    x = forward_kinematics([-0.785, 1.57], P)
    np.testing.assert_allclose(x, [0.5657, 0.0], atol=5e-4)


@given(angle, angle)
def test_jacobian_matches_finite_differences(q1, q2):
    q, h = np.array([q1, q2]), 1e-6
    fd = np.column_stack([
        (forward_kinematics(q + h * e, P) - forward_kinematics(q - h * e, P)) / (2 * h) for e in np.eye(2)
    ])
    np.testing.assert_allclose(jacobian(q, P), fd, atol=1e-6)


@given(angle)
def test_mass_matrix_symmetric_positive_definite(q2):
    M = mass_matrix([0.3, q2], P)
    assert M[0, 1] == M[1, 0]
    assert np.linalg.eigvalsh(M).min() > 0


@given(angle, angle, rate, rate)
def test_coriolis_skew_property(q1, q2, v1, v2):
    q, qd, h = np.array([q1, q2]), np.array([v1, v2]), 1e-6
    Mdot = (mass_matrix(q + h * qd, P) - mass_matrix(q - h * qd, P)) / (2 * h)
    assert abs(qd @ (Mdot - 2 * coriolis_matrix(q, qd, P)) @ qd) < 1e-8


def test_broadcasting_matches_single_calls():
    rng = np.random.default_rng(0)
    q = rng.uniform(-3, 3, (5, 2))
    qd = rng.normal(size=(5, 2))
    for i in range(5):
        np.testing.assert_allclose(jacobian(q, P)[i], jacobian(q[i], P))
        np.testing.assert_allclose(mass_matrix(q, P)[i], mass_matrix(q[i], P))
        np.testing.assert_allclose(coriolis_matrix(q, qd, P)[i], coriolis_matrix(q[i], qd[i], P))


def test_pseudoinverse_regular_is_inverse():
    J = jacobian([0.2, 1.0], P)
    Jp, singular = pseudoinverse(J)
    assert not singular
    np.testing.assert_allclose(Jp @ J, np.eye(2), atol=1e-12)


def test_pseudoinverse_singular_is_flagged_and_finite():
    Jp, singular = pseudoinverse(jacobian([0.0, 0.0], P))
    assert singular
    assert np.all(np.isfinite(Jp))
    Jp_stack, flags = pseudoinverse(jacobian(np.array([[0.0, 0.0], [0.2, 1.0]]), P))
    assert flags.tolist() == [True, False]


def test_augment_block_structure():
    M = mass_matrix([0.0, 0.5], P)
    C = coriolis_matrix([0.0, 0.5], [0.1, -0.2], P)
    Ma, Ca = augment(M, C, P.mf)
    np.testing.assert_array_equal(Ma[:2, :2], M)
    assert Ma[2, 2] == P.mf and not Ma[2, :2].any() and not Ma[:2, 2].any()
    np.testing.assert_array_equal(Ca[:2, :2], C)
    assert not Ca[2].any() and not Ca[:, 2].any()


def test_forward_dynamics_satisfies_equation_of_motion():
    s = AugmentedState([0.1, 1.2], 0.0, [0.3, -0.4], 2.0)
    tau, tau_ext = np.array([1.0, -0.5, 0.2]), np.array([0.3, 0.1, 0.0])
    qdd = forward_dynamics(s, tau, tau_ext, P)
    m = dyn_matrices(s.q, s.qd, P)
    np.testing.assert_allclose(m.Ma @ qdd + m.Ca @ s.qda, tau + tau_ext, atol=1e-12)
    assert qdd[2] == pytest.approx(0.2 / P.mf)


def test_zero_torque_from_rest_stays_at_rest():
    Ma, Ca = augment(mass_matrix([0.1, 0.2], P), np.zeros((2, 2)), P.mf)
    np.testing.assert_array_equal(augmented_accel(Ma, Ca, np.zeros(3), np.zeros(3), np.zeros(3)), np.zeros(3))


def test_max_inertia_eigenvalue_is_flywheel_or_stretched_arm():
    lam = max_inertia_eigenvalue(P)
    stretched = np.linalg.eigvalsh(mass_matrix([0.0, 0.0], P)).max()
    assert lam == pytest.approx(max(P.mf, stretched))


@pytest.mark.parametrize("field", ["m1", "l2", "I1", "mf"])
def test_robot_params_reject_nonpositive(field):
    with pytest.raises(ValueError, match=field):
        RobotParams(**{field: 0.0})


def test_augmented_state_rejects_nan():
    with pytest.raises(ValueError):
        AugmentedState([0.0, math.nan], 0.0, [0.0, 0.0], 0.0)
