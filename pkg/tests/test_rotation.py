import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubepose.errors import NotARotationError
from cubepose.rotation import (
    EulerPose,
    angle_diff,
    canonicalize,
    euler_to_matrix,
    matrix_to_euler,
    wrap_angle,
)

angles = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@pytest.mark.parametrize(
    "raw,expected",
    [(0.0, 0.0), (181.0, -179.0), (-540.0, 180.0), (180.0, 180.0), (-180.0, 180.0), (360.0, 0.0)],
)
def test_wrap_angle_examples(raw, expected):
    assert wrap_angle(raw) == expected


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_wrap_angle_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        wrap_angle(bad)


@given(angles)
def test_wrap_angle_range_and_congruence(a):
    w = wrap_angle(a)
    assert -180.0 < w <= 180.0
    # congruent mod 360 (tolerance scales with the magnitude folded away)
    assert math.isclose((w - a) % 360.0, 0.0, abs_tol=1e-6) or math.isclose(
        (w - a) % 360.0, 360.0, abs_tol=1e-6
    )


@pytest.mark.parametrize(
    "a,b,expected", [(30.0, 10.0, 20.0), (179.0, -179.0, 2.0), (0.0, 180.0, 180.0)]
)
def test_angle_diff_examples(a, b, expected):
    assert angle_diff(a, b) == pytest.approx(expected, abs=1e-12)


@given(angles, angles)
def test_angle_diff_properties(a, b):
    d = angle_diff(a, b)
    assert 0.0 <= d <= 180.0
    assert d == pytest.approx(angle_diff(b, a), abs=1e-9)
    assert angle_diff(a, a) == 0.0


@given(angles, angles, angles)
def test_canonicalize_idempotent_and_in_range(y, p, r):
    c = canonicalize(EulerPose(y, p, r))
    assert -180.0 < c.yaw <= 180.0
    assert -90.0 <= c.pitch <= 90.0
    assert -180.0 < c.roll <= 180.0
    again = canonicalize(c)
    assert again == c


@given(
    st.floats(min_value=-180.0, max_value=180.0),
    st.floats(min_value=-180.0, max_value=180.0),
    st.floats(min_value=-180.0, max_value=180.0),
)
@settings(max_examples=200)
def test_canonicalize_preserves_rotation(y, p, r):
    pose = EulerPose(y, p, r)
    m0 = euler_to_matrix(pose)
    m1 = euler_to_matrix(canonicalize(pose))
    assert np.abs(m0 - m1).max() < 1e-12


def test_euler_to_matrix_identity():
    assert np.allclose(euler_to_matrix(EulerPose(0, 0, 0)), np.eye(3), atol=1e-15)


def test_euler_to_matrix_pure_yaw():
    m = euler_to_matrix(EulerPose(90, 0, 0))
    expected = np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], dtype=float)
    assert np.abs(m - expected).max() < 1e-15


def test_euler_to_matrix_orthonormal():
    m = euler_to_matrix(EulerPose(30, 20, 10))
    assert np.abs(m @ m.T - np.eye(3)).max() < 1e-12
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)


def test_matrix_to_euler_identity():
    assert matrix_to_euler(np.eye(3)) == EulerPose(0.0, 0.0, 0.0)


@pytest.mark.parametrize("pose", [(30, 20, 10), (170, -40, 95)])
def test_matrix_round_trip_examples(pose):
    p = EulerPose(*pose)
    out = matrix_to_euler(euler_to_matrix(p))
    for got, want in zip(out.as_tuple(), p.as_tuple()):
        assert angle_diff(got, want) < 1e-9


def test_matrix_round_trip_bulk():
    rng = np.random.default_rng(1234)
    n = 10_000
    yaws = 180.0 - rng.uniform(0.0, 360.0, n)
    pitches = rng.uniform(-89.0, 89.0, n)
    rolls = 180.0 - rng.uniform(0.0, 360.0, n)
    for y, p, r in zip(yaws, pitches, rolls):
        pose = canonicalize(EulerPose(y, p, r))
        out = matrix_to_euler(euler_to_matrix(pose))
        for got, want in zip(out.as_tuple(), pose.as_tuple()):
            assert angle_diff(got, want) < 1e-7


@pytest.mark.parametrize("yaw_sign", [1.0, -1.0])
def test_gimbal_lock_resolution(yaw_sign):
    # at |yaw| = 90 only pitch + roll's combined angle is observable; the
    # extraction fixes roll to 0 (mod the canonical 180 flip) and must still
    # reproduce the input matrix
    for folded in (25.0, -60.0, 130.0):
        m = euler_to_matrix(EulerPose(yaw_sign * 90.0, folded, 0.0))
        pose = matrix_to_euler(m)
        assert abs(pose.yaw) == pytest.approx(90.0, abs=1e-9)
        # roll carries no information at the lock: it is 0 or the canonical flip
        assert min(abs(pose.roll), abs(abs(pose.roll) - 180.0)) < 1e-9
        assert -90.0 <= pose.pitch <= 90.0
        assert np.abs(euler_to_matrix(pose) - m).max() < 1e-12


def test_matrix_to_euler_rejects_non_rotation():
    with pytest.raises(NotARotationError):
        matrix_to_euler(np.eye(3) * 1.001)
    with pytest.raises(NotARotationError):
        matrix_to_euler(np.diag([1.0, 1.0, -1.0]))  # det -1
    with pytest.raises(NotARotationError):
        matrix_to_euler(np.eye(4))


@given(
    st.floats(min_value=-180.0, max_value=180.0),
    st.floats(min_value=-90.0, max_value=90.0),
    st.floats(min_value=-180.0, max_value=180.0),
)
@settings(max_examples=300)
def test_extraction_preserves_rotation_even_at_lock(y, p, r):
    # per-angle round trips are undefined exactly at |yaw| = 90, but the
    # extracted triple must always reproduce the input matrix
    m = euler_to_matrix(EulerPose(y, p, r))
    back = euler_to_matrix(matrix_to_euler(m))
    assert np.abs(back - m).max() < 1e-9


@given(
    st.floats(min_value=-1e4, max_value=1e4),
    st.floats(min_value=-1e4, max_value=1e4),
    st.floats(min_value=-1e4, max_value=1e4),
)
@settings(max_examples=300)
def test_euler_to_matrix_always_a_rotation(y, p, r):
    m = euler_to_matrix(EulerPose(y, p, r))
    assert np.abs(m @ m.T - np.eye(3)).max() < 1e-12
    assert abs(np.linalg.det(m) - 1.0) < 1e-12
