"""First-principles quadrotor models.

Contains the rotation kinematics for the yaw-pitch-roll sequence, a full
rigid-body (12 state) derivative, the planar y-z model used for
identification, and the rotor-thrust to control-input mixing.

State ordering of the planar model is ``[y, z, phi, y_dot, z_dot, phi_dot]``
with controls ``[u1, u2]`` (total thrust, roll moment).
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, GimbalLockError, SingularMixingError

STATE_NAMES = ("y", "z", "phi", "y_dot", "z_dot", "phi_dot")
CONTROL_NAMES = ("u1", "u2")


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the vehicle.

    Parameters
    ----------
    mass : float
        Vehicle mass in kg.
    arm_length : float
        Rotor-to-centre distance ``L`` in m.
    jx, jy, jz : float
        Principal moments of inertia in kg m^2. ``jy`` defaults to ``jx`` and
        ``jz`` to ``2 * jx``; only the rigid-body and mixing paths use them.
    gravity : float
        Gravitational acceleration in m/s^2.
    gamma : float
        Ratio of rotor drag moment to rotor thrust coefficient.
    """

    mass: float = 0.18
    arm_length: float = 0.086
    jx: float = 0.00025
    jy: Optional[float] = None
    jz: Optional[float] = None
    gravity: float = 9.81
    gamma: float = 0.01

    def __post_init__(self):
        if self.jy is None:
            object.__setattr__(self, "jy", self.jx)
        if self.jz is None:
            object.__setattr__(self, "jz", 2.0 * self.jx)
        for name in ("mass", "arm_length", "jx", "jy", "jz", "gravity"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ConfigError(f"QuadParams.{name} must be positive, got {val!r}")
        if not np.isfinite(self.gamma):
            raise ConfigError(f"QuadParams.gamma must be finite, got {self.gamma!r}")

    @property
    def inertia(self):
        """Diagonal inertia matrix."""
        return np.diag([self.jx, self.jy, self.jz])

    @property
    def hover_thrust(self):
        return self.mass * self.gravity


class EulerAngles(NamedTuple):
    """Roll, pitch and yaw in radians. No wrapping is applied."""

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0


class PlanarState(NamedTuple):
    y: float = 0.0
    z: float = 0.0
    phi: float = 0.0
    y_dot: float = 0.0
    z_dot: float = 0.0
    phi_dot: float = 0.0


class ControlInput(NamedTuple):
    u1: float = 0.0
    u2: float = 0.0


@dataclass
class RigidBodyState6:
    """Twelve-scalar rigid-body state.

    Attributes
    ----------
    position : ndarray, shape (3,)
        Inertial position.
    velocity : ndarray, shape (3,)
        Velocity expressed in the body frame.
    attitude : EulerAngles
    rates : ndarray, shape (3,)
        Body angular rates ``(p, q, r)``.
    """

    position: np.ndarray
    velocity: np.ndarray
    attitude: EulerAngles
    rates: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        self.attitude = EulerAngles(*map(float, self.attitude))
        self.rates = np.asarray(self.rates, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("RigidBodyState6 requires finite entries")

    def as_array(self):
        return np.concatenate([self.position, self.velocity,
                               np.asarray(self.attitude, dtype=float), self.rates])

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float).reshape(12)
        return cls(arr[0:3], arr[3:6], EulerAngles(*arr[6:9]), arr[9:12])


def rotation_matrix(a):
    """Body-to-inertial rotation for the yaw-pitch-roll sequence.

    Equivalent to ``Rz(psi) @ Rx(phi) @ Ry(theta)``.

    Parameters
    ----------
    a : EulerAngles or sequence of 3 floats
        ``(phi, theta, psi)``.

    Returns
    -------
    ndarray, shape (3, 3)
    """
    phi, theta, psi = a
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array([
        [cp * ct - sf * sp * st, -cf * sp, cp * st + ct * sf * sp],
        [ct * sp + cp * sf * st, cf * cp, sp * st - cp * ct * sf],
        [-cf * st, sf, cf * ct],
    ])


def euler_rate_matrix(a):
    """Matrix ``T`` with ``omega_body = T @ [phi_dot, theta_dot, psi_dot]``.

    Derived for the same sequence as :func:`rotation_matrix`. Its
    determinant is ``cos(phi)``, so the map is singular at roll = +-pi/2.
    """
    phi, theta, _ = a
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    return np.array([
        [ct, 0.0, -cf * st],
        [0.0, 1.0, sf],
        [st, 0.0, cf * ct],
    ])


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def six_dof_derivative(s, U, p, atol=1e-9):
    """Newton-Euler derivative of the rigid-body state.

    Thrust ``U[0]`` acts along body +z; ``U[1:]`` are body moments. The
    force sum (inertial) is rotated into the body frame before it enters
    the body-velocity equation.

    Parameters
    ----------
    s : RigidBodyState6 or array of 12
    U : array of 4
        ``[thrust, Mx, My, Mz]``.
    p : QuadParams
    atol : float
        Tolerance on ``|cos(phi)|`` below which the Euler-rate map is
        treated as singular.

    Returns
    -------
    ndarray, shape (12,)
        ``[r_dot_inertial, v_dot_body, euler_rates, omega_dot]``.

    Raises
    ------
    GimbalLockError
        If the attitude makes the Euler-rate map singular.
    """
    if not isinstance(s, RigidBodyState6):
        s = RigidBodyState6.from_array(s)
    U = np.asarray(U, dtype=float).reshape(4)
    R = rotation_matrix(s.attitude)
    v, w = s.velocity, s.rates

    force = np.array([0.0, 0.0, -p.mass * p.gravity]) + R @ np.array([0.0, 0.0, U[0]])
    v_dot = R.T @ force / p.mass - np.cross(w, v)

    J = p.inertia
    w_dot = np.linalg.solve(J, U[1:] - np.cross(w, J @ w))

    T = euler_rate_matrix(s.attitude)
    if abs(np.cos(s.attitude.phi)) < atol:
        raise GimbalLockError(f"Euler-rate map singular at phi={s.attitude.phi:.6g}")
    a_dot = np.linalg.solve(T, w)

    return np.concatenate([R @ v, v_dot, a_dot, w_dot])


def planar_derivative(s, u, p):
    """Right-hand side of the planar y-z model.

    Parameters
    ----------
    s : PlanarState or array of 6
    u : ControlInput or array of 2
    p : QuadParams

    Returns
    -------
    ndarray, shape (6,)
    """
    _, _, phi, yd, zd, phid = np.asarray(s, dtype=float)
    u1, u2 = np.asarray(u, dtype=float)
    a = u1 / p.mass
    return np.array([yd, zd, phid, -a * np.sin(phi), -p.gravity + a * np.cos(phi), u2 / p.jx])


def mixing_matrix(p):
    L, g = p.arm_length, p.gamma
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.0, L, 0.0, -L],
        [-L, 0.0, L, 0.0],
        [g, -g, g, -g],
    ])


def motor_mixing(T, p):
    """Map four rotor thrusts to ``[u1, u2, u3, u4]``."""
    return mixing_matrix(p) @ np.asarray(T, dtype=float).reshape(4)


def inverse_mixing(U, p):
    """Rotor thrusts that produce the control vector ``U``.

    Raises
    ------
    SingularMixingError
        When ``gamma`` or the arm length is zero.
    """
    if p.gamma == 0.0 or p.arm_length == 0.0:
        raise SingularMixingError("mixing matrix is singular (gamma or arm length is zero)")
    M = mixing_matrix(p)
    try:
        return np.linalg.solve(M, np.asarray(U, dtype=float).reshape(4))
    except np.linalg.LinAlgError as exc:
        raise SingularMixingError(str(exc)) from exc
