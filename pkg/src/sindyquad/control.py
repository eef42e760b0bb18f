"""Reference trajectories and the PD tracking controller.

Three scenario families are provided: a step (tag ``A``), a ramp plus sine
(tag ``B``) and a closed diamond circuit (tag ``C``). Each reference comes
with analytic first and second derivatives so the controller feedforward
is exact.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError

DIAMOND_VERTICES = ((0.0, 1.8), (1.0, 2.8), (2.0, 1.8), (1.0, 0.8))

_TAG_ALIASES = {"a": "A", "step": "A", "b": "B", "sine": "B", "c": "C", "diamond": "C"}


@dataclass(frozen=True)
class PdGains:
    """Proportional and derivative gains of the cascaded PD law.

    The defaults keep the zero-order-hold loop stable at a 0.05 s control
    period. Larger attitude gains (for example 400/40) push the discrete
    inner-loop eigenvalues onto the unit circle at that period.
    """

    kp_y: float = 9.0
    kv_y: float = 6.0
    kp_z: float = 9.0
    kv_z: float = 6.0
    kp_phi: float = 150.0
    kv_phi: float = 24.0

    def __post_init__(self):
        for name in ("kp_y", "kv_y", "kp_z", "kv_z", "kp_phi", "kv_phi"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ConfigError(f"PdGains.{name} must be positive, got {val!r}")


class ReferencePoint(NamedTuple):
    y: float
    z: float
    phi: float = 0.0
    y_dot: float = 0.0
    z_dot: float = 0.0
    phi_dot: float = 0.0
    y_ddot: float = 0.0
    z_ddot: float = 0.0
    phi_ddot: float = 0.0


@dataclass
class TrajectoryCase:
    """Scenario description.

    Only the fields relevant to ``tag`` are read:

    * ``A`` (step): ``x0``, ``x_d``, ``t_step``.
    * ``B`` (sine): ``ramp_target``, ``ramp_time``, ``amplitude``,
      ``frequency``.
    * ``C`` (diamond): ``waypoints``, ``laps``, ``edge_profile``.

    ``horizon`` is the nominal duration in seconds; the diamond splits it
    into ``4 * laps`` equal edges and the sine ramp defaults to it.
    """

    tag: str = "A"
    x0: Sequence[float] = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    x_d: Sequence[float] = (0.5, 0.2, 0.0, 0.0, 0.0, 0.0)
    horizon: float = 10.0
    t_step: float = 0.0
    ramp_target: float = 4.0
    ramp_time: Optional[float] = None
    amplitude: float = 0.5
    frequency: float = 0.4
    waypoints: Sequence[Sequence[float]] = field(default_factory=lambda: list(DIAMOND_VERTICES))
    laps: int = 4
    edge_profile: str = "quintic"

    def __post_init__(self):
        tag = _TAG_ALIASES.get(str(self.tag).lower())
        if tag is None:
            raise ConfigError(f"unknown trajectory tag {self.tag!r}")
        self.tag = tag
        self.x0 = tuple(float(v) for v in self.x0)
        self.x_d = tuple(float(v) for v in self.x_d)
        if len(self.x0) != 6 or len(self.x_d) != 6:
            raise ConfigError("x0 and x_d must have 6 entries")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.edge_profile not in ("quintic", "linear"):
            raise ConfigError(f"edge_profile must be 'quintic' or 'linear', got {self.edge_profile!r}")
        if int(self.laps) < 1:
            raise ConfigError("laps must be >= 1")
        self.laps = int(self.laps)
        self.waypoints = [tuple(map(float, w)) for w in self.waypoints]
        if self.tag == "C" and (len(self.waypoints) < 2 or any(len(w) != 2 for w in self.waypoints)):
            raise ConfigError("diamond waypoints must be a list of (y, z) pairs")

    def steps(self, dt):
        """Number of snapshots covering the horizon at step ``dt``."""
        return int(round(self.horizon / dt))


def case_a(**kw):
    """Step from rest at the origin to (0.5, 0.2)."""
    return TrajectoryCase(tag="A", **kw)


def case_b(**kw):
    """Ramp in y to 4 m over 10 s with a 0.5 m, 0.4 Hz sine in z."""
    kw.setdefault("x_d", (4.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    return TrajectoryCase(tag="B", **kw)


def case_c(**kw):
    """Diamond circuit starting at (0, 1.8), four laps in 50 s."""
    kw.setdefault("x0", (0.0, 1.8, 0.0, 0.0, 0.0, 0.0))
    kw.setdefault("x_d", (0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    kw.setdefault("horizon", 50.0)
    return TrajectoryCase(tag="C", **kw)


def holdout_diamond(**kw):
    """Diamond flown at a different pace (three laps in 50 s) for testing."""
    kw.setdefault("laps", 3)
    return case_c(**kw)


def make_case(tag, **kw):
    key = _TAG_ALIASES.get(str(tag).lower())
    if key is None:
        raise ConfigError(f"unknown trajectory tag {tag!r}")
    return {"A": case_a, "B": case_b, "C": case_c}[key](**kw)


def _edge_profile(s, seg, kind):
    if kind == "linear":
        return s, 1.0 / seg, 0.0
    # quintic smoothstep: zero velocity and acceleration at each vertex
    h = s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    hd = 30.0 * s * s * (1.0 - s) ** 2 / seg
    hdd = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / seg ** 2
    return h, hd, hdd


def reference(case, t):
    """Desired state and derivatives at time ``t``.

    Parameters
    ----------
    case : TrajectoryCase
    t : float
        Time in seconds, ``t >= 0``.

    Returns
    -------
    ReferencePoint
    """
    if t < 0:
        raise ValueError("reference time must be non-negative")
    if case.tag == "A":
        x = case.x0 if t < case.t_step else case.x_d
        return ReferencePoint(y=x[0], z=x[1])

    if case.tag == "B":
        T = case.ramp_time if case.ramp_time is not None else case.horizon
        w = 2.0 * np.pi * case.frequency
        if t < T:
            y, yd = case.ramp_target * t / T, case.ramp_target / T
        else:
            y, yd = case.ramp_target, 0.0
        A = case.amplitude
        return ReferencePoint(y=y, z=A * np.sin(w * t), y_dot=yd,
                              z_dot=A * w * np.cos(w * t), z_ddot=-A * w * w * np.sin(w * t))

    if case.tag == "C":
        pts = np.asarray(case.waypoints, dtype=float)
        # closed circuit: last edge returns to the first vertex
        n_edges = len(pts)
        seg = case.horizon / (n_edges * case.laps)
        k = int(np.floor(t / seg))
        s = t / seg - k
        i = k % n_edges
        a, b = pts[i], pts[(i + 1) % n_edges]
        h, hd, hdd = _edge_profile(s, seg, case.edge_profile)
        d = b - a
        return ReferencePoint(y=a[0] + d[0] * h, z=a[1] + d[1] * h,
                              y_dot=d[0] * hd, z_dot=d[1] * hd,
                              y_ddot=d[0] * hdd, z_ddot=d[1] * hdd)

    raise ConfigError(f"unknown trajectory tag {case.tag!r}")


def pd_control(s, ref, gains, p, clamp_thrust=False):
    """Cascaded PD law returning ``(u1, u2)``.

    The outer loop converts the lateral error into a roll command
    ``phi_c``; the inner loop tracks it with ``phi_c_dot = phi_c_ddot = 0``.

    Parameters
    ----------
    s : array of 6
        Planar state.
    ref : ReferencePoint
    gains : PdGains
    p : QuadParams
    clamp_thrust : bool
        Clip ``u1`` at zero from below.

    Returns
    -------
    ndarray, shape (2,)
    """
    y, z, phi, yd, zd, phid = np.asarray(s, dtype=float)
    g = p.gravity
    u1 = p.mass * (ref.z_ddot + gains.kv_z * (ref.z_dot - zd) + gains.kp_z * (ref.z - z) + g)
    if clamp_thrust:
        u1 = max(u1, 0.0)
    phi_c = -(ref.y_ddot + gains.kv_y * (ref.y_dot - yd) + gains.kp_y * (ref.y - y)) / g
    u2 = p.jx * (gains.kv_phi * (0.0 - phid) + gains.kp_phi * (phi_c - phi))
    return np.array([u1, u2])
