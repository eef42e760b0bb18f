"""Fixed-step RK4 rollouts, snapshot containers and CSV persistence."""

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .control import PdGains, pd_control, reference
from .dynamics import CONTROL_NAMES, STATE_NAMES, QuadParams, planar_derivative
from .errors import DataError, DivergenceError, NumericalError

DIVERGENCE_LIMIT = 1e6
CSV_HEADER = ("t",) + STATE_NAMES + CONTROL_NAMES


@dataclass
class SnapshotSet:
    """Time-aligned snapshot matrices.

    Attributes
    ----------
    t : ndarray, shape (m,)
    X : ndarray, shape (m, n)
    U : ndarray, shape (m, q)
        Row ``k`` is the control held over ``[t[k], t[k] + dt)``.
    dt : float
    Xdot : ndarray, shape (m, n) or None
    X_eval : ndarray or None
        Optional states at which ``Xdot`` should be regressed. ``None``
        means ``X`` itself. Filled by midpoint differencing.
    state_names, control_names : tuple of str
    """

    t: np.ndarray
    X: np.ndarray
    U: np.ndarray
    dt: float
    Xdot: Optional[np.ndarray] = None
    X_eval: Optional[np.ndarray] = None
    state_names: Sequence[str] = STATE_NAMES
    control_names: Sequence[str] = CONTROL_NAMES

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.state_names = tuple(self.state_names)
        self.control_names = tuple(self.control_names)
        m = len(self.t)
        if m < 1:
            raise DataError("snapshot set is empty")
        if self.X.shape != (m, len(self.state_names)):
            raise DataError(f"X has shape {self.X.shape}, expected ({m}, {len(self.state_names)})")
        if self.U.shape != (m, len(self.control_names)):
            raise DataError(f"U has shape {self.U.shape}, expected ({m}, {len(self.control_names)})")
        for name in ("Xdot", "X_eval"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.atleast_2d(np.asarray(arr, dtype=float))
                if arr.shape != self.X.shape:
                    raise DataError(f"{name} has shape {arr.shape}, expected {self.X.shape}")
                setattr(self, name, arr)
        if not self.dt > 0:
            raise DataError("dt must be positive")

    @property
    def m(self):
        return len(self.t)

    @property
    def regressor_states(self):
        return self.X if self.X_eval is None else self.X_eval

    def check_uniform(self, tol=1e-9):
        """Raise :class:`DataError` unless timestamps are spaced by ``dt``."""
        if self.m < 2:
            return
        steps = np.diff(self.t)
        bad = np.nonzero(np.abs(steps - self.dt) > tol * max(1.0, self.dt))[0]
        if bad.size:
            k = int(bad[0])
            raise DataError(f"non-uniform timestamps: t[{k + 1}] - t[{k}] = {steps[k]!r}, dt = {self.dt!r}")

    def copy(self, **changes):
        return replace(self, **changes)


def rk4_step(f, x, u, dt):
    """One classical RK4 step with ``u`` held constant.

    Raises
    ------
    NumericalError
        If any stage derivative is non-finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(x, u), dtype=float)
    k2 = np.asarray(f(x + 0.5 * dt * k1, u), dtype=float)
    k3 = np.asarray(f(x + 0.5 * dt * k2, u), dtype=float)
    k4 = np.asarray(f(x + dt * k3, u), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericalError("non-finite derivative in RK4 stage")
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rollout(case, gains=None, p=None, dt=0.05, steps=None, plant=None, clamp_thrust=False):
    """Closed-loop PD simulation of a trajectory case.

    Parameters
    ----------
    case : TrajectoryCase
    gains : PdGains, optional
    p : QuadParams, optional
    dt : float
        Control and integration period.
    steps : int, optional
        Number of snapshots. Defaults to ``case.steps(dt)``.
    plant : callable, optional
        ``f(x, u) -> x_dot``; the planar model when omitted.

    Returns
    -------
    SnapshotSet
        ``Xdot`` is left empty.
    """
    gains = gains or PdGains()
    p = p or QuadParams()
    steps = case.steps(dt) if steps is None else int(steps)
    if steps < 2:
        raise ValueError("rollout needs at least 2 steps")
    if plant is None:
        def plant(x, u):
            return planar_derivative(x, u, p)

    t = np.arange(steps) * dt
    X = np.zeros((steps, 6))
    U = np.zeros((steps, 2))
    x = np.asarray(case.x0, dtype=float)
    for k in range(steps):
        u = pd_control(x, reference(case, t[k]), gains, p, clamp_thrust=clamp_thrust)
        X[k] = x
        U[k] = u
        if k == steps - 1:
            break
        try:
            x = rk4_step(plant, x, u, dt)
        except NumericalError as exc:
            raise DivergenceError(k + 1, f"non-finite state at step {k + 1}") from exc
        if not np.all(np.abs(x) <= DIVERGENCE_LIMIT):
            raise DivergenceError(k + 1)
    return SnapshotSet(t=t, X=X, U=U, dt=dt)


def add_noise(ss, sigma, seed=0):
    """Gaussian measurement noise on the states.

    Parameters
    ----------
    ss : SnapshotSet
    sigma : float or array of n
        Per-column standard deviation.
    seed : int

    Returns
    -------
    SnapshotSet
        New set; ``t`` and ``U`` are shared, derivatives are cleared.
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (ss.X.shape[1],))
    if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
        raise ValueError("sigma must be finite and non-negative")
    if not np.any(sigma):
        return ss.copy(X=ss.X.copy(), Xdot=None, X_eval=None)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(ss.X.shape) * sigma
    return ss.copy(X=ss.X + noise, Xdot=None, X_eval=None)


def analytic_derivatives(ss, p=None):
    """Fill ``Xdot`` with the exact planar right-hand side at each row."""
    p = p or QuadParams()
    Xdot = np.array([planar_derivative(x, u, p) for x, u in zip(ss.X, ss.U)])
    return ss.copy(Xdot=Xdot, X_eval=None)


def write_csv(ss, path):
    """Write ``t, states, controls`` with 17 significant digits."""
    data = np.column_stack([ss.t, ss.X, ss.U])
    header = ("t",) + tuple(ss.state_names) + tuple(ss.control_names)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv(path, dt=None):
    """Read a snapshot CSV written by :func:`write_csv`.

    Raises
    ------
    DataError
        On header mismatch, ragged rows, unparsable values or non-uniform
        timestamps. Messages carry the file path and row number.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        header = tuple(h.strip() for h in header)
        if header != CSV_HEADER:
            raise DataError(f"{path}: header {','.join(header)!r} does not match {','.join(CSV_HEADER)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(CSV_HEADER)} columns, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows)
    t = data[:, 0]
    if dt is None:
        dt = float(t[1] - t[0])
    ss = SnapshotSet(t=t, X=data[:, 1:7], U=data[:, 7:9], dt=dt)
    try:
        ss.check_uniform()
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return ss
