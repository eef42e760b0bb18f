"""Order-one finite differences of snapshot data."""

import numpy as np

from ..errors import DataError, NumericalError

ALIGNMENTS = ("forward", "midpoint")


def finite_difference(ss, align="forward"):
    """Forward-difference derivative estimate.

    ``Xdot[k] = (X[k+1] - X[k]) / dt`` for ``k = 0 .. m-2``; the last row
    of ``t``, ``X`` and ``U`` is dropped so every matrix keeps ``m - 1``
    aligned rows.

    Parameters
    ----------
    ss : SnapshotSet
    align : {"forward", "midpoint"}
        Which state the quotient is regressed against. ``"forward"`` pairs
        it with ``X[k]``. ``"midpoint"`` pairs it with
        ``(X[k] + X[k+1]) / 2`` (stored in ``X_eval``) while keeping the
        held control ``U[k]``; the quotient is then second-order accurate
        in the state for a zero-order-hold input.

    Returns
    -------
    SnapshotSet

    Raises
    ------
    DataError
        On fewer than two rows or non-uniform timestamps.
    """
    if align not in ALIGNMENTS:
        raise ValueError(f"align must be one of {ALIGNMENTS}, got {align!r}")
    if ss.m < 2:
        raise DataError("finite differences need at least 2 snapshots")
    ss.check_uniform()
    X = ss.X
    Xdot = (X[1:] - X[:-1]) / ss.dt
    if not np.all(np.isfinite(Xdot)):
        raise NumericalError("non-finite finite-difference derivative")
    X_eval = 0.5 * (X[1:] + X[:-1]) if align == "midpoint" else None
    return ss.copy(t=ss.t[:-1], X=X[:-1], U=ss.U[:-1], Xdot=Xdot, X_eval=X_eval)
