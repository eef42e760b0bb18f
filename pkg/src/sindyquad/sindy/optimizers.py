"""Sparse regression solvers: STLSQ and SR3.

Both solvers share the same preprocessing when ``normalize`` is on:

* the constant column (if any) is treated as an unpenalized intercept;
  the remaining columns are centred and scaled to unit 2-norm;
* each target column is centred and scaled to unit 2-norm, so ``lam`` is
  a relative threshold on standardized coefficients and lives on the
  same [0, 1] scale for every state;
* after selection the support is refitted by unregularized least
  squares on the raw library (debias). The intercept is then kept only
  if its standardized contribution ``|b0| sqrt(m) / ||xdot||`` reaches
  ``lam``.
"""

import warnings

import numpy as np
import scipy.linalg as sl

from ..errors import (ConvergenceWarning, EmptyModelWarning, RankDeficiencyWarning,
                      UnderdeterminedWarning)


def find_intercept(Theta, atol=0.0):
    """Index of the first exactly constant, non-zero column, or ``None``."""
    Theta = np.asarray(Theta)
    for j in range(Theta.shape[1]):
        col = Theta[:, j]
        if col[0] != 0 and np.all(np.abs(col - col[0]) <= atol):
            return j
    return None


def _lstsq(A, b):
    coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    return coef, rank


def _debias(Theta, b, cols):
    """Least squares restricted to ``cols``; returns a full-length vector."""
    full = np.zeros(Theta.shape[1])
    cols = list(cols)
    if cols:
        coef, rank = _lstsq(Theta[:, cols], b)
        if rank < len(cols):
            warnings.warn(f"rank-deficient support ({rank} < {len(cols)}); using minimum-norm solution",
                          RankDeficiencyWarning, stacklevel=3)
        full[cols] = coef
    return full


class _Standardized:
    """Centred and scaled copy of one regression problem."""

    def __init__(self, Theta, b, normalize, intercept):
        p = Theta.shape[1]
        self.intercept = intercept if normalize else None
        self.cols = np.array([j for j in range(p) if j != self.intercept], dtype=int)
        A = Theta[:, self.cols]
        b = np.asarray(b, dtype=float)
        if normalize:
            if self.intercept is not None:
                A = A - A.mean(axis=0)
                b = b - b.mean()
            s = np.linalg.norm(A, axis=0)
            self.dead = s <= 1e-300
            s[self.dead] = 1.0
            t = np.linalg.norm(b)
            self.t = t if t > 0 else 1.0
        else:
            s = np.ones(A.shape[1])
            self.dead = np.zeros(A.shape[1], dtype=bool)
            self.t = 1.0
        self.A = A / s
        self.A[:, self.dead] = 0.0
        self.b = b / self.t
        self.normalize = normalize


def _finish(Theta, b, prob, w_std, lam):
    """Debias the selected support and apply the intercept inclusion rule."""
    sel = [int(prob.cols[k]) for k in np.nonzero(w_std)[0]]
    if prob.intercept is None:
        return _debias(Theta, b, sel)
    cols = [prob.intercept] + sel
    coef = _debias(Theta, b, cols)
    bn = np.linalg.norm(b)
    contrib = abs(coef[prob.intercept]) * np.sqrt(len(b)) / bn if bn > 0 else 0.0
    if contrib < lam:
        coef = _debias(Theta, b, sel)
    return coef


def _check_shapes(Theta, Xdot):
    Theta = np.asarray(Theta, dtype=float)
    Xdot = np.asarray(Xdot, dtype=float)
    vector = Xdot.ndim == 1
    if vector:
        Xdot = Xdot[:, None]
    if Theta.ndim != 2 or Theta.shape[0] != Xdot.shape[0]:
        raise ValueError(f"Theta {Theta.shape} and Xdot {Xdot.shape} row counts differ")
    if Theta.shape[0] < Theta.shape[1]:
        warnings.warn(f"{Theta.shape[0]} rows for {Theta.shape[1]} library columns",
                      UnderdeterminedWarning, stacklevel=3)
    return Theta, Xdot, vector


def _warn_empty(Omega):
    empty = [j for j in range(Omega.shape[1]) if not np.any(Omega[:, j])]
    if empty:
        warnings.warn(f"all coefficients thresholded to zero for target column(s) {empty}",
                      EmptyModelWarning, stacklevel=3)


def _stlsq_std(A, b, lam, iters):
    w, rank = _lstsq(A, b)
    active = np.ones(A.shape[1], dtype=bool)
    for _ in range(iters):
        new = np.abs(w) >= lam
        if lam == 0:
            new = w != 0
        w = np.zeros_like(w)
        if np.any(new):
            coef, rank = _lstsq(A[:, new], b)
            if rank < new.sum():
                warnings.warn(f"rank-deficient active set ({rank} < {new.sum()})",
                              RankDeficiencyWarning, stacklevel=4)
            w[new] = coef
        if np.array_equal(new, active):
            break
        active = new
    w[~active] = 0.0
    return w


def stlsq(Theta, Xdot, lam, iters=25, normalize=True, intercept="auto"):
    """Sequentially thresholded least squares.

    Parameters
    ----------
    Theta : ndarray, shape (m, p)
    Xdot : ndarray, shape (m, n) or (m,)
    lam : float
        Threshold. Relative (standardized) when ``normalize`` is on,
        absolute otherwise.
    iters : int
        Maximum number of threshold/refit rounds.
    normalize : bool
    intercept : "auto", int or None
        Column treated as unpenalized intercept. ``"auto"`` picks the
        constant column.

    Returns
    -------
    ndarray, shape (p, n) or (p,)
        On its support each column equals the unregularized least-squares
        solution.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    Theta, Xdot, vector = _check_shapes(Theta, Xdot)
    icol = find_intercept(Theta) if intercept == "auto" else intercept
    Omega = np.zeros((Theta.shape[1], Xdot.shape[1]))
    for j in range(Xdot.shape[1]):
        prob = _Standardized(Theta, Xdot[:, j], normalize, icol)
        w = _stlsq_std(prob.A, prob.b, lam, iters)
        Omega[:, j] = _finish(Theta, Xdot[:, j], prob, w, lam)
    _warn_empty(Omega)
    return Omega[:, 0] if vector else Omega


def _prox(w, lam, kappa, kind):
    if kind == "hard":
        # l0 prox with weight lam**2 / (2 kappa): threshold is |w| >= lam
        return np.where(np.abs(w) >= lam, w, 0.0)
    if kind == "soft":
        thr = lam * kappa
        return np.sign(w) * np.maximum(np.abs(w) - thr, 0.0)
    raise ValueError(f"unknown prox {kind!r}")


def _sr3_objective(A, b, w, v, lam, kappa, kind):
    r = b - A @ w
    pen = np.count_nonzero(v) * lam ** 2 / (2.0 * kappa) if kind == "hard" else lam * np.abs(v).sum()
    return 0.5 * r @ r + 0.5 * np.sum((w - v) ** 2) / kappa + pen


def _sr3_std(A, b, lam, kappa, iters, tol, kind):
    p = A.shape[1]
    H = A.T @ A + np.eye(p) / kappa
    cho = sl.cho_factor(H)
    Atb = A.T @ b
    w, _ = _lstsq(A, b)
    v = _prox(w, lam, kappa, kind)
    best_v, best_obj = v, np.inf
    converged = False
    for _ in range(iters):
        w = sl.cho_solve(cho, Atb + v / kappa)
        v_new = _prox(w, lam, kappa, kind)
        delta = np.max(np.abs(v_new - v)) if p else 0.0
        v = v_new
        obj = _sr3_objective(A, b, w, v, lam, kappa, kind)
        if obj < best_obj:
            best_v, best_obj = v, obj
        if delta < tol:
            converged = True
            break
    return (v if converged else best_v), converged


def sr3(Theta, Xdot, lam, kappa=1.0, iters=20000, prox="hard", tol=1e-10,
        normalize=True, intercept="auto"):
    """Sparse relaxed regularized regression.

    Alternates a ridge-coupled least-squares update of the dense weights
    ``W`` with a proximal update of the sparse variable ``V``. ``V`` is
    initialised from the thresholded least-squares solution and the
    recovered support is always debiased.

    Parameters
    ----------
    Theta, Xdot, lam, normalize, intercept
        As in :func:`stlsq`. For the hard prox ``lam`` is the threshold
        on standardized coefficients; for the soft prox it is the l1
        weight.
    kappa : float
        Relaxation parameter, ``> 0``.
    iters : int
    prox : {"hard", "soft"}
    tol : float
        Stop when successive ``V`` iterates differ by less than ``tol``.

    Returns
    -------
    ndarray, shape (p, n) or (p,)

    Warns
    -----
    ConvergenceWarning
        If ``iters`` is reached; the lowest-objective iterate is returned.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    Theta, Xdot, vector = _check_shapes(Theta, Xdot)
    icol = find_intercept(Theta) if intercept == "auto" else intercept
    Omega = np.zeros((Theta.shape[1], Xdot.shape[1]))
    for j in range(Xdot.shape[1]):
        prob = _Standardized(Theta, Xdot[:, j], normalize, icol)
        v, ok = _sr3_std(prob.A, prob.b, lam, kappa, iters, tol, prox)
        if not ok:
            warnings.warn(f"SR3 did not converge in {iters} iterations (target {j})",
                          ConvergenceWarning, stacklevel=2)
        Omega[:, j] = _finish(Theta, Xdot[:, j], prob, v, lam)
    _warn_empty(Omega)
    return Omega[:, 0] if vector else Omega

