"""Model quality metrics, lambda sweeps and ground-truth comparison."""

import csv
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import DataError, SindyQuadError, SweepFailure
from .integrate import rk4_step
from .sindy.model import OptimizerConfig, derivative_name, fit, simulate_model, truth_model
from .sindy.differentiation import finite_difference

DEFAULT_GRID = tuple(float(v) for v in np.round(np.arange(21) * 0.05, 10))


def _pair(truth, pred):
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape:
        raise DataError(f"shape mismatch: {truth.shape} vs {pred.shape}")
    if truth.ndim == 1:
        truth, pred = truth[:, None], pred[:, None]
    if truth.shape[0] < 1:
        raise DataError("need at least one row")
    return truth, pred


def rmse(truth, pred):
    """Per-column root mean squared error."""
    truth, pred = _pair(truth, pred)
    return np.sqrt(np.mean((truth - pred) ** 2, axis=0))


def abs_error_trace(truth, pred):
    """Elementwise ``|truth - pred|``."""
    truth, pred = _pair(truth, pred)
    return np.abs(truth - pred)


def replay_open_loop(model, X0, U, dt):
    """Integrate the model from ``X0`` under a recorded control sequence."""
    X = np.zeros((len(U), len(X0)))
    X[0] = X0
    for k in range(len(U) - 1):
        X[k + 1] = rk4_step(model.rhs, X[k], U[k], dt)
    return X


@dataclass
class SweepRecord:
    lam: float
    rmse: Optional[np.ndarray]
    score: float
    support_size: int
    support: List[set]
    support_match: bool
    warnings: List[str] = field(default_factory=list)
    error: Optional[str] = None


@dataclass
class SweepResult:
    """Outcome of a lambda sweep, one record per grid point."""

    grid: np.ndarray
    records: List[SweepRecord]
    selected: float
    state_names: Sequence[str]

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("sweep grid must be strictly increasing")

    @property
    def selected_record(self):
        return self.records[int(np.nonzero(self.grid == self.selected)[0][0])]

    def plateau(self):
        """Widest contiguous run of correct-support grid points.

        Returns
        -------
        tuple of (lo, hi) or None
        """
        best, start = None, None
        for k, rec in enumerate(self.records + [None]):
            if rec is not None and rec.support_match:
                start = k if start is None else start
                continue
            if start is not None:
                lo, hi = self.grid[start], self.grid[k - 1]
                if best is None or hi - lo > best[1] - best[0]:
                    best = (float(lo), float(hi))
                start = None
        return best

    def plateau_width(self):
        pl = self.plateau()
        return 0.0 if pl is None else pl[1] - pl[0]

    def support_monotone(self):
        """Whether support size is non-increasing along the grid."""
        sizes = [r.support_size for r in self.records if r.error is None]
        return all(a >= b for a, b in zip(sizes, sizes[1:]))

    def csv_header(self):
        return ["lambda"] + [f"rmse_{s.replace('_', '')}" for s in self.state_names] + [
            "support_size", "support_match"]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.csv_header())
            for rec in self.records:
                vals = rec.rmse if rec.rmse is not None else [np.inf] * len(self.state_names)
                w.writerow([f"{rec.lam:.10g}"] + [f"{v:.17g}" for v in vals]
                           + [rec.support_size, str(rec.support_match).lower()])

    def summary(self):
        pl = self.plateau()
        return {
            "selected_lambda": self.selected,
            "correct_support_plateau": list(pl) if pl else None,
            "plateau_width": self.plateau_width(),
            "support_monotone": self.support_monotone(),
            "points": [{"lambda": r.lam, "score": r.score if np.isfinite(r.score) else None,
                        "support_size": r.support_size,
                        "support_match": r.support_match, "warnings": r.warnings, "error": r.error}
                       for r in self.records],
        }


def _sweep_point(lam, train, spec, optimizer, test, test_case, gains, p, truth_support, scale):
    caught = []
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        try:
            model = fit(train, spec, optimizer.with_lam(lam))
            if test_case is not None:
                pred = simulate_model(model, test_case, gains, p, test.dt, test.m).X
            else:
                pred = replay_open_loop(model, test.X[0], test.U, test.dt)
            err = rmse(test.X, pred)
            if not np.all(np.isfinite(err)):
                raise SindyQuadError("non-finite RMSE")
            score = float(np.sum(err / scale))
            error = None
        except SindyQuadError as exc:
            err, score, error = None, np.inf, str(exc).splitlines()[0]
            model = None
        caught = sorted({f"{w.category.__name__}: {str(w.message)[:120]}" for w in log})
    if model is None:
        return SweepRecord(lam, None, score, 0, [], False, caught, error)
    sup = model.support()
    return SweepRecord(lam, err, score, model.support_size, sup, sup == truth_support, caught, None)


def lambda_sweep(train, test, spec=None, optimizer=None, grid=DEFAULT_GRID, test_case=None,
                 gains=None, p=None, truth=None, align="midpoint", jobs=1):
    """Fit at every grid value and score each model on held-out data.

    Parameters
    ----------
    train : SnapshotSet
        Training data. Derivatives are estimated with ``align`` when
        ``train.Xdot`` is empty.
    test : SnapshotSet
        Held-out trajectory from the true plant.
    test_case : TrajectoryCase, optional
        Scenario that produced ``test``. When given, each model is flown
        in closed loop on it; otherwise the recorded controls are
        replayed open loop.
    grid : sequence of float
        Strictly increasing lambda values.
    truth : SparseModel, optional
        Reference for the support-match flag (planar model by default).
    jobs : int
        Worker processes for independent grid points.

    Returns
    -------
    SweepResult
        ``selected`` minimizes the sum of per-state RMSE normalized by the
        test-set standard deviation; exact ties go to the larger lambda.

    Raises
    ------
    SweepFailure
        If no grid point produced a finite score.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    optimizer = optimizer or OptimizerConfig()
    if train.Xdot is None:
        train = finite_difference(train, align=align)
    truth = truth or truth_model(p, spec)
    std = test.X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    args = (train, spec, optimizer, test, test_case, gains, p, truth.support(), scale)
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as ex:
            futs = [ex.submit(_sweep_point, float(lam), *args) for lam in grid]
            records = [f.result() for f in futs]
    else:
        records = [_sweep_point(float(lam), *args) for lam in grid]
    scores = np.array([r.score for r in records])
    if not np.any(np.isfinite(scores)):
        raise SweepFailure([(r.lam, r.error or "non-finite score") for r in records])
    best = scores.min()
    selected = float(grid[np.nonzero(scores == best)[0][-1]])
    return SweepResult(grid=grid, records=records, selected=selected, state_names=train.state_names)


@dataclass
class StateComparison:
    state: str
    model_terms: dict
    truth_terms: dict
    missing: List[str]
    extra: List[str]
    deltas: dict

    @property
    def support_match(self):
        return not self.missing and not self.extra

    @property
    def max_rel_delta(self):
        rel = [abs(self.deltas[k]) / abs(v) for k, v in self.truth_terms.items() if k in self.model_terms]
        return max(rel) if rel else 0.0


@dataclass
class ComparisonReport:
    """Term-by-term comparison of a model against a reference model."""

    rows: List[StateComparison]

    @property
    def support_match(self):
        return all(r.support_match for r in self.rows)

    @property
    def max_rel_delta(self):
        return max(r.max_rel_delta for r in self.rows)

    def to_dict(self):
        return {
            "support_match": self.support_match,
            "max_relative_delta": self.max_rel_delta,
            "states": [{"state": r.state, "model": r.model_terms, "truth": r.truth_terms,
                        "missing": r.missing, "extra": r.extra, "deltas": r.deltas,
                        "support_match": r.support_match} for r in self.rows],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self):
        lines = [f"{'state':<10} {'term':<14} {'model':>12} {'truth':>12} {'delta':>12}"]
        lines.append("-" * len(lines[0]))
        for r in self.rows:
            for lab in sorted(set(r.model_terms) | set(r.truth_terms)):
                mv = r.model_terms.get(lab)
                tv = r.truth_terms.get(lab)
                fm = f"{mv:12.4f}" if mv is not None else f"{'-':>12}"
                ft = f"{tv:12.4f}" if tv is not None else f"{'-':>12}"
                lines.append(f"{r.state:<10} {lab:<14} {fm} {ft} {r.deltas[lab]:12.4g}")
        lines.append(f"support match: {str(self.support_match).lower()}; "
                     f"max relative coefficient delta: {self.max_rel_delta:.4%}")
        return "\n".join(lines) + "\n"


def compare_to_truth(model, truth=None):
    """Align two models by term label and report support and coefficient deltas."""
    truth = truth or truth_model(spec=model.spec)
    if tuple(model.state_names) != tuple(truth.state_names) or \
            tuple(model.control_names) != tuple(truth.control_names):
        raise DataError("models use different state or control names")
    rows = []
    for j, name in enumerate(model.state_names):
        mt = {model.labels[i]: float(model.Omega[i, j]) for i in np.nonzero(model.Omega[:, j])[0]}
        tt = {truth.labels[i]: float(truth.Omega[i, j]) for i in np.nonzero(truth.Omega[:, j])[0]}
        deltas = {k: mt.get(k, 0.0) - tt.get(k, 0.0) for k in set(mt) | set(tt)}
        rows.append(StateComparison(derivative_name(name), mt, tt, sorted(set(tt) - set(mt)),
                                    sorted(set(mt) - set(tt)), deltas))
    return ComparisonReport(rows)
