"""Fitted sparse models: construction, evaluation, simulation and JSON I/O."""

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..dynamics import CONTROL_NAMES, STATE_NAMES, QuadParams
from ..errors import ConfigError, DataError, DenseModelWarning, RankDeficiencyWarning
from ..integrate import rollout
from .differentiation import finite_difference
from .library import LibrarySpec, build_library, library_terms
from .optimizers import sr3, stlsq

OPTIMIZERS = ("sr3", "stlsq")

_SCALAR_FN = {"id": lambda v: v, "sin": math.sin, "cos": math.cos}


@dataclass(frozen=True)
class OptimizerConfig:
    """Solver selection and knobs.

    ``iters`` defaults to 25 rounds for STLSQ and 20000 for SR3.
    """

    name: str = "sr3"
    lam: float = 0.45
    iters: Optional[int] = None
    kappa: float = 1.0
    prox: str = "hard"
    tol: float = 1e-10
    normalize: bool = True

    def __post_init__(self):
        if self.name not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.name!r}")
        if self.prox not in ("hard", "soft"):
            raise ConfigError(f"prox must be 'hard' or 'soft', got {self.prox!r}")
        if not self.lam >= 0:
            raise ConfigError("lam must be non-negative")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")

    def with_lam(self, lam):
        return OptimizerConfig(**{**asdict(self), "lam": float(lam)})

    def solve(self, Theta, Xdot):
        if self.name == "stlsq":
            return stlsq(Theta, Xdot, self.lam, iters=self.iters or 25, normalize=self.normalize)
        return sr3(Theta, Xdot, self.lam, kappa=self.kappa, iters=self.iters or 20000,
                   prox=self.prox, tol=self.tol, normalize=self.normalize)


def derivative_name(name):
    return name[:-4] + "_ddot" if name.endswith("_dot") else name + "_dot"


def _fmt_term(coef, label, first):
    mag = f"{abs(coef):.3f}"
    body = mag if label == "1" else f"{mag} {label}"
    if first:
        return body if coef >= 0 else "-" + body
    return ("+ " if coef >= 0 else "- ") + body


@dataclass
class SparseModel:
    """Coefficient matrix ``Omega`` (p x n) over a candidate library.

    The model right-hand side is ``xdot = Theta(x, u) @ Omega``.
    """

    Omega: np.ndarray
    labels: Sequence[str]
    spec: LibrarySpec = field(default_factory=LibrarySpec)
    state_names: Sequence[str] = STATE_NAMES
    control_names: Sequence[str] = CONTROL_NAMES
    lam: Optional[float] = None
    optimizer: str = "none"
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.Omega = np.asarray(self.Omega, dtype=float)
        self.labels = list(self.labels)
        self.state_names = tuple(self.state_names)
        self.control_names = tuple(self.control_names)
        terms = library_terms(self.spec, self.state_names, self.control_names)
        if [t.label for t in terms] != self.labels:
            raise DataError("model labels do not match the library spec")
        if self.Omega.shape != (len(self.labels), len(self.state_names)):
            raise DataError(f"Omega has shape {self.Omega.shape}, expected "
                            f"({len(self.labels)}, {len(self.state_names)})")
        self.terms = terms
        self._compile()

    def _compile(self):
        rows = np.nonzero(np.any(self.Omega != 0, axis=1))[0]
        self._rows = rows
        self._factors = [tuple((_SCALAR_FN[fn], i) for fn, i in self.terms[r].factors) for r in rows]
        self._active = self.Omega[rows]

    @property
    def n(self):
        return len(self.state_names)

    def rhs(self, x, u):
        """Fast single-point evaluation of ``Theta(x, u) @ Omega``."""
        z = np.concatenate([np.asarray(x, dtype=float), np.asarray(u, dtype=float)])
        vals = np.empty(len(self._rows))
        for k, fac in enumerate(self._factors):
            v = 1.0
            for fn, i in fac:
                v *= fn(z[i])
            vals[k] = v
        return vals @ self._active

    def support(self, j=None):
        """Label set of the active terms of state ``j`` (or all, per state)."""
        if j is None:
            return [self.support(k) for k in range(self.n)]
        return {self.labels[i] for i in np.nonzero(self.Omega[:, j])[0]}

    @property
    def support_size(self):
        return int(np.count_nonzero(self.Omega))

    def coefficient(self, label, state):
        j = state if isinstance(state, int) else self.state_names.index(state)
        return float(self.Omega[self.labels.index(label), j])

    def equations(self):
        """One rendered equation per state, coefficients to 3 decimals."""
        out = []
        for j, name in enumerate(self.state_names):
            parts = [_fmt_term(self.Omega[i, j], self.labels[i], k == 0)
                     for k, i in enumerate(np.nonzero(self.Omega[:, j])[0])]
            out.append(f"{derivative_name(name)} = " + (" ".join(parts) if parts else "0"))
        return out

    def render(self):
        return "\n".join(self.equations()) + "\n"

    def to_dict(self):
        return {
            "state_names": list(self.state_names),
            "control_names": list(self.control_names),
            "labels": list(self.labels),
            "lambda": self.lam,
            "optimizer": self.optimizer,
            "library": {
                "degree": self.spec.degree,
                "fourier_columns": list(self.spec.fourier_columns),
                "include_control_times_fourier": self.spec.include_control_times_fourier,
                "include_bias": self.spec.include_bias,
            },
            "coefficients": self.Omega.tolist(),
            "equations": self.equations(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            spec = LibrarySpec(**d["library"])
            return cls(Omega=np.array(d["coefficients"], dtype=float), labels=d["labels"], spec=spec,
                       state_names=d["state_names"], control_names=d["control_names"],
                       lam=d.get("lambda"), optimizer=d.get("optimizer", "none"))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid model document: {exc}") from exc

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d)


def _conditioning(lib, cond_limit, rel_excitation):
    """Excitation and conditioning diagnostics of a library matrix."""
    Theta = lib.Theta
    keep = [j for j, lab in enumerate(lib.labels) if lab != "1"]
    A = Theta[:, keep] - Theta[:, keep].mean(axis=0)
    raw = np.linalg.norm(A, axis=0)
    ref = np.linalg.norm(Theta[:, keep], axis=0)
    flat = raw <= rel_excitation * np.maximum(ref, 1.0)
    unexcited = [lib.labels[keep[k]] for k in np.nonzero(flat)[0]]
    live = [k for k in range(len(keep)) if not flat[k]]
    cond = 1.0
    weak = []
    if live:
        B = A[:, live] / raw[live]
        _, s, Vt = np.linalg.svd(B, full_matrices=False)
        cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
        small = np.nonzero(s < s[0] / cond_limit)[0]
        for r in small:
            top = np.argsort(-np.abs(Vt[r]))[:3]
            weak.append([lib.labels[keep[live[k]]] for k in top])
    return {"condition_number": cond, "unexcited": unexcited, "weak_directions": weak}


def fit(ss, spec=None, optimizer=None, cond_limit=1e11, rel_excitation=1e-8):
    """Build the library and run the sparse regression.

    Parameters
    ----------
    ss : SnapshotSet
        Must carry ``Xdot``.
    spec : LibrarySpec, optional
    optimizer : OptimizerConfig, optional
    cond_limit : float
        Condition number of the standardized library above which a
        :class:`RankDeficiencyWarning` is raised.
    rel_excitation : float
        Columns whose centred norm is below this fraction of their raw
        norm are reported as unexcited.

    Returns
    -------
    SparseModel
    """
    if ss.Xdot is None:
        raise DataError("snapshot set has no derivatives; run finite_difference first")
    spec = spec or LibrarySpec()
    optimizer = optimizer or OptimizerConfig()
    lib = build_library(ss, spec)
    diag = _conditioning(lib, cond_limit, rel_excitation)
    if diag["unexcited"] or diag["weak_directions"]:
        parts = []
        if diag["unexcited"]:
            parts.append("unexcited terms: " + ", ".join(diag["unexcited"]))
        if diag["weak_directions"]:
            parts.append("near-collinear groups: " + "; ".join(",".join(g) for g in diag["weak_directions"]))
        warnings.warn(f"library poorly conditioned (cond={diag['condition_number']:.3g}); " + " | ".join(parts),
                      RankDeficiencyWarning, stacklevel=2)
    Omega = optimizer.solve(lib.Theta, ss.Xdot)
    frac = np.count_nonzero(Omega) / Omega.size
    if frac > 0.5:
        warnings.warn(f"model is not sparse: {frac:.0%} of coefficients are nonzero", DenseModelWarning,
                      stacklevel=2)
    return SparseModel(Omega=Omega, labels=lib.labels, spec=spec, state_names=ss.state_names,
                       control_names=ss.control_names, lam=optimizer.lam, optimizer=optimizer.name,
                       diagnostics=diag)


def discover(ss, spec=None, optimizer=None, align="midpoint", **kw):
    """Finite differences followed by :func:`fit`."""
    return fit(finite_difference(ss, align=align), spec, optimizer, **kw)


def predict_derivative(model, x, u):
    """Evaluate the model right-hand side at one point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.size != len(model.state_names) or u.size != len(model.control_names):
        raise DataError(f"expected {len(model.state_names)} states and {len(model.control_names)} controls, "
                        f"got {x.size} and {u.size}")
    return model.rhs(x, u)


def simulate_model(model, case, gains=None, p=None, dt=0.05, steps=None, **kw):
    """Closed-loop rollout with the model as the plant."""
    return rollout(case, gains, p, dt, steps, plant=model.rhs, **kw)


def truth_model(p=None, spec=None):
    """Planar dynamics written as a sparse model over the library."""
    p = p or QuadParams()
    spec = spec or LibrarySpec()
    labels = [t.label for t in library_terms(spec)]
    coeffs = {
        ("y_dot", 0): 1.0,
        ("z_dot", 1): 1.0,
        ("phi_dot", 2): 1.0,
        ("u1*sin(phi)", 3): -1.0 / p.mass,
        ("1", 4): -p.gravity,
        ("u1*cos(phi)", 4): 1.0 / p.mass,
        ("u2", 5): 1.0 / p.jx,
    }
    Omega = np.zeros((len(labels), 6))
    for (lab, j), v in coeffs.items():
        if lab not in labels:
            raise ConfigError(f"library spec lacks the ground-truth term {lab!r}")
        Omega[labels.index(lab), j] = v
    return SparseModel(Omega=Omega, labels=labels, spec=spec, optimizer="truth")
