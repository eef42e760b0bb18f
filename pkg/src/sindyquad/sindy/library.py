"""Candidate function library.

A library column is a product of factors, each factor being the identity,
``sin`` or ``cos`` of one variable of ``z = [states, controls]``. Keeping
the structure (not just the evaluated matrix) lets a fitted model be
evaluated cheaply at single points during closed-loop simulation.
"""

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from ..dynamics import CONTROL_NAMES, STATE_NAMES
from ..errors import ConfigError, NumericalError


@dataclass(frozen=True)
class LibrarySpec:
    """Declarative description of the candidate terms.

    Parameters
    ----------
    degree : int
        Maximum total degree of monomials over states and controls.
        Degree 1 gives the linear terms only.
    fourier_columns : tuple of int
        State indices that receive ``sin`` and ``cos`` columns.
    include_control_times_fourier : bool
        Add ``u_i * sin(.)`` and ``u_i * cos(.)`` for every control.
    include_bias : bool
        Add the constant column ``"1"``.
    """

    degree: int = 2
    fourier_columns: Tuple[int, ...] = (2,)
    include_control_times_fourier: bool = True
    include_bias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "fourier_columns", tuple(int(i) for i in self.fourier_columns))
        if int(self.degree) != self.degree or self.degree < 0:
            raise ConfigError(f"library degree must be a non-negative integer, got {self.degree!r}")
        if len(set(self.fourier_columns)) != len(self.fourier_columns):
            raise ConfigError("fourier_columns contains duplicates")

    def validate(self, n_states):
        for i in self.fourier_columns:
            if not 0 <= i < n_states:
                raise ConfigError(f"fourier column {i} out of range for {n_states} states")


class Term(NamedTuple):
    """One library column: a product of ``(fn, index)`` factors."""

    label: str
    factors: Tuple[Tuple[str, int], ...]


def _monomial_label(idx, names):
    counts = Counter(idx)
    parts = []
    for i in sorted(counts):
        parts.append(names[i] if counts[i] == 1 else f"{names[i]}^{counts[i]}")
    return "*".join(parts)


def library_terms(spec, state_names=STATE_NAMES, control_names=CONTROL_NAMES):
    """Enumerate terms in the documented order.

    Order: bias; states; controls; monomials of degree 2..``degree`` in
    lexicographic index order; ``sin``/``cos`` per Fourier state; each
    control times each trigonometric term.
    """
    names = tuple(state_names) + tuple(control_names)
    n = len(state_names)
    spec.validate(n)
    terms = []
    if spec.include_bias:
        terms.append(Term("1", ()))
    if spec.degree >= 1:
        for i, nm in enumerate(names):
            terms.append(Term(nm, (("id", i),)))
    for d in range(2, spec.degree + 1):
        for idx in itertools.combinations_with_replacement(range(len(names)), d):
            terms.append(Term(_monomial_label(idx, names), tuple(("id", i) for i in idx)))
    trig = []
    for i in spec.fourier_columns:
        for fn in ("sin", "cos"):
            trig.append(Term(f"{fn}({names[i]})", ((fn, i),)))
    terms.extend(trig)
    if spec.include_control_times_fourier:
        for c in range(len(control_names)):
            for tt in trig:
                terms.append(Term(f"{control_names[c]}*{tt.label}", (("id", n + c),) + tt.factors))
    if not terms:
        raise ConfigError("library spec produces no columns")
    labels = [t.label for t in terms]
    if len(set(labels)) != len(labels):
        raise ConfigError("library labels are not unique (check state/control names)")
    return terms


_FN = {"id": lambda v: v, "sin": np.sin, "cos": np.cos}


def evaluate_terms(terms, X, U):
    """Evaluate ``terms`` on rows of ``X`` and ``U``; returns ``(m, p)``."""
    Z = np.hstack([np.atleast_2d(X), np.atleast_2d(U)])
    out = np.ones((Z.shape[0], len(terms)))
    cache = {}
    for j, term in enumerate(terms):
        for fn, i in term.factors:
            key = (fn, i)
            if key not in cache:
                cache[key] = _FN[fn](Z[:, i])
            out[:, j] *= cache[key]
    return out


@dataclass
class CandidateLibrary:
    """Evaluated library ``Theta`` with its labels."""

    Theta: np.ndarray
    labels: Sequence[str]
    spec: LibrarySpec
    terms: Sequence[Term] = field(repr=False, default=())

    @property
    def p(self):
        return self.Theta.shape[1]

    def index(self, label):
        return list(self.labels).index(label)


def build_library(ss, spec=None):
    """Evaluate the candidate library on a snapshot set.

    Rows use ``ss.regressor_states`` (midpoints when available) paired
    with ``ss.U``.
    """
    spec = spec or LibrarySpec()
    if ss.m < 1:
        raise ConfigError("library needs at least one snapshot")
    terms = library_terms(spec, ss.state_names, ss.control_names)
    Theta = evaluate_terms(terms, ss.regressor_states, ss.U)
    if not np.all(np.isfinite(Theta)):
        raise NumericalError("library produced non-finite columns")
    return CandidateLibrary(Theta=Theta, labels=[t.label for t in terms], spec=spec, terms=terms)
