"""Run configuration: a single JSON document with optional sections.

Every field has a default, so an empty document (or no file at all)
reproduces the reference setup. Unknown sections and keys are rejected
with their dotted location.
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .control import PdGains, TrajectoryCase, make_case
from .dynamics import QuadParams
from .errors import ConfigError
from .evaluate import DEFAULT_GRID
from .sindy.library import LibrarySpec
from .sindy.model import OptimizerConfig

SEED_ENV = "SINDYQUAD_SEED"

_QUAD_KEYS = {f.name for f in fields(QuadParams)}
_GAIN_KEYS = {f.name for f in fields(PdGains)}
_CASE_KEYS = {f.name for f in fields(TrajectoryCase)}
_LIB_KEYS = {f.name for f in fields(LibrarySpec)}
_OPT_KEYS = {f.name for f in fields(OptimizerConfig)} | {"grid", "jobs"}
_SIM_KEYS = {"dt", "steps", "seed", "noise_sigma", "clamp_thrust"}
_DIFF_KEYS = {"align"}
_PATH_KEYS = {"output_dir"}

SECTIONS = {
    "quad": _QUAD_KEYS,
    "gains": _GAIN_KEYS,
    "trajectory": _CASE_KEYS,
    "simulation": _SIM_KEYS,
    "library": _LIB_KEYS,
    "optimizer": _OPT_KEYS,
    "differentiation": _DIFF_KEYS,
    "paths": _PATH_KEYS,
}


def _grid_from(spec, where):
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "step"}
        if extra:
            raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as exc:
            raise ConfigError(f"{where}: missing {exc.args[0]!r}") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"{where}: need step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(v) for v in np.round(start + step * np.arange(n), 10))
    if isinstance(spec, (list, tuple)) and spec:
        vals = tuple(float(v) for v in spec)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"{where}: grid must be strictly increasing")
        return vals
    if isinstance(spec, (int, float)):
        return (float(spec),)
    raise ConfigError(f"{where}: grid must be a list, a number or {{start, stop, step}}")


@dataclass
class RunConfig:
    """Parsed configuration sections as plain dictionaries."""

    quad: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    trajectory: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    library: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    differentiation: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    source: str = "<defaults>"

    @classmethod
    def from_dict(cls, doc, source="<dict>"):
        if not isinstance(doc, dict):
            raise ConfigError(f"{source}: top level must be a JSON object")
        for sec, body in doc.items():
            if sec not in SECTIONS:
                raise ConfigError(f"{source}: unknown section {sec!r} (expected one of {sorted(SECTIONS)})")
            if not isinstance(body, dict):
                raise ConfigError(f"{source}: section {sec!r} must be an object")
            for key in body:
                if key not in SECTIONS[sec]:
                    raise ConfigError(f"{source}: unknown key {sec}.{key}")
        cfg = cls(**{k: dict(v) for k, v in doc.items()}, source=source)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None):
        if path is None:
            return cls.from_dict({}, "<defaults>")
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
        return cls.from_dict(doc, str(path))

    def _build(self, section, ctor, **extra):
        try:
            return ctor(**{**getattr(self, section), **extra})
        except ConfigError as exc:
            raise ConfigError(f"{self.source}: {section}: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: {section}: {exc}") from exc

    def validate(self):
        self.quad_params()
        self.pd_gains()
        self.library_spec()
        self.optimizer_config()
        self.case()
        self.dt
        self.noise_sigma
        self.grid
        if self.align not in ("forward", "midpoint"):
            raise ConfigError(f"{self.source}: differentiation.align must be 'forward' or 'midpoint'")

    def quad_params(self):
        return self._build("quad", QuadParams)

    def pd_gains(self):
        return self._build("gains", PdGains)

    def library_spec(self):
        return self._build("library", LibrarySpec)

    def optimizer_config(self, **override):
        body = {k: v for k, v in {**self.optimizer, **override}.items() if k not in ("grid", "jobs")}
        try:
            return OptimizerConfig(**body)
        except (ConfigError, TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: optimizer: {exc}") from exc

    def case(self, tag=None, **override):
        body = {**self.trajectory, **override}
        tag = tag or body.pop("tag", "C")
        body.pop("tag", None)
        try:
            return make_case(tag, **body)
        except (ConfigError, TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: trajectory: {exc}") from exc

    @property
    def dt(self):
        dt = self.simulation.get("dt", 0.05)
        if not isinstance(dt, (int, float)) or not dt > 0:
            raise ConfigError(f"{self.source}: simulation.dt must be a positive number")
        return float(dt)

    @property
    def steps(self):
        s = self.simulation.get("steps")
        if s is not None and (not isinstance(s, int) or s < 2):
            raise ConfigError(f"{self.source}: simulation.steps must be an integer >= 2")
        return s

    @property
    def seed(self):
        env = os.environ.get(SEED_ENV)
        if env is not None and env != "":
            try:
                return int(env)
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from exc
        return int(self.simulation.get("seed", 0))

    @property
    def noise_sigma(self):
        s = self.simulation.get("noise_sigma", 0.0)
        arr = np.asarray(s, dtype=float)
        if arr.ndim > 1 or (arr.ndim == 1 and arr.size != 6) or np.any(arr < 0):
            raise ConfigError(f"{self.source}: simulation.noise_sigma must be >= 0, scalar or 6 values")
        return arr

    @property
    def clamp_thrust(self):
        return bool(self.simulation.get("clamp_thrust", False))

    @property
    def grid(self):
        if "grid" not in self.optimizer:
            return DEFAULT_GRID
        return _grid_from(self.optimizer["grid"], f"{self.source}: optimizer.grid")

    @property
    def jobs(self):
        return int(self.optimizer.get("jobs", 1))

    @property
    def align(self):
        return self.differentiation.get("align", "midpoint")

    @property
    def output_dir(self):
        return self.paths.get("output_dir", ".")

    def to_dict(self):
        d = asdict(self)
        d.pop("source")
        return d
