"""Experiment configuration: defaults, JSON round-trip, validation.

Defaults reproduce the benchmark protocol: 100 observations at 0.1 time
units, unit maximum glider speed, unit observation noise variance, and
a 1e6-variance prior on all six flow parameters.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace

from .control import SolverSettings
from .errors import ConfigError
from .flow import FLOW_CASE_TAGS

STRATEGIES = ("optimal", "none", "random")
ENV_PREFIX = "GLIDER_ASSIM_"


@dataclass
class ExperimentConfig:
    flow: str = "center"
    gliders: int = 5
    strategy: str = "optimal"
    n_obs: int = 100
    dt: float = 0.1
    u_max: float = 1.0
    noise_var: float = 1.0
    prior_var: float = 1e6
    seed: int = 0
    interior_points: int = 50
    pseudo_dt: float = 0.0
    residual_tol: float = 1e-6
    max_relax_steps: int = 200_000
    reg_threshold: float = 0.0
    max_sweeps: int = 12
    path_init: str = "uniform"
    fd_gradient: bool = False
    placement: str = "circle"       # "circle" or comma-separated "x:y,x:y,..."
    placement_radius: float = 1.0
    placement_jitter: float = 0.0
    out: str = "out"
    debug_solver: bool = False

    def solver_settings(self):
        return SolverSettings(
            interior_points=self.interior_points,
            pseudo_dt=self.pseudo_dt,
            residual_tol=self.residual_tol,
            max_relax_steps=self.max_relax_steps,
            reg_threshold=self.reg_threshold,
            max_sweeps=self.max_sweeps,
            path_init=self.path_init,
            fd_gradient=self.fd_gradient,
        )

    def validate(self):
        if self.flow not in FLOW_CASE_TAGS:
            raise ConfigError("flow", f"got {self.flow!r}, expected one of {FLOW_CASE_TAGS}")
        if self.gliders < 1:
            raise ConfigError("gliders", f"cohort size must be >= 1, got {self.gliders}")
        if self.strategy not in STRATEGIES:
            raise ConfigError("strategy", f"got {self.strategy!r}, expected one of {STRATEGIES}")
        if self.n_obs < 1:
            raise ConfigError("n_obs", "need at least one observation")
        if self.dt <= 0:
            raise ConfigError("dt", "observation interval must be positive")
        if self.u_max < 0:
            raise ConfigError("u_max", "maximum speed must be nonnegative")
        if self.strategy == "optimal" and self.u_max == 0:
            raise ConfigError("u_max", "optimal steering needs a positive maximum speed")
        if self.noise_var <= 0:
            raise ConfigError("noise_var", "observation noise variance must be positive")
        if self.prior_var <= 0:
            raise ConfigError("prior_var", "prior variance must be positive")
        if self.interior_points < 2:
            raise ConfigError("interior_points", "need at least 2 interior grid points")
        if self.residual_tol <= 0:
            raise ConfigError("residual_tol", "residual tolerance must be positive")
        if self.max_relax_steps < 1:
            raise ConfigError("max_relax_steps", "need at least one relaxation step")
        if self.reg_threshold < 0:
            raise ConfigError("reg_threshold", "regularization threshold must be >= 0")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps", "need at least one sweep")
        if self.path_init not in ("uniform", "line"):
            raise ConfigError("path_init", f"got {self.path_init!r}, expected uniform or line")
        if self.placement != "circle":
            points = parse_placement_points(self.placement)
            if len(points) != self.gliders:
                raise ConfigError("placement", f"{len(points)} start points for "
                                  f"{self.gliders} gliders")
        if self.placement_radius <= 0:
            raise ConfigError("placement_radius", "placement radius must be positive")
        if self.placement_jitter < 0:
            raise ConfigError("placement_jitter", "placement jitter must be >= 0")
        return self

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        defaults = cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        coerced = {}
        for key, value in data.items():
            target = type(getattr(defaults, key))
            if target is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            elif not isinstance(value, target):
                raise ConfigError(key, f"expected {target.__name__}, got {type(value).__name__}")
            coerced[key] = value
        return cls(**coerced)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError("<json>", "configuration must be a flat JSON object")
        return cls.from_dict(data)


def parse_placement_points(spec):
    """Parse "x:y,x:y,..." into a list of (x, y) start positions."""
    points = []
    for i, chunk in enumerate(spec.split(",")):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError("placement", f"entry {i}: expected x:y, got {chunk!r}")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError("placement", f"entry {i}: {chunk!r} is not numeric") from exc
    return points


def apply_env_overrides(config, environ=None):
    """Override fields from GLIDER_ASSIM_<FIELD> environment variables."""
    environ = os.environ if environ is None else environ
    updates = {}
    for f in fields(config):
        raw = environ.get(ENV_PREFIX + f.name.upper())
        if raw is None:
            continue
        updates[f.name] = _coerce(f.name, raw, type(getattr(config, f.name)))
    return replace(config, **updates) if updates else config


def _coerce(name, raw, target):
    try:
        if target is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return target(raw)
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r} as {target.__name__}") from exc
