"""Plain-text run configuration: ``section.key = value`` lines with ``#`` comments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .conformal import KINDS, ConformalMap
from .dynamics import PRESETS, Params
from .errors import ConfigError, DomainError

SCENARIOS = PRESETS


def _float(v: str) -> float:
    return float(v)


def _int(v: str) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


def _complex(v: str) -> complex:
    return complex(v.replace(" ", "").replace("i", "j"))


def _floats(v: str) -> tuple:
    return tuple(float(s) for s in v.replace(";", ",").split(",") if s.strip())


def _ints(v: str) -> tuple:
    return tuple(_int(s) for s in v.replace(";", ",").split(",") if s.strip())


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


# key -> (parser, default)
SCHEMA: dict[str, tuple[Any, Any]] = {
    "scenario": (str, "equilibrium"),
    "seed": (_int, 0),
    "map.kind": (str, "identity"),
    "map.a": (_complex, 0j),
    "map.c": (_float, 0.0),
    "map.rotation": (_float, 0.0),
    "grid.Nr": (_int, 64),
    "grid.Ntheta": (_int, 128),
    "dynamics.mu": (_float, 1.0),
    "dynamics.beta": (_float, 1.5),
    "dynamics.gamma": (_float, 1.5),
    "dynamics.cfl": (_float, 0.5),
    "dynamics.t_end": (_float, 0.1),
    "dynamics.max_steps": (_int, 10**7),
    "initial.amplitude": (_float, 0.2),
    "initial.velocity": (_float, 0.1),
    "initial.rho0": (_float, 1.0),
    "output.every_steps": (_int, 100),
    "output.fields": (_bool, False),
    "probe.p": (_float, 2.0),
    "probe.p_list": (_floats, (4.0, 8.0, 16.0, 32.0)),
    "probe.n_samples": (_int, 50),
    "probe.nu": (_float, 0.1),
    "verify.Nr_list": (_ints, (32, 64, 128)),
    "verify.n_probes": (_int, 20),
    "verify.n_boundary": (_int, 64),
    "tolerance.inverse": (_float, 1e-10),
    "tolerance.pushforward": (_float, 1e-8),
    "tolerance.orthogonality": (_float, 1e-8),
    "tolerance.normal_derivative": (_float, 1e-8),
    "tolerance.flux_total": (_float, 1e-6),
    "tolerance.harmonic_order": (_float, 1.8),
    "tolerance.constant_field": (_float, 1e-3),
    "tolerance.min_order": (_float, 1.0),
    "tolerance.decomposition": (_float, 1e-6),
    "tolerance.mass": (_float, 1e-12),
    "tolerance.equilibrium": (_float, 1e-12),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})
    explicit: set = field(default_factory=set)

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, **kw) -> "RunConfig":
        v = dict(self.values)
        for k, val in kw.items():
            v[k.replace("__", ".")] = val
        return validate(RunConfig(v, set(self.explicit) | set(kw)))

    @property
    def map(self) -> ConformalMap:
        return ConformalMap(kind=self["map.kind"], a=self["map.a"], c=self["map.c"],
                            rotation=self["map.rotation"])

    def grid(self):
        from .fields import DiscGrid

        return DiscGrid(self["grid.Nr"], self["grid.Ntheta"], self.map)

    def params(self, forcing=None) -> Params:
        return Params(mu=self["dynamics.mu"], beta=self["dynamics.beta"], gamma=self["dynamics.gamma"],
                      cfl=self["dynamics.cfl"], t_end=self["dynamics.t_end"], forcing=forcing)

    def to_text(self) -> str:
        """Effective configuration, one ``key = value`` line per entry."""
        lines = []
        for k in SCHEMA:
            v = self.values[k]
            if isinstance(v, tuple):
                s = ", ".join(repr(x) for x in v)
            elif isinstance(v, complex):
                s = repr(v).strip("()")
            elif isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, float):
                s = repr(v)
            else:
                s = str(v)
            lines.append(f"{k} = {s}")
        return "\n".join(lines) + "\n"


def validate(cfg: RunConfig, lines: dict | None = None) -> RunConfig:
    """Range checks; errors name the offending line when known."""
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, lines.get(key))

    v = cfg.values
    if v["scenario"] not in SCENARIOS:
        fail("scenario", f"unknown scenario {v['scenario']!r}; expected one of {SCENARIOS}")
    if v["map.kind"] not in KINDS:
        fail("map.kind", f"unknown map kind {v['map.kind']!r}; expected one of {KINDS}")
    for key in ("grid.Nr", "grid.Ntheta"):
        if v[key] < 8:
            fail(key, f"{key} must be at least 8")
    if v["grid.Ntheta"] % 2:
        fail("grid.Ntheta", "grid.Ntheta must be even")
    try:
        cfg.map
    except DomainError as e:
        key = "map.c" if "c|" in str(e) else "map.a" if "|a|" in str(e) else "map.kind"
        fail(key, str(e))
    if not v["dynamics.mu"] > 0:
        fail("dynamics.mu", "mu must be positive")
    if not v["dynamics.beta"] > 1:
        fail("dynamics.beta", "beta must exceed 1")
    if not v["dynamics.gamma"] > 1:
        fail("dynamics.gamma", "gamma must exceed 1")
    if not 0 < v["dynamics.cfl"] < 1:
        fail("dynamics.cfl", "cfl must lie in (0, 1)")
    if not v["dynamics.t_end"] >= 0:
        fail("dynamics.t_end", "t_end must be non-negative")
    if v["output.every_steps"] < 1:
        fail("output.every_steps", "output.every_steps must be at least 1")
    if not 1 < v["probe.p"] < np.inf:
        fail("probe.p", "probe.p must lie in (1, inf)")
    if any(not p > 2 for p in v["probe.p_list"]):
        fail("probe.p_list", "probe.p_list entries must exceed 2")
    if not 0 < v["probe.nu"] < 0.5:
        fail("probe.nu", "probe.nu must lie in (0, 0.5)")
    if v["probe.n_samples"] < 1:
        fail("probe.n_samples", "probe.n_samples must be positive")
    if len(v["verify.Nr_list"]) < 2 or any(n < 8 for n in v["verify.Nr_list"]):
        fail("verify.Nr_list", "verify.Nr_list needs at least two grids with Nr >= 8")
    if v["verify.n_probes"] < 1 or v["verify.n_boundary"] < 4:
        fail("verify.n_probes", "verify.n_probes must be positive and verify.n_boundary at least 4")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; unknown keys and malformed lines raise :class:`ConfigError`."""
    cfg = RunConfig()
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed line {raw.strip()!r}; expected 'key = value'", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if not val:
            raise ConfigError(f"missing value for {key!r}", lineno)
        parser = SCHEMA[key][0]
        try:
            cfg.values[key] = parser(val)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {e}", lineno) from None
        cfg.explicit.add(key)
        where[key] = lineno
    return validate(cfg, where)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
