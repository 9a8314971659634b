"""Scenario configuration: JSON schema, validation, and the resolved form.

A run is configured by one JSON file.  Shared settings live at the top level
and individual scenarios may override them:

    {
      "name": "my-run",              // optional
      "seed": 20260809,              // required, unsigned 64-bit
      "n_samples": 100000,           // required, positive
      "lambdas": [0.1, 0.5, 0.9],    // epi runs; strictly inside (0, 1)
      "estimators": ["resubstitution", "change_of_variables"],
      "t_values": [1.0, 0.1, 0.01],  // smooth runs; positive, descending
      "scenarios": [
        {"name": "pair-1", "x": MIXTURE, "y": MIXTURE, ...overrides}
      ]
    }

A mixture literal is {"dim": n, "components": [{"weight": w, "mean": [...],
"cov": [[...], ...]}]}; scalars are accepted for 1-D means and covariances.
A file may also inline a single scenario by putting "x" (and optionally "y")
at the top level instead of "scenarios".

Everything is validated before any computation starts; violations raise
:class:`ConfigError` carrying the JSON path of the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .densities import GaussianMixture, MixtureSpecError
from .entropy import ENTROPY_METHODS
from .epi import DEFAULT_LAMBDAS

__all__ = ["ConfigError", "ScenarioConfig", "RunConfig", "load_config", "parse_config"]

_U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Configuration rejected; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully resolved scenario (per-scenario overrides already applied)."""

    name: str
    x: GaussianMixture
    y: GaussianMixture | None
    lambdas: tuple[float, ...]
    n_samples: int
    seed: int
    estimators: tuple[str, ...]
    t_values: tuple[float, ...] | None


@dataclass(frozen=True)
class RunConfig:
    name: str
    seed: int
    scenarios: tuple[ScenarioConfig, ...]
    raw: dict


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(path, f"missing required field {key!r}")
    return mapping[key]


def _as_int(value, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(path, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(path, f"must be <= {hi}, got {value}")
    return value


def _as_mixture(value, path: str) -> GaussianMixture:
    try:
        mixture = GaussianMixture.from_dict(value)
    except MixtureSpecError as exc:
        raise ConfigError(path, str(exc)) from exc
    return mixture


def _as_lambdas(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "must be a nonempty list of numbers in (0, 1)")
    out = []
    for i, lam in enumerate(value):
        if not isinstance(lam, (int, float)) or isinstance(lam, bool):
            raise ConfigError(f"{path}[{i}]", f"expected a number, got {lam!r}")
        lam = float(lam)
        if not 0.0 < lam < 1.0:
            raise ConfigError(
                f"{path}[{i}]",
                f"interpolation weights must lie strictly in (0, 1), got {lam}",
            )
        out.append(lam)
    return tuple(out)


def _as_t_values(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "must be a nonempty list of positive numbers")
    out = []
    for i, t in enumerate(value):
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not float(t) > 0.0:
            raise ConfigError(f"{path}[{i}]", f"expected a positive number, got {t!r}")
        out.append(float(t))
    if any(a <= b for a, b in zip(out, out[1:])):
        raise ConfigError(path, f"must be sorted in strictly descending order, got {out}")
    return tuple(out)


def _as_estimators(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, f"must be a nonempty list drawn from {list(ENTROPY_METHODS)}")
    seen = []
    for i, tag in enumerate(value):
        if tag not in ENTROPY_METHODS:
            raise ConfigError(
                f"{path}[{i}]",
                f"unknown estimator {tag!r}; choose from {list(ENTROPY_METHODS)}",
            )
        if tag not in seen:
            seen.append(tag)
    return tuple(seen)


def _default_estimators(x: GaussianMixture) -> tuple[str, ...]:
    tags = ["resubstitution", "change_of_variables", "divergence_route"]
    if x.n_components == 1:
        tags.insert(0, "closed_form")
    if x.dim == 1:
        tags.append("quadrature_oracle")
    return tuple(tags)


def parse_config(data: dict, command: str, seed_override: int | None = None) -> RunConfig:
    """Validate a parsed JSON document for the given subcommand."""
    if not isinstance(data, dict):
        raise ConfigError("$", f"the configuration root must be an object, got {type(data).__name__}")
    known = {"name", "seed", "n_samples", "lambdas", "estimators", "t_values", "scenarios", "x", "y"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown configuration field")

    name = data.get("name", "run")
    if not isinstance(name, str):
        raise ConfigError("name", f"expected a string, got {name!r}")
    if seed_override is not None:
        seed = _as_int(seed_override, "--seed", 0, _U64_MAX)
    else:
        seed = _as_int(_require(data, "seed", "$"), "seed", 0, _U64_MAX)

    if "scenarios" in data and "x" in data:
        raise ConfigError("$", "provide either 'scenarios' or a top-level 'x', not both")
    if "scenarios" in data:
        raw_scenarios = data["scenarios"]
        if not isinstance(raw_scenarios, list) or not raw_scenarios:
            raise ConfigError("scenarios", "must be a nonempty list")
        scoped = [(f"scenarios[{i}]", entry) for i, entry in enumerate(raw_scenarios)]
    elif "x" in data:
        inline = {k: data[k] for k in ("name", "x", "y") if k in data}
        scoped = [("$", inline)]
    else:
        raise ConfigError("$", "missing 'scenarios' (or a top-level 'x' mixture)")

    min_samples = {"epi": 10_000, "entropy": 100, "smooth": 100, "map-check": 100, "sample": 1}
    scenarios = []
    for path, entry in scoped:
        if not isinstance(entry, dict):
            raise ConfigError(path, f"expected an object, got {type(entry).__name__}")
        for key in entry:
            if key not in {"name", "x", "y", "lambdas", "n_samples", "estimators", "t_values"}:
                raise ConfigError(f"{path}.{key}", "unknown scenario field")
        scen_name = entry.get("name", f"scenario-{len(scenarios)}")
        if not isinstance(scen_name, str):
            raise ConfigError(f"{path}.name", f"expected a string, got {scen_name!r}")
        x = _as_mixture(_require(entry, "x", path), f"{path}.x")
        y = None
        if entry.get("y") is not None:
            y = _as_mixture(entry["y"], f"{path}.y")
            if y.dim != x.dim:
                raise ConfigError(f"{path}.y", f"y has dim {y.dim} but x has dim {x.dim}")

        def _setting(key, where=entry, fallback=None):
            if key in where:
                return where[key], f"{path}.{key}"
            if key in data:
                return data[key], key
            return fallback, key

        n_value, n_path = _setting("n_samples")
        if n_value is None:
            raise ConfigError(n_path, "missing required field 'n_samples'")
        n_samples = _as_int(n_value, n_path, min_samples.get(command, 1))

        lam_value, lam_path = _setting("lambdas")
        lambdas = _as_lambdas(lam_value, lam_path) if lam_value is not None else DEFAULT_LAMBDAS
        est_value, est_path = _setting("estimators")
        estimators = (
            _as_estimators(est_value, est_path) if est_value is not None else _default_estimators(x)
        )
        t_value, t_path = _setting("t_values")
        t_values = _as_t_values(t_value, t_path) if t_value is not None else None

        # command-specific completeness, checked before any computation
        if command == "epi":
            if y is None:
                raise ConfigError(f"{path}.y", "epi experiments need both x and y")
            if not lambdas:
                raise ConfigError(lam_path, "epi experiments need a nonempty 'lambdas' list")
        if command == "smooth" and t_values is None:
            raise ConfigError(t_path, "smooth runs need a 't_values' list")
        if command == "entropy":
            if "closed_form" in estimators and x.n_components != 1:
                raise ConfigError(
                    est_path, "closed_form applies only to single-component targets"
                )
            if "quadrature_oracle" in estimators and x.dim != 1:
                raise ConfigError(est_path, "quadrature_oracle applies only to 1-D targets")

        scenarios.append(
            ScenarioConfig(
                name=scen_name,
                x=x,
                y=y,
                lambdas=lambdas,
                n_samples=n_samples,
                seed=seed,
                estimators=estimators,
                t_values=t_values,
            )
        )

    return RunConfig(name=name, seed=seed, scenarios=tuple(scenarios), raw=data)


def load_config(path: str, command: str, seed_override: int | None = None) -> RunConfig:
    """Read, parse, and validate a JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(path, f"cannot read configuration file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            path, f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_config(data, command, seed_override)
