"""INI-style run configuration with one section per command.

Every key has a typed default; unknown sections and keys are errors.
Seeds that are not given explicitly derive from the section's ``seed``.

Example::

    [evaluate]
    methods = Prob, MM, HDy:least_squares
    kind = grid
    step = 0.1
    test_size = 500
    seed = 7
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any, Callable, Optional

from .classifier import CrossValConfig, Stacking
from .core import make_proportion
from .errors import ConfigError
from .evaluation import ScenarioKind, ScenarioSpec
from .quantifiers import QuantifierConfig
from .solvers import Loss, SolverConfig
from .synth import Profile, SynthSpec
from .transforms import DEFAULT_THRESHOLDS, TRANSFORM_METHODS, Method, TransformSpec

LOSS_ALIASES = {
    "least_squares": Loss.LEAST_SQUARES,
    "ls": Loss.LEAST_SQUARES,
    "l2": Loss.LEAST_SQUARES,
    "least_absolute_deviation": Loss.LEAST_ABSOLUTE_DEVIATION,
    "lad": Loss.LEAST_ABSOLUTE_DEVIATION,
    "l1": Loss.LEAST_ABSOLUTE_DEVIATION,
    "hellinger": Loss.HELLINGER,
    "hd": Loss.HELLINGER,
}


def parse_loss(text: str) -> Loss:
    try:
        return LOSS_ALIASES[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown loss {text!r}; choose from {sorted(LOSS_ALIASES)}") from None


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _optional(conv: Callable) -> Callable:
    def parse(text):
        return None if text.strip().lower() in ("", "none") else conv(text)

    return parse


def _methods(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _theta(text: str):
    return tuple(_floats(row) for row in text.split("|") if row.strip())


_SEED = {"seed": (int, 0)}
_CLASSIFIER = {
    "regularization": (float, 1.0),
    "folds": (int, 10),
    "repeats": (int, 1),
    "cv_seed": (_optional(int), None),
    "stacking": (str, "average"),
}
_TRANSFORM = {
    "bins": (int, 10),
    "thresholds": (_floats, DEFAULT_THRESHOLDS),
    "subset_size": (int, 5),
    "subset_count": (int, 50),
    "transform_seed": (_optional(int), None),
}
_SOLVER = {
    "tolerance": (float, 1e-8),
    "max_iterations": (int, 10000),
    "hellinger_floor": (float, 1e-12),
    "backend": (_optional(str), None),
}

SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "quantify": {
        **_SEED, **_CLASSIFIER, **_TRANSFORM, **_SOLVER,
        "method": (str, "Prob"),
        "loss": (_optional(parse_loss), None),
    },
    "evaluate": {
        **_SEED, **_CLASSIFIER, **_TRANSFORM, **_SOLVER,
        "methods": (_methods, tuple(m.value for m in TRANSFORM_METHODS)),
        "kind": (str, "grid"),
        "step": (float, 0.1),
        "sample_count": (int, 20),
        "walk_concentration": (float, 50.0),
        "scenario_seed": (_optional(int), None),
        "start": (_optional(_floats), None),
        "test_size": (int, 500),
        "jobs": (int, 1),
    },
    "synth": {
        **_SEED,
        "classes": (int, 3),
        "features": (int, 12),
        "train_size": (int, 300),
        "train_proportions": (_optional(_floats), None),
        "pool_per_class": (int, 500),
        "profile": (str, "random"),
        "signal": (float, 0.5),
        "on_probability": (float, 0.5),
        "theta": (_optional(_theta), None),
    },
    "probs-export": {**_SEED, **_CLASSIFIER},
}


def load(path: Optional[str], command: str, overrides: Optional[dict] = None) -> dict:
    """Resolve the settings for ``command`` from an optional INI file.

    Returns a plain dict holding every key of the command's schema.
    """
    schema = SCHEMA[command]
    raw: dict[str, str] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        try:
            with Path(path).open(encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]; known {sorted(SCHEMA)}")
            for key in parser[section]:
                if key not in SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
        if parser.has_section(command):
            raw = dict(parser[command])
    resolved = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                resolved[key] = conv(raw[key])
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"[{command}] {key} = {raw[key]!r}: {exc}") from exc
        else:
            resolved[key] = default
    for key, value in (overrides or {}).items():
        if value is not None:
            resolved[key] = value
    seed = resolved["seed"]
    for key in ("cv_seed", "transform_seed", "scenario_seed"):
        if key in resolved and resolved[key] is None:
            resolved[key] = seed
    return resolved


def provenance(resolved: dict) -> dict:
    """JSON-safe view of a resolved config (enums to values, tuples to lists)."""
    out = {}
    for k, v in resolved.items():
        if isinstance(v, tuple):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        elif hasattr(v, "value"):
            v = v.value
        out[k] = v
    return out


def _stacking(r: dict) -> Stacking:
    try:
        return Stacking(r["stacking"])
    except ValueError:
        raise ConfigError(f"unknown stacking {r['stacking']!r}") from None


def cv_config(r: dict) -> CrossValConfig:
    return CrossValConfig(r["folds"], r["repeats"], r["cv_seed"], _stacking(r))


def solver_config(r: dict) -> SolverConfig:
    return SolverConfig(
        tolerance=r["tolerance"],
        max_iterations=r["max_iterations"],
        hellinger_floor=r["hellinger_floor"],
        backend=r["backend"],
    )


def method_config(r: dict, entry: str, loss: Optional[Loss] = None) -> QuantifierConfig:
    """Build one method configuration; ``entry`` is ``Method`` or ``Method:loss``."""
    name, _, loss_text = entry.partition(":")
    method = Method.parse(name.strip())
    if loss_text:
        loss = parse_loss(loss_text)
    transform = None
    if method is not Method.NAIVE:
        transform = TransformSpec(
            method, r["bins"], r["thresholds"], r["subset_size"], r["subset_count"], r["transform_seed"]
        )
    label = method.value if loss is None else f"{method.value}:{loss.value}"
    return QuantifierConfig(
        method=method,
        loss_override=loss,
        transform=transform,
        solver=solver_config(r),
        cv=cv_config(r),
        regularization=r["regularization"],
        label=label,
    )


def scenario_spec(r: dict) -> ScenarioSpec:
    try:
        kind = ScenarioKind(r["kind"])
    except ValueError:
        raise ConfigError(f"unknown scenario kind {r['kind']!r}") from None
    start = None if r["start"] is None else make_proportion(r["start"])
    return ScenarioSpec(kind, r["step"], r["sample_count"], r["walk_concentration"], r["scenario_seed"], start)


def synth_spec(r: dict) -> SynthSpec:
    try:
        profile = Profile(r["profile"])
    except ValueError:
        raise ConfigError(f"unknown profile {r['profile']!r}") from None
    props = None if r["train_proportions"] is None else make_proportion(r["train_proportions"])
    return SynthSpec(
        n_classes=r["classes"],
        n_features=r["features"],
        train_size=r["train_size"],
        train_proportions=props,
        pool_per_class=r["pool_per_class"],
        profile=profile,
        signal=r["signal"],
        on_probability=r["on_probability"],
        theta=r["theta"],
        seed=r["seed"],
    )
