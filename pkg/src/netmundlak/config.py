"""Scenario configuration files.

Flat INI-style sections with key=value pairs; list values use a JSON
subset. Unknown sections or keys are an error with the offender named, so
typos fail fast instead of silently running defaults.

Example::

    [scenario]
    heterogeneity = low
    dependence = weak
    groups = 20
    ng_min = 100
    ng_max = 200
    replications = 50
    seed = 7

    [gnn]
    hidden = 16
    dropout = 0.1
    lr = 0.005
    epochs = 400

    [estimate]
    methods = ["gme-gnn", "gnn-only", "mundlak"]
    exposure = any-neighbor
    contrast = 1,0
    eta = 0.01
    n_redraws = 500
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .exposure import MAPPING_NAMES
from .gcn import GcnConfig
from .simlab import DEFAULT_METHODS, Scenario

_SCENARIO_KEYS = {
    "heterogeneity", "dependence", "groups", "ng_min", "ng_max", "replications", "seed",
}
_GNN_KEYS = {"hidden", "dropout", "lr", "epochs", "seed"}
_ESTIMATE_KEYS = {
    "methods", "exposure", "contrast", "eta", "normalize", "n_redraws",
    "neighbor_threshold",
}


@dataclass(frozen=True)
class SimulationConfig:
    scenario: Scenario
    gnn: GcnConfig
    methods: tuple = DEFAULT_METHODS
    exposure: str = "any-neighbor"
    contrast: tuple = (1, 0)
    eta: float = 0.01
    n_redraws: int = 500
    neighbor_threshold: int | None = None
    extras: dict = field(default_factory=dict)


def parse_contrast(text: str) -> tuple:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"contrast must be 't,t\\'', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"contrast levels must be integers, got {text!r}") from None


def _typed(section, key, raw, kind):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(
            f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}"
        ) from None


def load_simulation_config(path, seed_override: int | None = None) -> SimulationConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None

    known = {"scenario": _SCENARIO_KEYS, "gnn": _GNN_KEYS, "estimate": _ESTIMATE_KEYS}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        for key in parser[section]:
            if key not in known[section]:
                raise ConfigError(f"unknown config key [{section}] {key} in {path}")

    sc = parser["scenario"] if parser.has_section("scenario") else {}
    seed = seed_override if seed_override is not None else _typed("scenario", "seed", sc.get("seed", 0), int)
    try:
        scenario = Scenario(
            heterogeneity=sc.get("heterogeneity", "low"),
            dependence=sc.get("dependence", "weak"),
            m_groups=_typed("scenario", "groups", sc.get("groups", 20), int),
            ng_min=_typed("scenario", "ng_min", sc.get("ng_min", 100), int),
            ng_max=_typed("scenario", "ng_max", sc.get("ng_max", 200), int),
            replications=_typed("scenario", "replications", sc.get("replications", 50), int),
            base_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    gn = parser["gnn"] if parser.has_section("gnn") else {}
    try:
        gnn = GcnConfig(
            hidden=_typed("gnn", "hidden", gn.get("hidden", 16), int),
            dropout=_typed("gnn", "dropout", gn.get("dropout", 0.1), float),
            learning_rate=_typed("gnn", "lr", gn.get("lr", 0.001), float),
            epochs=_typed("gnn", "epochs", gn.get("epochs", 300), int),
            seed=_typed("gnn", "seed", gn.get("seed", seed), int),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    es = parser["estimate"] if parser.has_section("estimate") else {}
    if "methods" in es:
        try:
            methods = tuple(json.loads(es["methods"]))
        except json.JSONDecodeError:
            raise ConfigError(
                f'[estimate] methods must be a JSON list, got {es["methods"]!r}'
            ) from None
    else:
        methods = DEFAULT_METHODS
    exposure = es.get("exposure", "any-neighbor")
    if exposure not in MAPPING_NAMES:
        raise ConfigError(f"[estimate] exposure must be one of {MAPPING_NAMES}")
    contrast = parse_contrast(es.get("contrast", "1,0"))
    threshold = (
        _typed("estimate", "neighbor_threshold", es["neighbor_threshold"], int)
        if "neighbor_threshold" in es
        else None
    )
    return SimulationConfig(
        scenario=scenario,
        gnn=gnn,
        methods=methods,
        exposure=exposure,
        contrast=contrast,
        eta=_typed("estimate", "eta", es.get("eta", 0.01), float),
        n_redraws=_typed("estimate", "n_redraws", es.get("n_redraws", 500), int),
        neighbor_threshold=threshold,
    )
