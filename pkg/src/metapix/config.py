"""Run configuration: one JSON document covering every stage of the pipeline.

A config file may specify any subset of the fields; missing ones are filled
from the committed defaults so that an empty document is a valid config.
Unknown keys are rejected loudly since they are almost always typos.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .arraysim import ArrayConfig
from .inverse import GAConfig
from .netcalc import PIN_SWITCH, RlcBranch, SwitchModel
from .oracle import OracleConstants
from .pattern import GeometryMeta


@dataclass(frozen=True)
class TrainSettings:
    hidden: tuple[int, ...] = (256, 256, 256)
    batch_size: int = 64
    lr0: float = 1e-3
    max_epochs: int = 150
    patience: int = 10
    min_delta: float = 1e-4
    lr_drops: int = 2
    seed: int = 0

    def __post_init__(self):
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch size and epoch count must be positive")
        if self.lr0 <= 0 or self.patience < 1 or self.lr_drops < 0:
            raise ValueError("bad training settings")


@dataclass(frozen=True)
class RunConfig:
    constants: OracleConstants = OracleConstants()
    geometry: GeometryMeta = GeometryMeta()
    switch: SwitchModel = PIN_SWITCH
    train: TrainSettings = TrainSettings()
    ga: GAConfig = GAConfig()
    array: ArrayConfig = ArrayConfig()
    dataset_n: int = 11000
    dataset_seed: int = 1
    outdir: str = "out"

    def __post_init__(self):
        if self.dataset_n < 1:
            raise ValueError("dataset size must be positive")


def config_to_dict(cfg: RunConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["train"]["hidden"] = list(cfg.train.hidden)
    d["array"]["feed_xyz"] = list(cfg.array.feed_xyz)
    return d


def _rebuild(cls, defaults, data: dict, path: str):
    """Instantiate a dataclass from defaults overridden by a JSON dict."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {name: getattr(defaults, name) for name in fields}
    for key, value in data.items():
        if key not in fields:
            raise ValueError(f"unknown config key {path}.{key}")
        default = kwargs[key]
        if dataclasses.is_dataclass(default) and isinstance(value, dict):
            value = _rebuild(type(default), default, value, f"{path}.{key}")
        elif isinstance(default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ValueError("config document must be a JSON object")
    defaults = RunConfig()
    # the switch states carry an optional capacitance, which asdict turns
    # into plain dicts; rebuild them explicitly
    switch_data = dict(data.get("switch", {}))
    states = {}
    for name in ("state0", "state1"):
        if name in switch_data:
            branch = switch_data.pop(name)
            base = getattr(defaults.switch, name)
            states[name] = _rebuild(RlcBranch, base, branch, f"switch.{name}")
        else:
            states[name] = getattr(defaults.switch, name)
    for key in switch_data:
        raise ValueError(f"unknown config key switch.{key}")
    switch = SwitchModel(**states)

    top = {k: v for k, v in data.items() if k != "switch"}
    cfg = _rebuild(RunConfig, defaults, top, "config")
    return dataclasses.replace(cfg, switch=switch)


def load_config(path: str | Path | None) -> RunConfig:
    """Read a JSON config file; None gives the committed defaults."""
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {p} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def dump_default_config() -> str:
    return json.dumps(config_to_dict(RunConfig()), indent=2) + "\n"
