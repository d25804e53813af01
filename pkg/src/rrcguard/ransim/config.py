"""Scenario configuration and its YAML file format.

Schema (version 1)::

    schema_version: 1
    name: attack-1mue
    seed: 7
    duration_ms: 4000
    cell_id: 1
    closed_loop: true          # run detector + mitigator
    loop_delay_ms: 10          # indication -> control delay in sim time
    t300_ms: 1000
    msg_delays_ms: {msg2: 2, msg3: 2, msg4: 2}
    gnb: {position: [0, 0], max_ue: 16, context_hold_ms: 2000}
    radio: {pathloss_exponent: 2.0, ref_rssi_dbm_at_1m: -30.0,
            rssi_noise_sigma_db: 1.5, ta_meters_per_sample: 4.0,
            ta_offset_samples: 29}
    params: {eps_rssi: 4, ...}  # any AlgorithmParams field; others default
    ues:
      - id: mue0
        behavior: malicious
        position_track: [[0, 12.0, 0.0]]
        msg3_rate_hz: 45.7
        start_ms: 250
        stop_ms: 3250
        tx_power_offset_db: 10.6
      - id: vue0
        behavior: benign
        position_track: [[0, 8.0, 0.0]]
        attempt_times_ms: [900]
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from ..core import AlgorithmParams, ParamsError, default_params
from .model import ConfigError, GnbModel, UeProfile
from .radio import RadioModel

SCHEMA_VERSION = 1


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    duration_ms: int = 1000
    cell_id: int = 1
    gnb: GnbModel = field(default_factory=GnbModel)
    radio: RadioModel = field(default_factory=RadioModel)
    ues: List[UeProfile] = field(default_factory=list)
    params: AlgorithmParams = field(default_factory=default_params)
    closed_loop: bool = True
    loop_delay_ms: int = 10
    t300_ms: int = 1000
    msg_delays_ms: Dict[str, int] = field(
        default_factory=lambda: {"msg2": 2, "msg3": 2, "msg4": 2})

    def validate(self) -> "ScenarioConfig":
        if self.duration_ms <= 0:
            raise ConfigError("must be > 0", "duration_ms")
        if self.loop_delay_ms < 0:
            raise ConfigError("must be >= 0", "loop_delay_ms")
        if self.t300_ms <= 0:
            raise ConfigError("must be > 0", "t300_ms")
        for key in ("msg2", "msg3", "msg4"):
            if self.msg_delays_ms.get(key, -1) < 0:
                raise ConfigError("must be a non-negative integer", f"msg_delays_ms.{key}")
        if not 0 <= self.cell_id < 2 ** 32:
            raise ConfigError("must fit in u32", "cell_id")
        ids = [ue.id for ue in self.ues]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate UE id", "ues")
        try:
            self.params.validate()
        except ParamsError as exc:
            raise ConfigError(str(exc), "params") from exc
        for ue in self.ues:
            ue.validate()
        return self

    @property
    def attack_present(self) -> bool:
        return any(ue.malicious for ue in self.ues)

    @property
    def attack_start_ms(self) -> Optional[int]:
        starts = [ue.start_ms for ue in self.ues if ue.malicious]
        return min(starts) if starts else None

    @property
    def attack_stop_ms(self) -> Optional[int]:
        stops = [ue.stop_ms if ue.stop_ms is not None else self.duration_ms
                 for ue in self.ues if ue.malicious]
        return max(stops) if stops else None

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_params(self, **changes) -> "ScenarioConfig":
        return self.replace(params=self.params.replace(**changes))

    def to_dict(self) -> Dict[str, Any]:
        def ue_dict(ue: UeProfile) -> Dict[str, Any]:
            d = dataclasses.asdict(ue)
            d["behavior"] = ue.behavior.value
            d["position_track"] = [list(w) for w in ue.position_track]
            d["msg5_delay_ms"] = list(ue.msg5_delay_ms)
            return d

        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "cell_id": self.cell_id,
            "closed_loop": self.closed_loop,
            "loop_delay_ms": self.loop_delay_ms,
            "t300_ms": self.t300_ms,
            "msg_delays_ms": dict(self.msg_delays_ms),
            "gnb": {"position": list(self.gnb.position), "max_ue": self.gnb.max_ue,
                    "context_hold_ms": self.gnb.context_hold_ms},
            "radio": dataclasses.asdict(self.radio),
            "params": self.params.to_dict(),
            "ues": [ue_dict(ue) for ue in self.ues],
        }


_TOP_LEVEL = {"schema_version", "name", "seed", "duration_ms", "cell_id", "closed_loop",
              "loop_delay_ms", "t300_ms", "msg_delays_ms", "gnb", "radio", "params", "ues"}


def _build(cls, data: Any, where: str, **extra):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping, got {type(data).__name__}", where)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", where)
    try:
        return cls(**data, **extra)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc


def config_from_dict(data: Any) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    unknown = sorted(set(data) - _TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", "<root>")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", "schema_version")

    kwargs: Dict[str, Any] = {}
    for key in ("name", "seed", "duration_ms", "cell_id", "closed_loop", "loop_delay_ms",
                "t300_ms", "msg_delays_ms"):
        if key in data:
            kwargs[key] = data[key]
    for key, expected in (("seed", int), ("duration_ms", int), ("cell_id", int),
                          ("loop_delay_ms", int), ("t300_ms", int), ("closed_loop", bool)):
        if key in kwargs and (not isinstance(kwargs[key], expected)
                              or (expected is int and isinstance(kwargs[key], bool))):
            raise ConfigError(f"expected {expected.__name__}, got {kwargs[key]!r}", key)
    if "msg_delays_ms" in kwargs:
        delays = kwargs["msg_delays_ms"]
        if not isinstance(delays, dict):
            raise ConfigError("expected a mapping", "msg_delays_ms")
        kwargs["msg_delays_ms"] = {"msg2": 2, "msg3": 2, "msg4": 2, **delays}
    if "gnb" in data:
        kwargs["gnb"] = _build(GnbModel, data["gnb"], "gnb")
    if "radio" in data:
        kwargs["radio"] = _build(RadioModel, data["radio"], "radio")
    if "params" in data:
        params = data["params"]
        if not isinstance(params, dict):
            raise ConfigError("expected a mapping", "params")
        try:
            kwargs["params"] = AlgorithmParams.from_dict(params)
        except (ParamsError, TypeError) as exc:
            raise ConfigError(str(exc), "params") from exc
    ues = data.get("ues", [])
    if not isinstance(ues, list):
        raise ConfigError("expected a list", "ues")
    kwargs["ues"] = [_build(UeProfile, ue, f"ues[{i}]") for i, ue in enumerate(ues)]
    return ScenarioConfig(**kwargs).validate()


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML parse error: {getattr(exc, 'problem', exc)}", line=line) from exc
    return config_from_dict(data)


def dump_config(config: ScenarioConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))
