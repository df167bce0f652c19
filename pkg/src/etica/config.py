"""Run configuration (JSON, versioned)."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .metrics import LatencyConfig

CONFIG_SCHEMA = "etica.config/1"
ENGINES = ("etica", "single")
INITIAL_SPLITS = ("equal", "zero")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dram_capacity_blocks: int = 0
    ssd_capacity_blocks: int = 0
    block_size: int = 4096
    associativity: int = 512
    resize_interval_requests: int = 10_000
    promo_interval_requests: int = 1_000
    queue_fraction: float = 0.05
    promotion_eviction: bool = True
    partitioning: bool = True
    popularity_decay: float = 1.0
    initial_split: str = "equal"
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    trace_format: str = "auto"
    vm_map: dict = field(default_factory=dict)
    departures: dict = field(default_factory=dict)
    check_invariants: bool = False
    engine: str = "etica"
    single_policy: str = "wb"
    label: str = ""

    def __post_init__(self):
        self.validate()

    @property
    def mode(self) -> str:
        if self.engine == "single":
            return f"single-{self.single_policy}"
        return "full" if self.promotion_eviction else "npe"

    @property
    def total_capacity_blocks(self) -> int:
        return self.dram_capacity_blocks + self.ssd_capacity_blocks

    def validate(self):
        bs = self.block_size
        if not isinstance(bs, int) or bs <= 0 or bs & (bs - 1):
            raise ConfigError(f"block_size must be a power of two, got {bs!r}")
        for name in ("dram_capacity_blocks", "ssd_capacity_blocks", "associativity"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {v!r}")
        for name in ("resize_interval_requests", "promo_interval_requests"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        if not 0 < self.queue_fraction <= 1:
            raise ConfigError("queue_fraction must be in (0, 1]")
        if not 0 < self.popularity_decay <= 1:
            raise ConfigError("popularity_decay must be in (0, 1]")
        if self.initial_split not in INITIAL_SPLITS:
            raise ConfigError(f"initial_split must be one of {INITIAL_SPLITS}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.single_policy.lower() not in ("wb", "wt", "ro", "wo", "wbwo"):
            raise ConfigError(f"unknown single_policy {self.single_policy!r}")
        if self.trace_format not in ("auto", "msr", "simple"):
            raise ConfigError(f"unknown trace_format {self.trace_format!r}")
        try:
            self.departures = {int(k): int(v) for k, v in self.departures.items()}
            self.vm_map = {str(k): int(v) for k, v in self.vm_map.items()}
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad departures/vm_map: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["latency"] = self.latency.to_dict()
        d["departures"] = {str(k): v for k, v in sorted(self.departures.items())}
        d["vm_map"] = dict(sorted(self.vm_map.items()))
        return {"schema": CONFIG_SCHEMA, **d}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        schema = d.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "latency" in d:
            try:
                d["latency"] = LatencyConfig(**d["latency"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad latency config: {exc}") from None
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        if isinstance(d.get("latency"), LatencyConfig):
            d["latency"] = d["latency"].to_dict()
        return RunConfig.from_dict(d)


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return RunConfig.from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
