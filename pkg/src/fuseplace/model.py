"""Domain types shared by the optimizer: placement targets, function profiles,
pricing and network configuration, plus their JSON loaders."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    ConfigError,
    MissingCloudProfileError,
    NoTierFitsError,
    TierTooSmallError,
)

EDGE = "edge"
CLOUD = "cloud"

DEFAULT_MEMORY_TIERS_MB: tuple[int, ...] = tuple(range(128, 3008 + 1, 64))


@dataclass(frozen=True, order=True)
class PlacementTarget:
    """Where a (fused) function runs: the edge device or a cloud memory tier."""

    kind: str
    memory_mb: int | None = None

    def __post_init__(self) -> None:
        if self.kind == EDGE:
            if self.memory_mb is not None:
                raise ConfigError("edge target carries no memory size")
        elif self.kind == CLOUD:
            if not isinstance(self.memory_mb, int) or self.memory_mb <= 0:
                raise ConfigError(f"cloud target needs a positive memory size, got {self.memory_mb!r}")
        else:
            raise ConfigError(f"unknown target kind {self.kind!r}")

    @classmethod
    def edge(cls) -> PlacementTarget:
        return cls(EDGE)

    @classmethod
    def cloud(cls, memory_mb: int) -> PlacementTarget:
        return cls(CLOUD, int(memory_mb))

    @classmethod
    def parse(cls, label: str) -> PlacementTarget:
        """Inverse of :attr:`label` (``"edge"`` or ``"cloud_<mb>"``)."""
        if label == EDGE:
            return cls.edge()
        prefix, _, mb = label.partition("_")
        if prefix != CLOUD or not mb.isdigit():
            raise ConfigError(f"bad placement target label {label!r}")
        return cls.cloud(int(mb))

    @property
    def is_edge(self) -> bool:
        return self.kind == EDGE

    @property
    def is_cloud(self) -> bool:
        return self.kind == CLOUD

    @property
    def label(self) -> str:
        return EDGE if self.is_edge else f"{CLOUD}_{self.memory_mb}"

    def sort_key(self) -> tuple[int, int]:
        # edge first, then cloud tiers ascending
        return (0, 0) if self.is_edge else (1, self.memory_mb or 0)

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class FunctionProfile:
    """Measured behaviour of one workflow function.

    ``exec_ms`` maps each target the function was profiled on to its average
    execution time. ``sched_ms`` only applies on the cloud.
    """

    name: str
    exec_ms: Mapping[PlacementTarget, int]
    sched_ms: int = 0
    max_mem_mb: int = 128
    output_bytes: int = 0

    def exec_on(self, target: PlacementTarget) -> int | None:
        return self.exec_ms.get(target)

    @property
    def cloud_tiers(self) -> tuple[int, ...]:
        return tuple(sorted(t.memory_mb for t in self.exec_ms if t.is_cloud))

    @property
    def has_edge(self) -> bool:
        return PlacementTarget.edge() in self.exec_ms

    def to_dict(self) -> dict[str, Any]:
        ordered = sorted(self.exec_ms.items(), key=lambda kv: kv[0].sort_key())
        return {
            "exec_ms": {t.label: v for t, v in ordered},
            "sched_ms": self.sched_ms,
            "max_mem_mb": self.max_mem_mb,
            "output_bytes": self.output_bytes,
        }

    @classmethod
    def from_dict(cls, name: str, data: Mapping[str, Any]) -> FunctionProfile:
        try:
            raw_exec = data["exec_ms"]
            exec_ms = {PlacementTarget.parse(k): _as_int(v, f"{name}.exec_ms.{k}") for k, v in raw_exec.items()}
            return cls(
                name=name,
                exec_ms=exec_ms,
                sched_ms=_as_int(data.get("sched_ms", 0), f"{name}.sched_ms"),
                max_mem_mb=_as_int(data["max_mem_mb"], f"{name}.max_mem_mb"),
                output_bytes=_as_int(data.get("output_bytes", 0), f"{name}.output_bytes"),
            )
        except KeyError as exc:
            raise ConfigError(f"profile {name!r}: missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ValidatedProfile(FunctionProfile):
    """A profile that passed :func:`validate_profile`, annotated with its
    smallest admissible cloud tier."""

    min_tier_mb: int = 128


@dataclass(frozen=True)
class PricingConfig:
    gb_second_usd: float = 0.00001667
    transition_usd: float = 0.000025
    edge_device_usd_month: float = 0.20
    executions_per_month: int = 1_000_000
    billing_quantum_ms: int = 100
    memory_tiers_mb: tuple[int, ...] = DEFAULT_MEMORY_TIERS_MB

    def __post_init__(self) -> None:
        object.__setattr__(self, "memory_tiers_mb", tuple(int(t) for t in self.memory_tiers_mb))
        for fname in ("gb_second_usd", "transition_usd", "edge_device_usd_month"):
            value = getattr(self, fname)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"pricing.{fname} must be a finite nonnegative number, got {value!r}")
        if self.executions_per_month < 1:
            raise ConfigError("pricing.executions_per_month must be >= 1")
        if self.billing_quantum_ms < 0:
            raise ConfigError("pricing.billing_quantum_ms must be >= 0")
        tiers = self.memory_tiers_mb
        if not tiers or any(t <= 0 for t in tiers) or any(a >= b for a, b in zip(tiers, tiers[1:])):
            raise ConfigError("pricing.memory_tiers_mb must be a nonempty, strictly increasing list of positive sizes")

    @property
    def cloud_targets(self) -> list[PlacementTarget]:
        return [PlacementTarget.cloud(t) for t in self.memory_tiers_mb]

    def replace(self, **changes: Any) -> PricingConfig:
        fields = self.to_dict()
        fields.update(changes)
        return PricingConfig(**fields)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gb_second_usd": self.gb_second_usd,
            "transition_usd": self.transition_usd,
            "edge_device_usd_month": self.edge_device_usd_month,
            "executions_per_month": self.executions_per_month,
            "billing_quantum_ms": self.billing_quantum_ms,
            "memory_tiers_mb": list(self.memory_tiers_mb),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PricingConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"pricing: unknown field(s) {sorted(unknown)}")
        kwargs = dict(data)
        if "memory_tiers_mb" in kwargs:
            kwargs["memory_tiers_mb"] = tuple(kwargs["memory_tiers_mb"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"pricing: {exc}") from None


@dataclass(frozen=True)
class NetworkConfig:
    """Edge to cloud link: either a bandwidth or a fixed per-request upload time."""

    bandwidth_bytes_per_sec: float | None = None
    fixed_upload_ms: float | None = None

    def __post_init__(self) -> None:
        if (self.bandwidth_bytes_per_sec is None) == (self.fixed_upload_ms is None):
            raise ConfigError("network: configure exactly one of bandwidth_bytes_per_sec, fixed_upload_ms")
        value = self.bandwidth_bytes_per_sec if self.fixed_upload_ms is None else self.fixed_upload_ms
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"network: value must be a positive number, got {value!r}")

    def to_dict(self) -> dict[str, float]:
        if self.fixed_upload_ms is not None:
            return {"fixed_upload_ms": self.fixed_upload_ms}
        return {"bandwidth_bytes_per_sec": self.bandwidth_bytes_per_sec}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NetworkConfig:
        unknown = set(data) - {"bandwidth_bytes_per_sec", "fixed_upload_ms"}
        if unknown:
            raise ConfigError(f"network: unknown field(s) {sorted(unknown)}")
        return cls(**data)


def allowed_memory_tier(max_mem_mb: int, tiers: Sequence[int]) -> int:
    """Smallest configured tier that can hold ``max_mem_mb``."""
    if not tiers:
        raise ConfigError("no memory tiers configured")
    i = bisect.bisect_left(tiers, max_mem_mb)
    if i == len(tiers):
        raise NoTierFitsError(f"{max_mem_mb} MB exceeds the largest memory tier ({tiers[-1]} MB)")
    return tiers[i]


def validate_profile(profile: FunctionProfile, pricing: PricingConfig) -> ValidatedProfile:
    name = profile.name
    if not name:
        raise ConfigError("function name must be nonempty")
    if profile.max_mem_mb <= 0:
        raise ConfigError(f"{name}: max_mem_mb must be positive")
    if profile.sched_ms < 0:
        raise ConfigError(f"{name}: sched_ms must be nonnegative")
    if profile.output_bytes < 0:
        raise ConfigError(f"{name}: output_bytes must be nonnegative")
    for target, ms in profile.exec_ms.items():
        if ms <= 0:
            raise ConfigError(f"{name}: exec_ms[{target.label}] must be positive")
        if target.is_cloud and target.memory_mb not in pricing.memory_tiers_mb:
            raise ConfigError(f"{name}: {target.label} is not a configured memory tier")
    if not any(t.is_cloud for t in profile.exec_ms):
        raise MissingCloudProfileError(f"{name}: profile has no cloud execution time")

    required = allowed_memory_tier(profile.max_mem_mb, pricing.memory_tiers_mb)
    too_small = [t.label for t in profile.exec_ms if t.is_cloud and t.memory_mb < required]
    if too_small:
        raise TierTooSmallError(
            f"{name}: uses up to {profile.max_mem_mb} MB, needs >= {required} MB but is profiled on {', '.join(too_small)}"
        )
    return ValidatedProfile(
        name=name,
        exec_ms=dict(profile.exec_ms),
        sched_ms=profile.sched_ms,
        max_mem_mb=profile.max_mem_mb,
        output_bytes=profile.output_bytes,
        min_tier_mb=required,
    )


def validate_profiles(
    profiles: Mapping[str, FunctionProfile] | Iterable[FunctionProfile], pricing: PricingConfig
) -> dict[str, ValidatedProfile]:
    items = profiles.values() if isinstance(profiles, Mapping) else profiles
    return {p.name: validate_profile(p, pricing) for p in items}


def min_tier(profile: FunctionProfile, tiers: Sequence[int]) -> int:
    if isinstance(profile, ValidatedProfile):
        return profile.min_tier_mb
    return allowed_memory_tier(profile.max_mem_mb, tiers)


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(f"{where}: expected whole milliseconds/bytes, got {value!r}")
        value = int(value)
    return value


def _read_json(source: str | PathLike | Mapping[str, Any]) -> Any:
    if isinstance(source, Mapping):
        return source
    path = Path(source)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def profiles_from_dict(data: Mapping[str, Any]) -> dict[str, FunctionProfile]:
    return {name: FunctionProfile.from_dict(name, body) for name, body in data.items()}


def profiles_to_dict(profiles: Mapping[str, FunctionProfile]) -> dict[str, Any]:
    return {name: p.to_dict() for name, p in profiles.items()}


def load_profiles(source: str | PathLike | Mapping[str, Any]) -> dict[str, FunctionProfile]:
    return profiles_from_dict(_read_json(source))


def load_pricing(source: str | PathLike | Mapping[str, Any]) -> PricingConfig:
    return PricingConfig.from_dict(_read_json(source))


def load_network(source: str | PathLike | Mapping[str, Any]) -> NetworkConfig:
    return NetworkConfig.from_dict(_read_json(source))


__all__ = [
    "CLOUD",
    "DEFAULT_MEMORY_TIERS_MB",
    "EDGE",
    "FunctionProfile",
    "NetworkConfig",
    "PlacementTarget",
    "PricingConfig",
    "ValidatedProfile",
    "allowed_memory_tier",
    "load_network",
    "load_pricing",
    "load_profiles",
    "min_tier",
    "profiles_from_dict",
    "profiles_to_dict",
    "validate_profile",
    "validate_profiles",
]
