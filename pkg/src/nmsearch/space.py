"""The configuration search space: one sparsity level per prunable module.

A configuration is a plain tuple of :class:`SparsityLevel`, index l matching
prunable module l of the arch. Configs serialize as lists of "N:M" strings
in module order, which keeps reports human-diffable.
"""

from __future__ import annotations

from dataclasses import dataclass
import itertools

import numpy as np

from .cost import ArchSpec, config_flops, dense_flops, fixed_flops, module_flops
from .errors import ConfigurationError
from .nm import SparsityLevel

SparseConfig = tuple[SparsityLevel, ...]


def config_to_strings(config: SparseConfig) -> list[str]:
    return [str(level) for level in config]


def config_from_strings(items) -> SparseConfig:
    return tuple(SparsityLevel.parse(s) for s in items)


@dataclass(frozen=True)
class Violation:
    """Why a configuration is not admissible: which check, which layer."""

    check: str          # "length" | "membership" | "cost"
    layer: int | None
    message: str


@dataclass(frozen=True)
class SearchSpace:
    """Levels available per module, the arch they apply to, and the cost cap."""

    levels: tuple[SparsityLevel, ...]
    arch: ArchSpec
    c_upper: float

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ConfigurationError("search space needs at least one level")
        if len(set(self.levels)) != len(self.levels):
            raise ConfigurationError(f"duplicate levels in {self.levels}")
        if not any(level.is_dense for level in self.levels):
            raise ConfigurationError(
                "search space must contain the dense M:M level so the supernet "
                "contains the identity subnet"
            )
        for module in self.arch.prunable:
            for level in self.levels:
                if module.cols % level.m != 0:
                    raise ConfigurationError(
                        f"module {module.role} (block {module.block}) has reduction "
                        f"axis {module.cols}, not divisible by M={level.m}"
                    )

    @classmethod
    def build(cls, arch: ArchSpec, levels, c_upper_fraction: float = 0.5) -> "SearchSpace":
        levels = tuple(sorted(set(levels)))
        if not 0 < c_upper_fraction <= 1:
            raise ConfigurationError(f"c_upper_fraction must be in (0, 1], got {c_upper_fraction}")
        return cls(levels=levels, arch=arch, c_upper=c_upper_fraction * dense_flops(arch))

    @property
    def num_modules(self) -> int:
        return self.arch.num_prunable

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def sparsest(self) -> SparsityLevel:
        return min(self.levels, key=lambda s: (s.density, s.m))

    @property
    def densest(self) -> SparsityLevel:
        return max(self.levels, key=lambda s: (s.density, -s.m))

    @property
    def c_lower(self) -> int:
        return config_flops(self.arch, self.uniform(self.sparsest))

    def level_index(self, level: SparsityLevel) -> int:
        return self.levels.index(level)

    def uniform(self, level: SparsityLevel) -> SparseConfig:
        """All modules at the same level (e.g. the "uniform 2:4" pattern)."""
        if level not in self.levels:
            raise ConfigurationError(f"level {level} not in space {self.levels}")
        return (level,) * self.num_modules

    def cost_matrix(self) -> np.ndarray:
        """(L, K) int64 matrix of per-module FLOPs at each level."""
        return np.array(
            [
                [module_flops(mod, self.arch.tokens, level) for level in self.levels]
                for mod in self.arch.prunable
            ],
            dtype=np.int64,
        )

    def flops(self, config: SparseConfig) -> int:
        return config_flops(self.arch, config)

    def validate(self, config) -> Violation | None:
        """None when admissible, else the first failed check."""
        if len(config) != self.num_modules:
            return Violation(
                "length", None, f"got {len(config)} levels for {self.num_modules} modules"
            )
        for l, level in enumerate(config):
            if level not in self.levels:
                return Violation("membership", l, f"layer {l}: level {level} not in space")
        flops = self.flops(config)
        if flops > self.c_upper:
            return Violation("cost", None, f"F(config)={flops} exceeds c_upper={self.c_upper}")
        return None

    def ensure_valid(self, config) -> None:
        violation = self.validate(config)
        if violation is not None:
            raise ConfigurationError(f"invalid config ({violation.check}): {violation.message}")


def enumerate_configs(space: SearchSpace, max_count: int = 1_000_000) -> list[SparseConfig]:
    """Every admissible configuration, deterministic order, duplicate-free.

    Refuses spaces whose raw size K^L exceeds ``max_count``; this is a test
    oracle, not a production path.
    """
    raw = space.num_levels ** space.num_modules
    if raw > max_count:
        raise ConfigurationError(
            f"space has {space.num_levels}^{space.num_modules} = {raw} raw configs, "
            f"over the {max_count} enumeration cap"
        )
    fixed = fixed_flops(space.arch)
    costs = space.cost_matrix()
    out = []
    for choice in itertools.product(range(space.num_levels), repeat=space.num_modules):
        flops = fixed + int(costs[np.arange(space.num_modules), choice].sum())
        if flops <= space.c_upper:
            out.append(tuple(space.levels[i] for i in choice))
    return out
