"""FLOPs accounting for layer-wise sparse configurations.

Conventions, frozen here and relied on by the tests:

  * one multiply-accumulate = 2 FLOPs, so a dense (rows, cols) linear over
    ``tokens`` positions costs 2 * tokens * rows * cols;
  * an N:M-sparse linear costs (N/M) of its dense FLOPs, exact in integer
    arithmetic because cols is a multiple of M;
  * the fixed (non-prunable) cost of the micro-ViT counts the patch
    embedding, the attention score/value matmuls (Q@K^T and A@V, both
    2 * tokens^2 * embed_dim per block), and the classifier head applied to
    the pooled token; softmax, layernorm, activations, and bias adds count
    as zero — they are negligible and constant across configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .nm import SparsityLevel

MODULE_ROLES = ("qkv", "proj", "fc1", "fc2")


@dataclass(frozen=True)
class PrunableModule:
    """One maskable linear: (rows, cols) = (output dim, reduction dim)."""

    role: str
    block: int
    rows: int
    cols: int

    def dense_flops(self, tokens: int) -> int:
        return 2 * tokens * self.rows * self.cols


@dataclass(frozen=True)
class ArchSpec:
    """Static shape description of a model whose linears can be masked.

    ``kind`` is either "vit" (the micro vision transformer: 4 prunable
    modules per block, plus fixed patch-embedding/attention/head cost) or
    "linear" (a bare stack of linear modules with zero fixed cost, used for
    cost-model tests and toy searches).
    """

    kind: str
    blocks: int
    embed_dim: int
    num_heads: int
    mlp_ratio: float
    tokens: int
    num_classes: int
    image_side: int
    patch_size: int
    prunable: tuple[PrunableModule, ...] = field(default=())

    def __post_init__(self):
        if self.kind == "vit" and len(self.prunable) != 4 * self.blocks:
            raise ConfigurationError(
                f"vit arch must have 4 prunable modules per block: "
                f"got {len(self.prunable)} for {self.blocks} blocks"
            )

    @property
    def num_prunable(self) -> int:
        return len(self.prunable)

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size

    @property
    def input_dim(self) -> int:
        return self.image_side * self.image_side

    @classmethod
    def micro_vit(
        cls,
        image_side: int = 16,
        patch_size: int = 4,
        embed_dim: int = 32,
        num_heads: int = 4,
        mlp_ratio: float = 2.0,
        blocks: int = 2,
        num_classes: int = 4,
    ) -> "ArchSpec":
        if image_side % patch_size != 0:
            raise ConfigurationError(f"patch size {patch_size} must divide image side {image_side}")
        if embed_dim % num_heads != 0:
            raise ConfigurationError(f"num_heads {num_heads} must divide embed_dim {embed_dim}")
        hidden = int(round(embed_dim * mlp_ratio))
        tokens = (image_side // patch_size) ** 2
        mods = []
        for b in range(blocks):
            mods.append(PrunableModule("qkv", b, 3 * embed_dim, embed_dim))
            mods.append(PrunableModule("proj", b, embed_dim, embed_dim))
            mods.append(PrunableModule("fc1", b, hidden, embed_dim))
            mods.append(PrunableModule("fc2", b, embed_dim, hidden))
        return cls(
            kind="vit",
            blocks=blocks,
            embed_dim=embed_dim,
            num_heads=num_heads,
            mlp_ratio=mlp_ratio,
            tokens=tokens,
            num_classes=num_classes,
            image_side=image_side,
            patch_size=patch_size,
            prunable=tuple(mods),
        )

    @classmethod
    def linear_stack(cls, shapes, tokens: int = 1, num_classes: int = 2) -> "ArchSpec":
        """Bare stack of (rows, cols) linears; fixed cost is zero."""
        mods = tuple(
            PrunableModule(f"linear{i}", 0, rows, cols) for i, (rows, cols) in enumerate(shapes)
        )
        return cls(
            kind="linear",
            blocks=0,
            embed_dim=0,
            num_heads=1,
            mlp_ratio=0.0,
            tokens=tokens,
            num_classes=num_classes,
            image_side=0,
            patch_size=1,
            prunable=mods,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "blocks": self.blocks,
            "embed_dim": self.embed_dim,
            "num_heads": self.num_heads,
            "mlp_ratio": self.mlp_ratio,
            "tokens": self.tokens,
            "num_classes": self.num_classes,
            "image_side": self.image_side,
            "patch_size": self.patch_size,
            "prunable": [
                {"role": m.role, "block": m.block, "rows": m.rows, "cols": m.cols}
                for m in self.prunable
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchSpec":
        mods = tuple(
            PrunableModule(m["role"], m["block"], m["rows"], m["cols"]) for m in d["prunable"]
        )
        return cls(
            kind=d["kind"],
            blocks=d["blocks"],
            embed_dim=d["embed_dim"],
            num_heads=d["num_heads"],
            mlp_ratio=d["mlp_ratio"],
            tokens=d["tokens"],
            num_classes=d["num_classes"],
            image_side=d["image_side"],
            patch_size=d["patch_size"],
            prunable=mods,
        )


def module_flops(module: PrunableModule, tokens: int, level: SparsityLevel) -> int:
    """FLOPs of one linear at a sparsity level; exact integer."""
    dense = module.dense_flops(tokens)
    assert dense % level.m == 0, "cols divisibility guarantees exactness"
    return (dense // level.m) * level.n


def fixed_flops(arch: ArchSpec) -> int:
    """Cost that no configuration can change (see module docstring)."""
    if arch.kind == "linear":
        return 0
    t, e = arch.tokens, arch.embed_dim
    patch_embed = 2 * t * e * arch.patch_dim
    attention_aux = arch.blocks * (2 * t * t * e + 2 * t * t * e)  # Q@K^T and A@V
    head = 2 * 1 * arch.num_classes * e  # applied to the mean-pooled token
    return patch_embed + attention_aux + head


def dense_flops(arch: ArchSpec) -> int:
    """Total FLOPs of the fully dense model."""
    return fixed_flops(arch) + sum(m.dense_flops(arch.tokens) for m in arch.prunable)


def config_flops(arch: ArchSpec, config) -> int:
    """F(alpha): fixed cost plus each prunable module at its assigned level."""
    if len(config) != arch.num_prunable:
        raise ConfigurationError(
            f"config has {len(config)} levels for {arch.num_prunable} prunable modules"
        )
    total = fixed_flops(arch)
    for module, level in zip(arch.prunable, config):
        total += module_flops(module, arch.tokens, level)
    return total


@dataclass(frozen=True)
class CostIntervals:
    """Equal-width FLOPs bands between the sparsest-config cost and c_upper.

    ``boundaries`` holds K strictly increasing edges; interval i is
    [boundaries[i], boundaries[i+1]), except the last which is closed at the
    top so c_upper itself belongs to it.
    """

    boundaries: tuple[float, ...]

    def __post_init__(self):
        if len(self.boundaries) < 2:
            raise ConfigurationError("need at least 2 boundaries")
        if any(b >= a for a, b in zip(self.boundaries[1:], self.boundaries)):
            raise ConfigurationError(f"boundaries must be strictly increasing: {self.boundaries}")

    @property
    def c_lower(self) -> float:
        return self.boundaries[0]

    @property
    def c_upper(self) -> float:
        return self.boundaries[-1]

    @property
    def num_intervals(self) -> int:
        return len(self.boundaries) - 1

    def bounds(self, i: int) -> tuple[float, float, bool]:
        """(low, high, top_closed) for interval i."""
        return self.boundaries[i], self.boundaries[i + 1], i == self.num_intervals - 1

    def contains(self, i: int, flops) -> bool:
        lo, hi, closed = self.bounds(i)
        return lo <= flops <= hi if closed else lo <= flops < hi


def build_intervals(c_lower, c_upper, k: int) -> CostIntervals:
    """K equally spaced boundaries from c_lower to c_upper (K-1 intervals)."""
    if k < 2:
        raise ConfigurationError(f"need k >= 2 boundaries, got {k}")
    if not c_lower < c_upper:
        raise ConfigurationError(f"c_upper ({c_upper}) must exceed c_lower ({c_lower})")
    edges = [c_lower + (c_upper - c_lower) * i / (k - 1) for i in range(k)]
    edges[0], edges[-1] = float(c_lower), float(c_upper)
    return CostIntervals(boundaries=tuple(edges))


def interval_of(intervals: CostIntervals, flops) -> int | None:
    """Index of the interval holding ``flops``, or None when out of range."""
    if flops < intervals.c_lower or flops > intervals.c_upper:
        return None
    idx = int(np.searchsorted(intervals.boundaries, flops, side="right")) - 1
    return min(idx, intervals.num_intervals - 1)
