"""Flat parameter vectors with named block structure, and seeded randomness.

Parameters live in plain 1-D float64 arrays. A ``BlockLayout`` names
contiguous slices of such an array (one per weight matrix or bias vector),
so the per-parameter statistics kept by the optimizer modules align with
the parameters by plain index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

# 1-D float64 array of fixed length; every public operation keeps entries finite.
ParamVector = np.ndarray

# Counter-based generator stream (see make_rng).
Rng = np.random.Generator


@dataclass(frozen=True)
class Block:
    name: str
    offset: int
    length: int


@dataclass(frozen=True)
class BlockLayout:
    """Ordered blocks that tile [0, n) contiguously without overlap."""

    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("layout needs at least one block")
        seen: set[str] = set()
        expected_offset = 0
        for b in self.blocks:
            if b.length < 1:
                raise ValueError(f"block {b.name!r} has length {b.length}, need >= 1")
            if b.offset != expected_offset:
                raise ValueError(
                    f"block {b.name!r} starts at {b.offset}, expected {expected_offset} "
                    "(blocks must be contiguous and ordered)"
                )
            if b.name in seen:
                raise ValueError(f"duplicate block name {b.name!r}")
            seen.add(b.name)
            expected_offset = b.offset + b.length

    @classmethod
    def from_sizes(cls, sizes: Iterable[tuple[str, int]]) -> "BlockLayout":
        blocks = []
        offset = 0
        for name, length in sizes:
            blocks.append(Block(name, offset, length))
            offset += length
        return cls(tuple(blocks))

    @property
    def n(self) -> int:
        last = self.blocks[-1]
        return last.offset + last.length

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.blocks)

    def slice_of(self, name: str) -> slice:
        for b in self.blocks:
            if b.name == name:
                return slice(b.offset, b.offset + b.length)
        raise KeyError(f"unknown block {name!r}; layout has {self.names}")


def single_block(n: int, name: str = "all") -> BlockLayout:
    return BlockLayout.from_sizes([(name, n)])


def make_rng(seed: int) -> Rng:
    """Seeded Philox (counter-based) stream.

    Identical seeds give identical streams; Gaussian draws go through
    numpy's ziggurat sampler, which is deterministic for a fixed numpy
    version. Seeds are non-negative integers up to 64 bits.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def gaussian_fill(rng: Rng, n: int, mean: float, std: float) -> ParamVector:
    """n independent draws from N(mean, std^2); std = 0 gives a constant vector."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not np.isfinite(mean) or not np.isfinite(std):
        raise ValueError(f"mean and std must be finite, got mean={mean}, std={std}")
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    return rng.normal(loc=mean, scale=std, size=n).astype(np.float64, copy=False)


def block_view(v: ParamVector, layout: BlockLayout, name: str) -> ParamVector:
    """The contiguous slice of ``v`` for one block; writes go through to ``v``."""
    if len(v) != layout.n:
        raise ValueError(f"vector length {len(v)} does not match layout length {layout.n}")
    return v[layout.slice_of(name)]


def l2_norm(v: np.ndarray) -> float:
    """sqrt(sum(v_i^2)), scaled by the largest magnitude so that squaring can
    neither underflow a tiny nonzero vector to 0 nor overflow a large one."""
    scale = float(np.max(np.abs(v))) if len(v) else 0.0
    if scale == 0.0:
        return 0.0
    scaled = np.asarray(v, dtype=np.float64) / scale
    return scale * float(np.sqrt(np.sum(np.square(scaled))))
