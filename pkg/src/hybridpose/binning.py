"""Nested angle-bin schemes and the encode/decode operations on them.

A BinScheme splits a closed angle range into equal-width bins; a
BinHierarchy stacks several schemes over the same range, finest first, with
every coarser bin count dividing the finest one so that coarse labels are a
pure function of fine labels.  The canonical hierarchy covers [-99, +99]
degrees with 198/66/18/6/2 bins (widths 1/3/11/33/99 degrees).

Decoding supports two conventions for the representative position of bin i:
its center ``min + (i + 0.5) * width`` (default) or its left edge
``min + i * width``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CANONICAL_BIN_COUNTS",
    "BinScheme",
    "BinHierarchy",
    "make_hierarchy",
    "encode",
    "encode_all",
    "coarsen",
    "bin_center",
    "decode_positions",
    "expect_decode",
    "argmax_decode",
]

CANONICAL_BIN_COUNTS = (198, 66, 18, 6, 2)
CANONICAL_MIN_ANGLE = -99.0
CANONICAL_MAX_ANGLE = 99.0

_PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class BinScheme:
    """Equal-width binning of the closed range [min_angle, max_angle]."""

    min_angle: float
    max_angle: float
    n_bins: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.min_angle) and math.isfinite(self.max_angle)):
            raise ValueError("bin range must be finite")
        if not self.max_angle > self.min_angle:
            raise ValueError(
                f"max_angle must exceed min_angle, got [{self.min_angle}, {self.max_angle}]"
            )
        if not isinstance(self.n_bins, int) or self.n_bins < 1:
            raise ValueError(f"n_bins must be a positive integer, got {self.n_bins!r}")
        object.__setattr__(self, "min_angle", float(self.min_angle))
        object.__setattr__(self, "max_angle", float(self.max_angle))

    @property
    def bin_width(self) -> float:
        return (self.max_angle - self.min_angle) / self.n_bins


@dataclass(frozen=True)
class BinHierarchy:
    """Bin schemes over one shared range, ordered finest to coarsest."""

    levels: tuple[BinScheme, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("hierarchy needs at least one level")
        levels = tuple(self.levels)
        first = levels[0]
        for scheme in levels[1:]:
            if scheme.min_angle != first.min_angle or scheme.max_angle != first.max_angle:
                raise ValueError("all hierarchy levels must share the same angle range")
        counts = [s.n_bins for s in levels]
        for coarse, fine in zip(counts[1:], counts[:-1]):
            if coarse >= fine:
                raise ValueError(f"bin counts must strictly decrease, got {counts}")
        for scheme in levels[1:]:
            if first.n_bins % scheme.n_bins != 0:
                raise ValueError(
                    f"coarse bin count {scheme.n_bins} does not divide finest {first.n_bins}"
                )
        object.__setattr__(self, "levels", levels)

    @property
    def finest(self) -> BinScheme:
        return self.levels[0]

    @property
    def depth(self) -> int:
        return len(self.levels)


def make_hierarchy(
    bin_counts: tuple[int, ...] = CANONICAL_BIN_COUNTS,
    min_angle: float = CANONICAL_MIN_ANGLE,
    max_angle: float = CANONICAL_MAX_ANGLE,
) -> BinHierarchy:
    """Build a hierarchy; with no arguments, the canonical 198/66/18/6/2 one."""
    return BinHierarchy(tuple(BinScheme(min_angle, max_angle, n) for n in bin_counts))


def encode(angle: float, scheme: BinScheme) -> int:
    """Map an angle to its bin index; the top edge belongs to the last bin."""
    a = float(angle)
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {angle!r}")
    if a < scheme.min_angle or a > scheme.max_angle:
        raise ValueError(
            f"angle {a} outside bin range [{scheme.min_angle}, {scheme.max_angle}]"
        )
    index = int(math.floor((a - scheme.min_angle) / scheme.bin_width))
    return min(index, scheme.n_bins - 1)


def encode_all(angle: float, hierarchy: BinHierarchy) -> tuple[int, ...]:
    """Encode one angle at every hierarchy level, finest first."""
    return tuple(encode(angle, scheme) for scheme in hierarchy.levels)


def coarsen(fine_index: int, fine: BinScheme, coarse: BinScheme) -> int:
    """Map a fine bin index to the coarse bin containing the same angles."""
    if fine.n_bins % coarse.n_bins != 0:
        raise ValueError(
            f"coarse bin count {coarse.n_bins} does not divide fine count {fine.n_bins}"
        )
    if not 0 <= fine_index < fine.n_bins:
        raise IndexError(f"fine index {fine_index} out of range [0, {fine.n_bins})")
    return fine_index * coarse.n_bins // fine.n_bins


def bin_center(index: int, scheme: BinScheme) -> float:
    """Angle at the center of bin ``index``."""
    if not 0 <= index < scheme.n_bins:
        raise IndexError(f"bin index {index} out of range [0, {scheme.n_bins})")
    return scheme.min_angle + (index + 0.5) * scheme.bin_width


def decode_positions(scheme: BinScheme, convention: str = "center") -> np.ndarray:
    """Representative angle of every bin under the given convention."""
    if convention == "center":
        offset = 0.5
    elif convention == "edge":
        offset = 0.0
    else:
        raise ValueError(f"unknown decode convention {convention!r}")
    return scheme.min_angle + (np.arange(scheme.n_bins) + offset) * scheme.bin_width


def _check_probs(probs, scheme: BinScheme) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.shape[0] != scheme.n_bins:
        raise ValueError(f"expected {scheme.n_bins} probabilities, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValueError("probabilities contain non-finite entries")
    if (p < 0.0).any():
        raise ValueError(f"probabilities must be nonnegative, min is {p.min()!r}")
    total = float(p.sum())
    if abs(total - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, expected 1 within {_PROB_SUM_TOL:g}")
    return p


def expect_decode(probs, scheme: BinScheme, convention: str = "center") -> float:
    """Expectation of the bin positions under a probability vector."""
    p = _check_probs(probs, scheme)
    return float(p @ decode_positions(scheme, convention))


def argmax_decode(probs, scheme: BinScheme, convention: str = "center") -> float:
    """Position of the most probable bin; ties resolve to the lowest index."""
    p = _check_probs(probs, scheme)
    positions = decode_positions(scheme, convention)
    return float(positions[int(np.argmax(p))])
