"""Combined regression/classification loss for one angle.

For a single angle the model emits one logit vector per hierarchy level.
The finest level is softmaxed and expectation-decoded into an angle, which
feeds a squared-error term against the truth; every level additionally pays
cross-entropy against its encoded truth bin.  With regression weight alpha
and per-level classification weights beta:

    total = alpha * (decoded - truth)^2 + sum_i beta_i * ce_i

The squared error is measured in degrees by default; ``mse_scale="bins"``
divides the difference by the finest bin width first, which only rescales
the regression term by 1/width^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .binning import BinHierarchy, decode_positions, encode

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "DEFAULT_WEIGHTS",
    "FINE_ONLY_WEIGHTS",
    "softmax",
    "cross_entropy",
    "mse_scalar",
    "hybrid_loss",
    "hybrid_loss_grad",
]

MSE_SCALES = ("degrees", "bins")


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative weights: one for regression, one per hierarchy level."""

    alpha: float = 2.0
    betas: tuple[float, ...] = (7.0, 5.0, 3.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha < 0.0:
            raise ValueError(f"alpha must be finite and nonnegative, got {self.alpha!r}")
        betas = tuple(float(b) for b in self.betas)
        for b in betas:
            if not math.isfinite(b) or b < 0.0:
                raise ValueError(f"betas must be finite and nonnegative, got {self.betas!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "betas", betas)


DEFAULT_WEIGHTS = LossWeights()
FINE_ONLY_WEIGHTS = LossWeights(2.0, (1.0, 0.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class LossBreakdown:
    """Loss value split into its unweighted terms for one angle."""

    total: float
    regression_term: float
    ce_terms: tuple[float, ...]
    decoded_angle: float


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax of a logit vector."""
    z = np.asarray(logits, dtype=float)
    if z.ndim != 1 or z.shape[0] < 1:
        raise ValueError(f"logits must be a nonempty vector, got shape {z.shape}")
    if not np.isfinite(z).all():
        raise ValueError("logits contain non-finite entries")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def cross_entropy(logits, target: int) -> float:
    """Negative log softmax probability of the target index."""
    z = np.asarray(logits, dtype=float)
    if z.ndim != 1 or z.shape[0] < 1:
        raise ValueError(f"logits must be a nonempty vector, got shape {z.shape}")
    if not np.isfinite(z).all():
        raise ValueError("logits contain non-finite entries")
    if not 0 <= target < z.shape[0]:
        raise IndexError(f"target {target} out of range [0, {z.shape[0]})")
    m = z.max()
    return float(np.log(np.exp(z - m).sum()) - (z[target] - m))


def mse_scalar(pred: float, truth: float) -> float:
    """Squared error between two scalars."""
    if not (math.isfinite(pred) and math.isfinite(truth)):
        raise ValueError(f"inputs must be finite, got {pred!r}, {truth!r}")
    d = float(pred) - float(truth)
    return d * d


def _check_heads(heads: Sequence, hierarchy: BinHierarchy) -> list[np.ndarray]:
    if len(heads) != hierarchy.depth:
        raise ValueError(
            f"expected {hierarchy.depth} logit vectors (one per level), got {len(heads)}"
        )
    out = []
    for scheme, logits in zip(hierarchy.levels, heads):
        z = np.asarray(logits, dtype=float)
        if z.ndim != 1 or z.shape[0] != scheme.n_bins:
            raise ValueError(
                f"level with {scheme.n_bins} bins got logits of shape {z.shape}"
            )
        if not np.isfinite(z).all():
            raise ValueError("logits contain non-finite entries")
        out.append(z)
    return out


def _check_loss_args(weights: LossWeights, hierarchy: BinHierarchy, mse_scale: str) -> float:
    if len(weights.betas) != hierarchy.depth:
        raise ValueError(
            f"{len(weights.betas)} betas for a hierarchy of depth {hierarchy.depth}"
        )
    if mse_scale not in MSE_SCALES:
        raise ValueError(f"mse_scale must be one of {MSE_SCALES}, got {mse_scale!r}")
    return 1.0 if mse_scale == "degrees" else 1.0 / hierarchy.finest.bin_width


def hybrid_loss(
    heads: Sequence,
    truth: float,
    weights: LossWeights,
    hierarchy: BinHierarchy,
    mse_scale: str = "degrees",
    convention: str = "center",
) -> LossBreakdown:
    """Loss for one angle given per-level logits and the true angle in degrees."""
    scale = _check_loss_args(weights, hierarchy, mse_scale)
    logits = _check_heads(heads, hierarchy)
    targets = [encode(truth, scheme) for scheme in hierarchy.levels]

    finest = hierarchy.finest
    probs = softmax(logits[0])
    decoded = float(probs @ decode_positions(finest, convention))
    diff = (decoded - float(truth)) * scale
    regression = diff * diff

    ce_terms = tuple(cross_entropy(z, t) for z, t in zip(logits, targets))
    total = weights.alpha * regression + float(np.dot(weights.betas, ce_terms))
    return LossBreakdown(total, regression, ce_terms, decoded)


def hybrid_loss_grad(
    heads: Sequence,
    truth: float,
    weights: LossWeights,
    hierarchy: BinHierarchy,
    mse_scale: str = "degrees",
    convention: str = "center",
) -> list[np.ndarray]:
    """Gradient of ``hybrid_loss(...).total`` with respect to each logit vector.

    Per level the cross-entropy contributes beta * (softmax - onehot).  The
    finest level additionally receives the squared-error term through the
    expectation decode: with p = softmax(z) and positions c,

        d decoded / dz_k = p_k * (c_k - decoded)

    so the regression part adds 2 * alpha * scale^2 * (decoded - truth) *
    p * (c - decoded).
    """
    scale = _check_loss_args(weights, hierarchy, mse_scale)
    logits = _check_heads(heads, hierarchy)
    targets = [encode(truth, scheme) for scheme in hierarchy.levels]

    grads = []
    for i, (z, t, scheme) in enumerate(zip(logits, targets, hierarchy.levels)):
        p = softmax(z)
        g = p.copy()
        g[t] -= 1.0
        g *= weights.betas[i]
        if i == 0 and weights.alpha != 0.0:
            positions = decode_positions(scheme, convention)
            decoded = float(p @ positions)
            diff = (decoded - float(truth)) * scale
            g += (2.0 * weights.alpha * scale * diff) * p * (positions - decoded)
        grads.append(g)
    return grads
