"""A small ReLU MLP with one classification head per angle and level.

The trunk maps features to a shared hidden representation; 3 angles x
hierarchy-depth linear heads emit the per-level logits.  Forward, backward
and the Adam updates are written out explicitly on numpy arrays, so the
gradient path (including the expectation-decode regression term) is fully
visible and testable against finite differences.

Training is deterministic given the config seed: initialization draws from
one seeded generator, and each epoch's shuffle is reseeded from the master
seed and the epoch index.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .angles import MaeReport, PoseAngles, _mae_from_arrays
from .binning import BinHierarchy, decode_positions, expect_decode, make_hierarchy
from .loss import LossWeights, _check_loss_args, softmax

__all__ = [
    "N_ANGLES",
    "NetConfig",
    "HeadOutputs",
    "TinyNet",
    "AdamState",
    "LossStats",
    "TrainReport",
    "init_net",
    "adam_update",
    "train_step",
    "train",
    "checkpoint_text",
    "save_checkpoint",
    "load_checkpoint",
]

N_ANGLES = 3

CHECKPOINT_FORMAT = "hybridpose-checkpoint"
CHECKPOINT_VERSION = 1

ANGLE_RANGE_LIMIT = 99.0


@dataclass(frozen=True)
class NetConfig:
    """Architecture plus the master seed for init and shuffling."""

    input_dim: int
    hidden_dims: tuple[int, ...] = (64, 64)
    hierarchy: BinHierarchy = field(default_factory=make_hierarchy)
    seed: int = 0
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be positive, got {self.input_dim}")
        dims = tuple(int(d) for d in self.hidden_dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"hidden dims must all be positive, got {self.hidden_dims!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "hidden_dims", dims)


@dataclass(frozen=True, eq=False)
class HeadOutputs:
    """Per-level logit vectors for each angle, finest level first."""

    yaw: tuple[np.ndarray, ...]
    pitch: tuple[np.ndarray, ...]
    roll: tuple[np.ndarray, ...]

    def per_angle(self) -> tuple[tuple[np.ndarray, ...], ...]:
        return (self.yaw, self.pitch, self.roll)


class TinyNet:
    """Weights for the trunk and heads; see module docstring for layout."""

    def __init__(self, config, trunk_weights, trunk_biases, head_weights, head_biases):
        self.config = config
        self.trunk_weights = [np.asarray(w, dtype=float) for w in trunk_weights]
        self.trunk_biases = [np.asarray(b, dtype=float) for b in trunk_biases]
        self.head_weights = [
            [np.asarray(w, dtype=float) for w in per_angle] for per_angle in head_weights
        ]
        self.head_biases = [
            [np.asarray(b, dtype=float) for b in per_angle] for per_angle in head_biases
        ]
        self._validate()

    def _validate(self) -> None:
        cfg = self.config
        dims = (cfg.input_dim, *cfg.hidden_dims)
        if len(self.trunk_weights) != len(dims) - 1 or len(self.trunk_biases) != len(dims) - 1:
            raise ValueError("trunk layer count does not match config")
        for i, (w, b) in enumerate(zip(self.trunk_weights, self.trunk_biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"trunk layer {i} has shape {w.shape}, expected {(dims[i], dims[i+1])}")
        hidden = dims[-1]
        if len(self.head_weights) != N_ANGLES or len(self.head_biases) != N_ANGLES:
            raise ValueError(f"expected heads for {N_ANGLES} angles")
        for per_angle_w, per_angle_b in zip(self.head_weights, self.head_biases):
            if len(per_angle_w) != cfg.hierarchy.depth:
                raise ValueError("head level count does not match hierarchy depth")
            for scheme, w, b in zip(cfg.hierarchy.levels, per_angle_w, per_angle_b):
                if w.shape != (hidden, scheme.n_bins) or b.shape != (scheme.n_bins,):
                    raise ValueError(
                        f"head for {scheme.n_bins} bins has shape {w.shape}, "
                        f"expected {(hidden, scheme.n_bins)}"
                    )
        for p in self.parameters():
            if not np.isfinite(p).all():
                raise ValueError("parameters contain non-finite values")

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in a fixed order (trunk, then heads by angle)."""
        params = []
        for w, b in zip(self.trunk_weights, self.trunk_biases):
            params.append(w)
            params.append(b)
        for per_angle_w, per_angle_b in zip(self.head_weights, self.head_biases):
            for w, b in zip(per_angle_w, per_angle_b):
                params.append(w)
                params.append(b)
        return params

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def _forward_batch(self, x: np.ndarray):
        pre_acts = []
        acts = [x]
        a = x
        for w, b in zip(self.trunk_weights, self.trunk_biases):
            z = a @ w + b
            a = np.maximum(z, 0.0)
            pre_acts.append(z)
            acts.append(a)
        logits = [
            [a @ w + b for w, b in zip(per_angle_w, per_angle_b)]
            for per_angle_w, per_angle_b in zip(self.head_weights, self.head_biases)
        ]
        return pre_acts, acts, logits

    def _check_features(self, features) -> np.ndarray:
        f = np.asarray(features, dtype=float)
        if f.ndim != 1 or f.shape[0] != self.config.input_dim:
            raise ValueError(
                f"expected feature vector of length {self.config.input_dim}, got shape {f.shape}"
            )
        if not np.isfinite(f).all():
            raise ValueError("features contain non-finite values")
        return f

    def forward(self, features) -> HeadOutputs:
        """Logits for one feature vector."""
        f = self._check_features(features)
        _, _, logits = self._forward_batch(f[None, :])
        per_angle = tuple(tuple(level[0] for level in angle) for angle in logits)
        return HeadOutputs(*per_angle)

    def predict(self, features, convention: str = "center") -> PoseAngles:
        """Expectation-decoded angles from the finest heads."""
        out = self.forward(features)
        finest = self.config.hierarchy.finest
        return PoseAngles(
            *(
                expect_decode(softmax(levels[0]), finest, convention=convention)
                for levels in out.per_angle()
            )
        )

    def predict_batch(self, x: np.ndarray, convention: str = "center") -> np.ndarray:
        """Decoded (n, 3) angle array for an (n, input_dim) feature array."""
        _, _, logits = self._forward_batch(x)
        positions = decode_positions(self.config.hierarchy.finest, convention)
        cols = []
        for angle_logits in logits:
            s = angle_logits[0]
            e = np.exp(s - s.max(axis=1, keepdims=True))
            p = e / e.sum(axis=1, keepdims=True)
            cols.append(p @ positions)
        return np.stack(cols, axis=1)


def init_net(config: NetConfig) -> TinyNet:
    """He-scaled Gaussian weights, zero biases, drawn from the config seed."""
    rng = np.random.default_rng(config.seed)
    dims = (config.input_dim, *config.hidden_dims)
    trunk_w, trunk_b = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        trunk_w.append(rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in))
        trunk_b.append(np.zeros(fan_out))
    hidden = dims[-1]
    head_w, head_b = [], []
    for _ in range(N_ANGLES):
        per_w, per_b = [], []
        for scheme in config.hierarchy.levels:
            per_w.append(rng.standard_normal((hidden, scheme.n_bins)) * math.sqrt(2.0 / hidden))
            per_b.append(np.zeros(scheme.n_bins))
        head_w.append(per_w)
        head_b.append(per_b)
    return TinyNet(config, trunk_w, trunk_b, head_w, head_b)


@dataclass
class AdamState:
    """First/second moment accumulators, aligned with TinyNet.parameters()."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be nonnegative, got {self.learning_rate!r}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {b!r}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")

    @classmethod
    def for_net(cls, net: TinyNet, learning_rate: float = 1e-3, **kwargs) -> "AdamState":
        params = net.parameters()
        return cls(
            learning_rate=learning_rate,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_update(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam step, applied to the parameter arrays in place."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter, gradient and moment lists must align")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)


@dataclass(frozen=True)
class LossStats:
    """Batch means of the loss and its unweighted terms, summed over angles."""

    total: float
    regression_term: float
    ce_terms: tuple[float, ...]


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch training means and validation errors."""

    epoch_total: tuple[float, ...]
    epoch_regression: tuple[float, ...]
    epoch_ce_terms: tuple[tuple[float, ...], ...]
    val_reports: tuple[MaeReport, ...]
    wall_seconds: float

    @property
    def epochs(self) -> int:
        return len(self.epoch_total)

    @property
    def final_val(self) -> MaeReport | None:
        return self.val_reports[-1] if self.val_reports else None


def _encode_batch(angles: np.ndarray, scheme) -> np.ndarray:
    # Same arithmetic as binning.encode, vectorized; callers range-check first.
    idx = np.floor((angles - scheme.min_angle) / scheme.bin_width).astype(int)
    return np.minimum(idx, scheme.n_bins - 1)


def _check_angle_range(targets: np.ndarray) -> None:
    if targets.size and (np.abs(targets) > ANGLE_RANGE_LIMIT).any():
        worst = float(np.abs(targets).max())
        raise ValueError(
            f"target angle {worst} outside [{-ANGLE_RANGE_LIMIT}, {ANGLE_RANGE_LIMIT}]"
        )


def _batch_loss_and_grads(
    net: TinyNet,
    x: np.ndarray,
    targets: np.ndarray,
    weights: LossWeights,
    mse_scale: str = "degrees",
    convention: str = "center",
):
    """Mean loss over the batch and its gradient in parameters() order.

    The loss per sample is the three-angle sum of the per-angle hybrid loss;
    stats and gradients are means over the batch.
    """
    hierarchy = net.config.hierarchy
    scale = _check_loss_args(weights, hierarchy, mse_scale)
    positions = decode_positions(hierarchy.finest, convention)
    n = x.shape[0]
    rows = np.arange(n)

    pre_acts, acts, logits = net._forward_batch(x)
    hidden = acts[-1]

    d_hidden = np.zeros_like(hidden)
    head_w_grads = [[None] * hierarchy.depth for _ in range(N_ANGLES)]
    head_b_grads = [[None] * hierarchy.depth for _ in range(N_ANGLES)]
    reg_sum = 0.0
    ce_sums = np.zeros(hierarchy.depth)

    for ai in range(N_ANGLES):
        t_deg = targets[:, ai]
        for li, scheme in enumerate(hierarchy.levels):
            s = logits[ai][li]
            m = s.max(axis=1, keepdims=True)
            e = np.exp(s - m)
            z = e.sum(axis=1, keepdims=True)
            p = e / z
            tgt = _encode_batch(t_deg, scheme)
            ce_rows = np.log(z[:, 0]) - (s[rows, tgt] - m[:, 0])
            ce_sums[li] += float(ce_rows.sum())

            g = p.copy()
            g[rows, tgt] -= 1.0
            g *= weights.betas[li] / n
            if li == 0:
                decoded = p @ positions
                diff = (decoded - t_deg) * scale
                reg_sum += float(diff @ diff)
                if weights.alpha != 0.0:
                    coeff = (2.0 * weights.alpha * scale / n) * diff
                    g += coeff[:, None] * p * (positions[None, :] - decoded[:, None])

            head_w_grads[ai][li] = hidden.T @ g
            head_b_grads[ai][li] = g.sum(axis=0)
            d_hidden += g @ net.head_weights[ai][li].T

    trunk_w_grads = [None] * len(net.trunk_weights)
    trunk_b_grads = [None] * len(net.trunk_weights)
    d = d_hidden
    for i in reversed(range(len(net.trunk_weights))):
        dz = d * (pre_acts[i] > 0.0)
        trunk_w_grads[i] = acts[i].T @ dz
        trunk_b_grads[i] = dz.sum(axis=0)
        if i > 0:
            d = dz @ net.trunk_weights[i].T

    stats = LossStats(
        total=(weights.alpha * reg_sum + float(np.dot(weights.betas, ce_sums))) / n,
        regression_term=reg_sum / n,
        ce_terms=tuple(ce_sums / n),
    )
    grads = []
    for w, b in zip(trunk_w_grads, trunk_b_grads):
        grads.append(w)
        grads.append(b)
    for per_w, per_b in zip(head_w_grads, head_b_grads):
        for w, b in zip(per_w, per_b):
            grads.append(w)
            grads.append(b)
    return stats, grads


def _batch_arrays(batch: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Accept (features, PoseAngles) pairs or SynthSample-like objects."""
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    feats, poses = [], []
    for item in batch:
        if hasattr(item, "features") and hasattr(item, "truth"):
            f, p = item.features, item.truth
        else:
            f, p = item
        feats.append(np.asarray(f, dtype=float))
        poses.append([p.yaw, p.pitch, p.roll])
    x = np.stack(feats)
    targets = np.array(poses, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("features contain non-finite values")
    _check_angle_range(targets)
    return x, targets


def _assert_finite_params(net: TinyNet, step: int) -> None:
    for p in net.parameters():
        if not np.isfinite(p).all():
            raise FloatingPointError(f"parameters became non-finite at update {step}")


def train_step(
    net: TinyNet,
    optimizer: AdamState,
    batch: Sequence,
    weights: LossWeights,
    mse_scale: str = "degrees",
    convention: str = "center",
) -> LossStats:
    """One Adam update on a batch; returns the pre-update loss means."""
    x, targets = _batch_arrays(batch)
    if x.shape[1] != net.config.input_dim:
        raise ValueError(
            f"batch features have dim {x.shape[1]}, net expects {net.config.input_dim}"
        )
    stats, grads = _batch_loss_and_grads(net, x, targets, weights, mse_scale, convention)
    adam_update(net.parameters(), grads, optimizer)
    _assert_finite_params(net, optimizer.step)
    return stats


def _evaluate(net: TinyNet, x: np.ndarray, targets: np.ndarray, convention: str) -> MaeReport:
    return _mae_from_arrays(net.predict_batch(x, convention), targets)


def train(
    config: NetConfig,
    train_samples: Sequence,
    val_samples: Sequence,
    weights: LossWeights,
    epochs: int = 30,
    learning_rate: float = 1e-3,
    batch_size: int = 64,
    mse_scale: str = "degrees",
    convention: str = "center",
) -> tuple[TinyNet, TrainReport]:
    """Train a fresh net from the config seed; fully deterministic.

    Each epoch shuffles the training set with a generator reseeded from
    (config.seed, epoch).  Recorded epoch losses are means over samples as
    visited (pre-update), and every epoch ends with a validation MAE pass.
    """
    if epochs < 0:
        raise ValueError(f"epochs must be nonnegative, got {epochs}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    x_train, t_train = _batch_arrays(train_samples)
    x_val, t_val = _batch_arrays(val_samples)
    for arr in (x_train, x_val):
        if arr.shape[1] != config.input_dim:
            raise ValueError(
                f"data features have dim {arr.shape[1]}, config expects {config.input_dim}"
            )

    net = init_net(config)
    optimizer = AdamState.for_net(net, learning_rate)
    n = x_train.shape[0]

    start = time.perf_counter()
    epoch_total, epoch_regression, epoch_ce, val_reports = [], [], [], []
    for epoch in range(epochs):
        order = np.random.default_rng([config.seed, epoch]).permutation(n)
        total_sum = 0.0
        reg_sum = 0.0
        ce_sum = np.zeros(config.hierarchy.depth)
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            stats, grads = _batch_loss_and_grads(
                net, x_train[idx], t_train[idx], weights, mse_scale, convention
            )
            adam_update(net.parameters(), grads, optimizer)
            _assert_finite_params(net, optimizer.step)
            total_sum += stats.total * len(idx)
            reg_sum += stats.regression_term * len(idx)
            ce_sum += np.array(stats.ce_terms) * len(idx)
        epoch_total.append(total_sum / n)
        epoch_regression.append(reg_sum / n)
        epoch_ce.append(tuple(ce_sum / n))
        val_reports.append(_evaluate(net, x_val, t_val, convention))
    report = TrainReport(
        epoch_total=tuple(epoch_total),
        epoch_regression=tuple(epoch_regression),
        epoch_ce_terms=tuple(epoch_ce),
        val_reports=tuple(val_reports),
        wall_seconds=time.perf_counter() - start,
    )
    return net, report


def checkpoint_text(net: TinyNet) -> str:
    """Serialize config, seed and all parameters to a JSON document.

    Floats round-trip exactly through their shortest decimal representation,
    so save followed by load reproduces every parameter bit for bit.
    """
    cfg = net.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "input_dim": cfg.input_dim,
            "hidden_dims": list(cfg.hidden_dims),
            "seed": cfg.seed,
            "activation": cfg.activation,
            "hierarchy": {
                "min_angle": cfg.hierarchy.finest.min_angle,
                "max_angle": cfg.hierarchy.finest.max_angle,
                "bin_counts": [s.n_bins for s in cfg.hierarchy.levels],
            },
        },
        "trunk": [
            {"weight": w.tolist(), "bias": b.tolist()}
            for w, b in zip(net.trunk_weights, net.trunk_biases)
        ],
        "heads": [
            [
                {"weight": w.tolist(), "bias": b.tolist()}
                for w, b in zip(per_w, per_b)
            ]
            for per_w, per_b in zip(net.head_weights, net.head_biases)
        ],
    }
    return json.dumps(doc, allow_nan=False, separators=(",", ":")) + "\n"


def save_checkpoint(net: TinyNet, path) -> None:
    Path(path).write_text(checkpoint_text(net))


def load_checkpoint(path) -> TinyNet:
    """Rebuild a TinyNet from a checkpoint file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a valid checkpoint: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"{path}: unsupported checkpoint version {doc.get('version')!r}"
        )
    try:
        c = doc["config"]
        h = c["hierarchy"]
        config = NetConfig(
            input_dim=int(c["input_dim"]),
            hidden_dims=tuple(int(d) for d in c["hidden_dims"]),
            hierarchy=make_hierarchy(
                tuple(int(n) for n in h["bin_counts"]),
                float(h["min_angle"]),
                float(h["max_angle"]),
            ),
            seed=int(c["seed"]),
            activation=str(c["activation"]),
        )
        trunk_w = [np.array(layer["weight"], dtype=float) for layer in doc["trunk"]]
        trunk_b = [np.array(layer["bias"], dtype=float) for layer in doc["trunk"]]
        head_w = [
            [np.array(level["weight"], dtype=float) for level in per_angle]
            for per_angle in doc["heads"]
        ]
        head_b = [
            [np.array(level["bias"], dtype=float) for level in per_angle]
            for per_angle in doc["heads"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed checkpoint: {exc!r}") from None
    return TinyNet(config, trunk_w, trunk_b, head_w, head_b)
