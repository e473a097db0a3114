"""2D+3D CNN forecaster, the Fully-3D baseline, training and inference."""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .calib import StandardizeStats, invert_standardize
from .engine import AdamState, LayerSpec, Tensor, adam_step, build_layer, huber_loss, make_rng
from .engine.layers import BatchNorm
from .errors import FormatError, ShapeError, TrainingDivergedError, ValidationError
from .windgrid import VALID_S, VALID_T, SampleSet, SampleWindow

VARIANTS = ("cnn2d3d", "fully3d")
FULLY3D_T = (6, 12, 24)
FULLY3D_MIN_S = 7
CHECKPOINT_MAGIC = b"WNDCKPT1"


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "cnn2d3d"
    T: int = 3
    S: int = 3
    seed: int = 0
    # cnn2d3d: (3D stage..., 2D stage...); fully3d: 3D stage only
    channels: tuple[int, ...] | None = None
    dense_units: int = 64

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.T not in VALID_T or self.S not in VALID_S:
            raise ValidationError(f"(T={self.T}, S={self.S}) outside T in {VALID_T}, S in {VALID_S}")
        if self.variant == "fully3d" and (self.S < FULLY3D_MIN_S or self.T not in FULLY3D_T):
            raise ValidationError(
                f"fully3d supports S >= {FULLY3D_MIN_S} and T in {FULLY3D_T}, got T={self.T}, S={self.S}"
            )
        if self.channels is not None:
            object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))

    @property
    def channel_plan(self) -> tuple[int, ...]:
        if self.channels is not None:
            return self.channels
        return (8, 16, 32, 32) if self.variant == "cnn2d3d" else (8, 16, 16)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channel_plan)
        return d


def _conv_block(kind, c_in, c_out):
    k = (3, 3, 3) if kind == "conv3d" else (3, 3)
    return [LayerSpec(kind, c_in, c_out, k, "same"), LayerSpec("batchnorm", c_out, c_out),
            LayerSpec("leaky_relu")]


def cnn2d3d_specs(config: ModelConfig) -> list[LayerSpec]:
    plan = config.channel_plan
    if len(plan) != 4:
        raise ValidationError(f"cnn2d3d channel plan needs 4 entries (two 3D, two 2D), got {plan}")
    c3a, c3b, c2a, c2b = plan
    specs = _conv_block("conv3d", 2, c3a) + _conv_block("conv3d", c3a, c3b)
    specs.append(LayerSpec("collapse_time"))
    specs += _conv_block("conv2d", c3b, c2a) + _conv_block("conv2d", c2a, c2b)
    specs += [
        LayerSpec("flatten"),
        LayerSpec("dense", c2b * config.S * config.S, config.dense_units),
        LayerSpec("leaky_relu"),
        LayerSpec("dense", config.dense_units, 2),
    ]
    return specs


def fully3d_specs(config: ModelConfig) -> list[LayerSpec]:
    plan = config.channel_plan
    specs, c_in = [], 2
    for c in plan:
        specs += _conv_block("conv3d", c_in, c)
        c_in = c
    specs += [LayerSpec("flatten"), LayerSpec("dense", c_in * config.T * config.S * config.S, 2)]
    return specs


class Network:
    """Sequential stack of layers mapping [N][2][T][S][S] to standardized (u, v)."""

    def __init__(self, config: ModelConfig, specs: list[LayerSpec]):
        self.config = config
        self.specs = list(specs)
        rng = make_rng(config.seed)
        self.layers = [build_layer(s, rng) for s in self.specs]

    def __call__(self, x, training: bool = False) -> Tensor:
        return self.forward(x, training)

    def forward(self, x, training: bool = False) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(x)
        want = (2, self.config.T, self.config.S, self.config.S)
        if x.ndim != 5 or x.shape[1:] != want:
            raise ShapeError(f"model expects input [N]{list(want)}, got {list(x.shape)}")
        for layer in self.layers:
            x = layer(x, training)
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def buffers(self) -> list[np.ndarray]:
        return [b for layer in self.layers for b in layer.buffers()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()] + [b.copy() for b in self.buffers()]

    def load_state(self, arrays) -> None:
        targets = [p.data for p in self.parameters()] + self.buffers()
        if len(arrays) != len(targets):
            raise ShapeError(f"state has {len(arrays)} arrays, model needs {len(targets)}")
        for dst, src in zip(targets, arrays):
            if dst.shape != np.shape(src):
                raise ShapeError(f"state array shape {np.shape(src)} != {dst.shape}")
            dst[...] = src

    def predict_std(self, inputs: np.ndarray, chunk: int = 512) -> np.ndarray:
        """Eval-mode forward over standardized inputs, in chunks."""
        outs = [self.forward(inputs[i:i + chunk]).data for i in range(0, len(inputs), chunk)]
        return np.concatenate(outs) if outs else np.zeros((0, 2))


def build_cnn2d3d(config: ModelConfig) -> Network:
    if config.variant != "cnn2d3d":
        config = ModelConfig(**{**asdict(config), "variant": "cnn2d3d"})
    return Network(config, cnn2d3d_specs(config))


def build_fully3d(config: ModelConfig) -> Network:
    if config.variant != "fully3d":
        config = ModelConfig(**{**asdict(config), "variant": "fully3d"})
    return Network(config, fully3d_specs(config))


def build_model(config: ModelConfig) -> Network:
    return build_cnn2d3d(config) if config.variant == "cnn2d3d" else build_fully3d(config)


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 50
    patience: int | None = 5
    huber_delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 2 or self.epochs < 1 or self.huber_delta <= 0:
            raise ValidationError(f"invalid training configuration: {self}")


@dataclass
class History:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.epochs.index(self.best_epoch)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            for row in zip(self.epochs, self.train_loss, self.val_loss):
                w.writerow([row[0], repr(row[1]), repr(row[2])])


def _loss(model, x, y, delta, training):
    return huber_loss(model(x, training=training), y, delta)


def evaluate_loss(model: Network, inputs: np.ndarray, targets: np.ndarray, delta: float = 1.0) -> float:
    if len(inputs) == 0:
        raise ValidationError("cannot evaluate on an empty split")
    pred = model.predict_std(inputs)
    return huber_loss(Tensor(pred), targets, delta).item()


def train(model: Network, samples: SampleSet, config: TrainConfig = TrainConfig()) -> tuple[Network, History]:
    """Adam on the Huber loss over the train split; restores the best-validation weights."""
    if not samples.standardized:
        raise ValidationError("train() expects a standardized SampleSet")
    x_tr, y_tr = samples.part("train")
    x_va, y_va = samples.part("val")
    if len(x_tr) < 2:
        raise ValidationError(f"train split has {len(x_tr)} samples; need at least 2")
    if len(x_va) == 0:
        raise ValidationError("validation split is empty")

    rng = make_rng(config.seed)
    params = model.parameters()
    state = AdamState(lr=config.lr)
    hist = History()
    best_val, best_state, bad_epochs, step = math.inf, model.state(), 0, 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x_tr))
        total, seen = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            if len(idx) < 2:  # batch norm cannot train on a single sample
                continue
            loss = _loss(model, x_tr[idx], y_tr[idx], config.huber_delta, True)
            step += 1
            lv = loss.item()
            if not math.isfinite(lv):
                raise TrainingDivergedError(epoch, step, lv)
            for p in params:
                p.grad = None
            loss.backward()
            adam_step([p.data for p in params], [p.grad for p in params], state)
            total += lv * len(idx)
            seen += len(idx)
        val = evaluate_loss(model, x_va, y_va, config.huber_delta)
        if not math.isfinite(val):
            raise TrainingDivergedError(epoch, step, val)
        hist.epochs.append(epoch)
        hist.train_loss.append(total / seen)
        hist.val_loss.append(val)
        if val < best_val:
            best_val, best_state, bad_epochs = val, model.state(), 0
            hist.best_epoch = epoch
        else:
            bad_epochs += 1
            if config.patience is not None and bad_epochs >= config.patience:
                hist.stopped_early = True
                break

    model.load_state(best_state)
    for p in params:
        p.grad = None
    return model, hist


def recalibrate_batchnorm(model: Network, inputs: np.ndarray) -> None:
    """Reset every batch-norm running mean/var to the exact (population) statistics
    of `inputs`, so eval mode on that batch reproduces training mode.

    Useful when the running averages lag the weights, e.g. after fitting a
    handful of near-identical samples. Parameters are untouched.
    """
    if len(inputs) < 2:
        raise ValidationError("recalibration needs at least two inputs")
    norms = [layer for layer in model.layers if isinstance(layer, BatchNorm)]
    for layer in norms:
        layer.momentum, layer.unbiased = 0.0, False
    try:
        model.forward(np.asarray(inputs, dtype=np.float64), training=True)
    finally:
        for layer in norms:
            del layer.momentum, layer.unbiased  # back to the class defaults


def predict(model: Network, window: SampleWindow, stats: StandardizeStats) -> tuple[float, float]:
    """Next-hour (u, v) in m/s from a raw (unstandardized) input window."""
    x = np.asarray(window.input, dtype=np.float64)
    want = (2, model.config.T, model.config.S, model.config.S)
    if x.shape != want:
        raise ShapeError(f"window shape {x.shape} does not match model input {want}")
    xs = (x - stats.mu.reshape(2, 1, 1, 1)) / stats.sigma.reshape(2, 1, 1, 1)
    out = invert_standardize(model.predict_std(xs[None])[0], stats)
    return float(out[0]), float(out[1])


def predict_samples(model: Network, samples: SampleSet, stats: StandardizeStats, split: str | None = None):
    """De-standardized predictions for a raw SampleSet (optionally one split)."""
    if samples.standardized:
        raise ValidationError("predict_samples expects raw (unstandardized) samples")
    idx = np.arange(len(samples)) if split is None else samples.indices(split)
    x = samples.inputs[idx]
    shape = (1, 2, 1, 1, 1)
    xs = (x - stats.mu.reshape(shape)) / stats.sigma.reshape(shape)
    return invert_standardize(model.predict_std(xs), stats), samples.targets[idx]


# ---------------------------------------------------------------- checkpoints


def save_checkpoint(model: Network, path, stats: StandardizeStats | None = None,
                    extra: dict | None = None) -> None:
    """Magic, u32 header length, JSON header, then float32 LE parameters and buffers in layer order."""
    arrays = model.state()
    header = {
        "model": model.config.to_dict(),
        "layers": [s.to_dict() for s in model.specs],
        "shapes": [list(a.shape) for a in arrays],
        "stats": stats.to_dict() if stats is not None else None,
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[Network, StandardizeStats | None, dict]:
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: not a checkpoint file")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode("utf-8"))
        payload = fh.read()
    mc = header["model"]
    config = ModelConfig(mc["variant"], mc["T"], mc["S"], mc["seed"], tuple(mc["channels"]), mc["dense_units"])
    model = Network(config, [LayerSpec.from_dict(d) for d in header["layers"]])
    flat = np.frombuffer(payload, dtype="<f4")
    sizes = [int(np.prod(s)) for s in header["shapes"]]
    if flat.size != sum(sizes):
        raise FormatError(f"{path}: payload has {flat.size} floats, header implies {sum(sizes)}")
    arrays, off = [], 0
    for shape, k in zip(header["shapes"], sizes):
        arrays.append(flat[off:off + k].astype(np.float64).reshape(shape))
        off += k
    model.load_state(arrays)
    stats = StandardizeStats(**header["stats"]) if header.get("stats") else None
    return model, stats, header.get("extra", {})
