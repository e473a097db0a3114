"""Layer objects built from declarative LayerSpecs."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ValidationError
from . import functional as F
from .init import he_uniform_init
from .tensor import Tensor

KINDS = ("conv3d", "conv2d", "batchnorm", "leaky_relu", "flatten", "dense", "collapse_time")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    channels_in: int = 0
    channels_out: int = 0
    kernel: tuple[int, ...] = ()
    padding: str = "same"
    stride: int = 1
    alpha: float = 0.3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        object.__setattr__(self, "kernel", tuple(int(k) for k in self.kernel))
        if any(k < 1 for k in self.kernel):
            raise ValidationError(f"kernel dims must be positive: {self.kernel}")
        want = {"conv3d": 3, "conv2d": 2}.get(self.kind)
        if want is not None and len(self.kernel) != want:
            raise ValidationError(f"{self.kind} needs a {want}-d kernel, got {self.kernel}")

    @property
    def fan_in(self) -> int:
        """n_in for He initialization: input channels times kernel volume."""
        return self.channels_in * int(np.prod(self.kernel or (1,)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel"] = list(self.kernel)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**{**d, "kernel": tuple(d.get("kernel", ()))})


class Layer:
    def __init__(self, spec: LayerSpec):
        self.spec = spec

    def parameters(self) -> list[Tensor]:
        return []

    def buffers(self) -> list[np.ndarray]:
        return []

    def __call__(self, x: Tensor, training: bool = False) -> Tensor:
        return self.forward(x, training)


class Conv(Layer):
    def __init__(self, spec, rng):
        super().__init__(spec)
        shape = (spec.channels_out, spec.channels_in) + spec.kernel
        self.weight = he_uniform_init(shape, spec.fan_in, rng)
        self.bias = he_uniform_init((spec.channels_out,), spec.fan_in, rng)

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x, training=False):
        return F.conv(x, self.weight, self.bias, self.spec.stride, self.spec.padding)


class BatchNorm(Layer):
    momentum = 0.9
    eps = 1e-5
    unbiased = True

    def __init__(self, spec, rng=None):
        super().__init__(spec)
        c = spec.channels_in
        self.gamma = Tensor(np.ones(c), requires_grad=True)
        self.beta = Tensor(np.zeros(c), requires_grad=True)
        self.running_mean = np.zeros(c)
        self.running_var = np.ones(c)

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [self.running_mean, self.running_var]

    def forward(self, x, training=False):
        return F.batchnorm(x, self.gamma, self.beta, self.running_mean, self.running_var,
                           training, self.momentum, self.eps, self.unbiased)


class LeakyReLU(Layer):
    def __init__(self, spec, rng=None):
        super().__init__(spec)

    def forward(self, x, training=False):
        return F.leaky_relu(x, self.spec.alpha)


class Flatten(Layer):
    def __init__(self, spec, rng=None):
        super().__init__(spec)

    def forward(self, x, training=False):
        return F.flatten(x)


class CollapseTime(Layer):
    """Mean over the time axis: [N][C][T][H][W] -> [N][C][H][W]."""

    def __init__(self, spec, rng=None):
        super().__init__(spec)

    def forward(self, x, training=False):
        return F.mean_axis(x, 2)


class Dense(Layer):
    def __init__(self, spec, rng):
        super().__init__(spec)
        self.weight = he_uniform_init((spec.channels_in, spec.channels_out), spec.fan_in, rng)
        self.bias = he_uniform_init((spec.channels_out,), spec.fan_in, rng)

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x, training=False):
        return F.linear(x, self.weight, self.bias)


_BUILDERS = {
    "conv3d": Conv, "conv2d": Conv, "batchnorm": BatchNorm, "leaky_relu": LeakyReLU,
    "flatten": Flatten, "dense": Dense, "collapse_time": CollapseTime,
}


def build_layer(spec: LayerSpec, rng: np.random.Generator) -> Layer:
    return _BUILDERS[spec.kind](spec, rng)
