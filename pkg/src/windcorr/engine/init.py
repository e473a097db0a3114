"""Weight initializers. All randomness flows through numpy's PCG64 generator."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError
from .tensor import Tensor


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; the algorithm is fixed so draws match across platforms."""
    return np.random.Generator(np.random.PCG64(seed))


def he_uniform_bound(n_in: int) -> float:
    if n_in < 1:
        raise ValidationError(f"n_in must be >= 1, got {n_in}")
    return math.sqrt(6.0 / n_in)


def he_uniform_init(shape, n_in: int, rng: np.random.Generator) -> Tensor:
    """Uniform samples on (-sqrt(6/n_in), sqrt(6/n_in)), tracked for gradients."""
    bound = he_uniform_bound(n_in)
    return Tensor(rng.uniform(-bound, bound, size=tuple(shape)), requires_grad=True)
