"""Tensors, deterministic RNG, activations, and the BCE loss.

Everything is 64-bit: the desk-scale models are small and the
finite-difference gradient checks need the precision.
"""

from __future__ import annotations

import numpy as np

BCE_EPS = 1e-7


class Tensor:
    """Shape-tagged float64 buffer with a paired gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray, with_grad: bool = True):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data) if with_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


class Prng:
    """Deterministic random stream (numpy PCG64 behind a 64-bit seed).

    The same seed yields the same stream on every platform; all model
    initialization, shuffling, and sampling draws from instances of this
    class so training runs are bit-reproducible.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, shape)

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def integers(self, high: int, size=None):
        return self._gen.integers(0, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def derive(self) -> "Prng":
        """Child stream with a seed drawn from this stream."""
        return Prng(int(self._gen.integers(0, 2 ** 63)))


# --- activations -------------------------------------------------------------

def logistic(x: np.ndarray) -> np.ndarray:
    # overflow-free for any magnitude: exp argument is always <= 0
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


_ACTIVATIONS = {
    "relu": (lambda x: np.maximum(x, 0.0),
             lambda x, y: (x > 0.0).astype(np.float64)),
    "tanh": (np.tanh,
             lambda x, y: 1.0 - y * y),
    "logistic": (logistic,
                 lambda x, y: y * (1.0 - y)),
    "none": (lambda x: x,
             lambda x, y: np.ones_like(x)),
}


def activation_forward(name: str, x: np.ndarray) -> np.ndarray:
    return _ACTIVATIONS[name][0](x)


def activation_grad(name: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d(act)/dx given pre-activation x and output y = act(x)."""
    return _ACTIVATIONS[name][1](x, y)


ACTIVATION_NAMES = tuple(_ACTIVATIONS)


# --- loss --------------------------------------------------------------------

def bce_loss(p: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. ``p``.

    Predictions are clamped to [1e-7, 1-1e-7] before the logs; the
    gradient is zero where the clamp is active so finite differences
    agree exactly.
    """
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    inside = (p > BCE_EPS) & (p < 1.0 - BCE_EPS)
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    loss = float(np.mean(-(t * np.log(pc) + (1.0 - t) * np.log1p(-pc))))
    grad = (pc - t) / (pc * (1.0 - pc)) / p.size * inside
    return loss, grad


# --- initialization ----------------------------------------------------------

def glorot_uniform(rng: Prng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)
