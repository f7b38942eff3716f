"""Dense and bidirectional-LSTM layers with hand-derived backward passes.

Forward passes return (output, cache); backward passes consume the cache,
accumulate parameter gradients into the layers' Tensor.grad buffers, and
return the gradient w.r.t. the layer input. All arrays are float64.
"""

from __future__ import annotations

import numpy as np

from drumweave.nn.core import (
    Prng,
    Tensor,
    activation_forward,
    activation_grad,
    glorot_uniform,
    logistic,
)


class DenseLayer:
    """y = act(W x + b) over the last axis; x may be (in,) or (batch, in)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "relu",
                 rng: Prng | None = None):
        if rng is None:
            self.W = Tensor(np.zeros((out_dim, in_dim)))
        else:
            self.W = Tensor(glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim)))
        self.b = Tensor(np.zeros(out_dim))
        self.activation = activation
        self.in_dim = in_dim
        self.out_dim = out_dim

    def params(self) -> list[tuple[str, Tensor]]:
        return [("W", self.W), ("b", self.b)]

    def forward(self, x: np.ndarray):
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"expected input dim {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.W.data.T + self.b.data
        y = activation_forward(self.activation, z)
        cache = (x, z, y, squeeze)
        return (y[0] if squeeze else y), cache

    def backward(self, cache, upstream: np.ndarray) -> np.ndarray:
        x, z, y, squeeze = cache
        if squeeze:
            upstream = upstream[None, :]
        dz = upstream * activation_grad(self.activation, z, y)
        self.W.grad += dz.T @ x
        self.b.grad += dz.sum(axis=0)
        dx = dz @ self.W.data
        return dx[0] if squeeze else dx


class LstmDirection:
    """One direction of an LSTM: single forget-gate form, no peepholes.

    Gate pre-activations are stacked [input, forget, output, candidate]
    along the first axis of Wx/Wh/b: one matmul per step, one sigmoid
    over the three logistic gates, one tanh over the candidate.
    """

    def __init__(self, in_dim: int, hidden: int, rng: Prng | None = None):
        H, F = hidden, in_dim
        if rng is None:
            wx = np.zeros((4 * H, F))
            wh = np.zeros((4 * H, H))
        else:
            wx = np.concatenate(
                [glorot_uniform(rng, F, H, (H, F)) for _ in range(4)], axis=0)
            wh = np.concatenate(
                [glorot_uniform(rng, H, H, (H, H)) for _ in range(4)], axis=0)
        self.Wx = Tensor(wx)
        self.Wh = Tensor(wh)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0  # forget-gate bias starts open
        self.b = Tensor(b)
        self.hidden = H
        self.in_dim = F

    def params(self) -> list[tuple[str, Tensor]]:
        return [("Wx", self.Wx), ("Wh", self.Wh), ("b", self.b)]

    def forward(self, x: np.ndarray):
        """x: (B, T, F) -> hidden states (B, T, H) plus BPTT cache."""
        B, T, F = x.shape
        H = self.hidden
        pre_x = x.reshape(B * T, F) @ self.Wx.data.T
        pre_x = pre_x.reshape(B, T, 4 * H) + self.b.data
        wh_t = self.Wh.data.T
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        hs = np.zeros((B, T, H))
        gates = np.zeros((B, T, 4 * H))
        cells = np.zeros((B, T, H))
        tanh_c = np.zeros((B, T, H))
        for t in range(T):
            a = pre_x[:, t] + h @ wh_t
            sig = logistic(a[:, :3 * H])
            g = np.tanh(a[:, 3 * H:])
            i = sig[:, :H]
            f = sig[:, H:2 * H]
            o = sig[:, 2 * H:3 * H]
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates[:, t, :3 * H] = sig
            gates[:, t, 3 * H:] = g
            hs[:, t] = h
            cells[:, t] = c
            tanh_c[:, t] = tc
        cache = (x, gates, cells, tanh_c, hs)
        return hs, cache

    def backward(self, cache, upstream: np.ndarray) -> np.ndarray:
        """upstream: (B, T, H) -> gradient w.r.t. x, accumulating params."""
        x, gates, cells, tanh_c, hs = cache
        B, T, F = x.shape
        H = self.hidden
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        da_all = np.zeros((B, T, 4 * H))
        for t in range(T - 1, -1, -1):
            i = gates[:, t, :H]
            f = gates[:, t, H:2 * H]
            o = gates[:, t, 2 * H:3 * H]
            g = gates[:, t, 3 * H:]
            tc = tanh_c[:, t]
            c_prev = cells[:, t - 1] if t > 0 else np.zeros((B, H))
            dh = upstream[:, t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            da = da_all[:, t]
            da[:, :H] = dc * g * i * (1.0 - i)
            da[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
            da[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
            da[:, 3 * H:] = dc * i * (1.0 - g * g)
            dh_next = da @ self.Wh.data
            dc_next = dc * f
        # weight gradients in one pass over the stored per-step deltas
        da_flat = da_all.reshape(B * T, 4 * H)
        self.Wx.grad += da_flat.T @ x.reshape(B * T, F)
        h_prev = np.zeros_like(hs)
        h_prev[:, 1:] = hs[:, :-1]
        self.Wh.grad += da_flat.T @ h_prev.reshape(B * T, H)
        self.b.grad += da_flat.sum(axis=0)
        dx = (da_flat @ self.Wx.data).reshape(B, T, F)
        return dx


class BiLstmLayer:
    """Left-to-right and right-to-left LSTM passes, outputs concatenated.

    Input (B, T, F) or (T, F); output (..., T, 2H) with the forward
    direction in the first H columns.
    """

    def __init__(self, in_dim: int, hidden: int, rng: Prng | None = None):
        self.fwd = LstmDirection(in_dim, hidden, rng)
        self.bwd = LstmDirection(in_dim, hidden, rng)
        self.hidden = hidden
        self.in_dim = in_dim

    def params(self) -> list[tuple[str, Tensor]]:
        return [("fwd." + n, t) for n, t in self.fwd.params()] + \
               [("bwd." + n, t) for n, t in self.bwd.params()]

    def forward(self, x: np.ndarray):
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"expected input dim {self.in_dim}, got {x.shape[-1]}")
        h_f, cache_f = self.fwd.forward(x)
        h_b_rev, cache_b = self.bwd.forward(x[:, ::-1])
        h_b = h_b_rev[:, ::-1]
        out = np.concatenate([h_f, h_b], axis=-1)
        cache = (cache_f, cache_b, squeeze)
        return (out[0] if squeeze else out), cache

    def backward(self, cache, upstream: np.ndarray) -> np.ndarray:
        cache_f, cache_b, squeeze = cache
        if squeeze:
            upstream = upstream[None]
        H = self.hidden
        dx = self.fwd.backward(cache_f, np.ascontiguousarray(upstream[..., :H]))
        d_rev = np.ascontiguousarray(upstream[..., H:][:, ::-1])
        dx += self.bwd.backward(cache_b, d_rev)[:, ::-1]
        return dx[0] if squeeze else dx


class LayerStack:
    """Sequential container that threads forward caches to backward."""

    def __init__(self, layers):
        self.layers = list(layers)

    def params(self) -> list[tuple[str, Tensor]]:
        out = []
        for idx, layer in enumerate(self.layers):
            out += [(f"{idx}.{n}", t) for n, t in layer.params()]
        return out

    def forward(self, x: np.ndarray):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, upstream: np.ndarray) -> np.ndarray:
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            upstream = layer.backward(cache, upstream)
        return upstream
