"""Adam optimizer and the finite-difference gradient checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from drumweave.nn.core import Prng, Tensor


class AdamState:
    """Per-parameter moment buffers for bias-corrected Adam."""

    def __init__(self, params: Sequence[Tensor], alpha: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(state: AdamState, params: Sequence[Tensor],
              grads: Sequence[np.ndarray] | None = None) -> Sequence[Tensor]:
    """One bias-corrected Adam update, in place on ``params``.

    ``grads`` defaults to each parameter's own gradient buffer.
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ValueError("params and grads length mismatch")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.data.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / (1.0 - b1 ** t)
        v_hat = state.v[i] / (1.0 - b2 ** t)
        p.data -= state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_checked: int
    tolerance: float
    worst_param: str = ""
    worst_index: int = -1
    analytic: float = 0.0
    numeric: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: max relative error {self.max_rel_error:.3e} over "
                f"{self.n_checked} coordinates (tolerance {self.tolerance:.1e}, "
                f"worst {self.worst_param}[{self.worst_index}])")


def _rel_error(a: float, n: float) -> float:
    # absolute floor keeps FD roundoff noise on near-zero coordinates
    # from registering as spurious relative error
    return abs(a - n) / max(abs(a), abs(n), 1e-6)


def gradient_check(loss_fn: Callable[[], float],
                   params: Sequence[tuple[str, Tensor]],
                   h: float = 1e-5,
                   tolerance: float = 1e-4,
                   sample_per_tensor: int | None = None,
                   rng: Prng | None = None) -> GradCheckReport:
    """Central finite differences against the stored analytic gradients.

    ``loss_fn`` must be a deterministic scalar function of the current
    parameter values and must not touch gradient buffers. The caller
    computes analytic gradients into each Tensor.grad before calling.
    With ``sample_per_tensor`` set, only a seeded random subset of each
    tensor's coordinates is probed (large models are too slow to probe
    exhaustively); otherwise every coordinate is checked.
    """
    report = GradCheckReport(max_rel_error=0.0, n_checked=0, tolerance=tolerance)
    for name, tensor in params:
        flat = tensor.data.reshape(-1)
        grad = tensor.grad.reshape(-1)
        size = flat.size
        if sample_per_tensor is not None and sample_per_tensor < size:
            if rng is None:
                raise ValueError("sampling requires an rng")
            idx = np.sort(rng.permutation(size)[:sample_per_tensor])
        else:
            idx = np.arange(size)
        for i in idx:
            saved = flat[i]
            flat[i] = saved + h
            up = loss_fn()
            flat[i] = saved - h
            down = loss_fn()
            flat[i] = saved
            numeric = (up - down) / (2.0 * h)
            rel = _rel_error(grad[i], numeric)
            report.n_checked += 1
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst_param = name
                report.worst_index = int(i)
                report.analytic = float(grad[i])
                report.numeric = float(numeric)
    return report
