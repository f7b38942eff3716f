"""Generative adversarial network over drum patterns and the swirl explorer.

The generator mirrors the VAE decoder (five dense layers, logistic
output) but reads a 2-D noise code so a fixed complex periodic curve can
sweep the noise space: the real and imaginary parts of

    f(t) = e^(w1 jt) - e^(w2 jt)/2 + j e^(w3 jt)/3 + e^(w4 jt)/4

trace a smooth closed "swirl" whose decoded patterns form an endless
autonomous drum performance. The discriminator mirrors the VAE encoder
(BiLSTM stack ending in one logistic unit); a dense-only variant exists
for fast desk-scale runs.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from drumweave.nn import (
    AdamState,
    BiLstmLayer,
    DenseLayer,
    LayerStack,
    Prng,
    Tensor,
    adam_step,
    bce_loss,
    load_checkpoint,
    save_checkpoint,
)
from drumweave.patterns import (
    GRID_CELLS,
    N_INSTRUMENTS,
    N_STEPS,
    DrumPattern,
    PatternSequence,
    binarize,
)

DEFAULT_OMEGAS = (2, 19, -20, 20)

#: max |f| over the default omegas is 1 + 1/2 + 1/3 + 1/4 < 2.084; dividing
#: by 2.084 keeps the sweep inside the uniform [-1, 1]^2 noise prior.
DEFAULT_SWIRL_SCALE = 1.0 / 2.084


@dataclass(frozen=True)
class GanArchitecture:
    noise_dim: int = 2
    generator_widths: tuple[int, ...] = (16, 64, 128, 256)
    #: Hidden activation of the generator stack. ReLU mirrors the decoder;
    #: tanh keeps gradients alive on tiny corpora whose targets saturate
    #: the logistic output layer.
    generator_activation: str = "relu"
    #: Scale on the generator's output-layer init; < 1 starts all cells
    #: near 0.5 so early training keeps per-cell gradients.
    generator_output_scale: float = 1.0
    discriminator: str = "bilstm"  # "bilstm" follows the model shapes; "dense" is faster
    lstm_hidden: int = 32
    lstm_layers: int = 3
    discriminator_widths: tuple[int, ...] = (128, 64, 32, 16)
    #: Append the batch's mean per-cell standard deviation as an extra
    #: discriminator input. A mode-collapsed generator emits near-zero
    #: batch diversity, so this feature makes mode dropping immediately
    #: detectable and puts direct pressure on the generator to diversify.
    minibatch_std: bool = False

    def to_manifest(self) -> dict:
        return {
            "noise_dim": self.noise_dim,
            "generator_widths": list(self.generator_widths),
            "generator_activation": self.generator_activation,
            "generator_output_scale": self.generator_output_scale,
            "discriminator": self.discriminator,
            "lstm_hidden": self.lstm_hidden,
            "lstm_layers": self.lstm_layers,
            "discriminator_widths": list(self.discriminator_widths),
            "minibatch_std": self.minibatch_std,
        }

    @classmethod
    def from_manifest(cls, doc: dict) -> "GanArchitecture":
        return cls(
            noise_dim=doc["noise_dim"],
            generator_widths=tuple(doc["generator_widths"]),
            generator_activation=doc.get("generator_activation", "relu"),
            generator_output_scale=doc.get("generator_output_scale", 1.0),
            discriminator=doc["discriminator"],
            lstm_hidden=doc["lstm_hidden"],
            lstm_layers=doc["lstm_layers"],
            discriminator_widths=tuple(doc["discriminator_widths"]),
            minibatch_std=doc.get("minibatch_std", False),
        )


#: Dense discriminator with the diversity feature, tanh generator with a
#: soft output start: fast and mode-seeking enough for toy-corpus tests.
SMALL_GAN_ARCHITECTURE = GanArchitecture(
    generator_widths=(16, 32, 64, 128),
    generator_activation="tanh",
    generator_output_scale=0.1,
    discriminator="dense",
    discriminator_widths=(64, 32, 16, 8),
    minibatch_std=True,
)


@dataclass
class GanTrainConfig:
    epochs: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0
    #: Starting std of Gaussian noise added to every discriminator input
    #: (real and fake), decaying linearly toward ``instance_noise_floor``
    #: over the first 80% of the epochs. Smooths the two data
    #: distributions into overlap so the discriminator cannot saturate
    #: early.
    instance_noise: float = 0.15
    instance_noise_floor: float = 0.05
    #: Every this many epochs, score a fixed probe batch of generator
    #: samples by diversity (mean per-cell std) and keep the
    #: highest-scoring generator snapshot. Adversarial equilibria here
    #: are metastable: coverage of all data modes is routinely reached
    #: mid-run and lost again, so the returned generator is the best
    #: snapshot rather than the last. 0 disables snapshotting.
    snapshot_every: int = 10

    def __post_init__(self) -> None:
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, batch size, and learning rate must be positive")
        if self.instance_noise < 0 or self.instance_noise_floor < 0:
            raise ValueError("instance noise levels must be non-negative")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be non-negative")


class GanModel:
    """Generator/discriminator pair over the 6x64 pattern space."""

    def __init__(self, arch: GanArchitecture = GanArchitecture(),
                 rng: Prng | None = None):
        self.arch = arch
        gen_dims = [arch.noise_dim, *arch.generator_widths]
        gen_layers = [
            DenseLayer(gen_dims[i], gen_dims[i + 1], arch.generator_activation, rng)
            for i in range(len(arch.generator_widths))
        ]
        out_layer = DenseLayer(gen_dims[-1], GRID_CELLS, "logistic", rng)
        out_layer.W.data *= arch.generator_output_scale
        gen_layers.append(out_layer)
        self.generator = LayerStack(gen_layers)

        if arch.discriminator == "bilstm":
            H = arch.lstm_hidden
            in_dims = [N_INSTRUMENTS] + [2 * H] * (arch.lstm_layers - 1)
            self.disc_lstm = LayerStack([BiLstmLayer(d, H, rng) for d in in_dims])
            fc_in = 2 * H
        elif arch.discriminator == "dense":
            self.disc_lstm = None
            fc_in = GRID_CELLS
        else:
            raise ValueError(f"unknown discriminator kind {arch.discriminator!r}")
        if arch.minibatch_std:
            fc_in += 1
        fc_dims = [fc_in, *arch.discriminator_widths]
        disc_layers = [DenseLayer(fc_dims[i], fc_dims[i + 1], "relu", rng)
                       for i in range(len(arch.discriminator_widths))]
        disc_layers.append(DenseLayer(fc_dims[-1], 1, "logistic", rng))
        self.disc_fc = LayerStack(disc_layers)

    # --- parameters -----------------------------------------------------------

    def generator_params(self) -> list[tuple[str, Tensor]]:
        return [("gen." + n, t) for n, t in self.generator.params()]

    def discriminator_params(self) -> list[tuple[str, Tensor]]:
        out = []
        if self.disc_lstm is not None:
            out += [("disc_lstm." + n, t) for n, t in self.disc_lstm.params()]
        out += [("disc_fc." + n, t) for n, t in self.disc_fc.params()]
        return out

    def params(self) -> list[tuple[str, Tensor]]:
        return self.generator_params() + self.discriminator_params()

    def zero_grads(self) -> None:
        for _, t in self.params():
            t.zero_grad()

    # --- forward passes ---------------------------------------------------------

    def generate_batch(self, z: np.ndarray):
        flat, caches = self.generator.forward(z)
        return flat, caches

    def generate(self, z: np.ndarray) -> np.ndarray:
        """Probability grid for one noise code."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.arch.noise_dim,):
            raise ValueError(f"expected noise dim {self.arch.noise_dim}, got {z.shape}")
        flat, _ = self.generator.forward(z[None, :])
        return flat[0].reshape(N_INSTRUMENTS, N_STEPS)

    #: Scale on the diversity feature: one column among hundreds needs
    #: amplification before its gradient competes with the per-cell terms.
    MBSTD_GAIN = 8.0

    @classmethod
    def _batch_std(cls, flat: np.ndarray):
        """Scaled mean over cells of the per-cell std across the batch."""
        mean = flat.mean(axis=0, keepdims=True)
        var = np.mean((flat - mean) ** 2, axis=0)
        std = np.sqrt(var + 1e-8)
        return cls.MBSTD_GAIN * float(std.mean()), mean, std

    def discriminate_batch(self, flat: np.ndarray):
        """flat: (B, 384) -> probabilities (B, 1) plus cache."""
        std_cache = None
        if self.disc_lstm is not None:
            seqs = np.ascontiguousarray(
                flat.reshape(-1, N_INSTRUMENTS, N_STEPS).transpose(0, 2, 1))
            h, lstm_caches = self.disc_lstm.forward(seqs)
            H = self.arch.lstm_hidden
            features = np.concatenate([h[:, -1, :H], h[:, 0, H:]], axis=-1)
            h_shape = h.shape
        else:
            features = flat
            lstm_caches = None
            h_shape = None
        if self.arch.minibatch_std:
            s, mean, std = self._batch_std(flat)
            col = np.full((flat.shape[0], 1), s)
            features = np.concatenate([features, col], axis=-1)
            std_cache = (flat, mean, std)
        p, fc_caches = self.disc_fc.forward(features)
        return p, (lstm_caches, fc_caches, h_shape, std_cache)

    def discriminate_backward(self, cache, d_p: np.ndarray) -> np.ndarray:
        """Returns gradient w.r.t. the flat (B, 384) input."""
        lstm_caches, fc_caches, h_shape, std_cache = cache
        d_features = self.disc_fc.backward(fc_caches, d_p)
        d_std_flat = 0.0
        if self.arch.minibatch_std:
            flat, mean, std = std_cache
            d_s = float(d_features[:, -1].sum())
            B, J = flat.shape
            d_std_flat = self.MBSTD_GAIN * d_s * (flat - mean) / (B * J * std)
            d_features = d_features[:, :-1]
        if self.disc_lstm is None:
            return d_features + d_std_flat
        H = self.arch.lstm_hidden
        dh = np.zeros(h_shape)
        dh[:, -1, :H] = d_features[:, :H]
        dh[:, 0, H:] += d_features[:, H:]
        d_seqs = self.disc_lstm.backward(lstm_caches, dh)
        return d_seqs.transpose(0, 2, 1).reshape(-1, GRID_CELLS) + d_std_flat

    def discriminate(self, pattern: DrumPattern) -> float:
        p, _ = self.discriminate_batch(pattern.grid.reshape(1, GRID_CELLS))
        return float(p[0, 0])

    # --- objectives ---------------------------------------------------------------

    def gan_losses(self, real_flat: np.ndarray,
                   noise: np.ndarray) -> tuple[float, float]:
        """(J_d, J_g) at the current parameters; no gradients."""
        fake_flat, _ = self.generate_batch(noise)
        d_real, _ = self.discriminate_batch(real_flat)
        d_fake, _ = self.discriminate_batch(fake_flat)
        j_d = bce_loss(d_real, np.ones_like(d_real))[0] \
            + bce_loss(d_fake, np.zeros_like(d_fake))[0]
        j_g = bce_loss(d_fake, np.ones_like(d_fake))[0]
        return j_d, j_g

    def discriminator_step_grads(self, real_flat: np.ndarray,
                                 fake_flat: np.ndarray) -> tuple[float, float]:
        """Fill discriminator grads for J_d on prepared real/fake batches."""
        d_real, cache_r = self.discriminate_batch(real_flat)
        loss_r, grad_r = bce_loss(d_real, np.ones_like(d_real))
        self.discriminate_backward(cache_r, grad_r)
        d_fake, cache_f = self.discriminate_batch(fake_flat)
        loss_f, grad_f = bce_loss(d_fake, np.zeros_like(d_fake))
        self.discriminate_backward(cache_f, grad_f)
        correct = int(np.sum(d_real > 0.5)) + int(np.sum(d_fake <= 0.5))
        accuracy = correct / (d_real.size + d_fake.size)
        return loss_r + loss_f, accuracy

    def generator_step_grads(self, noise: np.ndarray,
                             jitter: np.ndarray | None = None) -> float:
        """Fill generator grads for J_g (gradients flow through D).

        ``jitter`` is additive input noise for the discriminator; it does
        not change the gradient path into the generator.
        """
        fake_flat, gen_caches = self.generate_batch(noise)
        d_in = fake_flat if jitter is None else fake_flat + jitter
        d_fake, cache = self.discriminate_batch(d_in)
        loss, grad = bce_loss(d_fake, np.ones_like(d_fake))
        d_flat = self.discriminate_backward(cache, grad)
        self.generator.backward(gen_caches, d_flat)
        return loss

    # --- persistence -----------------------------------------------------------------

    def to_tensors(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.params()}

    def load_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        for name, t in self.params():
            if name not in tensors:
                raise KeyError(f"checkpoint missing tensor {name!r}")
            t.data[...] = tensors[name]

    def save(self, directory: Path | str, extra_manifest: dict | None = None) -> None:
        manifest = {"model": "gan", **self.arch.to_manifest()}
        if extra_manifest:
            manifest.update(extra_manifest)
        save_checkpoint(directory, self.to_tensors(), manifest)

    @classmethod
    def load(cls, directory: Path | str) -> tuple["GanModel", dict]:
        tensors, manifest = load_checkpoint(directory)
        if manifest.get("model") != "gan":
            raise ValueError(f"{directory}: not a GAN checkpoint")
        model = cls(GanArchitecture.from_manifest(manifest))
        model.load_tensors(tensors)
        return model, manifest


@dataclass
class GanEpochStats:
    epoch: int
    j_d: float
    j_g: float
    accuracy: float


@dataclass
class GanTrainResult:
    model: GanModel
    history: list[GanEpochStats]


def sample_noise(rng: Prng, n: int, dim: int) -> np.ndarray:
    """Noise prior: uniform on [-1, 1]^dim."""
    return rng.uniform(-1.0, 1.0, (n, dim))


def gan_train(patterns, config: GanTrainConfig,
              arch: GanArchitecture = GanArchitecture(),
              log_every: int | None = None) -> GanTrainResult:
    """Alternating one-discriminator/one-generator steps on balanced batches."""
    patterns = list(patterns)
    if not patterns:
        raise ValueError("training set is empty")
    master = Prng(config.seed)
    init_rng = master.derive()
    shuffle_rng = master.derive()
    noise_rng = master.derive()

    model = GanModel(arch, rng=init_rng)
    gen_params = [t for _, t in model.generator_params()]
    disc_params = [t for _, t in model.discriminator_params()]
    adam_g = AdamState(gen_params, alpha=config.learning_rate)
    adam_d = AdamState(disc_params, alpha=config.learning_rate)

    all_flat = np.stack([p.grid.reshape(GRID_CELLS) for p in patterns])
    n = len(patterns)
    dim = arch.noise_dim
    probe = sample_noise(master.derive(), 256, dim)
    best_score = -1.0
    best_gen: dict[str, np.ndarray] | None = None
    history: list[GanEpochStats] = []
    for epoch in range(1, config.epochs + 1):
        sigma = max(config.instance_noise_floor,
                    config.instance_noise
                    * (1.0 - (epoch - 1) / (0.8 * config.epochs)))
        order = shuffle_rng.permutation(n)
        sums = np.zeros(3)
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            b = len(idx)

            real = all_flat[idx]
            fake, _ = model.generate_batch(sample_noise(noise_rng, b, dim))
            if sigma > 0.0:
                real = real + sigma * noise_rng.normal(real.shape)
                fake = fake + sigma * noise_rng.normal(fake.shape)
            model.zero_grads()
            j_d, acc = model.discriminator_step_grads(real, fake)
            adam_step(adam_d, disc_params)

            jitter = sigma * noise_rng.normal((b, GRID_CELLS)) if sigma > 0.0 else None
            model.zero_grads()
            j_g = model.generator_step_grads(sample_noise(noise_rng, b, dim), jitter)
            adam_step(adam_g, gen_params)
            sums += np.array([j_d, j_g, acc])
            batches += 1
        stats = GanEpochStats(epoch, *(sums / batches))
        history.append(stats)
        if config.snapshot_every and epoch % config.snapshot_every == 0:
            flat, _ = model.generate_batch(probe)
            score = float(flat.std(axis=0).mean())
            if score > best_score:
                best_score = score
                best_gen = {n_: t.data.copy()
                            for n_, t in model.generator_params()}
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch}: J_d={stats.j_d:.4f} J_g={stats.j_g:.4f} "
                  f"acc={stats.accuracy:.3f}")
    if best_gen is not None:
        for name, t in model.generator_params():
            t.data[...] = best_gen[name]
    return GanTrainResult(model=model, history=history)


# --- swirl -----------------------------------------------------------------

@dataclass(frozen=True)
class SwirlConfig:
    omegas: tuple[int, int, int, int] = DEFAULT_OMEGAS
    steps: int = 124
    scale: float = DEFAULT_SWIRL_SCALE

    def __post_init__(self) -> None:
        if len(self.omegas) != 4:
            raise ValueError("swirl needs four angular frequencies")
        if any(int(w) != w for w in self.omegas):
            raise ValueError("angular frequencies must be integers for periodicity")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        object.__setattr__(self, "omegas", tuple(int(w) for w in self.omegas))

    def lipschitz_bound(self) -> float:
        """|f(t+d) - f(t)| <= L*d with L from the term-wise derivative bound."""
        w1, w2, w3, w4 = self.omegas
        return (abs(w1) + abs(w2) / 2.0 + abs(w3) / 3.0 + abs(w4) / 4.0) * self.scale


def swirl_value(t: float, omegas: tuple[int, int, int, int] = DEFAULT_OMEGAS) -> complex:
    """The unscaled periodic curve f(t) in the complex plane."""
    w1, w2, w3, w4 = omegas
    return (cmath.exp(1j * w1 * t)
            - cmath.exp(1j * w2 * t) / 2.0
            + 1j * cmath.exp(1j * w3 * t) / 3.0
            + cmath.exp(1j * w4 * t) / 4.0)


def swirl_point(t: float, cfg: SwirlConfig = SwirlConfig()) -> np.ndarray:
    """(Re f, Im f) scaled into the noise prior's support."""
    f = swirl_value(t, cfg.omegas) * cfg.scale
    return np.array([f.real, f.imag])


def swirl_times(cfg: SwirlConfig) -> np.ndarray:
    """Evenly spaced parameter values covering one full period."""
    return 2.0 * np.pi * np.arange(cfg.steps) / (cfg.steps - 1)


def swirl_sequence(model: GanModel, cfg: SwirlConfig = SwirlConfig(),
                   velocity_floor: float = 0.1,
                   tempo_bpm: float = 129.0) -> PatternSequence:
    """Decode the swirl into patterns; endpoints coincide by periodicity."""
    patterns = []
    for t in swirl_times(cfg):
        grid = model.generate(swirl_point(t, cfg))
        patterns.append(binarize(grid, velocity_floor, genre="Generated"))
    return PatternSequence(tuple(patterns), tempo_bpm=tempo_bpm)
