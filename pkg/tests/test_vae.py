import math

import numpy as np
import pytest

from drumweave.nn import Prng, gradient_check
from drumweave.patterns import DrumPattern, GRID_CELLS
from drumweave.vae import (
    DEFAULT_BETA,
    SMALL_ARCHITECTURE,
    VaeArchitecture,
    VaeModel,
    VaeTrainConfig,
    _pattern_batch,
    kl_term,
    reparameterize,
    train,
    write_history_csv,
)


def rand_patterns(n, seed=0, density=0.25):
    rng = Prng(seed)
    out = []
    for _ in range(n):
        g = rng.uniform(0, 1, (6, 64)) * (rng.uniform(0, 1, (6, 64)) < density)
        out.append(DrumPattern(np.round(g * 127) / 127))
    return out


@pytest.fixture(scope="module")
def small_model():
    return VaeModel(SMALL_ARCHITECTURE, rng=Prng(404))


class TestEncode:
    def test_deterministic(self, small_model):
        p = rand_patterns(1, seed=1)[0]
        mu1, lv1 = small_model.encode(p)
        mu2, lv2 = small_model.encode(p)
        assert np.array_equal(mu1, mu2)
        assert np.array_equal(lv1, lv2)

    def test_zeroed_heads_give_zero_outputs(self):
        model = VaeModel(SMALL_ARCHITECTURE, rng=Prng(2))
        model.head_mu.W.data[...] = 0.0
        model.head_mu.b.data[...] = 0.0
        model.head_logvar.W.data[...] = 0.0
        model.head_logvar.b.data[...] = 0.0
        mu, lv = model.encode(rand_patterns(1, seed=3)[0])
        assert np.array_equal(mu, np.zeros(4))
        assert np.array_equal(lv, np.zeros(4))

    def test_outputs_finite(self, small_model):
        for p in rand_patterns(5, seed=4):
            mu, lv = small_model.encode(p)
            assert np.all(np.isfinite(mu))
            assert np.all(np.isfinite(lv))


class TestReparameterize:
    def test_zero_variance_limit(self):
        mu = np.array([1.0, -2.0, 0.5, 3.0])
        z = reparameterize(mu, np.full(4, -1e9), Prng(5))
        assert np.allclose(z, mu, atol=1e-4)  # sigma = exp(-10)

    def test_monte_carlo_mean(self):
        mu = np.array([1.0, 2.0, 3.0, 4.0])
        rng = Prng(6)
        draws = np.stack([reparameterize(mu, np.zeros(4), rng)
                          for _ in range(100_000)])
        assert np.all(np.abs(draws.mean(axis=0) - mu) < 0.02)

    def test_seeded_determinism(self):
        mu, lv = np.ones(4), np.zeros(4)
        assert np.array_equal(reparameterize(mu, lv, Prng(7)),
                              reparameterize(mu, lv, Prng(7)))


def kl_quadrature_1d(mu, sigma):
    """Numeric KL(N(mu, sigma^2) || N(0,1)) on a dense grid."""
    z = np.linspace(mu - 12 * sigma - 12, mu + 12 * sigma + 12, 400_001)
    q = np.exp(-0.5 * ((z - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    # log(q/p) expanded analytically; avoids underflow of p at the tails
    log_ratio = 0.5 * z ** 2 - 0.5 * ((z - mu) / sigma) ** 2 - math.log(sigma)
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(q * log_ratio, z))


class TestKlTerm:
    def test_zero_at_prior(self):
        assert kl_term(np.zeros(4), np.zeros(4)) == 0.0

    def test_hand_evaluated_case(self):
        assert kl_term(np.array([1.0, 0, 0, 0]), np.zeros(4)) == pytest.approx(0.5, abs=1e-12)

    def test_matches_quadrature(self):
        mu, sigma = 0.7, 1.3
        expected = kl_quadrature_1d(mu, sigma)
        got = kl_term(np.array([mu]), np.array([math.log(sigma ** 2)]))
        assert got == pytest.approx(expected, abs=1e-4)

    def test_nonnegative_everywhere(self):
        rng = Prng(8)
        for _ in range(200):
            mu = rng.normal((4,)) * 3
            lv = rng.normal((4,)) * 2
            assert kl_term(mu, lv) >= -1e-12

    def test_zero_only_at_origin(self):
        rng = Prng(9)
        for _ in range(100):
            mu = rng.normal((4,)) * 0.5
            lv = rng.normal((4,)) * 0.5
            if np.any(np.abs(mu) > 1e-3) or np.any(np.abs(lv) > 1e-3):
                assert kl_term(mu, lv) > 1e-12


class TestDecode:
    def test_deterministic(self, small_model):
        z = np.array([0.3, -0.5, 1.1, 0.0])
        assert np.array_equal(small_model.decode(z), small_model.decode(z))

    def test_zeroed_last_layer_gives_half(self):
        model = VaeModel(SMALL_ARCHITECTURE, rng=Prng(10))
        model.decoder.layers[-1].W.data[...] = 0.0
        model.decoder.layers[-1].b.data[...] = 0.0
        grid = model.decode(np.zeros(4))
        assert np.array_equal(grid, np.full((6, 64), 0.5))

    def test_valid_probability_grid(self, small_model):
        rng = Prng(11)
        for _ in range(10):
            grid = small_model.decode(rng.normal((4,)) * 3)
            assert grid.shape == (6, 64)
            assert np.all(grid > 0.0)
            assert np.all(grid < 1.0)

    def test_wrong_latent_dim_rejected(self, small_model):
        with pytest.raises(ValueError):
            small_model.decode(np.zeros(3))


class TestVaeLoss:
    def test_beta_zero_total_equals_recon(self, small_model):
        p = rand_patterns(1, seed=12)[0]
        total, recon, kl = small_model.vae_loss(p, beta=0.0, rng=Prng(13))
        assert total == recon

    def test_zeroed_heads_zero_kl(self):
        model = VaeModel(SMALL_ARCHITECTURE, rng=Prng(14))
        for head in (model.head_mu, model.head_logvar):
            head.W.data[...] = 0.0
            head.b.data[...] = 0.0
        _, _, kl = model.vae_loss(rand_patterns(1, seed=15)[0], beta=1.0, rng=Prng(16))
        assert kl == 0.0

    def test_all_terms_finite(self, small_model):
        total, recon, kl = small_model.vae_loss(
            rand_patterns(1, seed=17)[0], beta=1.0, rng=Prng(18))
        assert np.isfinite([total, recon, kl]).all()

    def test_full_loss_gradient_check(self):
        rng = Prng(19)
        model = VaeModel(SMALL_ARCHITECTURE, rng=rng.derive())
        seqs, targets = _pattern_batch(rand_patterns(2, seed=20))
        eps = rng.normal((2, 4))

        def loss_fn():
            return model.loss_batch(seqs, targets, eps, beta=1.0)[0]

        model.zero_grads()
        model.loss_batch(seqs, targets, eps, beta=1.0, with_grads=True)
        report = gradient_check(loss_fn, model.params(), h=1e-5, tolerance=1e-4,
                                sample_per_tensor=4, rng=Prng(21))
        assert report.passed, report.summary()


class TestTrain:
    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train([], VaeTrainConfig(epochs=1))

    def test_same_seed_identical_history(self):
        pats = rand_patterns(6, seed=22)
        cfg = VaeTrainConfig(epochs=5, batch_size=2, seed=99)
        h1 = train(pats, cfg, arch=SMALL_ARCHITECTURE).history
        h2 = train(pats, cfg, arch=SMALL_ARCHITECTURE).history
        assert [(s.total, s.recon, s.kl) for s in h1] == \
               [(s.total, s.recon, s.kl) for s in h2]

    def test_loss_decreases(self):
        pats = rand_patterns(8, seed=23)
        cfg = VaeTrainConfig(epochs=40, batch_size=4, seed=5)
        res = train(pats, cfg, arch=SMALL_ARCHITECTURE)
        assert res.history[-1].total < res.history[0].total

    def test_overfit_single_pattern(self):
        pats = rand_patterns(1, seed=24, density=0.3)
        cfg = VaeTrainConfig(epochs=800, batch_size=1, seed=6,
                             learning_rate=1e-2, warmup_frac=1.0)
        res = train(pats, cfg, arch=SMALL_ARCHITECTURE)
        mu, _ = res.model.encode(pats[0])
        recon = res.model.decode(mu)
        assert np.max(np.abs(recon - pats[0].grid)) < 0.1

    def test_trained_encodings_distinct(self):
        pats = rand_patterns(4, seed=25)
        cfg = VaeTrainConfig(epochs=60, batch_size=2, seed=7, learning_rate=3e-3)
        res = train(pats, cfg, arch=SMALL_ARCHITECTURE)
        mu0, _ = res.model.encode(pats[0])
        mu1, _ = res.model.encode(pats[1])
        assert np.linalg.norm(mu0 - mu1) > 0.0

    def test_history_csv(self, tmp_path):
        pats = rand_patterns(4, seed=26)
        res = train(pats, VaeTrainConfig(epochs=3, batch_size=2, seed=8),
                    arch=SMALL_ARCHITECTURE)
        path = tmp_path / "history.csv"
        write_history_csv(res.history, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,total,recon,kl"
        assert len(lines) == 4


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        model = VaeModel(SMALL_ARCHITECTURE, rng=Prng(27))
        model.save(tmp_path / "ckpt", {"seed": 27})
        loaded, manifest = VaeModel.load(tmp_path / "ckpt")
        assert manifest["seed"] == 27
        p = rand_patterns(1, seed=28)[0]
        assert np.array_equal(loaded.encode(p)[0], model.encode(p)[0])
        z = np.array([0.1, 0.2, -0.3, 0.4])
        assert np.array_equal(loaded.decode(z), model.decode(z))

    def test_encode_decode_do_not_mutate_params(self, small_model):
        before = {n: t.data.copy() for n, t in small_model.params()}
        p = rand_patterns(1, seed=29)[0]
        mu, _ = small_model.encode(p)
        small_model.decode(mu)
        for n, t in small_model.params():
            assert np.array_equal(before[n], t.data)
