import math

import numpy as np
import pytest

from drumweave.nn import (
    AdamState,
    BiLstmLayer,
    DenseLayer,
    LayerStack,
    Prng,
    Tensor,
    adam_step,
    bce_loss,
    gradient_check,
    load_checkpoint,
    read_tensors,
    save_checkpoint,
    write_tensors,
)


class TestDense:
    def test_identity(self):
        layer = DenseLayer(3, 3, activation="none")
        layer.W.data[...] = np.eye(3)
        x = np.array([0.5, -1.0, 2.0])
        y, _ = layer.forward(x)
        assert np.array_equal(y, x)

    def test_relu_definition(self):
        layer = DenseLayer(2, 2, activation="relu")
        layer.W.data[...] = np.eye(2)
        y, _ = layer.forward(np.array([-1.0, 2.0]))
        assert np.array_equal(y, np.array([0.0, 2.0]))

    def test_shape_mismatch(self):
        layer = DenseLayer(3, 2)
        with pytest.raises(ValueError):
            layer.forward(np.zeros(4))

    @pytest.mark.parametrize("activation", ["relu", "tanh", "logistic", "none"])
    def test_gradients_vs_finite_differences(self, activation):
        rng = Prng(101)
        layer = DenseLayer(4, 3, activation=activation, rng=rng)
        x = rng.normal((5, 4)) * 0.7
        target = rng.normal((5, 3))

        def loss_fn():
            y, _ = layer.forward(x)
            return float(np.sum((y - target) ** 2))

        for _, p in layer.params():
            p.zero_grad()
        y, cache = layer.forward(x)
        layer.backward(cache, 2.0 * (y - target))
        report = gradient_check(loss_fn, layer.params(), h=1e-5, tolerance=1e-6)
        assert report.passed, report.summary()

    def test_input_gradient(self):
        rng = Prng(7)
        layer = DenseLayer(3, 2, activation="tanh", rng=rng)
        x = rng.normal((3,))
        y, cache = layer.forward(x)
        upstream = np.ones(2)
        dx = layer.backward(cache, upstream)
        h = 1e-6
        for i in range(3):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            num = (layer.forward(xp)[0].sum() - layer.forward(xm)[0].sum()) / (2 * h)
            assert dx[i] == pytest.approx(num, rel=1e-5, abs=1e-8)


class TestBiLstm:
    def test_zero_weights_zero_output(self):
        layer = BiLstmLayer(3, 4)  # no rng: zero weights
        layer.fwd.b.data[...] = 0.0
        layer.bwd.b.data[...] = 0.0
        out, _ = layer.forward(np.zeros((5, 3)))
        assert np.array_equal(out, np.zeros((5, 8)))

    def test_direction_symmetry(self):
        rng = Prng(42)
        layer = BiLstmLayer(3, 4, rng=rng)
        x = rng.normal((6, 3))
        out, _ = layer.forward(x)
        rev_out, _ = layer.forward(x[::-1].copy())
        # make fwd/bwd blocks identical so halves are comparable
        for (_, a), (_, b) in zip(layer.fwd.params(), layer.bwd.params()):
            b.data[...] = a.data
        out, _ = layer.forward(x)
        rev_out, _ = layer.forward(x[::-1].copy())
        assert np.allclose(rev_out[:, :4], out[::-1, 4:], atol=1e-12)

    def test_gradient_check_small_instance(self):
        rng = Prng(55)
        layer = BiLstmLayer(3, 4, rng=rng)
        x = rng.normal((5, 3))
        target = rng.normal((5, 8))

        def loss_fn():
            y, _ = layer.forward(x)
            return float(np.sum((y - target) ** 2))

        y, cache = layer.forward(x)
        layer.backward(cache, 2.0 * (y - target))
        report = gradient_check(loss_fn, layer.params(), h=1e-5, tolerance=1e-5)
        assert report.passed, report.summary()

    def test_input_gradient_batched(self):
        rng = Prng(56)
        layer = BiLstmLayer(2, 3, rng=rng)
        x = rng.normal((2, 4, 2))
        y, cache = layer.forward(x)
        dx = layer.backward(cache, np.ones_like(y))
        h = 1e-6
        num = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            num[idx] = (layer.forward(xp)[0].sum() - layer.forward(xm)[0].sum()) / (2 * h)
        assert np.allclose(dx, num, rtol=1e-5, atol=1e-8)


class TestBce:
    def test_indifferent_prediction(self):
        p = np.full((4, 4), 0.5)
        t = np.full((4, 4), 0.5)
        loss, _ = bce_loss(p, t)
        assert loss == pytest.approx(math.log(2.0), abs=1e-12)

    def test_perfect_prediction(self):
        t = np.array([0.0, 1.0, 0.0, 1.0])
        p = np.clip(t, 1e-7, 1 - 1e-7)
        loss, grad = bce_loss(p, t)
        assert loss < 1e-6
        assert np.array_equal(grad, np.zeros_like(p))  # clamp region

    def test_gradient_vs_finite_differences(self):
        rng = Prng(9)
        p = rng.uniform(0.05, 0.95, (3, 5))
        t = rng.uniform(0.0, 1.0, (3, 5))
        _, grad = bce_loss(p, t)
        h = 1e-7
        for idx in np.ndindex(p.shape):
            pp, pm = p.copy(), p.copy()
            pp[idx] += h
            pm[idx] -= h
            num = (bce_loss(pp, t)[0] - bce_loss(pm, t)[0]) / (2 * h)
            assert grad[idx] == pytest.approx(num, rel=1e-6, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            bce_loss(np.zeros((2, 2)), np.zeros((2, 3)))


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = Tensor(np.array([1.0, -2.0, 3.0]))
        state = AdamState([p])
        adam_step(state, [p], [np.zeros(3)])
        assert np.array_equal(p.data, np.array([1.0, -2.0, 3.0]))

    def test_first_step_closed_form(self):
        # at t=1 bias correction cancels: delta = -alpha*g/(|g|+eps)
        g = np.array([0.5, -3.0, 1e-3])
        p = Tensor(np.zeros(3))
        state = AdamState([p], alpha=1e-3)
        adam_step(state, [p], [g])
        expected = -1e-3 * g / (np.abs(g) + 1e-8)
        assert np.allclose(p.data, expected, rtol=1e-12)

    def test_quadratic_bowl_convergence(self):
        # oracle run: strictly decreasing until Adam momentum overshoots
        # the optimum (~step 11), then small oscillation around it
        x = Tensor(np.array([1.0]))
        state = AdamState([x], alpha=0.1)
        losses = [float(x.data[0] ** 2)]
        for _ in range(100):
            x.grad[...] = 2.0 * x.data
            adam_step(state, [x])
            losses.append(float(x.data[0] ** 2))
        assert all(b < a for a, b in zip(losses[:10], losses[1:11]))
        assert losses[-1] < 1e-4
        assert losses[-1] < losses[0] * 1e-4


class TestGradientCheck:
    def test_linear_function_machine_precision(self):
        c = np.array([1.5, -2.0, 0.25])
        p = Tensor(np.array([0.3, 0.7, -1.2]))

        def loss_fn():
            return float(c @ p.data)

        p.grad[...] = c
        report = gradient_check(loss_fn, [("p", p)], h=1e-5, tolerance=1e-8)
        assert report.passed, report.summary()

    def test_corrupted_gradient_detected(self):
        p = Tensor(np.array([0.4, -0.9]))

        def loss_fn():
            return float(np.sum(p.data ** 2))

        p.grad[...] = 2.0 * p.data
        p.grad[1] *= 2.0  # corruption
        report = gradient_check(loss_fn, [("p", p)], h=1e-5, tolerance=1e-4)
        assert not report.passed
        assert report.worst_index == 1

    def test_sampling_mode(self):
        rng = Prng(3)
        p = Tensor(rng.normal((40,)))

        def loss_fn():
            return float(np.sum(p.data ** 2))

        p.grad[...] = 2.0 * p.data
        report = gradient_check(loss_fn, [("p", p)], sample_per_tensor=10, rng=Prng(1))
        assert report.n_checked == 10
        assert report.passed


class TestPrng:
    def test_same_seed_same_stream(self):
        a, b = Prng(123), Prng(123)
        assert np.array_equal(a.normal((8,)), b.normal((8,)))
        assert np.array_equal(a.permutation(10), b.permutation(10))

    def test_derive_is_deterministic(self):
        a, b = Prng(5).derive(), Prng(5).derive()
        assert a.seed == b.seed


class TestCheckpoint:
    def test_tensor_container_round_trip(self, tmp_path):
        rng = Prng(77)
        tensors = {
            "enc.0.W": rng.normal((4, 3)),
            "enc.0.b": rng.normal((4,)),
            "scalar": np.array(2.5),
        }
        path = tmp_path / "weights.bin"
        write_tensors(path, tensors)
        back = read_tensors(path)
        assert set(back) == set(tensors)
        for k in tensors:
            assert np.array_equal(back[k], tensors[k])

    def test_checkpoint_directory(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", {"w": np.ones((2, 2))},
                        {"d": 4, "seed": 9})
        tensors, manifest = load_checkpoint(tmp_path / "ckpt")
        assert manifest["d"] == 4
        assert np.array_equal(tensors["w"], np.ones((2, 2)))

    def test_deterministic_bytes(self, tmp_path):
        t = {"a": np.arange(6, dtype=np.float64).reshape(2, 3)}
        write_tensors(tmp_path / "one.bin", t)
        write_tensors(tmp_path / "two.bin", t)
        assert (tmp_path / "one.bin").read_bytes() == (tmp_path / "two.bin").read_bytes()


class TestLayerStack:
    def test_stack_gradients(self):
        rng = Prng(31)
        stack = LayerStack([
            DenseLayer(4, 6, "relu", rng),
            DenseLayer(6, 3, "tanh", rng),
            DenseLayer(3, 1, "logistic", rng),
        ])
        x = rng.normal((2, 4))

        def loss_fn():
            y, _ = stack.forward(x)
            return float(np.sum(y))

        for _, p in stack.params():
            p.zero_grad()
        y, caches = stack.forward(x)
        stack.backward(caches, np.ones_like(y))
        report = gradient_check(loss_fn, stack.params(), h=1e-5, tolerance=1e-6)
        assert report.passed, report.summary()
